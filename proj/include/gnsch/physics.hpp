#pragma once

// Constitutive closures: free energy, pressure, mobility, friction, proliferation
// source, and the bound-preserving map T : R -> (0, 1).

#include <cmath>
#include <string>

#include "gnsch/error.hpp"
#include "gnsch/mesh.hpp"

namespace gnsch {

enum class TransformKind { Logistic, Tanh };

struct PhysParams {
  double a = 3.0;             // pressure exponent, p_e = rho^a
  double gamma = 1.0 / 500.0; // interface-width coefficient
  double nu0 = 1e-2;          // constant viscosity
  double eta = 1e-3;          // relaxation time
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double theta = 4.0;         // well depth
  double k = 100.0;           // potential offset
  double Cb = 1.0;            // mobility amplitude
  double alpha_mob = 1.0;     // mobility exponent
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double growth_rate = 0.0;   // prefactor of F_c; 0 disables the source
  double c_star = 0.9;        // saturation fraction
  double Cunder = 100.0;      // lower-bound constant entering C0
  TransformKind transform = TransformKind::Logistic;

  friend bool operator==(const PhysParams&, const PhysParams&) = default;

  /// Throws a Config error naming the offending key (physics.<name>).
  void validate() const {
    auto need = [](bool ok, const char* key, const char* rule) {
      if (!ok) fail(ErrorKind::Config, std::string("physics.") + key + ": must satisfy " + rule);
    };
    need(a > 1.0, "a", "a > 1");
    need(gamma > 0.0, "gamma", "gamma > 0");
    need(eta > 0.0, "eta", "eta > 0");
    need(nu0 >= 0.0, "nu", "nu >= 0");
    need(alpha1 > 0.0, "alpha1", "alpha1 > 0");
    need(alpha2 > 0.0, "alpha2", "alpha2 > 0");
    need(theta > 1.0, "theta", "theta > 1");
    need(std::isfinite(k), "k", "finite");
    need(Cb >= 0.0, "Cb", "Cb >= 0");
    need(alpha_mob >= 1.0, "alpha_mob", "alpha_mob >= 1");
    need(kappa1 >= 0.0, "kappa1", "kappa1 >= 0");
    need(kappa2 >= 0.0, "kappa2", "kappa2 >= 0");
    need(std::isfinite(growth_rate), "growth_rate", "finite");
    need(c_star > 0.0 && c_star <= 1.0, "c_star", "0 < c_star <= 1");
    need(Cunder >= 0.0, "Cunder", "Cunder >= 0");
  }
};

/// The bound-preserving change of variables c = T(v).
class Transform {
 public:
  explicit Transform(TransformKind kind = TransformKind::Logistic) : kind_(kind) {}

  TransformKind kind() const { return kind_; }

  double T(double v) const {
    if (kind_ == TransformKind::Logistic) return 1.0 / (1.0 + std::exp(-v));
    return 0.5 * std::tanh(v) + 0.5;
  }

  // T'(v) written in terms of c = T(v): c(1-c) for the logistic map, 2c(1-c) for tanh.
  double dT(double v) const {
    const double c = T(v);
    const double base = c * (1.0 - c);
    return kind_ == TransformKind::Logistic ? base : 2.0 * base;
  }

  // T'' = T' (1 - 2c) for the logistic map and 2 T' (1 - 2c) for tanh.
  double d2T(double v) const {
    const double c = T(v);
    const double d = dT(v);
    return kind_ == TransformKind::Logistic ? d * (1.0 - 2.0 * c) : 2.0 * d * (1.0 - 2.0 * c);
  }

  double inverse(double c) const {
    if (!(c > 0.0 && c < 1.0))
      fail(ErrorKind::Domain, "T_inverse: c = " + std::to_string(c) + " outside (0,1)");
    if (kind_ == TransformKind::Logistic) return std::log(c) - std::log1p(-c);
    return std::atanh(2.0 * c - 1.0);
  }

 private:
  TransformKind kind_;
};

class Physics {
 public:
  explicit Physics(const PhysParams& p) : p_(p), transform_(p.transform) {}

  const PhysParams& params() const { return p_; }
  const Transform& transform() const { return transform_; }

  // H(c) = (alpha1 (1-c) + alpha2 c) / 2 and Q(c), the c-only part of psi_mix.
  double H(double c) const { return 0.5 * (p_.alpha1 * (1.0 - c) + p_.alpha2 * c); }
  double dH(double) const { return 0.5 * (p_.alpha2 - p_.alpha1); }

  double Q(double c) const {
    require_open_unit(c, "Q");
    const double s = c - 0.5;
    return 0.5 * (p_.alpha1 * (1.0 - c) * std::log1p(-c) + p_.alpha2 * c * std::log(c)) -
           0.5 * p_.theta * s * s + p_.k;
  }

  double dQ(double c) const {
    require_open_unit(c, "dQ");
    return 0.5 * (-p_.alpha1 * std::log1p(-c) - p_.alpha1 + p_.alpha2 * std::log(c) + p_.alpha2) -
           p_.theta * (c - 0.5);
  }

  double pressure(double rho, double c) const {
    require_nonneg_density(rho, "pressure");
    return std::pow(rho, p_.a) + rho * H(c);
  }

  double dpressure_drho(double rho, double c) const {
    require_nonneg_density(rho, "dpressure_drho");
    return p_.a * std::pow(rho, p_.a - 1.0) + H(c);
  }

  // psi_0 = rho^(a-1)/(a-1) + H(c) ln rho + Q(c)
  double psi0(double rho, double c) const {
    require_positive_density(rho, "psi0");
    return std::pow(rho, p_.a - 1.0) / (p_.a - 1.0) + H(c) * std::log(rho) + Q(c);
  }

  double dpsi0_dc(double rho, double c) const {
    require_positive_density(rho, "dpsi0_dc");
    return dH(c) * std::log(rho) + dQ(c);
  }

  double mobility(double c) const {
    if (!(c >= 0.0 && c <= 1.0))
      fail(ErrorKind::Domain, "mobility: c = " + std::to_string(c) + " outside [0,1]");
    return p_.Cb * c * std::pow(1.0 - c, p_.alpha_mob);
  }

  double friction(double rho, double c) const {
    return p_.kappa1 * rho * c + p_.kappa2 * rho * (1.0 - c);
  }

  double source(double rho, double c) const {
    if (p_.growth_rate == 0.0) return 0.0;
    return p_.growth_rate * rho * c * (1.0 - c / p_.c_star);
  }

  /// E = integral of gamma/2 |grad c|^2 + rho psi_0(rho, c).
  double energy(const Field& rho, const Field& c) const {
    const Field g2 = grad_norm2(c);
    Field dens(c.grid());
    for (std::size_t i = 0; i < dens.size(); ++i)
      dens[i] = 0.5 * p_.gamma * g2[i] + rho[i] * psi0(rho[i], c[i]);
    return integrate(dens);
  }

 private:
  static void require_open_unit(double c, const char* who) {
    if (!(c > 0.0 && c < 1.0))
      fail(ErrorKind::Domain, std::string(who) + ": c = " + std::to_string(c) + " outside (0,1)");
  }
  static void require_nonneg_density(double rho, const char* who) {
    if (!(rho >= 0.0))
      fail(ErrorKind::Domain, std::string(who) + ": negative density " + std::to_string(rho));
  }
  static void require_positive_density(double rho, const char* who) {
    if (!(rho > 0.0))
      fail(ErrorKind::Domain, std::string(who) + ": non-positive density " + std::to_string(rho));
  }

  PhysParams p_;
  Transform transform_;
};

}  // namespace gnsch
