#pragma once

// Relaxation / upwind finite-volume update for the compressible Navier-Stokes
// part. The conserved vector is U = (rho, rho u_x[, rho u_y]); V and W relax
// towards the x- and y-fluxes F(U), K(U).
//
// 2D kernels are written so that the x- and y-contributions are combined by a
// single commutative addition; a state symmetric under x <-> y therefore stays
// bitwise symmetric.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gnsch/error.hpp"
#include "gnsch/mesh.hpp"
#include "gnsch/physics.hpp"

namespace gnsch {

using Components = std::vector<Field>;

struct HyperbolicState {
  Components U;  // rho, momentum_x[, momentum_y]
  Components V;  // x-flux auxiliary
  Components W;  // y-flux auxiliary (2D only)
};

/// Subcharacteristic constants: a for the x-direction, b for y (0 in 1D).
struct SubcharConstants {
  double a = 0.0;
  double b = 0.0;
};

namespace detail {

inline Field velocity(const Field& rho, const Field& mom) {
  Field u(rho.grid());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = mom[i] / rho[i];
  return u;
}

}  // namespace detail

/// x-direction flux F(U). The viscous and capillary terms use central differences.
inline Components flux_F(const Components& U, const Field& c, const Physics& phys) {
  const Grid& g = c.grid();
  const PhysParams& p = phys.params();
  const Field& rho = U[0];
  const Field& mx = U[1];
  const Field ux = detail::velocity(rho, mx);
  const Field dxux = central_gradient(ux, Axis::X);
  const Field cx = central_gradient(c, Axis::X);

  Components F(U.size(), Field(g));
  if (g.dim() == 1) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      F[0][i] = mx[i];
      F[1][i] = mx[i] * ux[i] + phys.pressure(rho[i], c[i]) - p.nu0 * dxux[i] +
                0.5 * p.gamma * cx[i] * cx[i];
    }
    return F;
  }

  const Field& my = U[2];
  const Field uy = detail::velocity(rho, my);
  const Field dyuy = central_gradient(uy, Axis::Y);
  const Field dyux = central_gradient(ux, Axis::Y);
  const Field dxuy = central_gradient(uy, Axis::X);
  const Field cy = central_gradient(c, Axis::Y);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double div = dxux[i] + dyuy[i];
    const double shear = dyux[i] + dxuy[i];
    F[0][i] = mx[i];
    F[1][i] = mx[i] * ux[i] + phys.pressure(rho[i], c[i]) - 2.0 * p.nu0 * dxux[i] +
              (2.0 / 3.0) * p.nu0 * div + 0.5 * p.gamma * (cx[i] * cx[i] - cy[i] * cy[i]);
    F[2][i] = mx[i] * uy[i] - p.nu0 * shear + p.gamma * cx[i] * cy[i];
  }
  return F;
}

/// y-direction flux K(U) (2D only). The capillary normal-stress term is the
/// mirror image of the one in F: (c_y^2 - c_x^2).
inline Components flux_K(const Components& U, const Field& c, const Physics& phys) {
  const Grid& g = c.grid();
  if (g.dim() != 2) fail(ErrorKind::InvalidArgument, "flux_K requires a 2D grid");
  const PhysParams& p = phys.params();
  const Field& rho = U[0];
  const Field& mx = U[1];
  const Field& my = U[2];
  const Field ux = detail::velocity(rho, mx);
  const Field uy = detail::velocity(rho, my);
  const Field dxux = central_gradient(ux, Axis::X);
  const Field dyuy = central_gradient(uy, Axis::Y);
  const Field dyux = central_gradient(ux, Axis::Y);
  const Field dxuy = central_gradient(uy, Axis::X);
  const Field cx = central_gradient(c, Axis::X);
  const Field cy = central_gradient(c, Axis::Y);

  Components K(3, Field(g));
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double div = dxux[i] + dyuy[i];
    const double shear = dyux[i] + dxuy[i];
    K[0][i] = my[i];
    K[1][i] = my[i] * ux[i] - p.nu0 * shear + p.gamma * cx[i] * cy[i];
    K[2][i] = my[i] * uy[i] + phys.pressure(rho[i], c[i]) - 2.0 * p.nu0 * dyuy[i] +
              (2.0 / 3.0) * p.nu0 * div + 0.5 * p.gamma * (cy[i] * cy[i] - cx[i] * cx[i]);
  }
  return K;
}

/// Grid-wide max of (u +- sqrt(dp/drho))^2 and u^2, per direction.
inline SubcharConstants subchar_constants(const Components& U, const Field& c,
                                          const Physics& phys) {
  const Grid& g = c.grid();
  SubcharConstants k;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double dp = phys.dpressure_drho(U[0][i], c[i]);
    if (!(dp >= 0.0)) fail(ErrorKind::Domain, "subchar_constants: negative dp/drho");
    const double s = std::sqrt(dp);
    const double ux = U[1][i] / U[0][i];
    k.a = std::max({k.a, (ux + s) * (ux + s), (ux - s) * (ux - s), ux * ux});
    if (g.dim() == 2) {
      const double uy = U[2][i] / U[0][i];
      k.b = std::max({k.b, (uy + s) * (uy + s), (uy - s) * (uy - s), uy * uy});
    }
  }
  return k;
}

/// Closed-form solve of V* = V^n - (dt/eta)(V* - F(U^n)).
inline double relax_star(double vn, double fn, double dt, double eta) {
  const double r = dt / eta;
  return (vn + r * fn) / (1.0 + r);
}

inline Field relax_star(const Field& vn, const Field& fn, double dt, double eta) {
  if (!(eta > 0.0)) fail(ErrorKind::InvalidArgument, "relax_star: eta must be positive");
  Field out(vn.grid());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = relax_star(vn[i], fn[i], dt, eta);
  return out;
}

inline Components relax_star(const Components& vn, const Components& fn, double dt, double eta) {
  Components out;
  out.reserve(vn.size());
  for (std::size_t k = 0; k < vn.size(); ++k) out.push_back(relax_star(vn[k], fn[k], dt, eta));
  return out;
}

/// Courant number of the relaxation update, dt (sqrt(a)/dx + sqrt(b)/dy).
inline double cfl_number(const Grid& g, const SubcharConstants& k, double dt) {
  double nu = dt * std::sqrt(k.a) / g.dx();
  if (g.dim() == 2) nu += dt * std::sqrt(k.b) / g.dy();
  return nu;
}

/// One upwind relaxation update (U^n, V*, W*) -> (U^{n+1}, V^{n+1}, W^{n+1}).
///
/// The friction source -kappa u is implicit; since kappa is evaluated at
/// (rho^{n+1}, c^n) the momentum row reduces to m = m_hat / (1 + dt kappa / rho).
inline HyperbolicState fv_update(const HyperbolicState& s, const Components& Vstar,
                                 const Components& Wstar, const SubcharConstants& k, double dt,
                                 const Field& c, const Physics& phys) {
  const Grid& g = c.grid();
  const bool two_d = g.dim() == 2;
  const double courant = cfl_number(g, k, dt);
  if (courant > 1.0 + 1e-12)
    fail(ErrorKind::Cfl, "CFL condition violated: dt*sqrt(a)/dx = " + std::to_string(courant) +
                             " > 1 (dt = " + std::to_string(dt) + ")");

  const double hx = dt / (2.0 * g.dx());
  const double sa = std::sqrt(k.a);
  const double hy = two_d ? dt / (2.0 * g.dy()) : 0.0;
  const double sb = std::sqrt(k.b);

  HyperbolicState out;
  out.U.assign(s.U.size(), Field(g));
  out.V.assign(s.U.size(), Field(g));
  if (two_d) out.W.assign(s.U.size(), Field(g));

  for (std::size_t comp = 0; comp < s.U.size(); ++comp) {
    const Field& u = s.U[comp];
    const Field& v = Vstar[comp];
    Field& un = out.U[comp];
    Field& vn = out.V[comp];
    if (!two_d) {
      for_each_cell(g, [&](const Neighbours& n) {
        const double incr_x =
            -hx * (v[n.xp] - v[n.xm]) + hx * sa * (u[n.xp] - 2.0 * u[n.self] + u[n.xm]);
        un[n.self] = u[n.self] + incr_x;
        vn[n.self] = v[n.self] - k.a * hx * (u[n.xp] - u[n.xm]) +
                     hx * sa * (v[n.xp] - 2.0 * v[n.self] + v[n.xm]);
      });
      continue;
    }
    const Field& w = Wstar[comp];
    Field& wn = out.W[comp];
    for_each_cell(g, [&](const Neighbours& n) {
      const double incr_x =
          -hx * (v[n.xp] - v[n.xm]) + hx * sa * (u[n.xp] - 2.0 * u[n.self] + u[n.xm]);
      const double incr_y =
          -hy * (w[n.yp] - w[n.ym]) + hy * sb * (u[n.yp] - 2.0 * u[n.self] + u[n.ym]);
      un[n.self] = u[n.self] + (incr_x + incr_y);
      vn[n.self] = v[n.self] - k.a * hx * (u[n.xp] - u[n.xm]) +
                   hx * sa * (v[n.xp] - 2.0 * v[n.self] + v[n.xm]);
      wn[n.self] = w[n.self] - k.b * hy * (u[n.yp] - u[n.ym]) +
                   hy * sb * (w[n.yp] - 2.0 * w[n.self] + w[n.ym]);
    });
  }

  const Field& rho = out.U[0];
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (!(rho[i] > 0.0))
      fail(ErrorKind::Positivity,
           "density lost positivity at cell " + std::to_string(i) + ": " + std::to_string(rho[i]));
  }
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double damp = 1.0 + dt * phys.friction(rho[i], c[i]) / rho[i];
    for (std::size_t comp = 1; comp < out.U.size(); ++comp) out.U[comp][i] /= damp;
  }
  return out;
}

/// sqrt(sum_k <X_k, X_k>) for a multi-component field.
inline double components_norm(const Components& X) {
  double s = 0.0;
  for (const Field& f : X) s += inner(f, f);
  return std::sqrt(s);
}

}  // namespace gnsch
