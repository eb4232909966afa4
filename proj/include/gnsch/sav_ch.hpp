#pragma once

// Bound-preserving SAV step for the degenerate Cahn-Hilliard part.
//
// The mass fraction is evolved through v with c = T(v). Each step solves one
// linear system for (vbar, mu), rescales T(vbar) by a scalar lambda so the
// c-mass balance holds, advances the auxiliary energy r, and finally scales
// c and v by sigma = 1 - (1 - xi)^2 with xi = r / (E + C0). The driver can
// instead rebuild v from the corrected c (see VUpdate).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "gnsch/error.hpp"
#include "gnsch/linsolve.hpp"
#include "gnsch/mesh.hpp"
#include "gnsch/physics.hpp"

namespace gnsch {

struct SavState {
  double r = 0.0;
  double C0 = 0.0;
  double xi = 1.0;
  double sigma = 1.0;  // last rescale factor 1 - (1 - xi)^2
};

enum class AdvectionScheme { Upwind, Central };

/// Per-cell coefficients of a 5-point periodic stencil (ym/yp unused in 1D).
struct Stencil5 {
  std::vector<double> c, xm, xp, ym, yp;

  explicit Stencil5(std::size_t n = 0) : c(n, 0.0), xm(n, 0.0), xp(n, 0.0), ym(n, 0.0), yp(n, 0.0) {}

  // x- and y-neighbour sums are formed separately and then added, so the
  // result at a cell and at its transpose are bitwise identical for
  // transpose-symmetric data.
  double at(std::span<const double> u, const Neighbours& n, bool two_d) const {
    const std::size_t p = n.self;
    const double sx = xm[p] * u[n.xm] + xp[p] * u[n.xp];
    if (!two_d) return c[p] * u[p] + sx;
    const double sy = ym[p] * u[n.ym] + yp[p] * u[n.yp];
    return c[p] * u[p] + (sx + sy);
  }
};

/// The assembled linear system for the unknowns x = (vbar, mu), 2 * ncells long.
///
///   row block 1:  vbar/dt + vel . grad(vbar) - div(b(c^n) grad mu) / (T'(v^n) rho^{n+1})
///                   = v^n/dt + F_c(rho^n, c^n) / (T'(v^n) rho^{n+1})
///   row block 2:  mu + gamma T'(v^n) / rho^{n+1} lap(vbar)
///                   = -gamma T''(v^n) / rho^{n+1} |grad v^n|^2 + dpsi0/dc(rho^n, c^n)
class ChSystem {
 public:
  ChSystem(const Grid& g, Stencil5 vv, Stencil5 vm, Stencil5 mv, std::vector<double> rhs)
      : grid_(g), vv_(std::move(vv)), vm_(std::move(vm)), mv_(std::move(mv)), rhs_(std::move(rhs)) {}

  const Grid& grid() const { return grid_; }
  std::size_t cells() const { return grid_.size(); }
  std::size_t size() const { return 2 * grid_.size(); }
  std::span<const double> rhs() const { return rhs_; }

  void apply(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = cells();
    if (x.size() != 2 * n || y.size() != 2 * n)
      fail(ErrorKind::InvalidArgument, "ChSystem::apply: dimension mismatch");
    const auto v = x.first(n);
    const auto mu = x.subspan(n, n);
    const bool two_d = grid_.dim() == 2;
    for_each_cell(grid_, [&](const Neighbours& nb) {
      y[nb.self] = vv_.at(v, nb, two_d) + vm_.at(mu, nb, two_d);
      y[n + nb.self] = mu[nb.self] + mv_.at(v, nb, two_d);
    });
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(size(), 1.0);
    for (std::size_t p = 0; p < cells(); ++p) d[p] = vv_.c[p];
    return d;
  }

  SparseMatrix to_csr() const {
    const std::size_t n = cells();
    const bool two_d = grid_.dim() == 2;
    std::vector<Triplet> t;
    t.reserve(n * (two_d ? 16 : 10));
    auto add = [&](std::size_t row, std::size_t off, const Stencil5& s, const Neighbours& nb) {
      const std::size_t p = nb.self;
      t.push_back({row, off + p, s.c[p]});
      t.push_back({row, off + nb.xm, s.xm[p]});
      t.push_back({row, off + nb.xp, s.xp[p]});
      if (two_d) {
        t.push_back({row, off + nb.ym, s.ym[p]});
        t.push_back({row, off + nb.yp, s.yp[p]});
      }
    };
    for_each_cell(grid_, [&](const Neighbours& nb) {
      add(nb.self, 0, vv_, nb);
      add(nb.self, n, vm_, nb);
      t.push_back({n + nb.self, n + nb.self, 1.0});
      add(n + nb.self, 0, mv_, nb);
    });
    return SparseMatrix::from_triplets(2 * n, std::move(t));
  }

 private:
  Grid grid_;
  Stencil5 vv_, vm_, mv_;
  std::vector<double> rhs_;
};

/// Inputs of one Cahn-Hilliard solve. Everything is known data from time n,
/// except rho_next and the velocity, which come from the preceding NS update.
struct ChInputs {
  const Field& vn;
  const Field& cn;
  const Field& rho_n;
  const Field& rho_next;
  const std::vector<Field>& velocity;  // one component per axis
  double dt;
};

inline ChSystem assemble_system(const ChInputs& in, const Physics& phys,
                                AdvectionScheme adv = AdvectionScheme::Upwind) {
  const Grid& g = in.cn.grid();
  const std::size_t n = g.size();
  const bool two_d = g.dim() == 2;
  const Transform& T = phys.transform();
  const double gamma = phys.params().gamma;
  const double ihx = 1.0 / g.dx();
  const double ihy = two_d ? 1.0 / g.dy() : 0.0;
  const double ihx2 = ihx * ihx;
  const double ihy2 = ihy * ihy;
  if (!(in.dt > 0.0)) fail(ErrorKind::InvalidArgument, "assemble_system: dt must be positive");

  std::vector<double> dT(n), mob(n);
  for (std::size_t p = 0; p < n; ++p) {
    dT[p] = T.dT(in.vn[p]);
    if (!(dT[p] > 0.0))
      fail(ErrorKind::Domain, "assemble_system: T'(v) vanishes at cell " + std::to_string(p));
    if (!(in.rho_next[p] > 0.0))
      fail(ErrorKind::Positivity, "assemble_system: non-positive density at cell " + std::to_string(p));
    mob[p] = phys.mobility(in.cn[p]);
  }
  const Field gv2 = grad_norm2(in.vn);

  Stencil5 vv(n), vm(n), mv(n);
  std::vector<double> rhs(2 * n);

  // Advection coefficients (minus, centre, plus) along one axis.
  auto advect = [&](double u, double ih) -> std::array<double, 3> {
    if (adv == AdvectionScheme::Central) return {-0.5 * u * ih, 0.0, 0.5 * u * ih};
    if (u > 0.0) return {-u * ih, u * ih, 0.0};
    if (u < 0.0) return {0.0, -u * ih, u * ih};
    return {0.0, 0.0, 0.0};
  };

  for_each_cell(g, [&](const Neighbours& nb) {
    const std::size_t p = nb.self;
    const double w = 1.0 / (dT[p] * in.rho_next[p]);
    const double lap_coef = gamma * dT[p] / in.rho_next[p];

    const auto ax = advect(in.velocity[0][p], ihx);
    const double bxm = face_average(mob[p], mob[nb.xm]);
    const double bxp = face_average(mob[p], mob[nb.xp]);
    vv.xm[p] = ax[0];
    vv.xp[p] = ax[2];
    vm.xm[p] = -w * bxm * ihx2;
    vm.xp[p] = -w * bxp * ihx2;
    mv.xm[p] = lap_coef * ihx2;
    mv.xp[p] = lap_coef * ihx2;
    if (!two_d) {
      vv.c[p] = 1.0 / in.dt + ax[1];
      vm.c[p] = w * ((bxm + bxp) * ihx2);
      mv.c[p] = -lap_coef * (2.0 * ihx2);
    } else {
      const auto ay = advect(in.velocity[1][p], ihy);
      const double bym = face_average(mob[p], mob[nb.ym]);
      const double byp = face_average(mob[p], mob[nb.yp]);
      vv.ym[p] = ay[0];
      vv.yp[p] = ay[2];
      vm.ym[p] = -w * bym * ihy2;
      vm.yp[p] = -w * byp * ihy2;
      mv.ym[p] = lap_coef * ihy2;
      mv.yp[p] = lap_coef * ihy2;
      vv.c[p] = 1.0 / in.dt + (ax[1] + ay[1]);
      vm.c[p] = w * ((bxm + bxp) * ihx2 + (bym + byp) * ihy2);
      mv.c[p] = -lap_coef * (2.0 * ihx2 + 2.0 * ihy2);
    }

    rhs[p] = in.vn[p] / in.dt + phys.source(in.rho_n[p], in.cn[p]) * w;
    rhs[n + p] = -gamma * T.d2T(in.vn[p]) / in.rho_next[p] * gv2[p] +
                 phys.dpsi0_dc(in.rho_n[p], in.cn[p]);
  });
  return ChSystem(g, std::move(vv), std::move(vm), std::move(mv), std::move(rhs));
}

enum class SolverMethod { Gmres, Direct, Dense };

struct SolverOptions {
  SolverMethod method = SolverMethod::Gmres;
  GmresOptions gmres;

  friend bool operator==(const SolverOptions&, const SolverOptions&) = default;
};

struct ChSolution {
  Field vbar;
  Field mu;
  SolveReport report;
};

/// Solves the assembled system; x0 (2 * ncells, optional) warm-starts GMRES.
inline ChSolution solve_ch(const ChSystem& sys, const SolverOptions& opt,
                           std::span<const double> x0 = {}) {
  const std::size_t n = sys.cells();
  std::vector<double> x;
  SolveReport rep;
  if (opt.method == SolverMethod::Gmres) {
    std::tie(x, rep) = gmres(sys, sys.rhs(), opt.gmres, x0);
    if (!rep.converged)
      fail(ErrorKind::Solver, "GMRES did not converge: relative residual " +
                                  std::to_string(rep.relative_residual) + " after " +
                                  std::to_string(rep.iterations) + " iterations");
  } else {
    const SparseMatrix a = sys.to_csr();
    x = opt.method == SolverMethod::Direct ? sparse_direct_solve(a, sys.rhs())
                                           : dense_solve(a.to_dense(), sys.rhs());
    std::vector<double> ax(x.size());
    sys.apply(x, ax);
    double rn = 0.0, bn = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      rn += (sys.rhs()[i] - ax[i]) * (sys.rhs()[i] - ax[i]);
      bn += sys.rhs()[i] * sys.rhs()[i];
    }
    rep.relative_residual = bn > 0.0 ? std::sqrt(rn / bn) : 0.0;
    rep.converged = true;
  }
  for (double v : x)
    if (!std::isfinite(v)) fail(ErrorKind::Solver, "linear solve produced non-finite values");
  ChSolution out{Field(sys.grid()), Field(sys.grid()), std::move(rep)};
  std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n), out.vbar.data().begin());
  std::copy(x.begin() + static_cast<std::ptrdiff_t>(n), x.end(), out.mu.data().begin());
  return out;
}

struct LambdaCorrection {
  double lambda = 1.0;
  Field cbar;
};

/// lambda = integral(c^n + dt F_c(rho^n, c^n)) / integral(T(vbar)), cbar = lambda T(vbar).
inline LambdaCorrection lambda_correct(const Field& vbar, const Field& cn, const Field& rho_n,
                                       double dt, const Physics& phys) {
  const Grid& g = cn.grid();
  Field target(g), tv(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    target[i] = cn[i] + dt * phys.source(rho_n[i], cn[i]);
    tv[i] = phys.transform().T(vbar[i]);
  }
  const double den = integrate(tv);
  if (!(den > 0.0)) fail(ErrorKind::Domain, "lambda_correct: integral of T(vbar) is not positive");
  LambdaCorrection out{integrate(target) / den, Field(g)};
  for (std::size_t i = 0; i < g.size(); ++i) out.cbar[i] = out.lambda * tv[i];
  return out;
}

struct RUpdate {
  double r_next = 0.0;
  double factor = 1.0;       // C^{n+1} = numerator / denominator, so r_next = factor * r_n
  double dissipation = 0.0;  // integral b(cbar) |grad mu|^2
  double source_work = 0.0;  // integral mu F_c(rho^{n+1}, cbar)
};

/// Closed-form SAV update of the auxiliary energy. A negative numerator means
/// the step is too large for the source term; the caller halves dt and retries.
inline RUpdate update_r(double r_n, double C0, const Field& cbar, const Field& mu,
                        const Field& rho_next, double energy_bar, double dt, const Physics& phys) {
  const double shifted = energy_bar + C0;
  if (!(shifted > 0.0)) fail(ErrorKind::Domain, "update_r: E + C0 must be positive");
  const Grid& g = cbar.grid();
  const Field gmu2 = grad_norm2(mu);
  Field diss(g), work(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    diss[i] = phys.mobility(cbar[i]) * gmu2[i];
    work[i] = mu[i] * phys.source(rho_next[i], cbar[i]);
  }
  RUpdate out;
  out.dissipation = integrate(diss);
  out.source_work = integrate(work);
  const double num = 1.0 + dt / shifted * out.source_work;
  const double den = 1.0 + dt / shifted * out.dissipation;
  if (num < 0.0)
    fail(ErrorKind::StepSize, "update_r: negative numerator " + std::to_string(num) +
                                  "; time step too large for the source term");
  out.factor = num / den;
  out.r_next = r_n * out.factor;
  return out;
}

struct Rescaled {
  double xi = 1.0;
  double sigma = 1.0;
  Field c;
  Field v;
};

inline Rescaled rescale(double r_next, double energy_bar, double C0, const Field& cbar,
                        const Field& vbar) {
  if (!(r_next >= 0.0)) fail(ErrorKind::Bound, "rescale: r must be non-negative");
  const double xi = r_next / (energy_bar + C0);
  if (!(xi > 0.0 && xi < 2.0))
    fail(ErrorKind::Bound, "xi = " + std::to_string(xi) + " left (0,2)");
  Rescaled out{xi, xi * (2.0 - xi), Field(cbar.grid()), Field(vbar.grid())};
  for (std::size_t i = 0; i < cbar.size(); ++i) {
    out.c[i] = out.sigma * cbar[i];
    out.v[i] = out.sigma * vbar[i];
  }
  return out;
}

/// mu from v via the chemical-potential row, with vbar replaced by v itself.
inline Field chemical_potential(const Field& v, const Field& c, const Field& rho,
                                const Physics& phys) {
  const Field lap = laplacian(v);
  const Field gv2 = grad_norm2(v);
  const double gamma = phys.params().gamma;
  Field mu(v.grid());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    mu[i] = (-gamma * phys.transform().dT(v[i]) * lap[i] -
             gamma * phys.transform().d2T(v[i]) * gv2[i]) / rho[i] +
            phys.dpsi0_dc(rho[i], c[i]);
  }
  return mu;
}

}  // namespace gnsch
