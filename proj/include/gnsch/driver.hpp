#pragma once

// Time stepping: one step is the relaxation update for (rho, momentum) followed
// by the SAV Cahn-Hilliard step, with dt halved and the step redone whenever
// the r-update guard fails. Also the convergence harnesses.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gnsch/config.hpp"
#include "gnsch/error.hpp"
#include "gnsch/mesh.hpp"
#include "gnsch/ns_relax.hpp"
#include "gnsch/physics.hpp"
#include "gnsch/sav_ch.hpp"

namespace gnsch {

struct SimState {
  Grid grid;
  Components U;  // rho, momentum per axis
  Field c;
  Field v;       // transformed variable, evolved on its own
  Field mu;
  Components V, W;
  SavState sav;
  double t = 0.0;
  long step_index = 0;

  const Field& rho() const { return U[0]; }
};

struct DiagRecord {
  double t = 0.0;
  double dt = 0.0;
  double total_mass = 0.0;
  double energy = 0.0;
  // (||sqrt(a) U^{n+1}|| + ||V^{n+1}|| + r^{n+1}) - (||sqrt(a) U^n|| + ||V*|| + C^{n+1} r^n)
  double dissipation_quantity = 0.0;
  // Same balance with squared norms: a||U||^2 + ||V||^2 (+ the r terms).
  double dissipation_quadratic = 0.0;
  double r = 0.0;
  double xi = 1.0;
  double c_min = 0.0;
  double c_max = 0.0;
  int solver_iterations = 0;
  double solver_residual = 0.0;
  double lambda = 1.0;
  int halvings = 0;
  int cbar_overshoot = 0;  // cells with cbar outside (0,1) before the rescale
  double c_mass = 0.0;
};

/// A step of a run, as seen by observers.
using StepObserver = std::function<void(const SimState&, const DiagRecord&)>;

namespace detail {

inline Components momentum_velocity(const Components& U) {
  Components vel;
  for (std::size_t k = 1; k < U.size(); ++k) vel.push_back(velocity(U[0], U[k]));
  return vel;
}

// c values at which E and b are evaluated; an overshoot of cbar past the
// interval is pulled back to the nearest representable interior value.
inline Field evaluation_fraction(const Field& cbar, int& overshoot) {
  Field out = cbar;
  overshoot = 0;
  const double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] >= 1.0 || out[i] <= 0.0) {
      ++overshoot;
      out[i] = std::clamp(out[i], lo, hi);
    }
  }
  return out;
}

inline void require_bounds(const Field& c, const char* where) {
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!(c[i] > 0.0 && c[i] < 1.0))
      fail(ErrorKind::Bound, std::string(where) + ": c = " + std::to_string(c[i]) +
                                 " left (0,1) at cell " + std::to_string(i));
  }
}

}  // namespace detail

/// Initial fields from the [initial] section.
inline SimState init_state(const RunConfig& cfg) {
  cfg.validate();
  const Physics phys(cfg.phys);
  const Grid g = cfg.grid.make();
  const InitialSpec& ic = cfg.initial;
  SimState s;
  s.grid = g;
  s.c = Field(g);

  std::mt19937_64 rng(cfg.run_case.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double pi = std::acos(-1.0);
  for (int iy = 0; iy < g.ny(); ++iy) {
    for (int ix = 0; ix < g.nx(); ++ix) {
      const double x = g.x_center(ix);
      const double y = g.y_center(iy);
      double c = ic.c_mean;
      switch (ic.type) {
        case InitialKind::Noise: c = ic.c_mean - ic.c_amplitude * unit(rng); break;
        case InitialKind::Cosine: c = ic.c_mean + ic.c_amplitude * std::cos(2.0 * pi * ic.wavenumber * x); break;
        case InitialKind::Gaussian: {
          const double dx = x - ic.center_x;
          const double r2 = g.dim() == 2 ? dx * dx + (y - ic.center_y) * (y - ic.center_y) : dx * dx;
          c = ic.c_base + ic.c_amplitude * std::exp(-ic.sharpness * r2);
          break;
        }
        case InitialKind::Uniform: break;
      }
      s.c[g.index(ix, iy)] = c;
    }
  }
  for (std::size_t i = 0; i < s.c.size(); ++i) {
    if (!(s.c[i] > 0.0 && s.c[i] < 1.0))
      fail(ErrorKind::Config, "initial: c0 = " + std::to_string(s.c[i]) + " outside (0,1) at cell " +
                                  std::to_string(i));
  }

  Field rho(g);
  for (std::size_t i = 0; i < rho.size(); ++i)
    rho[i] = ic.rho_mode == DensityMode::Constant
                 ? ic.rho
                 : ic.rho_phase1 * s.c[i] + ic.rho_phase2 * (1.0 - s.c[i]);
  s.U.push_back(rho);
  Field mx(g), my(g);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    mx[i] = rho[i] * ic.velocity_x;
    my[i] = rho[i] * ic.velocity_y;
  }
  s.U.push_back(mx);
  if (g.dim() == 2) s.U.push_back(my);

  s.v = Field(g);
  for (std::size_t i = 0; i < s.v.size(); ++i) s.v[i] = phys.transform().inverse(s.c[i]);
  s.mu = chemical_potential(s.v, s.c, rho, phys);
  s.V = flux_F(s.U, s.c, phys);
  if (g.dim() == 2) s.W = flux_K(s.U, s.c, phys);

  const double e0 = phys.energy(rho, s.c);
  s.sav.C0 = 2.0 * cfg.phys.Cunder + std::abs(e0);
  s.sav.r = e0 + s.sav.C0;
  s.sav.xi = 1.0;
  s.sav.sigma = 1.0;
  return s;
}

/// CFL cap dt such that dt (sqrt(a)/dx + sqrt(b)/dy) = safety.
inline double cfl_dt(const Grid& g, const SubcharConstants& k, double safety) {
  if (!(k.a > 0.0) && !(g.dim() == 2 && k.b > 0.0))
    fail(ErrorKind::Domain, "compute_dt: subcharacteristic constant a1 must be positive");
  double rate = std::sqrt(k.a) / g.dx();
  if (g.dim() == 2) rate += std::sqrt(k.b) / g.dy();
  return safety / rate;
}

/// Step size for the next step: adaptive (CFL, dt_max, dt_init on the first
/// step) or fixed, then clipped so the run ends exactly at T_final.
inline double compute_dt(const SimState& s, const SubcharConstants& k, const TimeSpec& ts) {
  double dt;
  if (ts.fixed_dt > 0.0) {
    dt = ts.fixed_dt;
  } else {
    dt = std::min(ts.dt_max, cfl_dt(s.grid, k, ts.cfl_safety));
    if (s.step_index == 0) dt = std::min(dt, ts.dt_init);
  }
  const double remaining = ts.T_final - s.t;
  if (remaining > 0.0 && dt >= remaining * (1.0 - 1e-9)) dt = remaining;
  return dt;
}

struct StepOptions {
  std::optional<double> forced_dt;  // bypasses compute_dt (no CFL capping)
  int max_halvings = 20;
};

namespace detail {

struct Attempt {
  SimState next;
  DiagRecord diag;
};

inline Attempt attempt_step(const SimState& s, const SubcharConstants& k, double dt,
                            const RunConfig& cfg, const Physics& phys) {
  const Grid& g = s.grid;
  const bool two_d = g.dim() == 2;
  const double eta = cfg.phys.eta;

  // Relaxation and finite-volume update of (rho, momentum, V, W).
  const Components F = flux_F(s.U, s.c, phys);
  const Components Vstar = relax_star(s.V, F, dt, eta);
  Components Wstar;
  if (two_d) Wstar = relax_star(s.W, flux_K(s.U, s.c, phys), dt, eta);
  HyperbolicState hs = fv_update(HyperbolicState{s.U, s.V, s.W}, Vstar, Wstar, k, dt, s.c, phys);

  // Cahn-Hilliard with the new density and velocity.
  const Components vel = momentum_velocity(hs.U);
  const ChSystem sys =
      assemble_system(ChInputs{s.v, s.c, s.U[0], hs.U[0], vel, dt}, phys, cfg.advection);
  std::vector<double> x0(s.v.data());
  x0.insert(x0.end(), s.mu.data().begin(), s.mu.data().end());
  ChSolution sol = solve_ch(sys, cfg.solver, x0);

  LambdaCorrection lc = lambda_correct(sol.vbar, s.c, s.U[0], dt, phys);
  int overshoot = 0;
  const Field c_eval = evaluation_fraction(lc.cbar, overshoot);
  const double e_bar = phys.energy(hs.U[0], c_eval);
  const RUpdate ru = update_r(s.sav.r, s.sav.C0, c_eval, sol.mu, hs.U[0], e_bar, dt, phys);
  Rescaled rs = rescale(ru.r_next, e_bar, s.sav.C0, lc.cbar, sol.vbar);
  require_bounds(rs.c, "rescale");
  if (cfg.v_update == VUpdate::Resync) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double cb = lc.cbar[i];
      if (cb > 0.0 && cb < 1.0) rs.v[i] = rs.sigma * phys.transform().inverse(cb);
    }
  }

  Attempt out;
  SimState& n = out.next;
  n.grid = g;
  n.U = std::move(hs.U);
  n.V = std::move(hs.V);
  n.W = std::move(hs.W);
  n.c = std::move(rs.c);
  n.v = std::move(rs.v);
  n.mu = std::move(sol.mu);
  n.sav = SavState{ru.r_next, s.sav.C0, rs.xi, rs.sigma};
  n.t = s.t + dt;
  n.step_index = s.step_index + 1;

  DiagRecord& d = out.diag;
  d.t = n.t;
  d.dt = dt;
  d.total_mass = integrate(n.U[0]);
  d.c_mass = integrate(n.c);
  d.energy = phys.energy(n.U[0], n.c);
  d.r = n.sav.r;
  d.xi = rs.xi;
  d.c_min = *std::min_element(n.c.data().begin(), n.c.data().end());
  d.c_max = *std::max_element(n.c.data().begin(), n.c.data().end());
  d.solver_iterations = sol.report.iterations;
  d.solver_residual = sol.report.relative_residual;
  d.lambda = lc.lambda;
  d.cbar_overshoot = overshoot;

  const double sa = std::sqrt(k.a);
  const double sb = std::sqrt(k.b);
  const double nu_new = components_norm(n.U);
  const double nu_old = components_norm(s.U);
  const double r_old_scaled = ru.factor * s.sav.r;
  double lhs = sa * nu_new + components_norm(n.V) + n.sav.r;
  double rhs = sa * nu_old + components_norm(Vstar) + r_old_scaled;
  double lhs2 = k.a * nu_new * nu_new + std::pow(components_norm(n.V), 2);
  double rhs2 = k.a * nu_old * nu_old + std::pow(components_norm(Vstar), 2);
  if (two_d) {
    lhs += sb * nu_new + components_norm(n.W);
    rhs += sb * nu_old + components_norm(Wstar);
    lhs2 += k.b * nu_new * nu_new + std::pow(components_norm(n.W), 2);
    rhs2 += k.b * nu_old * nu_old + std::pow(components_norm(Wstar), 2);
  }
  d.dissipation_quantity = lhs - rhs;
  d.dissipation_quadratic = (lhs2 + n.sav.r) - (rhs2 + r_old_scaled);
  return out;
}

}  // namespace detail

/// Advances s by one step. StepSize failures of the r-update halve dt and
/// redo the step from the relaxation stage, at most opt.max_halvings times.
inline DiagRecord step(SimState& s, const RunConfig& cfg, const Physics& phys,
                       const StepOptions& opt = {}) {
  const SubcharConstants k = subchar_constants(s.U, s.c, phys);
  double dt = opt.forced_dt ? *opt.forced_dt : compute_dt(s, k, cfg.time);
  if (!(dt > 0.0)) fail(ErrorKind::InvalidArgument, "step: dt must be positive");
  for (int halvings = 0;; ++halvings) {
    try {
      detail::Attempt a = detail::attempt_step(s, k, dt, cfg, phys);
      a.diag.halvings = halvings;
      s = std::move(a.next);
      return a.diag;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::StepSize) throw;
      if (halvings >= opt.max_halvings)
        fail(ErrorKind::TooManyHalvings,
             "step: r-update guard still failing after " + std::to_string(halvings) + " halvings");
      dt *= 0.5;
    }
  }
}

struct RunResult {
  SimState final_state;
  std::vector<DiagRecord> diagnostics;
  double initial_mass = 0.0;
  double initial_energy = 0.0;
  long steps = 0;
};

/// Snapshot sink: called with the initial state, at each snapshot_interval
/// crossing, and with the final state.
using SnapshotSink = std::function<void(const SimState&)>;

inline RunResult run(const RunConfig& cfg, const SnapshotSink& snapshot = {},
                     const StepObserver& observer = {}) {
  const Physics phys(cfg.phys);
  RunResult res;
  SimState s = init_state(cfg);
  res.initial_mass = integrate(s.U[0]);
  res.initial_energy = phys.energy(s.U[0], s.c);
  if (snapshot) snapshot(s);
  const double T = cfg.time.T_final;
  const double interval = cfg.output.snapshot_interval;
  double next_snap = interval > 0.0 ? interval : std::numeric_limits<double>::infinity();
  const double end_tol = 1e-12 * std::max(1.0, T);
  while (s.t < T - end_tol) {
    const DiagRecord d = step(s, cfg, phys);
    ++res.steps;
    if (s.step_index % cfg.output.diagnostics_stride == 0) res.diagnostics.push_back(d);
    if (observer) observer(s, d);
    const bool last = !(s.t < T - end_tol);
    if (snapshot && s.t >= next_snap - end_tol && !last) {
      snapshot(s);
      while (next_snap <= s.t + end_tol) next_snap += interval;
    }
  }
  if (snapshot && res.steps > 0) snapshot(s);
  res.final_state = std::move(s);
  return res;
}

// ---------------------------------------------------------------------------
// Convergence studies

/// Least-squares slope of log(error) against log(resolution).
inline double fit_order(const std::vector<double>& resolution, const std::vector<double>& error) {
  if (resolution.size() != error.size())
    fail(ErrorKind::InvalidArgument, "fit_order: size mismatch");
  if (resolution.size() < 2) fail(ErrorKind::InvalidArgument, "fit_order: need at least 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(resolution.size());
  for (std::size_t i = 0; i < resolution.size(); ++i) {
    if (!(resolution[i] > 0.0 && error[i] > 0.0))
      fail(ErrorKind::InvalidArgument, "fit_order: resolutions and errors must be positive");
    const double x = std::log(resolution[i]);
    const double y = std::log(error[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) fail(ErrorKind::InvalidArgument, "fit_order: resolutions must differ");
  return (n * sxy - sx * sy) / den;
}

struct ConvergenceRow {
  double resolution = 0.0;  // dx of the coarser grid, or dt of the larger step
  double error = 0.0;       // error_rho + error_c + error_v
  double error_rho = 0.0;
  double error_c = 0.0;
  double error_v = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double order = 0.0;
  double order_rho = 0.0;
  double order_c = 0.0;
  double order_v = 0.0;
};

inline ConvergenceTable fit_table(std::vector<ConvergenceRow> rows) {
  ConvergenceTable t;
  t.rows = std::move(rows);
  std::vector<double> h, e, er, ec, ev;
  for (const auto& r : t.rows) {
    h.push_back(r.resolution);
    e.push_back(r.error);
    er.push_back(r.error_rho);
    ec.push_back(r.error_c);
    ev.push_back(r.error_v);
  }
  t.order = fit_order(h, e);
  t.order_rho = fit_order(h, er);
  t.order_c = fit_order(h, ec);
  t.order_v = fit_order(h, ev);
  return t;
}

/// L2 distance between a coarse field extended piecewise-constantly onto a
/// grid refined by `ratio` per axis and the fine field, with fine-cell weights.
inline double extension_error(const Field& coarse, const Field& fine) {
  const Grid& gc = coarse.grid();
  const Grid& gf = fine.grid();
  if (gc.dim() != gf.dim() || gf.nx() % gc.nx() != 0 || gf.ny() % gc.ny() != 0)
    fail(ErrorKind::InvalidArgument, "extension_error: fine grid is not a refinement");
  const int rx = gf.nx() / gc.nx();
  const int ry = gf.ny() / gc.ny();
  double s = 0.0;
  for (int iy = 0; iy < gf.ny(); ++iy)
    for (int ix = 0; ix < gf.nx(); ++ix) {
      const double d = fine[gf.index(ix, iy)] - coarse[gc.index(ix / rx, iy / ry)];
      s += d * d;
    }
  return std::sqrt(s * gf.cell_volume());
}

/// Per-field distance between two runs; velocity sums all components.
inline ConvergenceRow compare_states(const SimState& coarse, const SimState& fine, double resolution) {
  ConvergenceRow row;
  row.resolution = resolution;
  row.error_rho = extension_error(coarse.U[0], fine.U[0]);
  row.error_c = extension_error(coarse.c, fine.c);
  const Components vc = detail::momentum_velocity(coarse.U);
  const Components vf = detail::momentum_velocity(fine.U);
  double ev2 = 0.0;
  for (std::size_t k = 0; k < vc.size(); ++k) ev2 += std::pow(extension_error(vc[k], vf[k]), 2);
  row.error_v = std::sqrt(ev2);
  row.error = row.error_rho + row.error_c + row.error_v;
  return row;
}

namespace detail {

inline std::vector<SimState> run_all(const std::vector<RunConfig>& cfgs) {
  std::vector<std::future<SimState>> jobs;
  for (const auto& c : cfgs)
    jobs.push_back(std::async(std::launch::async, [c] { return run(c).final_state; }));
  std::vector<SimState> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

}  // namespace detail

/// Grid refinement study over cfg.convergence.space_ladder at fixed dt.
inline ConvergenceTable convergence_space(const RunConfig& cfg) {
  const auto& ladder = cfg.convergence.space_ladder;
  if (ladder.size() < 2) fail(ErrorKind::InvalidArgument, "convergence_space: need at least 2 grids");
  std::vector<RunConfig> cfgs;
  for (int n : ladder) {
    RunConfig c = cfg;
    c.grid.nx = n;
    if (c.grid.dim == 2) c.grid.ny = n;
    cfgs.push_back(c);
  }
  const std::vector<SimState> states = detail::run_all(cfgs);
  std::vector<ConvergenceRow> rows;
  for (std::size_t i = 0; i + 1 < states.size(); ++i)
    rows.push_back(compare_states(states[i], states[i + 1], states[i].grid.dx()));
  return fit_table(std::move(rows));
}

/// Time refinement study: fixed dt = time_base_dt / 2^k for k < time_levels.
inline ConvergenceTable convergence_time(const RunConfig& cfg) {
  const int levels = cfg.convergence.time_levels;
  if (levels < 2) fail(ErrorKind::InvalidArgument, "convergence_time: need at least 2 time steps");
  std::vector<RunConfig> cfgs;
  std::vector<double> dts;
  for (int k = 0; k < levels; ++k) {
    RunConfig c = cfg;
    c.time.fixed_dt = cfg.convergence.time_base_dt / std::pow(2.0, k);
    dts.push_back(c.time.fixed_dt);
    cfgs.push_back(c);
  }
  const std::vector<SimState> states = detail::run_all(cfgs);
  std::vector<ConvergenceRow> rows;
  for (std::size_t i = 0; i + 1 < states.size(); ++i)
    rows.push_back(compare_states(states[i], states[i + 1], dts[i]));
  return fit_table(std::move(rows));
}

}  // namespace gnsch
