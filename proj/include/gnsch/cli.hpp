#pragma once

// Command-line front end: run, converge-space, converge-time, check.
// Exit codes: 0 success, 1 invariant violation or runtime failure, 2 usage or config error.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "gnsch/config.hpp"
#include "gnsch/driver.hpp"
#include "gnsch/error.hpp"
#include "gnsch/io.hpp"

namespace gnsch {

namespace detail {

struct CliOptions {
  std::string config_path;
  std::string output;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

inline RunConfig load_for_cli(const CliOptions& o) {
  RunConfig cfg = parse_config(o.config_path);
  if (!o.output.empty()) cfg.output.directory = o.output;
  if (o.seed) cfg.run_case.seed = *o.seed;
  return cfg;
}

inline std::string snapshot_name(const std::string& dir, long step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshot_%07ld.csv", step);
  return (std::filesystem::path(dir) / buf).string();
}

inline void write_config_copy(const RunConfig& cfg) {
  std::ofstream out = open_for_write((std::filesystem::path(cfg.output.directory) / "config.ini").string());
  out << serialize(cfg);
}

inline int cmd_run(const CliOptions& o, std::ostream& log) {
  const RunConfig cfg = load_for_cli(o);
  const Physics phys(cfg.phys);
  const std::string dir = cfg.output.directory;
  std::filesystem::create_directories(dir);
  write_config_copy(cfg);
  const RunResult res = run(cfg, [&](const SimState& s) { write_snapshot(s, phys, snapshot_name(dir, s.step_index)); });
  write_diagnostics(res.diagnostics, (std::filesystem::path(dir) / "diagnostics.csv").string());
  if (!o.quiet) {
    const SimState& s = res.final_state;
    double cmin = 1.0, cmax = 0.0;
    for (double c : s.c.values()) {
      cmin = std::min(cmin, c);
      cmax = std::max(cmax, c);
    }
    log << "case " << cfg.run_case.name << ": " << res.steps << " steps to t = " << s.t << "\n"
        << "  mass drift " << std::abs(integrate(s.U[0]) - res.initial_mass) / res.initial_mass
        << ", c in [" << cmin << ", " << cmax << "], xi = " << s.sav.xi << "\n"
        << "  output in " << dir << "\n";
  }
  return 0;
}

inline int cmd_converge(const CliOptions& o, bool space, std::ostream& log) {
  const RunConfig cfg = load_for_cli(o);
  const ConvergenceTable t = space ? convergence_space(cfg) : convergence_time(cfg);
  const std::string file = space ? "convergence_space.csv" : "convergence_time.csv";
  write_convergence(t, (std::filesystem::path(cfg.output.directory) / file).string());
  if (!o.quiet) {
    log << (space ? "spatial" : "temporal") << " convergence, " << t.rows.size() + 1 << " runs\n";
    for (const auto& r : t.rows)
      log << "  h = " << r.resolution << "  error = " << r.error << "  (rho " << r.error_rho << ", c "
          << r.error_c << ", v " << r.error_v << ")\n";
    log << "  fitted order: combined " << t.order << ", rho " << t.order_rho << ", c " << t.order_c
        << ", v " << t.order_v << "\n";
  }
  return 0;
}

/// One step at dt_init with no CFL capping, then an invariant report.
inline int cmd_check(const CliOptions& o, std::ostream& log) {
  const RunConfig cfg = load_for_cli(o);
  const Physics phys(cfg.phys);
  SimState s = init_state(cfg);
  const double m0 = integrate(s.U[0]);
  const double e0 = phys.energy(s.U[0], s.c);
  StepOptions opt;
  opt.forced_dt = cfg.time.dt_init;
  const DiagRecord d = step(s, cfg, phys, opt);
  const double drift = std::abs(d.total_mass - m0) / m0;
  const bool mass_ok = drift <= 1e-12;
  const bool bounds_ok = d.c_min > 0.0 && d.c_max < 1.0;
  const bool xi_ok = d.xi > 0.0 && d.xi < 2.0;
  const bool diss_ok = d.dissipation_quantity <= 1e-10 * std::abs(e0);
  if (!o.quiet) {
    auto mark = [](bool ok) { return ok ? "ok  " : "FAIL"; };
    log << "check " << cfg.run_case.name << " (one step, dt = " << d.dt << ")\n"
        << "  " << mark(mass_ok) << " mass drift " << drift << "\n"
        << "  " << mark(bounds_ok) << " c in [" << d.c_min << ", " << d.c_max << "]\n"
        << "  " << mark(xi_ok) << " xi = " << d.xi << "\n"
        << "  " << mark(diss_ok) << " energy balance " << d.dissipation_quantity << "\n"
        << "  solver iterations " << d.solver_iterations << ", residual " << d.solver_residual << "\n";
  }
  return mass_ok && bounds_ok && xi_ok && diss_ok ? 0 : 1;
}

}  // namespace detail

inline int cli_main(int argc, const char* const* argv, std::ostream& log = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"G-NSCH finite-volume simulator"};
  app.require_subcommand(1);
  detail::CliOptions o;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", o.config_path, "configuration file")->required();
    sub->add_option("--output", o.output, "output directory (overrides output.directory)");
    sub->add_option("--seed", seed, "random seed (overrides case.seed)");
    sub->add_flag("--quiet", o.quiet, "suppress the summary");
  };
  CLI::App* run_cmd = app.add_subcommand("run", "run a simulation");
  CLI::App* space_cmd = app.add_subcommand("converge-space", "grid convergence study");
  CLI::App* time_cmd = app.add_subcommand("converge-time", "time-step convergence study");
  CLI::App* check_cmd = app.add_subcommand("check", "one step plus invariant report");
  for (CLI::App* sub : {run_cmd, space_cmd, time_cmd, check_cmd}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    log << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  }
  for (CLI::App* sub : {run_cmd, space_cmd, time_cmd, check_cmd})
    if (sub->parsed() && sub->count("--seed") > 0) o.seed = seed;

  try {
    if (run_cmd->parsed()) return detail::cmd_run(o, log);
    if (space_cmd->parsed()) return detail::cmd_converge(o, true, log);
    if (time_cmd->parsed()) return detail::cmd_converge(o, false, log);
    return detail::cmd_check(o, log);
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return e.is_invariant_violation() || e.kind() == ErrorKind::Io ? 1 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace gnsch
