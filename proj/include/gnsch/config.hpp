#pragma once

// Run configuration: an INI file with sections [case] [grid] [physics] [scheme]
// [initial] [time] [solver] [output] [convergence]. Every key is listed in
// config_keys(); anything else is rejected.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "gnsch/error.hpp"
#include "gnsch/mesh.hpp"
#include "gnsch/physics.hpp"
#include "gnsch/sav_ch.hpp"

namespace gnsch {

struct CaseSpec {
  std::string name = "custom";
  std::uint64_t seed = 12345;

  friend bool operator==(const CaseSpec&, const CaseSpec&) = default;
};

struct GridSpec {
  int dim = 1;
  int nx = 128;
  int ny = 1;
  double lx = 1.0;
  double ly = 1.0;

  Grid make() const { return dim == 1 ? Grid::line(nx, lx) : Grid::plane(nx, ny, lx, ly); }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

enum class InitialKind { Noise, Cosine, Gaussian, Uniform };
enum class DensityMode { Constant, Mixture };

/// How v^{n+1} is formed. literal: sigma vbar. resync: sigma T^{-1}(cbar), so the
/// mass correction lambda also reaches v.
enum class VUpdate { Resync, Literal };

/// Initial data. noise: c = c_mean - c_amplitude * U[0,1);
/// cosine: c = c_mean + c_amplitude cos(2 pi wavenumber x);
/// gaussian: c = c_base + c_amplitude exp(-sharpness |x - centre|^2);
/// uniform: c = c_mean. Density is constant or rho_phase1 c + rho_phase2 (1 - c).
struct InitialSpec {
  InitialKind type = InitialKind::Uniform;
  double c_mean = 0.5;
  double c_amplitude = 0.0;
  double c_base = 0.0;
  double wavenumber = 1.0;
  double sharpness = 100.0;
  double center_x = 0.5;
  double center_y = 0.5;
  DensityMode rho_mode = DensityMode::Constant;
  double rho = 1.0;
  double rho_phase1 = 1.0;
  double rho_phase2 = 1.0;
  double velocity_x = 0.0;
  double velocity_y = 0.0;

  friend bool operator==(const InitialSpec&, const InitialSpec&) = default;
};

struct TimeSpec {
  double T_final = 0.1;
  double dt_init = 1e-6;
  double dt_max = 1e-5;
  double cfl_safety = 0.9;
  double fixed_dt = 0.0;  // > 0 disables adaptation

  friend bool operator==(const TimeSpec&, const TimeSpec&) = default;
};

struct OutputSpec {
  std::string directory = "output";
  double snapshot_interval = 0.0;  // 0: initial and final state only
  int diagnostics_stride = 1;

  friend bool operator==(const OutputSpec&, const OutputSpec&) = default;
};

struct ConvergenceSpec {
  std::vector<int> space_ladder{64, 128, 256, 512};
  double time_base_dt = 1e-4;
  int time_levels = 6;

  friend bool operator==(const ConvergenceSpec&, const ConvergenceSpec&) = default;
};

struct RunConfig {
  CaseSpec run_case;
  GridSpec grid;
  PhysParams phys;
  AdvectionScheme advection = AdvectionScheme::Upwind;
  VUpdate v_update = VUpdate::Resync;
  InitialSpec initial;
  TimeSpec time;
  SolverOptions solver;
  OutputSpec output;
  ConvergenceSpec convergence;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  void validate() const;
};

namespace detail {

[[noreturn]] inline void bad_key(const std::string& key, const std::string& why) {
  fail(ErrorKind::Config, key + ": " + why);
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_plain_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || text.empty())
    bad_key(key, "expected a number, got '" + text + "'");
  return v;
}

// Accepts plain numbers and simple fractions such as 1/500.
inline double parse_double(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  const auto slash = text.find('/');
  if (slash == std::string::npos) return parse_plain_double(key, text);
  const double num = parse_plain_double(key, trim(text.substr(0, slash)));
  const double den = parse_plain_double(key, trim(text.substr(slash + 1)));
  if (den == 0.0) bad_key(key, "division by zero");
  return num / den;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  Int v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    bad_key(key, "expected an integer, got '" + text + "'");
  return v;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class E>
struct EnumName {
  E value;
  const char* name;
};

template <class E, std::size_t N>
E parse_enum(const std::string& key, const std::string& raw, const EnumName<E> (&names)[N]) {
  const std::string text = trim(raw);
  std::string allowed;
  for (const auto& n : names) {
    if (text == n.name) return n.value;
    allowed += (allowed.empty() ? "" : "|") + std::string(n.name);
  }
  bad_key(key, "expected one of " + allowed + ", got '" + text + "'");
}

template <class E, std::size_t N>
std::string enum_name(E v, const EnumName<E> (&names)[N]) {
  for (const auto& n : names)
    if (n.value == v) return n.name;
  return "?";
}

inline constexpr EnumName<TransformKind> kTransformNames[] = {{TransformKind::Logistic, "logistic"},
                                                              {TransformKind::Tanh, "tanh"}};
inline constexpr EnumName<AdvectionScheme> kAdvectionNames[] = {
    {AdvectionScheme::Upwind, "upwind"}, {AdvectionScheme::Central, "central"}};
inline constexpr EnumName<InitialKind> kInitialNames[] = {{InitialKind::Noise, "noise"},
                                                          {InitialKind::Cosine, "cosine"},
                                                          {InitialKind::Gaussian, "gaussian"},
                                                          {InitialKind::Uniform, "uniform"}};
inline constexpr EnumName<VUpdate> kVUpdateNames[] = {{VUpdate::Resync, "resync"},
                                                    {VUpdate::Literal, "literal"}};
inline constexpr EnumName<DensityMode> kDensityNames[] = {{DensityMode::Constant, "constant"},
                                                          {DensityMode::Mixture, "mixture"}};
inline constexpr EnumName<SolverMethod> kSolverNames[] = {{SolverMethod::Gmres, "gmres"},
                                                          {SolverMethod::Direct, "direct"},
                                                          {SolverMethod::Dense, "dense"}};

}  // namespace detail

/// One configurable key: how to read it into a RunConfig and how to print it back.
struct ConfigKey {
  std::string name;  // section.key
  bool required = false;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline const std::vector<ConfigKey>& config_keys() {
  using namespace detail;
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    auto dbl = [&k](const std::string& name, auto proj, bool required = false) {
      k.push_back({name, required,
                   [name, proj](RunConfig& c, const std::string& s) { proj(c) = parse_double(name, s); },
                   [proj](const RunConfig& c) { return format_double(proj(c)); }});
    };
    auto integer = [&k](const std::string& name, auto proj, bool required = false) {
      k.push_back({name, required,
                   [name, proj](RunConfig& c, const std::string& s) {
                     auto& ref = proj(c);
                     ref = parse_int<std::remove_cvref_t<decltype(ref)>>(name, s);
                   },
                   [proj](const RunConfig& c) { return std::to_string(proj(c)); }});
    };
    auto enumerated = [&k](const std::string& name, auto proj, const auto& names) {
      k.push_back({name, false,
                   [name, proj, &names](RunConfig& c, const std::string& s) {
                     proj(c) = parse_enum(name, s, names);
                   },
                   [proj, &names](const RunConfig& c) {
                     return enum_name(proj(c), names);
                   }});
    };
    auto text = [&k](const std::string& name, auto proj) {
      k.push_back({name, false, [proj](RunConfig& c, const std::string& s) { proj(c) = trim(s); },
                   [proj](const RunConfig& c) { return proj(c); }});
    };

    text("case.name", [](auto& c) -> auto& { return c.run_case.name; });
    integer("case.seed", [](auto& c) -> auto& { return c.run_case.seed; });

    integer("grid.dim", [](auto& c) -> auto& { return c.grid.dim; });
    integer("grid.nx", [](auto& c) -> auto& { return c.grid.nx; }, true);
    integer("grid.ny", [](auto& c) -> auto& { return c.grid.ny; });
    dbl("grid.lx", [](auto& c) -> auto& { return c.grid.lx; });
    dbl("grid.ly", [](auto& c) -> auto& { return c.grid.ly; });

    dbl("physics.a", [](auto& c) -> auto& { return c.phys.a; });
    dbl("physics.gamma", [](auto& c) -> auto& { return c.phys.gamma; });
    dbl("physics.nu", [](auto& c) -> auto& { return c.phys.nu0; });
    dbl("physics.eta", [](auto& c) -> auto& { return c.phys.eta; });
    dbl("physics.alpha1", [](auto& c) -> auto& { return c.phys.alpha1; });
    dbl("physics.alpha2", [](auto& c) -> auto& { return c.phys.alpha2; });
    dbl("physics.theta", [](auto& c) -> auto& { return c.phys.theta; });
    dbl("physics.k", [](auto& c) -> auto& { return c.phys.k; });
    dbl("physics.Cb", [](auto& c) -> auto& { return c.phys.Cb; });
    dbl("physics.alpha_mob", [](auto& c) -> auto& { return c.phys.alpha_mob; });
    dbl("physics.kappa1", [](auto& c) -> auto& { return c.phys.kappa1; });
    dbl("physics.kappa2", [](auto& c) -> auto& { return c.phys.kappa2; });
    dbl("physics.growth_rate", [](auto& c) -> auto& { return c.phys.growth_rate; });
    dbl("physics.c_star", [](auto& c) -> auto& { return c.phys.c_star; });
    dbl("physics.Cunder", [](auto& c) -> auto& { return c.phys.Cunder; });

    enumerated("scheme.transform", [](auto& c) -> auto& { return c.phys.transform; },
               kTransformNames);
    enumerated("scheme.advection", [](auto& c) -> auto& { return c.advection; },
               kAdvectionNames);
    enumerated("scheme.v_update", [](auto& c) -> auto& { return c.v_update; }, kVUpdateNames);

    enumerated("initial.type", [](auto& c) -> auto& { return c.initial.type; },
               kInitialNames);
    dbl("initial.c_mean", [](auto& c) -> auto& { return c.initial.c_mean; });
    dbl("initial.c_amplitude", [](auto& c) -> auto& { return c.initial.c_amplitude; });
    dbl("initial.c_base", [](auto& c) -> auto& { return c.initial.c_base; });
    dbl("initial.wavenumber", [](auto& c) -> auto& { return c.initial.wavenumber; });
    dbl("initial.sharpness", [](auto& c) -> auto& { return c.initial.sharpness; });
    dbl("initial.center_x", [](auto& c) -> auto& { return c.initial.center_x; });
    dbl("initial.center_y", [](auto& c) -> auto& { return c.initial.center_y; });
    enumerated("initial.rho_mode", [](auto& c) -> auto& { return c.initial.rho_mode; },
               kDensityNames);
    dbl("initial.rho", [](auto& c) -> auto& { return c.initial.rho; });
    dbl("initial.rho_phase1", [](auto& c) -> auto& { return c.initial.rho_phase1; });
    dbl("initial.rho_phase2", [](auto& c) -> auto& { return c.initial.rho_phase2; });
    dbl("initial.velocity_x", [](auto& c) -> auto& { return c.initial.velocity_x; });
    dbl("initial.velocity_y", [](auto& c) -> auto& { return c.initial.velocity_y; });

    dbl("time.T_final", [](auto& c) -> auto& { return c.time.T_final; }, true);
    dbl("time.dt_init", [](auto& c) -> auto& { return c.time.dt_init; });
    dbl("time.dt_max", [](auto& c) -> auto& { return c.time.dt_max; });
    dbl("time.cfl_safety", [](auto& c) -> auto& { return c.time.cfl_safety; });
    dbl("time.fixed_dt", [](auto& c) -> auto& { return c.time.fixed_dt; });

    enumerated("solver.method", [](auto& c) -> auto& { return c.solver.method; },
               kSolverNames);
    dbl("solver.tol", [](auto& c) -> auto& { return c.solver.gmres.tol; });
    integer("solver.restart", [](auto& c) -> auto& { return c.solver.gmres.restart; });
    integer("solver.maxiter", [](auto& c) -> auto& { return c.solver.gmres.maxiter; });

    text("output.directory", [](auto& c) -> auto& { return c.output.directory; });
    dbl("output.snapshot_interval", [](auto& c) -> auto& { return c.output.snapshot_interval; });
    integer("output.diagnostics_stride", [](auto& c) -> auto& { return c.output.diagnostics_stride; });

    k.push_back({"convergence.space_ladder", false,
                 [](RunConfig& c, const std::string& s) {
                   c.convergence.space_ladder.clear();
                   std::stringstream ss(s);
                   std::string item;
                   while (std::getline(ss, item, ','))
                     c.convergence.space_ladder.push_back(parse_int<int>("convergence.space_ladder", item));
                 },
                 [](const RunConfig& c) {
                   std::string out;
                   for (int n : c.convergence.space_ladder) out += (out.empty() ? "" : ",") + std::to_string(n);
                   return out;
                 }});
    dbl("convergence.time_base_dt", [](auto& c) -> auto& { return c.convergence.time_base_dt; });
    integer("convergence.time_levels", [](auto& c) -> auto& { return c.convergence.time_levels; });
    return k;
  }();
  return keys;
}

inline void RunConfig::validate() const {
  using detail::bad_key;
  if (grid.dim != 1 && grid.dim != 2) bad_key("grid.dim", "must be 1 or 2");
  if (grid.nx < 3) bad_key("grid.nx", "must be at least 3");
  if (grid.dim == 2 && grid.ny < 3) bad_key("grid.ny", "must be at least 3 in 2D");
  if (grid.dim == 1 && grid.ny != 1) bad_key("grid.ny", "must be 1 in 1D");
  if (!(grid.lx > 0.0)) bad_key("grid.lx", "must be positive");
  if (!(grid.ly > 0.0)) bad_key("grid.ly", "must be positive");
  phys.validate();
  if (!(initial.rho > 0.0)) bad_key("initial.rho", "must be positive");
  if (!(initial.rho_phase1 > 0.0)) bad_key("initial.rho_phase1", "must be positive");
  if (!(initial.rho_phase2 > 0.0)) bad_key("initial.rho_phase2", "must be positive");
  if (!(initial.sharpness >= 0.0)) bad_key("initial.sharpness", "must be non-negative");
  if (!(time.T_final >= 0.0)) bad_key("time.T_final", "must be non-negative");
  if (!(time.dt_init > 0.0)) bad_key("time.dt_init", "must be positive");
  if (!(time.dt_max > 0.0)) bad_key("time.dt_max", "must be positive");
  if (!(time.cfl_safety > 0.0 && time.cfl_safety <= 1.0)) bad_key("time.cfl_safety", "must lie in (0,1]");
  if (!(time.fixed_dt >= 0.0)) bad_key("time.fixed_dt", "must be non-negative");
  if (!(solver.gmres.tol > 0.0)) bad_key("solver.tol", "must be positive");
  if (solver.gmres.restart < 1) bad_key("solver.restart", "must be at least 1");
  if (solver.gmres.maxiter < 1) bad_key("solver.maxiter", "must be at least 1");
  if (output.directory.empty()) bad_key("output.directory", "must not be empty");
  if (!(output.snapshot_interval >= 0.0)) bad_key("output.snapshot_interval", "must be non-negative");
  if (output.diagnostics_stride < 1) bad_key("output.diagnostics_stride", "must be at least 1");
  const auto& ladder = convergence.space_ladder;
  if (ladder.empty()) bad_key("convergence.space_ladder", "must list at least one resolution");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (ladder[i] < 3) bad_key("convergence.space_ladder", "resolutions must be at least 3");
    if (i > 0 && ladder[i] != 2 * ladder[i - 1])
      bad_key("convergence.space_ladder", "each resolution must double the previous one");
  }
  if (!(convergence.time_base_dt > 0.0)) bad_key("convergence.time_base_dt", "must be positive");
  if (convergence.time_levels < 1) bad_key("convergence.time_levels", "must be at least 1");
}

inline RunConfig parse_config_stream(std::istream& in, const std::string& origin = "<stream>") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorKind::Config, origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  RunConfig cfg;
  std::set<std::string> seen;
  const auto& keys = config_keys();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      detail::bad_key(section, "key outside of any section");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto it = std::find_if(keys.begin(), keys.end(), [&](const ConfigKey& k) { return k.name == full; });
      if (it == keys.end()) detail::bad_key(full, "unknown key");
      it->set(cfg, value.data());
      seen.insert(full);
    }
  }
  for (const auto& k : keys)
    if (k.required && !seen.count(k.name)) detail::bad_key(k.name, "missing required key");
  cfg.validate();
  return cfg;
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open config file '" + path + "'");
  return parse_config_stream(in, path);
}

/// Writes every key, so the output parses back to an equal RunConfig.
inline std::string serialize(const RunConfig& cfg) {
  std::string out;
  std::string current;
  for (const auto& k : config_keys()) {
    const auto dot = k.name.find('.');
    const std::string section = k.name.substr(0, dot);
    if (section != current) {
      out += (out.empty() ? "[" : "\n[") + section + "]\n";
      current = section;
    }
    out += k.name.substr(dot + 1) + " = " + k.get(cfg) + "\n";
  }
  return out;
}

}  // namespace gnsch
