#pragma once

// CSV output: snapshots, diagnostics series and convergence tables. All numbers
// are printed with 17 significant digits, so reading them back is exact.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gnsch/driver.hpp"
#include "gnsch/error.hpp"
#include "gnsch/physics.hpp"

namespace gnsch {

namespace detail {

inline std::ofstream open_for_write(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  return out;
}

inline void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) fail(ErrorKind::Io, "write failed for '" + path + "'");
}

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// A parsed CSV file: header names plus one column vector per name.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }

  const std::vector<double>& column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return columns[i];
    fail(ErrorKind::InvalidArgument, "csv: no column named '" + name + "'");
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot read '" + path + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Io, "'" + path + "' is empty");
  {
    std::stringstream ss(line);
    std::string name;
    while (std::getline(ss, name, ',')) t.header.push_back(name);
  }
  t.columns.resize(t.header.size());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col >= t.header.size()) fail(ErrorKind::Io, path + ":" + std::to_string(lineno) + ": too many fields");
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) fail(ErrorKind::Io, path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      t.columns[col++].push_back(v);
    }
    if (col != t.header.size()) fail(ErrorKind::Io, path + ":" + std::to_string(lineno) + ": too few fields");
  }
  return t;
}

/// Columns x[,y],rho,c,vx[,vy],p,mu; one row per cell in flat index order.
inline void write_snapshot(const SimState& s, const Physics& phys, const std::string& path) {
  std::ofstream out = detail::open_for_write(path);
  const Grid& g = s.grid;
  const bool two_d = g.dim() == 2;
  out << (two_d ? "x,y,rho,c,vx,vy,p,mu\n" : "x,rho,c,vx,p,mu\n");
  for (int iy = 0; iy < g.ny(); ++iy) {
    for (int ix = 0; ix < g.nx(); ++ix) {
      const std::size_t i = g.index(ix, iy);
      const double rho = s.U[0][i];
      out << detail::num(g.x_center(ix)) << ',';
      if (two_d) out << detail::num(g.y_center(iy)) << ',';
      out << detail::num(rho) << ',' << detail::num(s.c[i]) << ',' << detail::num(s.U[1][i] / rho) << ',';
      if (two_d) out << detail::num(s.U[2][i] / rho) << ',';
      out << detail::num(phys.pressure(rho, s.c[i])) << ',' << detail::num(s.mu[i]) << '\n';
    }
  }
  detail::finish(out, path);
}

inline CsvTable read_snapshot(const std::string& path) { return read_csv(path); }

inline constexpr const char* kDiagnosticsHeader =
    "t,dt,total_mass,energy,dissipation_quantity,r,xi,c_min,c_max,solver_iterations,"
    "dissipation_quadratic,solver_residual,lambda,halvings,cbar_overshoot,c_mass";

inline void write_diagnostics(const std::vector<DiagRecord>& series, const std::string& path) {
  std::ofstream out = detail::open_for_write(path);
  out << kDiagnosticsHeader << '\n';
  for (const DiagRecord& d : series) {
    out << detail::num(d.t) << ',' << detail::num(d.dt) << ',' << detail::num(d.total_mass) << ','
        << detail::num(d.energy) << ',' << detail::num(d.dissipation_quantity) << ','
        << detail::num(d.r) << ',' << detail::num(d.xi) << ',' << detail::num(d.c_min) << ','
        << detail::num(d.c_max) << ',' << d.solver_iterations << ','
        << detail::num(d.dissipation_quadratic) << ',' << detail::num(d.solver_residual) << ','
        << detail::num(d.lambda) << ',' << d.halvings << ',' << d.cbar_overshoot << ','
        << detail::num(d.c_mass) << '\n';
  }
  detail::finish(out, path);
}

/// Rows (resolution, error, per-field errors, observed order against the
/// previous row). The least-squares orders go to a second file, `<stem>_fit.csv`.
inline void write_convergence(const ConvergenceTable& t, const std::string& path) {
  std::ofstream out = detail::open_for_write(path);
  out << "resolution,error,error_rho,error_c,error_v,order\n";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const ConvergenceRow& r = t.rows[i];
    double order = std::nan("");
    if (i > 0) order = std::log(r.error / t.rows[i - 1].error) / std::log(r.resolution / t.rows[i - 1].resolution);
    out << detail::num(r.resolution) << ',' << detail::num(r.error) << ',' << detail::num(r.error_rho) << ','
        << detail::num(r.error_c) << ',' << detail::num(r.error_v) << ',' << detail::num(order) << '\n';
  }
  detail::finish(out, path);

  std::filesystem::path fit(path);
  fit.replace_filename(fit.stem().string() + "_fit.csv");
  std::ofstream f = detail::open_for_write(fit.string());
  f << "field,order\n";
  f << "combined," << detail::num(t.order) << "\nrho," << detail::num(t.order_rho) << "\nc,"
    << detail::num(t.order_c) << "\nv," << detail::num(t.order_v) << '\n';
  detail::finish(f, fit.string());
}

}  // namespace gnsch
