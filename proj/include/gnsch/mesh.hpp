#pragma once

// Uniform periodic cell-centred grids in one or two dimensions and the
// finite-difference operators used by the rest of the solver.
//
// Cell j has centre x_j = (j + 1/2) dx. All index arithmetic wraps.
// In 2D the flat index is ix + nx * iy (x fastest).

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gnsch/error.hpp"

namespace gnsch {

enum class Axis { X = 0, Y = 1 };

class Grid {
 public:
  Grid() = default;

  static Grid line(int nx, double lx) { return Grid(1, nx, 1, lx, 1.0); }
  static Grid plane(int nx, int ny, double lx, double ly) {
    return Grid(2, nx, ny, lx, ly);
  }

  int dim() const { return dim_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double lx() const { return lx_; }
  double ly() const { return ly_; }
  double dx() const { return lx_ / nx_; }
  double dy() const { return dim_ == 2 ? ly_ / ny_ : ly_; }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }

  /// Quadrature weight of one cell (dx, or dx*dy).
  double cell_volume() const { return dim_ == 2 ? dx() * dy() : dx(); }

  double x_center(int ix) const { return (ix + 0.5) * dx(); }
  double y_center(int iy) const { return dim_ == 2 ? (iy + 0.5) * dy() : 0.0; }

  std::size_t index(int ix, int iy = 0) const {
    return static_cast<std::size_t>(ix) + static_cast<std::size_t>(nx_) * iy;
  }

  int wrap_x(int ix) const { return ((ix % nx_) + nx_) % nx_; }
  int wrap_y(int iy) const { return ((iy % ny_) + ny_) % ny_; }

  bool has_axis(Axis a) const { return a == Axis::X || dim_ == 2; }
  int cells_along(Axis a) const { return a == Axis::X ? nx_ : ny_; }
  double spacing(Axis a) const { return a == Axis::X ? dx() : dy(); }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  Grid(int dim, int nx, int ny, double lx, double ly)
      : dim_(dim), nx_(nx), ny_(ny), lx_(lx), ly_(ly) {
    if (dim != 1 && dim != 2) fail(ErrorKind::InvalidArgument, "grid dim must be 1 or 2");
    if (nx < 1 || ny < 1) fail(ErrorKind::InvalidArgument, "grid needs at least one cell per axis");
    if (!(lx > 0.0) || !(ly > 0.0)) fail(ErrorKind::InvalidArgument, "grid lengths must be positive");
  }

  int dim_ = 1;
  int nx_ = 1;
  int ny_ = 1;
  double lx_ = 1.0;
  double ly_ = 1.0;
};

/// One scalar per cell. Vector quantities are stored as one Field per component.
class Field {
 public:
  Field() = default;
  explicit Field(const Grid& g, double fill = 0.0) : grid_(g), values_(g.size(), fill) {}
  Field(const Grid& g, std::vector<double> values) : grid_(g), values_(std::move(values)) {
    if (values_.size() != g.size())
      fail(ErrorKind::InvalidArgument, "field size does not match grid");
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& data() { return values_; }
  const std::vector<double>& data() const { return values_; }

  friend bool operator==(const Field&, const Field&) = default;

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Indices of a cell and its four periodic neighbours. In 1D ym == yp == self.
struct Neighbours {
  std::size_t self, xm, xp, ym, yp;
};

/// Calls fn(Neighbours) for every cell, in flat-index order.
template <class Fn>
void for_each_cell(const Grid& g, Fn&& fn) {
  const int nx = g.nx();
  const int ny = g.ny();
  for (int iy = 0; iy < ny; ++iy) {
    const int iym = g.dim() == 2 ? (iy == 0 ? ny - 1 : iy - 1) : iy;
    const int iyp = g.dim() == 2 ? (iy == ny - 1 ? 0 : iy + 1) : iy;
    for (int ix = 0; ix < nx; ++ix) {
      const int ixm = ix == 0 ? nx - 1 : ix - 1;
      const int ixp = ix == nx - 1 ? 0 : ix + 1;
      fn(Neighbours{g.index(ix, iy), g.index(ixm, iy), g.index(ixp, iy),
                    g.index(ix, iym), g.index(ix, iyp)});
    }
  }
}

namespace detail {

inline void require_axis(const Grid& g, Axis axis) {
  if (!g.has_axis(axis))
    fail(ErrorKind::InvalidArgument, "axis out of range for a 1D grid");
  if (g.cells_along(axis) < 3)
    fail(ErrorKind::InvalidArgument, "stencil needs at least 3 cells along the axis");
}

inline std::pair<std::size_t, std::size_t> along(const Neighbours& n, Axis axis) {
  return axis == Axis::X ? std::pair{n.xm, n.xp} : std::pair{n.ym, n.yp};
}

}  // namespace detail

/// (f_{j+1} - f_{j-1}) / (2 h) along the axis.
inline Field central_gradient(const Field& f, Axis axis) {
  const Grid& g = f.grid();
  detail::require_axis(g, axis);
  const double inv2h = 1.0 / (2.0 * g.spacing(axis));
  Field out(g);
  for_each_cell(g, [&](const Neighbours& n) {
    const auto [m, p] = detail::along(n, axis);
    out[n.self] = (f[p] - f[m]) * inv2h;
  });
  return out;
}

/// f_{j+1} - 2 f_j + f_{j-1}; not divided by h^2.
inline Field second_difference(const Field& f, Axis axis) {
  const Grid& g = f.grid();
  detail::require_axis(g, axis);
  Field out(g);
  for_each_cell(g, [&](const Neighbours& n) {
    const auto [m, p] = detail::along(n, axis);
    out[n.self] = f[p] - 2.0 * f[n.self] + f[m];
  });
  return out;
}

inline Field laplacian(const Field& f) {
  const Grid& g = f.grid();
  detail::require_axis(g, Axis::X);
  const double ihx2 = 1.0 / (g.dx() * g.dx());
  Field out(g);
  if (g.dim() == 1) {
    for_each_cell(g, [&](const Neighbours& n) {
      out[n.self] = (f[n.xp] - 2.0 * f[n.self] + f[n.xm]) * ihx2;
    });
    return out;
  }
  detail::require_axis(g, Axis::Y);
  const double ihy2 = 1.0 / (g.dy() * g.dy());
  for_each_cell(g, [&](const Neighbours& n) {
    const double lx = (f[n.xp] - 2.0 * f[n.self] + f[n.xm]) * ihx2;
    const double ly = (f[n.yp] - 2.0 * f[n.self] + f[n.ym]) * ihy2;
    out[n.self] = lx + ly;
  });
  return out;
}

/// Interface coefficient between two cells: arithmetic mean.
inline double face_average(double a, double b) { return 0.5 * (a + b); }

/// Flux-form div(b grad mu) with face coefficients (b_j + b_{j+1}) / 2.
inline Field div_coef_grad(const Field& b, const Field& mu) {
  const Grid& g = b.grid();
  if (!(mu.grid() == g)) fail(ErrorKind::InvalidArgument, "div_coef_grad: grid mismatch");
  detail::require_axis(g, Axis::X);
  if (g.dim() == 2) detail::require_axis(g, Axis::Y);
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (!(b[i] >= 0.0))
      fail(ErrorKind::Domain, "div_coef_grad: negative coefficient at cell " + std::to_string(i));
  }
  const double ihx2 = 1.0 / (g.dx() * g.dx());
  const double ihy2 = g.dim() == 2 ? 1.0 / (g.dy() * g.dy()) : 0.0;
  Field out(g);
  for_each_cell(g, [&](const Neighbours& n) {
    const double bxp = face_average(b[n.self], b[n.xp]);
    const double bxm = face_average(b[n.self], b[n.xm]);
    const double fx = (bxp * (mu[n.xp] - mu[n.self]) - bxm * (mu[n.self] - mu[n.xm])) * ihx2;
    if (g.dim() == 1) {
      out[n.self] = fx;
      return;
    }
    const double byp = face_average(b[n.self], b[n.yp]);
    const double bym = face_average(b[n.self], b[n.ym]);
    const double fy = (byp * (mu[n.yp] - mu[n.self]) - bym * (mu[n.self] - mu[n.ym])) * ihy2;
    out[n.self] = fx + fy;
  });
  return out;
}

/// Midpoint quadrature: cell volume times the sum of cell values.
inline double integrate(const Field& f) {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s * f.grid().cell_volume();
}

/// Discrete inner product <u, v> = h * sum u_j v_j (h = cell volume).
inline double inner(const Field& u, const Field& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s * u.grid().cell_volume();
}

/// Squared gradient magnitude |grad f|^2 with central differences.
inline Field grad_norm2(const Field& f) {
  const Grid& g = f.grid();
  Field gx = central_gradient(f, Axis::X);
  Field out(g);
  if (g.dim() == 1) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = gx[i] * gx[i];
    return out;
  }
  Field gy = central_gradient(f, Axis::Y);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gx[i] * gx[i] + gy[i] * gy[i];
  return out;
}

}  // namespace gnsch
