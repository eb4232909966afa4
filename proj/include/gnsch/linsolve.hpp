#pragma once

// Sparse storage and linear solvers for the coupled Cahn-Hilliard system:
// a restarted GMRES with left Jacobi preconditioning, a dense LU oracle, and
// a sparse direct fallback backed by Eigen's SparseLU.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "gnsch/error.hpp"

namespace gnsch {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

class DenseMatrix {
 public:
  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

/// Compressed sparse row matrix. Columns within a row are sorted and unique.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  /// Duplicate (row, col) entries are summed.
  static SparseMatrix from_triplets(std::size_t n, std::vector<Triplet> entries) {
    for (const auto& t : entries) {
      if (t.row >= n || t.col >= n)
        fail(ErrorKind::InvalidArgument, "triplet index out of range");
    }
    std::sort(entries.begin(), entries.end(), [](const Triplet& l, const Triplet& r) {
      return std::tie(l.row, l.col) < std::tie(r.row, r.col);
    });
    SparseMatrix m;
    m.n_ = n;
    m.row_ptr_.assign(n + 1, 0);
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const auto& t = entries[k];
      if (!m.col_.empty() && k > 0 && entries[k - 1].row == t.row && entries[k - 1].col == t.col) {
        m.val_.back() += t.value;
        continue;
      }
      m.col_.push_back(t.col);
      m.val_.push_back(t.value);
      ++m.row_ptr_[t.row + 1];
    }
    for (std::size_t i = 0; i < n; ++i) m.row_ptr_[i + 1] += m.row_ptr_[i];
    return m;
  }

  static SparseMatrix identity(std::size_t n) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
    return from_triplets(n, std::move(t));
  }

  std::size_t size() const { return n_; }
  std::size_t nonzeros() const { return val_.size(); }
  const std::vector<std::size_t>& row_offsets() const { return row_ptr_; }
  const std::vector<std::size_t>& column_indices() const { return col_; }
  const std::vector<double>& values() const { return val_; }

  void apply(std::span<const double> x, std::span<double> y) const {
    if (x.size() != n_ || y.size() != n_)
      fail(ErrorKind::InvalidArgument, "matvec: dimension mismatch");
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += val_[k] * x[col_[k]];
      y[i] = s;
    }
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
        if (col_[k] == i) d[i] = val_[k];
    return d;
  }

  DenseMatrix to_dense() const {
    DenseMatrix d(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) d(i, col_[k]) = val_[k];
    return d;
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_;
  std::vector<double> val_;
};

inline std::vector<double> matvec(const SparseMatrix& a, std::span<const double> x) {
  std::vector<double> y(a.size());
  a.apply(x, y);
  return y;
}

/// Anything GMRES can iterate on.
template <class Op>
concept LinearOperator = requires(const Op& op, std::span<const double> x, std::span<double> y) {
  { op.size() } -> std::convertible_to<std::size_t>;
  op.apply(x, y);
  { op.diagonal() } -> std::convertible_to<std::vector<double>>;
};

struct GmresOptions {
  double tol = 1e-10;
  int restart = 50;
  int maxiter = 2000;

  friend bool operator==(const GmresOptions&, const GmresOptions&) = default;
};

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;  // ||b - A x|| / ||b||
  bool converged = false;
  std::vector<double> residual_history;  // preconditioned residual estimate per inner iteration
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace detail

/// Restarted GMRES with left Jacobi preconditioning.
///
/// Convergence is always judged on the true residual ||b - A x|| <= tol ||b||;
/// the inner Arnoldi loop works on the row-scaled system and uses a target
/// rescaled from the last true residual.
template <LinearOperator Op>
std::pair<std::vector<double>, SolveReport> gmres(const Op& A, std::span<const double> b,
                                                  const GmresOptions& opt = {},
                                                  std::span<const double> x0 = {}) {
  const std::size_t n = A.size();
  if (b.size() != n) fail(ErrorKind::InvalidArgument, "gmres: rhs size mismatch");
  if (!x0.empty() && x0.size() != n) fail(ErrorKind::InvalidArgument, "gmres: x0 size mismatch");
  for (double v : b)
    if (!std::isfinite(v)) fail(ErrorKind::Solver, "gmres: non-finite right-hand side");

  std::vector<double> dinv = A.diagonal();
  for (double& d : dinv) d = (d != 0.0 && std::isfinite(d)) ? 1.0 / d : 1.0;

  std::vector<double> x(n, 0.0);
  if (!x0.empty()) std::copy(x0.begin(), x0.end(), x.begin());

  SolveReport rep;
  const double bnorm = detail::norm2(b);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    rep.converged = true;
    return {x, rep};
  }

  const int m = std::max(1, opt.restart);
  // Krylov vectors are allocated on first use; most solves need far fewer than m.
  std::vector<std::vector<double>> basis(1, std::vector<double>(n));
  std::vector<double> hess((m + 1) * m, 0.0);
  auto H = [&](int i, int j) -> double& { return hess[i * m + j]; };
  std::vector<double> cs(m), sn(m), g(m + 1), y(m);
  std::vector<double> r(n), w(n);

  auto true_residual = [&]() {
    A.apply(x, r);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    return detail::norm2(r);
  };

  double rnorm = true_residual();
  bool stalled = false;
  while (true) {
    rep.relative_residual = rnorm / bnorm;
    if (rnorm <= opt.tol * bnorm) {
      rep.converged = true;
      break;
    }
    if (rep.iterations >= opt.maxiter || stalled) break;

    auto& v0 = basis[0];
    for (std::size_t i = 0; i < n; ++i) v0[i] = dinv[i] * r[i];
    const double beta = detail::norm2(v0);
    if (beta == 0.0) break;
    for (double& v : v0) v /= beta;
    const double target = 0.5 * beta * (opt.tol * bnorm / rnorm);

    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    int k = 0;
    bool breakdown = false;
    for (int j = 0; j < m && rep.iterations < opt.maxiter; ++j) {
      A.apply(basis[j], w);
      for (std::size_t i = 0; i < n; ++i) w[i] *= dinv[i];
      for (int i = 0; i <= j; ++i) {
        const double h = detail::dot(w, basis[i]);
        H(i, j) = h;
        const auto& vi = basis[i];
        for (std::size_t l = 0; l < n; ++l) w[l] -= h * vi[l];
      }
      const double hnext = detail::norm2(w);
      H(j + 1, j) = hnext;
      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
        H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
        H(i, j) = t;
      }
      const double denom = std::hypot(H(j, j), H(j + 1, j));
      cs[j] = denom == 0.0 ? 1.0 : H(j, j) / denom;
      sn[j] = denom == 0.0 ? 0.0 : H(j + 1, j) / denom;
      H(j, j) = cs[j] * H(j, j) + sn[j] * H(j + 1, j);
      H(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      ++rep.iterations;
      rep.residual_history.push_back(std::abs(g[j + 1]));
      k = j + 1;
      if (hnext <= 1e-14 * beta) {
        breakdown = true;
        break;
      }
      if (basis.size() < static_cast<std::size_t>(j + 2)) basis.emplace_back(n);
      for (std::size_t l = 0; l < n; ++l) basis[j + 1][l] = w[l] / hnext;
      if (std::abs(g[j + 1]) <= target) break;
    }

    // Back substitution for the least-squares coefficients.
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int l = i + 1; l < k; ++l) s -= H(i, l) * y[l];
      if (H(i, i) == 0.0) fail(ErrorKind::Solver, "gmres: singular Hessenberg matrix");
      y[i] = s / H(i, i);
    }
    for (int l = 0; l < k; ++l) {
      const auto& vl = basis[l];
      const double yl = y[l];
      for (std::size_t i = 0; i < n; ++i) x[i] += yl * vl[i];
    }
    const double previous = rnorm;
    rnorm = true_residual();
    // A breakdown that still misses the tolerance cannot make further progress.
    stalled = breakdown || !(rnorm < previous);
  }
  return {x, rep};
}

/// LU with partial pivoting. Throws a Solver error on a (numerically) singular matrix.
inline std::vector<double> dense_solve(DenseMatrix a, std::span<const double> b) {
  const std::size_t n = a.size();
  if (b.size() != n) fail(ErrorKind::InvalidArgument, "dense_solve: rhs size mismatch");
  if (n > 4096) fail(ErrorKind::InvalidArgument, "dense_solve: system too large for a dense solve");
  std::vector<double> x(b.begin(), b.end());
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(a(i, j)));
  if (scale == 0.0 && n > 0) fail(ErrorKind::Solver, "dense_solve: zero matrix");
  const double eps = 1e-15 * scale * static_cast<double>(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t i = col + 1; i < n; ++i)
      if (std::abs(a(i, col)) > std::abs(a(piv, col))) piv = i;
    if (std::abs(a(piv, col)) <= eps) fail(ErrorKind::Solver, "dense_solve: singular matrix");
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
      std::swap(x[col], x[piv]);
    }
    for (std::size_t i = col + 1; i < n; ++i) {
      const double f = a(i, col) / a(col, col);
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a(i, j) -= f * a(col, j);
      x[i] -= f * x[col];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

/// Sparse LU (Eigen, COLAMD ordering). Used where Jacobi-GMRES stalls on very fine grids.
inline std::vector<double> sparse_direct_solve(const SparseMatrix& a, std::span<const double> b) {
  const std::size_t n = a.size();
  if (b.size() != n) fail(ErrorKind::InvalidArgument, "sparse_direct_solve: rhs size mismatch");
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(a.nonzeros());
  const auto& rp = a.row_offsets();
  const auto& ci = a.column_indices();
  const auto& va = a.values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = rp[i]; k < rp[i + 1]; ++k)
      trips.emplace_back(static_cast<int>(i), static_cast<int>(ci[k]), va[k]);
  Eigen::SparseMatrix<double> m(static_cast<int>(n), static_cast<int>(n));
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(m);
  lu.factorize(m);
  if (lu.info() != Eigen::Success)
    fail(ErrorKind::Solver, "sparse_direct_solve: factorization failed: " + lu.lastErrorMessage());
  Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(n));
  Eigen::VectorXd sol = lu.solve(rhs);
  if (lu.info() != Eigen::Success) fail(ErrorKind::Solver, "sparse_direct_solve: solve failed");
  return {sol.data(), sol.data() + sol.size()};
}

}  // namespace gnsch
