#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gnsch/linsolve.hpp"

using namespace gnsch;

namespace {

SparseMatrix random_dominant(std::size_t n, std::uint64_t seed, double fill = 0.3, bool symmetric = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Triplet> t;
  std::vector<double> rowsum(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = symmetric ? i + 1 : 0; j < n; ++j) {
      if (i == j || u(rng) > fill) continue;
      const double v = d(rng);
      t.push_back({i, j, v});
      rowsum[i] += std::abs(v);
      if (symmetric) {
        t.push_back({j, i, v});
        rowsum[j] += std::abs(v);
      }
    }
  for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, rowsum[i] + 0.5 + u(rng)});
  return SparseMatrix::from_triplets(n, std::move(t));
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

TEST(Linsolve, MatvecExamples) {
  const std::vector<double> x{1.0, -2.0, 3.5};
  EXPECT_EQ(matvec(SparseMatrix::identity(3), x), x);
  const SparseMatrix zero = SparseMatrix::from_triplets(3, {});
  EXPECT_EQ(matvec(zero, x), std::vector<double>(3, 0.0));
  EXPECT_THROW(matvec(zero, std::vector<double>(2)), Error);
}

TEST(Linsolve, MatvecMatchesDenseMultiply) {
  const SparseMatrix a = random_dominant(5, 3, 0.8);
  const DenseMatrix d = a.to_dense();
  const std::vector<double> x = random_vector(5, 4);
  const std::vector<double> y = matvec(a, x);
  for (std::size_t i = 0; i < 5; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 5; ++j) s += d(i, j) * x[j];
    EXPECT_NEAR(y[i], s, 1e-15);
  }
}

TEST(Linsolve, CsrStructureIsSortedAndUnique) {
  const SparseMatrix a = SparseMatrix::from_triplets(3, {{2, 1, 1.0}, {0, 2, 2.0}, {0, 0, 1.0}, {2, 1, 4.0}});
  EXPECT_EQ(a.nonzeros(), 3u);
  EXPECT_EQ(a.to_dense()(2, 1), 5.0);
  const auto& rp = a.row_offsets();
  const auto& ci = a.column_indices();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = rp[i] + 1; k < rp[i + 1]; ++k) EXPECT_LT(ci[k - 1], ci[k]);
  EXPECT_THROW(SparseMatrix::from_triplets(2, {{0, 2, 1.0}}), Error);
}

TEST(Linsolve, GmresOnIdentityAndScaledIdentity) {
  const std::vector<double> b = random_vector(10, 1);
  auto [x, rep] = gmres(SparseMatrix::identity(10), b);
  EXPECT_TRUE(rep.converged);
  EXPECT_LE(rep.iterations, 1);
  EXPECT_LT(max_diff(x, b), 1e-14);

  std::vector<Triplet> t;
  for (std::size_t i = 0; i < 10; ++i) t.push_back({i, i, 2.0});
  auto [y, rep2] = gmres(SparseMatrix::from_triplets(10, t), b);
  EXPECT_TRUE(rep2.converged);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(y[i], 0.5 * b[i], 1e-14);
}

TEST(Linsolve, GmresZeroRhsGivesZero) {
  auto [x, rep] = gmres(random_dominant(6, 2), std::vector<double>(6, 0.0));
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(max_abs(x), 0.0);
}

TEST(Linsolve, GmresMatchesDenseLuOnDominant20) {
  const SparseMatrix a = random_dominant(20, 7);
  const std::vector<double> b = random_vector(20, 8);
  auto [x, rep] = gmres(a, b);
  EXPECT_TRUE(rep.converged);
  EXPECT_LE(rep.relative_residual, 1e-10);
  EXPECT_LT(max_diff(x, dense_solve(a.to_dense(), b)), 1e-9);
}

TEST(Linsolve, GmresAgreesWithDenseUpTo200) {
  for (std::size_t n : {5u, 37u, 120u, 200u}) {
    for (bool sym : {false, true}) {
      const SparseMatrix a = random_dominant(n, n + sym, 0.05, sym);
      const std::vector<double> b = random_vector(n, 2 * n);
      auto [x, rep] = gmres(a, b, GmresOptions{1e-12, 30, 2000});
      ASSERT_TRUE(rep.converged);
      const std::vector<double> ref = dense_solve(a.to_dense(), b);
      EXPECT_LE(max_diff(x, ref), 1e-8 * max_abs(ref));
    }
  }
}

TEST(Linsolve, GmresResidualHistoryIsMonotone) {
  const SparseMatrix a = random_dominant(80, 12, 0.2);
  auto [x, rep] = gmres(a, random_vector(80, 13), GmresOptions{1e-12, 80, 2000});
  ASSERT_TRUE(rep.converged);
  ASSERT_FALSE(rep.residual_history.empty());
  for (std::size_t k = 1; k < rep.residual_history.size(); ++k)
    EXPECT_LE(rep.residual_history[k], rep.residual_history[k - 1] * (1.0 + 1e-12));
}

TEST(Linsolve, GmresReportsNonConvergence) {
  const SparseMatrix a = random_dominant(60, 5, 0.5);
  auto [x, rep] = gmres(a, random_vector(60, 6), GmresOptions{1e-14, 2, 2});
  EXPECT_FALSE(rep.converged);
  EXPECT_GT(rep.relative_residual, 1e-14);
}

TEST(Linsolve, GmresWarmStartFromSolution) {
  const SparseMatrix a = random_dominant(30, 9);
  const std::vector<double> b = random_vector(30, 10);
  const std::vector<double> ref = dense_solve(a.to_dense(), b);
  auto [x, rep] = gmres(a, b, {}, ref);
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iterations, 0);
}

TEST(Linsolve, DenseSolveExamples) {
  const std::vector<double> b{3.0, -1.0, 4.0};
  EXPECT_EQ(dense_solve(SparseMatrix::identity(3).to_dense(), b), b);

  // Permutation (x0, x1, x2) -> (x2, x0, x1).
  DenseMatrix p(3);
  p(0, 2) = p(1, 0) = p(2, 1) = 1.0;
  const std::vector<double> x = dense_solve(p, b);
  EXPECT_EQ(x, (std::vector<double>{-1.0, 4.0, 3.0}));

  DenseMatrix h(4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) h(i, j) = 1.0 / static_cast<double>(i + j + 1);
  // First column of the exact inverse of the 4x4 Hilbert matrix.
  const std::vector<double> col = dense_solve(h, std::vector<double>{1.0, 0.0, 0.0, 0.0});
  const std::vector<double> want{16.0, -120.0, 240.0, -140.0};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(col[i], want[i], 1e-9);
}

TEST(Linsolve, DenseSolveRejectsSingular) {
  DenseMatrix s(2);
  s(0, 0) = 1.0;
  s(0, 1) = 2.0;
  s(1, 0) = 2.0;
  s(1, 1) = 4.0;
  EXPECT_THROW(dense_solve(s, std::vector<double>{1.0, 1.0}), Error);
}

TEST(Linsolve, SparseDirectMatchesDense) {
  const SparseMatrix a = random_dominant(50, 14, 0.1);
  const std::vector<double> b = random_vector(50, 15);
  EXPECT_LT(max_diff(sparse_direct_solve(a, b), dense_solve(a.to_dense(), b)), 1e-12);
}
