#include <random>

#include <gtest/gtest.h>

#include "flexidx/linalg.hpp"

using namespace flexidx;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix M(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (auto r : rows) {
    Eigen::Index j = 0;
    for (double v : r)
      M(i, j++) = v;
    ++i;
  }
  return M;
}

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v)
    x(i++) = e;
  return x;
}

} // namespace

TEST(Cholesky, HandFactorOfSimpleCovariance) {
  const auto f = cholesky(mat({{2, -1}, {-1, 3}}));
  EXPECT_NEAR(f.L(0, 0), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(f.L(1, 0), -1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(f.L(1, 1), std::sqrt(2.5), 1e-15);
  EXPECT_EQ(f.L(0, 1), 0.0);
}

TEST(Cholesky, IdentityIsItsOwnFactor) {
  const auto f = cholesky(Matrix::Identity(4, 4));
  EXPECT_TRUE(f.L.isApprox(Matrix::Identity(4, 4)));
}

TEST(Cholesky, RejectsIndefinite) {
  EXPECT_THROW(cholesky(mat({{1, 2}, {2, 1}})), NotSPDError);
  EXPECT_THROW(cholesky(mat({{1, 0}, {0, 0}})), NotSPDError);
  EXPECT_THROW(cholesky(mat({{1, 0.5}, {0.4, 1}})), NotSPDError);
}

TEST(Cholesky, ReconstructsRandomSpd) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 8;
    Matrix M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        M(i, j) = nd(gen);
    const Matrix A = M * M.transpose() + n * Matrix::Identity(n, n);
    const auto f = cholesky(A);
    EXPECT_LE((f.reconstruct() - A).norm(), 1e-10 * A.norm());
    EXPECT_TRUE((f.L.diagonal().array() > 0).all());
  }
}

TEST(SolveLinear, Examples) {
  const Vector b = vec({3, -1, 2});
  EXPECT_TRUE(solve_linear(Matrix::Identity(3, 3), b).isApprox(b));
  const Vector x = solve_linear(mat({{2, 1}, {1, 3}}), vec({3, 4}));
  EXPECT_NEAR(x(0), 1.0, 1e-14);
  EXPECT_NEAR(x(1), 1.0, 1e-14);
  EXPECT_THROW(solve_linear(mat({{1, 1}, {2, 2}}), vec({1, 2})), SingularError);
}

TEST(SolveLinear, ResidualBoundOnRandomWellConditionedSystems) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 9;
    Matrix A(n, n);
    Vector b(n);
    for (int i = 0; i < n; ++i) {
      b(i) = 10 * nd(gen);
      for (int j = 0; j < n; ++j)
        A(i, j) = nd(gen);
    }
    A += 3.0 * n * Matrix::Identity(n, n);
    Eigen::JacobiSVD<Matrix> svd(A);
    const auto &sv = svd.singularValues();
    ASSERT_LT(sv(0) / sv(n - 1), 1e6);
    const Vector x = solve_linear(A, b);
    EXPECT_LE((A * x - b).cwiseAbs().maxCoeff(),
              1e-9 * (1.0 + b.cwiseAbs().maxCoeff()));
  }
}

TEST(LeastNorm, FullyDeterminedReturnsRhs) {
  const auto W = cholesky(Matrix::Identity(2, 2));
  const Vector b = vec({0.3, -7});
  EXPECT_TRUE(least_norm(Matrix::Identity(2, 2), b, W).isApprox(b));
}

TEST(LeastNorm, SymmetricPoint) {
  const auto W = cholesky(Matrix::Identity(2, 2));
  const Vector x = least_norm(mat({{1, 1}}), vec({2}), W);
  EXPECT_NEAR(x(0), 1.0, 1e-14);
  EXPECT_NEAR(x(1), 1.0, 1e-14);
}

TEST(LeastNorm, SimpleSystemCriticalOffset) {
  // Weighted by V^{-1} = diag(1/2, 1/3): the beta = 0 critical offset.
  const Matrix Wm = Vector(vec({0.5, 1.0 / 3.0})).asDiagonal();
  const auto W = cholesky(Wm);
  const Vector x = least_norm(mat({{1, -2}}), vec({8}), W);
  EXPECT_NEAR(x(0), 8.0 / 7.0, 1e-13);
  EXPECT_NEAR(x(1), -24.0 / 7.0, 1e-13);
  EXPECT_NEAR(x.dot(Wm * x), 224.0 / 49.0, 1e-12);
}

TEST(LeastNorm, RejectsDependentRows) {
  const auto W = cholesky(Matrix::Identity(3, 3));
  EXPECT_THROW(least_norm(mat({{1, 1, 0}, {2, 2, 0}}), vec({1, 2}), W),
               RankDeficientError);
}

TEST(LeastNorm, StationarityOnRandomProblems) {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 6;
    const int m = 1 + trial % n;
    Matrix M(n, n), A(m, n);
    Vector b(m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        M(i, j) = nd(gen);
    for (int i = 0; i < m; ++i) {
      b(i) = nd(gen);
      for (int j = 0; j < n; ++j)
        A(i, j) = nd(gen);
    }
    const Matrix Wm = M * M.transpose() + Matrix::Identity(n, n);
    const Vector x = least_norm(A, b, cholesky(Wm));
    EXPECT_LE((A * x - b).cwiseAbs().maxCoeff(), 1e-9);
    // W x must lie in the row space of A.
    const Vector g = Wm * x;
    const Vector coeffs = A.transpose().colPivHouseholderQr().solve(g);
    EXPECT_LE((A.transpose() * coeffs - g).norm(), 1e-8 * (1.0 + g.norm()));
  }
}

TEST(RowRank, Examples) {
  EXPECT_EQ(row_rank(Matrix::Identity(5, 5)), 5);
  EXPECT_EQ(row_rank(mat({{1, 1}, {2, 2}})), 1);
  // Heat-exchanger recourse column stacked with the ones row.
  EXPECT_EQ(row_rank(mat({{-0.67, 0.5, 1, 1, -1}, {1, 1, 1, 1, 1}})), 2);
  EXPECT_EQ(row_rank(Matrix::Zero(3, 2)), 0);
}
