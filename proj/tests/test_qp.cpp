#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "flexidx/qp.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace flexidx;
using fixtures::random_pd_qp;

namespace {

void expect_kkt(const QpProblem &p, const QpSolution &s) {
  ASSERT_TRUE(s.optimal());
  const auto r = kkt_residuals(p, s);
  EXPECT_LE(r.stationarity, 1e-8);
  EXPECT_LE(r.primal, 1e-8);
  EXPECT_LE(r.dual, 1e-8);
  EXPECT_LE(r.complementarity, 1e-8);
}

Vector row2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

} // namespace

TEST(Qp, BoundedScalar) {
  QpProblem p(1);
  p.quadratic(0, 0) = 1.0;
  p.add_inequality(-Vector::Ones(1), -1.0); // x >= 1
  const auto s = solve_qp(p);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.x(0), 1.0, 1e-12);
  EXPECT_NEAR(s.objective_value, 1.0, 1e-12);
  expect_kkt(p, s);
  ASSERT_EQ(s.active.size(), 1u);
  EXPECT_NEAR(s.ineq_multipliers(0), 2.0, 1e-12);
}

TEST(Qp, SimpleSystemLagrangeSolution) {
  // (t1 - 4)^2 / 2 + (t2 - 5)^2 / 3 on the line t1 - 2 t2 = 2.
  QpProblem p(2);
  p.quadratic = row2(0.5, 1.0 / 3.0).asDiagonal();
  p.linear = row2(-4.0, -10.0 / 3.0);
  p.offset = 8.0 + 25.0 / 3.0;
  p.add_equality(row2(1.0, -2.0), 2.0);
  const auto s = solve_qp(p);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.objective_value, 224.0 / 49.0, 1e-12);
  EXPECT_NEAR(s.x(0), 36.0 / 7.0, 1e-12);
  EXPECT_NEAR(s.x(1), 11.0 / 7.0, 1e-12);
  expect_kkt(p, s);
}

TEST(Qp, InfeasibleEqualities) {
  QpProblem p(1);
  p.quadratic(0, 0) = 1.0;
  p.add_equality(Vector::Ones(1), 1.0);
  p.add_equality(Vector::Ones(1), 2.0);
  EXPECT_EQ(solve_qp(p).status, QpStatus::Infeasible);
}

TEST(Qp, RejectsIndefiniteForm) {
  QpProblem p(2);
  p.quadratic = row2(1.0, -1.0).asDiagonal();
  EXPECT_THROW(solve_qp(p), DomainError);
}

TEST(Qp, ZeroCurvatureWithLinearCostIsUnbounded) {
  QpProblem p(2);
  p.quadratic(0, 0) = 1.0;
  p.linear(1) = 1.0;
  EXPECT_EQ(solve_qp(p).status, QpStatus::UnboundedSubspace);

  p.add_inequality(row2(0.0, -1.0), 5.0); // z >= -5
  const auto s = solve_qp(p);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.x(1), -5.0, 1e-12);
  EXPECT_NEAR(s.objective_value, -5.0, 1e-12);
  expect_kkt(p, s);
}

TEST(Qp, RecourseVariableCarriesNoWeight) {
  // min t^2 s.t. t + z = 3, z <= 1, -z <= 1: recourse absorbs up to 1.
  QpProblem p(2);
  p.quadratic(0, 0) = 1.0;
  p.add_equality(row2(1.0, 1.0), 3.0);
  p.add_inequality(row2(0.0, 1.0), 1.0);
  p.add_inequality(row2(0.0, -1.0), 1.0);
  const auto s = solve_qp(p);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.x(0), 2.0, 1e-12);
  EXPECT_NEAR(s.x(1), 1.0, 1e-12);
  EXPECT_NEAR(s.objective_value, 4.0, 1e-12);
  expect_kkt(p, s);
}

TEST(Qp, MatchesDualProjectedGradientOracle) {
  std::mt19937_64 gen(31337);
  for (int trial = 0; trial < 100; ++trial) {
    const auto r = random_pd_qp(gen);
    const auto s = solve_qp(r.problem);
    ASSERT_TRUE(s.optimal()) << "trial " << trial;
    expect_kkt(r.problem, s);
    const auto ref = oracle::qp_dual_projected_gradient(
        r.problem.quadratic, r.problem.linear, r.problem.ineq_matrix,
        r.problem.ineq_rhs);
    ASSERT_LE(ref.stationarity, 1e-10) << "oracle did not converge, trial " << trial;
    EXPECT_NEAR(s.objective_value, ref.dual_value, 1e-7) << "trial " << trial;
  }
}

TEST(Qp, RowPermutationInvariance) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 40; ++trial) {
    const auto r = random_pd_qp(gen);
    const auto base = solve_qp(r.problem);
    ASSERT_TRUE(base.optimal());
    QpProblem q = r.problem;
    std::vector<int> perm(static_cast<std::size_t>(q.ineq_matrix.rows()));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      q.ineq_matrix.row(static_cast<Eigen::Index>(i)) = r.problem.ineq_matrix.row(perm[i]);
      q.ineq_rhs(static_cast<Eigen::Index>(i)) = r.problem.ineq_rhs(perm[i]);
    }
    const auto s = solve_qp(q);
    ASSERT_TRUE(s.optimal());
    EXPECT_NEAR(s.objective_value, base.objective_value, 1e-9);
  }
}

TEST(Qp, ZeroFormReproducesLp) {
  std::mt19937_64 gen(404);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 4;
    QpProblem q(n);
    LpProblem l(n);
    for (int i = 0; i < n; ++i) {
      const double c = nd(gen);
      q.linear(i) = c;
      l.objective(i) = c;
    }
    for (int i = 0; i < n; ++i) {
      Vector e = Vector::Zero(n);
      e(i) = 1.0;
      q.add_inequality(e, 4.0);
      l.add_inequality(e, 4.0);
      q.add_inequality(-e, 4.0);
      l.add_inequality(-e, 4.0);
    }
    for (int k = 0; k < 3; ++k) {
      Vector a(n);
      for (int i = 0; i < n; ++i)
        a(i) = nd(gen);
      q.add_inequality(a, 1.0);
      l.add_inequality(a, 1.0);
    }
    const auto qs = solve_qp(q);
    const auto ls = solve_lp(l);
    ASSERT_TRUE(qs.optimal());
    ASSERT_TRUE(ls.optimal());
    EXPECT_NEAR(qs.objective_value, ls.objective_value, 1e-9) << "trial " << trial;
    expect_kkt(q, qs);
  }
}
