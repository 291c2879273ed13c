#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "flexidx/activeset.hpp"

using namespace flexidx;

namespace {

void expect_invariants(const SystemModel &m, const ActiveCandidate &c) {
  ASSERT_EQ(c.indices.size(), static_cast<std::size_t>(m.n_z + 1));
  EXPECT_TRUE(std::is_sorted(c.indices.begin(), c.indices.end()));
  EXPECT_NEAR(c.lambda.sum(), 1.0, 1e-9);
  for (int r = 0; r < m.n_z; ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < c.indices.size(); ++i)
      s += c.lambda(static_cast<Eigen::Index>(i)) *
           m[static_cast<std::size_t>(c.indices[i])].a_z(r);
    EXPECT_NEAR(s, 0.0, 1e-9);
  }
  EXPECT_GE(c.lambda.minCoeff(), -tol::multiplier);
}

} // namespace

TEST(MultiplierCheck, SingleConstraintWithoutRecourse) {
  const auto m = fixtures::bundled("simple_beta0");
  const auto lam = multiplier_check(m, {1});
  ASSERT_TRUE(lam.has_value());
  ASSERT_EQ(lam->size(), 1);
  EXPECT_NEAR((*lam)(0), 1.0, 1e-15);
}

TEST(MultiplierCheck, HeatExchangerPairs) {
  const auto m = fixtures::bundled("hx_beta0");
  const auto lam = multiplier_check(m, {0, 2});
  ASSERT_TRUE(lam.has_value());
  EXPECT_NEAR((*lam)(0), 1.0 / 1.67, 1e-12);
  EXPECT_NEAR((*lam)(1), 0.67 / 1.67, 1e-12);
  EXPECT_FALSE(multiplier_check(m, {2, 3}).has_value());
}

TEST(MultiplierCheck, RejectsWrongCardinalityAndIndex) {
  const auto m = fixtures::bundled("hx_beta0");
  EXPECT_THROW(multiplier_check(m, {0}), DimensionError);
  EXPECT_THROW(multiplier_check(m, {0, 9}), IndexError);
}

TEST(EnumerateCandidates, SimpleSystemHasFourSingletons) {
  const auto m = fixtures::bundled("simple_beta-1");
  const auto c = enumerate_candidates(m);
  ASSERT_EQ(c.size(), 4u);
  for (int j = 0; j < 4; ++j) {
    EXPECT_EQ(c[static_cast<std::size_t>(j)].indices, std::vector<int>{j});
    expect_invariants(m, c[static_cast<std::size_t>(j)]);
  }
}

TEST(EnumerateCandidates, HeatExchangerOppositeSignPairs) {
  const auto m = fixtures::bundled("hx_beta5");
  const auto c = enumerate_candidates(m);
  const std::vector<std::vector<int>> expected = {{0, 1}, {0, 2}, {0, 3},
                                                  {1, 4}, {2, 4}, {3, 4}};
  ASSERT_EQ(c.size(), expected.size());
  for (std::size_t k = 0; k < c.size(); ++k) {
    EXPECT_EQ(c[k].indices, expected[k]);
    EXPECT_EQ(c[k].gradient_rank, 2);
    expect_invariants(m, c[k]);
  }
}

TEST(EnumerateCandidates, NoRecourseEffectAdmitsEveryPair) {
  auto m = fixtures::bundled("hx_beta0");
  for (auto &con : m.constraints)
    con.a_z.setZero();
  const auto c = enumerate_candidates(m);
  EXPECT_EQ(c.size(), 10u);
  for (const auto &cand : c)
    expect_invariants(m, cand);
}

TEST(EnumerateCandidates, ThrowsWhenRecourseAlwaysHelps) {
  auto m = fixtures::bundled("hx_beta0");
  for (auto &con : m.constraints)
    con.a_z(0) = 1.0;
  EXPECT_THROW(enumerate_candidates(m), NoCandidatesError);

  auto tiny = fixtures::bundled("hx_beta0");
  tiny.constraints.resize(1);
  EXPECT_THROW(enumerate_candidates(tiny), NoCandidatesError);
}

TEST(EnumerateCandidates, InvariantUnderRenamingAndDeterministic) {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = fixtures::random_model(gen, 3, trial % 2, 6);
    auto renamed = m;
    for (auto &con : renamed.constraints)
      con.name = "x_" + con.name;
    const auto a = enumerate_candidates(m);
    const auto b = enumerate_candidates(renamed);
    const auto again = enumerate_candidates(m);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, again);
    for (const auto &cand : a)
      expect_invariants(m, cand);
  }
}
