#ifndef FLEXIDX_ACTIVESET_HPP
#define FLEXIDX_ACTIVESET_HPP

// Candidate active sets for the flexibility subproblems.
//
// With affine constraints the optimal recourse z at a critical parameter has
// n_z + 1 constraints active, and their multipliers satisfy
//
//   sum_j lambda_j = 1,   sum_j lambda_j a_z,j = 0,   lambda_j >= 0.
//
// Every subset of that size whose multiplier system is solvable is a
// candidate; the index and test routines solve one convex problem per
// candidate instead of a mixed-integer program.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flexidx/errors.hpp"
#include "flexidx/linalg.hpp"
#include "flexidx/lp.hpp"
#include "flexidx/model.hpp"

namespace flexidx {

struct ActiveCandidate {
  std::vector<int> indices; ///< sorted constraint indices
  Vector lambda;            ///< multipliers, aligned with indices
  int gradient_rank = 0;    ///< rank of the stacked [a_z | a_theta] rows

  bool operator==(const ActiveCandidate &o) const {
    return indices == o.indices && same_entries(lambda, o.lambda) &&
           gradient_rank == o.gradient_rank;
  }
};

namespace tol {
inline constexpr double multiplier = 1e-9;
}

/// Solves the multiplier system for the given subset by a phase-one LP.
/// Returns nullopt when no nonnegative solution exists.
inline std::optional<Vector> multiplier_check(const SystemModel &m,
                                              const std::vector<int> &subset) {
  const auto k = static_cast<Eigen::Index>(subset.size());
  if (k != m.n_z + 1)
    throw DimensionError("multiplier_check: subset must have n_z + 1 members");
  for (int j : subset)
    if (j < 0 || static_cast<std::size_t>(j) >= m.size())
      throw IndexError("multiplier_check: constraint index " +
                       std::to_string(j) + " out of range");

  LpProblem p(k);
  p.lower = Vector::Zero(k);
  p.add_equality(Vector::Ones(k), 1.0);
  for (int r = 0; r < m.n_z; ++r) {
    Vector row(k);
    for (Eigen::Index i = 0; i < k; ++i)
      row(i) = m[static_cast<std::size_t>(subset[static_cast<std::size_t>(i)])].a_z(r);
    p.add_equality(row, 0.0);
  }
  const auto s = solve_lp(p);
  if (!s.optimal())
    return std::nullopt;
  return s.x;
}

/// Rank of the stacked [a_z | a_theta] rows of a subset.
inline int gradient_rank(const SystemModel &m, const std::vector<int> &subset) {
  Matrix G(static_cast<Eigen::Index>(subset.size()), m.n_z + m.n_theta);
  for (std::size_t i = 0; i < subset.size(); ++i) {
    const auto &con = m[static_cast<std::size_t>(subset[i])];
    const auto r = static_cast<Eigen::Index>(i);
    G.row(r).head(m.n_z) = con.a_z.transpose();
    G.row(r).tail(m.n_theta) = con.a_theta.transpose();
  }
  return static_cast<int>(row_rank(G));
}

/// Visits every k-subset of {0, ..., n-1} in lexicographic order.
template <typename Fn> void for_each_combination(int n, int k, Fn &&fn) {
  if (k < 0 || k > n)
    return;
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i)
    idx[static_cast<std::size_t>(i)] = i;
  for (;;) {
    fn(std::as_const(idx));
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i)
      --i;
    if (i < 0)
      return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j)
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

/// All subsets of size n_z + 1 that pass multiplier_check, in lexicographic
/// order.
inline std::vector<ActiveCandidate> enumerate_candidates(const SystemModel &m) {
  const int n = static_cast<int>(m.size());
  const int k = m.n_z + 1;
  if (n < k)
    throw NoCandidatesError("model has " + std::to_string(n) +
                            " constraints but active sets need " +
                            std::to_string(k));
  std::vector<ActiveCandidate> out;
  for_each_combination(n, k, [&](const std::vector<int> &subset) {
    if (auto lambda = multiplier_check(m, subset))
      out.push_back({subset, std::move(*lambda), gradient_rank(m, subset)});
  });
  if (out.empty())
    throw NoCandidatesError(
        "no subset of " + std::to_string(k) +
        " constraints admits stationary multipliers; recourse can always "
        "improve some constraint");
  return out;
}

} // namespace flexidx

#endif // FLEXIDX_ACTIVESET_HPP
