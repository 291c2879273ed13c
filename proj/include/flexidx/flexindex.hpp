#ifndef FLEXIDX_FLEXINDEX_HPP
#define FLEXIDX_FLEXINDEX_HPP

// Feasibility function, flexibility test and flexibility index.
//
// Notation: g_j = a_theta,j . mean + c_j is the constraint value at the mean
// with zero recourse, and d = theta - mean. For the ellipsoid the offset is
// whitened as d = L w with V = L L^T, so the Mahalanobis quadratic becomes
// w . w and every subproblem has an identity-plus-zero Hessian.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "flexidx/activeset.hpp"
#include "flexidx/errors.hpp"
#include "flexidx/linalg.hpp"
#include "flexidx/lp.hpp"
#include "flexidx/model.hpp"
#include "flexidx/qp.hpp"
#include "flexidx/stats.hpp"

namespace flexidx {

namespace tol {
inline constexpr double tie = 1e-9;           // candidates closer than this tie
inline constexpr double active = 1e-9;        // psi active-constraint band
inline constexpr double feasible_psi = 1e-9;  // chi <= this means feasible
inline constexpr double bisection = 1e-8;     // on u in the ellipsoid test
} // namespace tol

// ---------------------------------------------------------------------------
// Feasibility function

struct PsiResult {
  double u = 0.0;
  Vector z_star;
  std::vector<int> active_constraints;
};

/// psi(theta) = min_z max_j f_j(z, theta), solved as min u over (z, u).
inline PsiResult psi(const SystemModel &m, const Vector &theta) {
  if (theta.size() != m.n_theta)
    throw DimensionError("psi: theta has length " +
                         std::to_string(theta.size()) + ", expected " +
                         std::to_string(m.n_theta));
  const Eigen::Index nz = m.n_z;
  LpProblem p(nz + 1);
  p.objective(nz) = 1.0;
  Vector row(nz + 1);
  Vector offset(static_cast<Eigen::Index>(m.size()));
  for (std::size_t j = 0; j < m.size(); ++j) {
    row.head(nz) = m[j].a_z;
    row(nz) = -1.0;
    offset(static_cast<Eigen::Index>(j)) = m[j].a_theta.dot(theta) + m[j].c;
    p.add_inequality(row, -offset(static_cast<Eigen::Index>(j)));
  }
  const auto s = solve_lp(p);
  if (s.status == LpStatus::Unbounded)
    throw UnboundedPsiError("psi is unbounded below: recourse drives every "
                            "constraint to -infinity");
  if (!s.optimal())
    throw Error("psi: LP reported " + std::string(to_string(s.status)));

  PsiResult r;
  r.z_star = s.x.head(nz);
  // Report the attained maximum rather than the LP's u so the invariant
  // u = max_j f_j holds exactly.
  Vector f(offset.size());
  for (std::size_t j = 0; j < m.size(); ++j)
    f(static_cast<Eigen::Index>(j)) =
        m[j].a_z.dot(r.z_star) + offset(static_cast<Eigen::Index>(j));
  r.u = f.maxCoeff();
  const double band = tol::active * (1.0 + std::abs(r.u));
  for (Eigen::Index j = 0; j < f.size(); ++j)
    if (f(j) >= r.u - band)
      r.active_constraints.push_back(static_cast<int>(j));
  return r;
}

// ---------------------------------------------------------------------------
// Set measures

/// Smallest scale delta with theta in T(delta).
inline double set_measure(const SystemModel &m, const UncertaintySet &set,
                          const Vector &theta) {
  if (theta.size() != m.n_theta)
    throw DimensionError("set_measure: theta has wrong length");
  const Vector d = theta - m.uncertainty.mean;
  switch (set.kind) {
  case SetKind::Ellipsoid: {
    const auto chol = covariance_factor(m);
    return chol.inverse_quadratic(d);
  }
  case SetKind::L2: return d.norm();
  case SetKind::L1: return d.lpNorm<1>();
  case SetKind::Linf: return d.lpNorm<Eigen::Infinity>();
  case SetKind::Hyperbox: {
    if (!set.box)
      throw SchemaError("hyperbox set without deviations");
    double worst = 0.0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      const double dev = d(i) >= 0.0 ? set.box->delta_plus(i)
                                     : set.box->delta_minus(i);
      if (d(i) == 0.0)
        continue;
      worst = std::max(worst, dev > 0.0 ? std::abs(d(i)) / dev : kInf);
    }
    return worst;
  }
  }
  return 0.0;
}

inline const char *delta_units(SetKind k) {
  switch (k) {
  case SetKind::Ellipsoid: return "squared Mahalanobis radius";
  case SetKind::Hyperbox: return "hyperbox scaling";
  case SetKind::L1: return "l1 radius";
  case SetKind::L2: return "l2 radius";
  case SetKind::Linf: return "linf radius";
  }
  return "?";
}

/// Probability mass of the ellipsoid with squared radius delta_star.
inline double confidence_level(double delta_star, int n_theta) {
  if (!(delta_star >= 0.0))
    throw DomainError("confidence_level: delta_star must be nonnegative");
  return chi2_cdf(n_theta, delta_star);
}

// ---------------------------------------------------------------------------
// Per-candidate subproblem assembly

namespace detail {

/// Linear data of the constraints in the subproblem variables. Each row is
/// f_j = rows.row(j) . (offset-variables, z) + g_j, where the offset
/// variables are w (ellipsoid and l2) or d (polyhedral sets).
struct ConstraintRows {
  Matrix rows; // |J| x (n_off + n_z)
  Vector g;    // |J|
  Eigen::Index n_off = 0;
};

inline ConstraintRows constraint_rows(const SystemModel &m,
                                      const Matrix *whitening) {
  ConstraintRows c;
  c.n_off = m.n_theta;
  const auto J = static_cast<Eigen::Index>(m.size());
  c.rows.resize(J, m.n_theta + m.n_z);
  c.g = nominal_offsets(m);
  for (Eigen::Index j = 0; j < J; ++j) {
    const auto &con = m[static_cast<std::size_t>(j)];
    if (whitening)
      c.rows.row(j).head(m.n_theta) = (whitening->transpose() * con.a_theta).transpose();
    else
      c.rows.row(j).head(m.n_theta) = con.a_theta.transpose();
    c.rows.row(j).tail(m.n_z) = con.a_z.transpose();
  }
  return c;
}

inline bool is_member(const std::vector<int> &subset, Eigen::Index j) {
  return std::binary_search(subset.begin(), subset.end(), static_cast<int>(j));
}

/// Zero-padded copy of a constraint row in a problem of `width` variables
/// whose first block holds the offset and recourse variables.
inline Vector padded(const ConstraintRows &c, Eigen::Index j, Eigen::Index width) {
  Vector r = Vector::Zero(width);
  r.head(c.rows.cols()) = c.rows.row(j).transpose();
  return r;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Flexibility index

struct CandidateOutcome {
  std::vector<int> indices;
  std::string status; ///< "optimal", "infeasible" or "unbounded"
  std::optional<double> delta;
  std::string reason;
  bool tie = false;
};

struct IndexResult {
  SetKind set_kind = SetKind::Ellipsoid;
  double delta_star = 0.0;
  Vector theta_star;
  Vector z_star;
  ActiveCandidate active_set;
  std::optional<double> alpha_star;
  std::vector<CandidateOutcome> candidates;
  std::vector<std::vector<int>> ties; ///< other subsets attaining delta_star
  bool interior = true;
  double psi_nominal = 0.0;
};

struct IndexOptions {
  /// Throw NotInteriorError instead of returning delta = 0 when the mean is
  /// not strictly feasible.
  bool strict_interior = false;
};

namespace detail {

struct SubproblemValue {
  std::string status;
  double delta = 0.0;
  Vector offset; // w or d
  Vector z;
};

/// min w.w subject to the candidate structure (ellipsoid and l2).
inline SubproblemValue solve_quadratic_candidate(const ConstraintRows &c,
                                                 const ActiveCandidate &cand,
                                                 Eigen::Index n_z) {
  const Eigen::Index nt = c.n_off, n = nt + n_z;
  QpProblem p(n);
  p.quadratic.topLeftCorner(nt, nt) = Matrix::Identity(nt, nt);
  for (Eigen::Index j = 0; j < c.rows.rows(); ++j) {
    if (is_member(cand.indices, j))
      p.add_equality(c.rows.row(j).transpose(), -c.g(j));
    else
      p.add_inequality(c.rows.row(j).transpose(), -c.g(j));
  }
  const auto s = solve_qp(p);
  SubproblemValue v;
  v.status = to_string(s.status);
  if (s.optimal()) {
    v.offset = s.x.head(nt);
    v.z = s.x.tail(n_z);
    v.delta = v.offset.squaredNorm();
  }
  return v;
}

/// min delta over the polyhedral set kinds. Variables (d, z, delta, t) with
/// t present only for l1.
inline SubproblemValue solve_polyhedral_candidate(const ConstraintRows &c,
                                                  const ActiveCandidate &cand,
                                                  Eigen::Index n_z,
                                                  const UncertaintySet &set) {
  const Eigen::Index nt = c.n_off;
  const bool l1 = set.kind == SetKind::L1;
  const Eigen::Index id = nt + n_z;
  const Eigen::Index n = id + 1 + (l1 ? nt : 0);
  LpProblem p(n);
  p.objective(id) = 1.0;
  p.lower(id) = 0.0;
  for (Eigen::Index j = 0; j < c.rows.rows(); ++j) {
    const Vector row = padded(c, j, n);
    if (is_member(cand.indices, j))
      p.add_equality(row, -c.g(j));
    else
      p.add_inequality(row, -c.g(j));
  }
  for (Eigen::Index i = 0; i < nt; ++i) {
    Vector up = Vector::Zero(n), lo = Vector::Zero(n);
    up(i) = 1.0;
    lo(i) = -1.0;
    if (l1) {
      up(id + 1 + i) = -1.0;
      lo(id + 1 + i) = -1.0;
    } else {
      const double dp = set.kind == SetKind::Hyperbox ? set.box->delta_plus(i) : 1.0;
      const double dm = set.kind == SetKind::Hyperbox ? set.box->delta_minus(i) : 1.0;
      up(id) = -dp;
      lo(id) = -dm;
    }
    p.add_inequality(up, 0.0);
    p.add_inequality(lo, 0.0);
  }
  if (l1) {
    Vector budget = Vector::Zero(n);
    budget.tail(nt).setOnes();
    budget(id) = -1.0;
    p.add_inequality(budget, 0.0);
  }
  const auto s = solve_lp(p);
  SubproblemValue v;
  v.status = to_string(s.status);
  if (s.optimal()) {
    v.offset = s.x.head(nt);
    v.z = s.x.segment(nt, n_z);
    v.delta = s.x(id);
  }
  return v;
}

inline void require_box(const SystemModel &m, const UncertaintySet &set,
                        bool require_nonzero) {
  if (set.kind != SetKind::Hyperbox)
    return;
  if (!set.box)
    throw SchemaError("hyperbox set needs deviations (model '" + m.name +
                      "' has no hyperbox block)");
  validate_hyperbox(*set.box, m.n_theta, require_nonzero);
}

} // namespace detail

/// Largest scale of the uncertainty set on which psi stays nonpositive.
inline IndexResult flexibility_index(const SystemModel &m,
                                     const UncertaintySet &set,
                                     const IndexOptions &opts = {}) {
  detail::require_box(m, set, true);
  IndexResult res;
  res.set_kind = set.kind;

  const auto nominal = psi(m, m.uncertainty.mean);
  res.psi_nominal = nominal.u;
  if (nominal.u >= 0.0) {
    if (opts.strict_interior)
      throw NotInteriorError("nominal point is not strictly feasible: psi(mean) = " +
                             std::to_string(nominal.u));
    res.interior = false;
    res.delta_star = 0.0;
    res.theta_star = m.uncertainty.mean;
    res.z_star = nominal.z_star;
    if (set.kind == SetKind::Ellipsoid)
      res.alpha_star = 0.0;
    return res;
  }

  const auto cands = enumerate_candidates(m);
  const bool quadratic = set.kind == SetKind::Ellipsoid || set.kind == SetKind::L2;
  std::optional<CholeskyFactor> chol;
  if (set.kind == SetKind::Ellipsoid)
    chol = covariance_factor(m);
  const auto rows = detail::constraint_rows(m, chol ? &chol->L : nullptr);

  std::optional<std::size_t> best;
  Vector best_offset, best_z;
  for (std::size_t k = 0; k < cands.size(); ++k) {
    const auto v = quadratic
                       ? detail::solve_quadratic_candidate(rows, cands[k], m.n_z)
                       : detail::solve_polyhedral_candidate(rows, cands[k], m.n_z, set);
    CandidateOutcome out{cands[k].indices, v.status, std::nullopt, {}, false};
    if (v.status == "optimal") {
      const double delta = set.kind == SetKind::L2 ? std::sqrt(v.delta) : v.delta;
      out.delta = delta;
      if (!best || delta < res.delta_star - tol::tie) {
        best = k;
        res.delta_star = delta;
        best_offset = v.offset;
        best_z = v.z;
      }
    } else if (v.status == "infeasible") {
      out.reason = "active equalities inconsistent with the remaining constraints";
    } else {
      out.reason = "subproblem unbounded";
    }
    res.candidates.push_back(std::move(out));
  }
  if (!best)
    throw NoCandidatesError("no candidate active set yields a feasible subproblem");

  for (std::size_t k = 0; k < res.candidates.size(); ++k) {
    auto &c = res.candidates[k];
    if (c.delta && std::abs(*c.delta - res.delta_star) <= tol::tie) {
      c.tie = true;
      if (k != *best)
        res.ties.push_back(c.indices);
    }
  }

  res.active_set = cands[*best];
  res.z_star = best_z;
  res.theta_star = m.uncertainty.mean +
                   (chol ? Vector(chol->L * best_offset) : best_offset);
  if (set.kind == SetKind::Ellipsoid)
    res.alpha_star = confidence_level(res.delta_star, m.n_theta);
  return res;
}

// ---------------------------------------------------------------------------
// Flexibility test

struct ChiResult {
  double chi = 0.0;
  Vector theta_worst;
  bool feasible = true;
  std::vector<int> active_set;
};

namespace detail {

struct TestValue {
  bool ok = false;
  double u = 0.0;
  Vector offset;
};

/// max u with the candidate structure and w.w <= radius2, by bisection on u
/// over QP feasibility.
inline TestValue quadratic_test_candidate(const ConstraintRows &c,
                                          const ActiveCandidate &cand,
                                          Eigen::Index n_z, double radius2) {
  const Eigen::Index nt = c.n_off, nzu = nt + n_z;
  const double slack = 1e-12 * std::max(1.0, radius2);

  // Feasibility of a fixed u: min w.w over (w, z).
  auto attempt = [&](double u) -> std::optional<Vector> {
    QpProblem p(nzu);
    p.quadratic.topLeftCorner(nt, nt) = Matrix::Identity(nt, nt);
    for (Eigen::Index j = 0; j < c.rows.rows(); ++j) {
      if (is_member(cand.indices, j))
        p.add_equality(c.rows.row(j).transpose(), u - c.g(j));
      else
        p.add_inequality(c.rows.row(j).transpose(), u - c.g(j));
    }
    const auto s = solve_qp(p);
    if (!s.optimal() || s.x.head(nt).squaredNorm() > radius2 + slack)
      return std::nullopt;
    return Vector(s.x.head(nt));
  };

  // Lower end: u free.
  QpProblem p0(nzu + 1);
  p0.quadratic.topLeftCorner(nt, nt) = Matrix::Identity(nt, nt);
  for (Eigen::Index j = 0; j < c.rows.rows(); ++j) {
    Vector row(nzu + 1);
    row.head(nzu) = c.rows.row(j).transpose();
    row(nzu) = -1.0;
    if (is_member(cand.indices, j))
      p0.add_equality(row, -c.g(j));
    else
      p0.add_inequality(row, -c.g(j));
  }
  const auto s0 = solve_qp(p0);
  TestValue tv;
  if (!s0.optimal() || s0.x.head(nt).squaredNorm() > radius2 + slack)
    return tv;

  // Upper end from the multiplier combination of the active rows.
  double lo = s0.x(nzu);
  Vector best = s0.x.head(nt);
  Vector combo = Vector::Zero(nt);
  double g_combo = 0.0;
  for (std::size_t i = 0; i < cand.indices.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(cand.indices[i]);
    const double lam = cand.lambda(static_cast<Eigen::Index>(i));
    combo += lam * c.rows.row(j).head(nt).transpose();
    g_combo += lam * c.g(j);
  }
  double hi = g_combo + std::sqrt(radius2) * combo.norm();
  if (auto x = attempt(hi)) {
    lo = hi;
    best = *x;
  }
  while (hi - lo > tol::bisection * std::max(1.0, std::abs(lo))) {
    const double mid = 0.5 * (lo + hi);
    if (auto x = attempt(mid)) {
      lo = mid;
      best = *x;
    } else {
      hi = mid;
    }
  }
  tv.ok = true;
  tv.u = lo;
  tv.offset = best;
  return tv;
}

/// max u over the polyhedral set at fixed scale. Variables (d, z, u, t).
inline TestValue polyhedral_test_candidate(const ConstraintRows &c,
                                           const ActiveCandidate &cand,
                                           Eigen::Index n_z,
                                           const UncertaintySet &set,
                                           double delta) {
  const Eigen::Index nt = c.n_off;
  const bool l1 = set.kind == SetKind::L1;
  const Eigen::Index iu = nt + n_z;
  const Eigen::Index n = iu + 1 + (l1 ? nt : 0);
  LpProblem p(n, Sense::Maximize);
  p.objective(iu) = 1.0;
  for (Eigen::Index j = 0; j < c.rows.rows(); ++j) {
    Vector row = padded(c, j, n);
    row(iu) = -1.0;
    if (is_member(cand.indices, j))
      p.add_equality(row, -c.g(j));
    else
      p.add_inequality(row, -c.g(j));
  }
  if (l1) {
    for (Eigen::Index i = 0; i < nt; ++i) {
      Vector up = Vector::Zero(n), lo = Vector::Zero(n);
      up(i) = 1.0;
      up(iu + 1 + i) = -1.0;
      lo(i) = -1.0;
      lo(iu + 1 + i) = -1.0;
      p.add_inequality(up, 0.0);
      p.add_inequality(lo, 0.0);
    }
    Vector budget = Vector::Zero(n);
    budget.tail(nt).setOnes();
    p.add_inequality(budget, delta);
  } else {
    for (Eigen::Index i = 0; i < nt; ++i) {
      const double dp = set.kind == SetKind::Hyperbox ? set.box->delta_plus(i) : 1.0;
      const double dm = set.kind == SetKind::Hyperbox ? set.box->delta_minus(i) : 1.0;
      p.lower(i) = -delta * dm;
      p.upper(i) = delta * dp;
    }
  }
  const auto s = solve_lp(p);
  TestValue tv;
  if (s.optimal()) {
    tv.ok = true;
    tv.u = s.x(iu);
    tv.offset = s.x.head(nt);
  }
  return tv;
}

} // namespace detail

/// chi = max of psi over T(delta). Hyperbox sets default to delta = 1.
inline ChiResult flexibility_test(const SystemModel &m, const UncertaintySet &set,
                                  double delta = 1.0) {
  if (!(delta >= 0.0) || !std::isfinite(delta))
    throw DomainError("flexibility_test: delta must be finite and nonnegative");
  detail::require_box(m, set, false);
  const auto cands = enumerate_candidates(m);
  const bool quadratic = set.kind == SetKind::Ellipsoid || set.kind == SetKind::L2;
  std::optional<CholeskyFactor> chol;
  if (set.kind == SetKind::Ellipsoid)
    chol = covariance_factor(m);
  const auto rows = detail::constraint_rows(m, chol ? &chol->L : nullptr);
  const double radius2 = set.kind == SetKind::L2 ? delta * delta : delta;

  ChiResult res;
  bool any = false;
  for (const auto &cand : cands) {
    const auto tv =
        quadratic ? detail::quadratic_test_candidate(rows, cand, m.n_z, radius2)
                  : detail::polyhedral_test_candidate(rows, cand, m.n_z, set, delta);
    if (!tv.ok)
      continue;
    if (!any || tv.u > res.chi + tol::tie) {
      any = true;
      res.chi = tv.u;
      res.theta_worst = m.uncertainty.mean +
                        (chol ? Vector(chol->L * tv.offset) : tv.offset);
      res.active_set = cand.indices;
    }
  }
  if (!any)
    throw NoCandidatesError("no candidate active set is feasible on the set");
  res.feasible = res.chi <= tol::feasible_psi;
  return res;
}

// ---------------------------------------------------------------------------
// Verification

struct VerificationReport {
  int n_probe = 0;
  double worst_probe_psi = -kInf;
  bool containment = true;
  double psi_at_theta_star = 0.0;
  bool on_feasible_boundary = true;
  double quadratic_residual = 0.0;
  bool on_set_boundary = true;

  [[nodiscard]] bool passed() const {
    return containment && on_feasible_boundary && on_set_boundary;
  }
};

namespace tol {
inline constexpr double containment = 1e-6;
inline constexpr double boundary = 1e-7;
} // namespace tol

/// Uniform point in the ellipsoid of squared radius delta.
inline Vector sample_in_ellipsoid(const Vector &mean, const CholeskyFactor &chol,
                                  double delta, Rng &rng) {
  const auto n = mean.size();
  Vector dir = standard_normal(n, rng);
  const double norm = dir.norm();
  if (norm == 0.0)
    return mean;
  const double radius = std::sqrt(delta) *
                        std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
  return mean + chol.L * (dir * (radius / norm));
}

/// Checks containment of the ellipsoid in the feasible region, psi(theta*)
/// = 0 and theta* on the ellipsoid.
inline VerificationReport verify_solution(const SystemModel &m,
                                          const IndexResult &result, int n_probe,
                                          std::uint64_t seed) {
  if (result.set_kind != SetKind::Ellipsoid)
    throw DomainError("verify_solution expects an ellipsoid result");
  if (n_probe < 0)
    throw DomainError("verify_solution: n_probe must be nonnegative");
  const auto chol = covariance_factor(m);
  VerificationReport rep;
  rep.n_probe = n_probe;
  Rng rng(seed);
  for (int i = 0; i < n_probe; ++i) {
    const Vector th = sample_in_ellipsoid(m.uncertainty.mean, chol,
                                          result.delta_star, rng);
    rep.worst_probe_psi = std::max(rep.worst_probe_psi, psi(m, th).u);
  }
  rep.containment = n_probe == 0 || rep.worst_probe_psi <= tol::containment;
  rep.psi_at_theta_star = psi(m, result.theta_star).u;
  rep.on_feasible_boundary = std::abs(rep.psi_at_theta_star) <= tol::boundary;
  rep.quadratic_residual =
      chol.inverse_quadratic(result.theta_star - m.uncertainty.mean) -
      result.delta_star;
  rep.on_set_boundary = std::abs(rep.quadratic_residual) <= tol::boundary;
  return rep;
}

} // namespace flexidx

#endif // FLEXIDX_FLEXINDEX_HPP
