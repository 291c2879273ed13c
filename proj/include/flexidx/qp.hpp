#ifndef FLEXIDX_QP_HPP
#define FLEXIDX_QP_HPP

// Convex quadratic programs
//
//   min  x^T W x + q^T x + offset
//   s.t. A_eq x = b_eq,  A_in x <= b_in,
//
// with W symmetric positive semidefinite and possibly singular. Solved by a
// primal active-set method started from an LP-feasible point. Each iteration
// works in the null space Z of the working constraints: positive-curvature
// directions take a Newton step, zero-curvature directions with a nonzero
// reduced gradient are followed until a constraint blocks (or the problem is
// reported unbounded along that subspace). No regularization is applied.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "flexidx/errors.hpp"
#include "flexidx/linalg.hpp"
#include "flexidx/lp.hpp"

namespace flexidx {

enum class QpStatus { Optimal, Infeasible, UnboundedSubspace };

inline const char *to_string(QpStatus s) {
  switch (s) {
  case QpStatus::Optimal: return "optimal";
  case QpStatus::Infeasible: return "infeasible";
  case QpStatus::UnboundedSubspace: return "unbounded";
  }
  return "?";
}

struct QpProblem {
  Matrix quadratic; // W
  Vector linear;    // q
  double offset = 0.0;
  Matrix eq_matrix;
  Vector eq_rhs;
  Matrix ineq_matrix;
  Vector ineq_rhs;

  QpProblem() = default;
  explicit QpProblem(Eigen::Index n)
      : quadratic(Matrix::Zero(n, n)), linear(Vector::Zero(n)),
        eq_matrix(0, n), eq_rhs(0), ineq_matrix(0, n), ineq_rhs(0) {}

  [[nodiscard]] Eigen::Index num_vars() const { return linear.size(); }

  void add_equality(const Vector &row, double rhs) {
    append(eq_matrix, eq_rhs, row, rhs);
  }
  void add_inequality(const Vector &row, double rhs) {
    append(ineq_matrix, ineq_rhs, row, rhs);
  }

  [[nodiscard]] double objective(const Vector &x) const {
    return x.dot(quadratic * x) + linear.dot(x) + offset;
  }

private:
  static void append(Matrix &A, Vector &b, const Vector &row, double rhs) {
    if (A.rows() != 0 && A.cols() != row.size())
      throw DimensionError("QpProblem: row length mismatch");
    if (A.cols() != row.size())
      A.resize(0, row.size());
    A.conservativeResize(A.rows() + 1, Eigen::NoChange);
    A.row(A.rows() - 1) = row.transpose();
    b.conservativeResize(b.size() + 1);
    b(b.size() - 1) = rhs;
  }
};

/// Multipliers satisfy 2 W x + q + A_eq^T eq_multipliers
/// + A_in^T ineq_multipliers = 0 with ineq_multipliers >= 0.
struct QpSolution {
  QpStatus status = QpStatus::Infeasible;
  Vector x;
  double objective_value = 0.0;
  std::vector<Eigen::Index> active; // inequality rows in the final working set
  Vector eq_multipliers;
  Vector ineq_multipliers;
  long iterations = 0;

  [[nodiscard]] bool optimal() const { return status == QpStatus::Optimal; }
};

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;

  [[nodiscard]] double max() const {
    return std::max({stationarity, primal, dual, complementarity});
  }
};

inline KktResiduals kkt_residuals(const QpProblem &p, const QpSolution &s) {
  KktResiduals r;
  Vector grad = 2.0 * p.quadratic * s.x + p.linear;
  if (p.eq_matrix.rows() > 0) {
    grad += p.eq_matrix.transpose() * s.eq_multipliers;
    r.primal = (p.eq_matrix * s.x - p.eq_rhs).cwiseAbs().maxCoeff();
  }
  if (p.ineq_matrix.rows() > 0) {
    grad += p.ineq_matrix.transpose() * s.ineq_multipliers;
    const Vector slack = p.ineq_matrix * s.x - p.ineq_rhs;
    r.primal = std::max(r.primal, slack.maxCoeff());
    r.dual = std::max(0.0, -s.ineq_multipliers.minCoeff());
    r.complementarity =
        slack.cwiseProduct(s.ineq_multipliers).cwiseAbs().maxCoeff();
  }
  r.stationarity = grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
  return r;
}

namespace detail {

struct QpTolerances {
  static constexpr double feasibility = 1e-9;
  static constexpr double curvature = 1e-10; // relative to largest eigenvalue
  static constexpr double psd = 1e-10;
  static constexpr double multiplier = 1e-10;
  static constexpr long max_changes = 10000;
};

inline Matrix stack_rows(const Matrix &eq, const std::vector<Eigen::Index> &eq_rows,
                         const Matrix &in, const std::vector<Eigen::Index> &in_rows,
                         Eigen::Index n) {
  Matrix A(static_cast<Eigen::Index>(eq_rows.size() + in_rows.size()), n);
  Eigen::Index k = 0;
  for (auto i : eq_rows)
    A.row(k++) = eq.row(i);
  for (auto i : in_rows)
    A.row(k++) = in.row(i);
  return A;
}

/// Orthonormal basis of the null space of a full-row-rank A (k x n).
inline Matrix null_space(const Matrix &A, Eigen::Index n) {
  if (A.rows() == 0)
    return Matrix::Identity(n, n);
  Eigen::HouseholderQR<Matrix> qr(A.transpose());
  const Matrix Q = qr.householderQ() * Matrix::Identity(n, n);
  return Q.rightCols(n - A.rows());
}

} // namespace detail

inline QpSolution solve_qp(const QpProblem &prob) {
  using detail::QpTolerances;
  using Index = Eigen::Index;

  const Index n = prob.num_vars();
  if (prob.quadratic.rows() != n || prob.quadratic.cols() != n)
    throw DimensionError("solve_qp: quadratic form has wrong shape");
  if (prob.eq_matrix.rows() != prob.eq_rhs.size() ||
      prob.ineq_matrix.rows() != prob.ineq_rhs.size() ||
      (prob.eq_matrix.rows() > 0 && prob.eq_matrix.cols() != n) ||
      (prob.ineq_matrix.rows() > 0 && prob.ineq_matrix.cols() != n))
    throw DimensionError("solve_qp: constraint blocks have wrong shape");

  const Matrix W = 0.5 * (prob.quadratic + prob.quadratic.transpose());
  const Matrix H = 2.0 * W; // Hessian of the objective
  {
    const double scale = std::max(1.0, W.cwiseAbs().maxCoeff());
    if (n > 0) {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(W, Eigen::EigenvaluesOnly);
      if (eig.eigenvalues().minCoeff() < -QpTolerances::psd * scale)
        throw DomainError("solve_qp: quadratic form is not positive semidefinite");
    }
  }

  const Matrix &Aeq = prob.eq_matrix;
  const Matrix &Ain = prob.ineq_matrix;
  const Index m_eq = Aeq.rows();
  const Index m_in = Ain.rows();

  QpSolution sol;

  // Feasible starting point.
  LpProblem phase(n);
  phase.eq_matrix = Aeq;
  phase.eq_rhs = prob.eq_rhs;
  phase.ineq_matrix = Ain;
  phase.ineq_rhs = prob.ineq_rhs;
  if (m_eq == 0)
    phase.eq_matrix.resize(0, n);
  if (m_in == 0)
    phase.ineq_matrix.resize(0, n);
  const LpSolution start = solve_lp(phase);
  if (!start.optimal()) {
    sol.status = QpStatus::Infeasible;
    return sol;
  }
  Vector x = start.x;

  // Working set: independent equality rows, then active inequalities.
  std::vector<Index> eq_rows, in_rows;
  auto current_rank = [&]() {
    return static_cast<Index>(eq_rows.size() + in_rows.size());
  };
  auto independent_with = [&](Index row, bool eq) {
    std::vector<Index> e = eq_rows, i = in_rows;
    (eq ? e : i).push_back(row);
    const Matrix A = detail::stack_rows(Aeq, e, Ain, i, n);
    return row_rank(A) == A.rows();
  };
  for (Index i = 0; i < m_eq; ++i)
    if (independent_with(i, true))
      eq_rows.push_back(i);
  for (Index i = 0; i < m_in && current_rank() < n; ++i)
    if (Ain.row(i).dot(x) - prob.ineq_rhs(i) >= -QpTolerances::feasibility &&
        independent_with(i, false))
      in_rows.push_back(i);

  std::vector<bool> in_working(static_cast<std::size_t>(m_in), false);
  for (auto i : in_rows)
    in_working[static_cast<std::size_t>(i)] = true;

  Vector nu; // multipliers of the working rows
  for (long iter = 0;; ++iter) {
    if (iter > QpTolerances::max_changes)
      throw IterationLimitError("solve_qp: active-set change limit exceeded");
    sol.iterations = iter;

    const Matrix A = detail::stack_rows(Aeq, eq_rows, Ain, in_rows, n);
    const Matrix Z = detail::null_space(A, n);
    const Vector g = H * x + prob.linear;

    Vector p = Vector::Zero(n);
    bool ray = false; // zero-curvature direction, no natural step length
    if (Z.cols() > 0) {
      const Matrix Hr = Z.transpose() * H * Z;
      const Vector gr = Z.transpose() * g;
      Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (Hr + Hr.transpose()));
      const Vector &ev = eig.eigenvalues();
      const Matrix &U = eig.eigenvectors();
      const double tau =
          QpTolerances::curvature * std::max(1.0, ev.cwiseAbs().maxCoeff());
      Vector flat = Vector::Zero(Z.cols()), newton = Vector::Zero(Z.cols());
      for (Index k = 0; k < ev.size(); ++k) {
        const double coef = U.col(k).dot(gr);
        if (ev(k) <= tau)
          flat -= coef * U.col(k);
        else
          newton -= (coef / ev(k)) * U.col(k);
      }
      if (flat.norm() > 1e-11 * (1.0 + g.norm())) {
        p = Z * flat;
        ray = true;
      } else {
        p = Z * newton;
      }
    }

    if (!ray && p.norm() <= 1e-12 * (1.0 + x.norm())) {
      // Stationary on the working set: check inequality multipliers.
      nu = A.rows() > 0
               ? Vector(A.transpose().colPivHouseholderQr().solve(-g))
               : Vector(0);
      Index drop = -1;
      double most_negative = -QpTolerances::multiplier * (1.0 + g.norm());
      for (std::size_t k = 0; k < in_rows.size(); ++k) {
        const double lam = nu(static_cast<Index>(eq_rows.size() + k));
        if (lam < most_negative ||
            (drop >= 0 && lam == most_negative &&
             in_rows[k] < in_rows[static_cast<std::size_t>(drop)])) {
          most_negative = lam;
          drop = static_cast<Index>(k);
        }
      }
      if (drop < 0)
        break;
      in_working[static_cast<std::size_t>(in_rows[static_cast<std::size_t>(drop)])] = false;
      in_rows.erase(in_rows.begin() + drop);
      continue;
    }

    // Ratio test over inequalities outside the working set.
    double alpha = ray ? std::numeric_limits<double>::infinity() : 1.0;
    Index blocking = -1;
    for (Index i = 0; i < m_in; ++i) {
      if (in_working[static_cast<std::size_t>(i)])
        continue;
      const double ap = Ain.row(i).dot(p);
      if (ap <= 1e-14 * (1.0 + Ain.row(i).norm() * p.norm()))
        continue;
      const double step =
          std::max(0.0, (prob.ineq_rhs(i) - Ain.row(i).dot(x)) / ap);
      if (step < alpha) {
        alpha = step;
        blocking = i;
      }
    }
    if (std::isinf(alpha)) {
      sol.status = QpStatus::UnboundedSubspace;
      sol.x = x;
      return sol;
    }
    x += alpha * p;
    if (blocking >= 0) {
      in_rows.push_back(blocking);
      in_working[static_cast<std::size_t>(blocking)] = true;
    }
  }

  sol.status = QpStatus::Optimal;
  sol.x = x;
  sol.objective_value = prob.objective(x);
  sol.eq_multipliers = Vector::Zero(m_eq);
  sol.ineq_multipliers = Vector::Zero(m_in);
  for (std::size_t k = 0; k < eq_rows.size(); ++k)
    sol.eq_multipliers(eq_rows[k]) = nu(static_cast<Index>(k));
  for (std::size_t k = 0; k < in_rows.size(); ++k)
    sol.ineq_multipliers(in_rows[k]) =
        std::max(0.0, nu(static_cast<Index>(eq_rows.size() + k)));
  sol.active = in_rows;
  std::sort(sol.active.begin(), sol.active.end());
  return sol;
}

} // namespace flexidx

#endif // FLEXIDX_QP_HPP
