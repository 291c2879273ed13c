#ifndef FLEXIDX_LP_HPP
#define FLEXIDX_LP_HPP

// Dense two-phase simplex for the small linear programs that appear in
// flexibility analysis (feasibility function, flexibility test and index
// subproblems, multiplier checks).
//
//   min/max  c^T x
//   s.t.     A_eq x  = b_eq
//            A_in x <= b_in
//            lower <= x <= upper      (entries may be infinite)
//
// Variables are free unless bounded. Internally every variable is mapped to
// nonnegative columns (shift for a finite lower bound, reflection for a lone
// upper bound, split for a free variable), rows with negative right-hand
// side are negated, and a textbook tableau runs Dantzig pricing with a
// Bland fallback once degenerate pivots pile up.

#include <cmath>
#include <limits>
#include <vector>

#include "flexidx/errors.hpp"
#include "flexidx/linalg.hpp"

namespace flexidx {

enum class Sense { Minimize, Maximize };
enum class LpStatus { Optimal, Infeasible, Unbounded };

inline const char *to_string(LpStatus s) {
  switch (s) {
  case LpStatus::Optimal: return "optimal";
  case LpStatus::Infeasible: return "infeasible";
  case LpStatus::Unbounded: return "unbounded";
  }
  return "?";
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct LpProblem {
  Sense sense = Sense::Minimize;
  Vector objective;
  Matrix eq_matrix;
  Vector eq_rhs;
  Matrix ineq_matrix;
  Vector ineq_rhs;
  Vector lower; // empty: all -inf
  Vector upper; // empty: all +inf

  LpProblem() = default;

  /// An empty problem over `n` free variables with zero objective.
  explicit LpProblem(Eigen::Index n, Sense s = Sense::Minimize)
      : sense(s), objective(Vector::Zero(n)), eq_matrix(0, n), eq_rhs(0),
        ineq_matrix(0, n), ineq_rhs(0),
        lower(Vector::Constant(n, -kInf)), upper(Vector::Constant(n, kInf)) {}

  [[nodiscard]] Eigen::Index num_vars() const { return objective.size(); }

  void add_equality(const Vector &row, double rhs) {
    append(eq_matrix, eq_rhs, row, rhs);
  }
  void add_inequality(const Vector &row, double rhs) {
    append(ineq_matrix, ineq_rhs, row, rhs);
  }

  [[nodiscard]] double lower_bound(Eigen::Index j) const {
    return lower.size() == 0 ? -kInf : lower(j);
  }
  [[nodiscard]] double upper_bound(Eigen::Index j) const {
    return upper.size() == 0 ? kInf : upper(j);
  }

  void validate() const {
    const auto n = num_vars();
    auto check_block = [n](const Matrix &A, const Vector &b, const char *what) {
      if (A.rows() != b.size() || (A.rows() > 0 && A.cols() != n))
        throw DimensionError(std::string("LpProblem: inconsistent ") + what +
                             " block");
      if (!A.allFinite() || !b.allFinite())
        throw DimensionError(std::string("LpProblem: non-finite ") + what +
                             " data");
    };
    if (!objective.allFinite())
      throw DimensionError("LpProblem: non-finite objective");
    check_block(eq_matrix, eq_rhs, "equality");
    check_block(ineq_matrix, ineq_rhs, "inequality");
    if ((lower.size() != 0 && lower.size() != n) ||
        (upper.size() != 0 && upper.size() != n))
      throw DimensionError("LpProblem: bound vectors have wrong length");
    for (Eigen::Index j = 0; j < n; ++j)
      if (std::isnan(lower_bound(j)) || std::isnan(upper_bound(j)) ||
          lower_bound(j) == kInf || upper_bound(j) == -kInf)
        throw DimensionError("LpProblem: invalid bound");
  }

private:
  static void append(Matrix &A, Vector &b, const Vector &row, double rhs) {
    if (A.cols() != row.size()) {
      if (A.rows() != 0)
        throw DimensionError("LpProblem: row length mismatch");
      A.resize(0, row.size());
    }
    A.conservativeResize(A.rows() + 1, Eigen::NoChange);
    A.row(A.rows() - 1) = row.transpose();
    b.conservativeResize(b.size() + 1);
    b(b.size() - 1) = rhs;
  }
};

/// Duals are sensitivities of the optimal objective (in the problem's own
/// sense) to the corresponding right-hand side or bound value.
struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Vector x;
  double objective_value = 0.0;
  Vector eq_dual;
  Vector ineq_dual;
  Vector lower_dual;
  Vector upper_dual;
  long pivots = 0;

  [[nodiscard]] bool optimal() const { return status == LpStatus::Optimal; }

  /// b_eq.y_eq + b_in.y_in + sum of finite bounds times their duals.
  [[nodiscard]] double dual_objective(const LpProblem &p) const {
    double d = p.eq_rhs.dot(eq_dual) + p.ineq_rhs.dot(ineq_dual);
    for (Eigen::Index j = 0; j < p.num_vars(); ++j) {
      if (std::isfinite(p.lower_bound(j)))
        d += lower_dual(j) * p.lower_bound(j);
      if (std::isfinite(p.upper_bound(j)))
        d += upper_dual(j) * p.upper_bound(j);
    }
    return d;
  }
};

namespace detail {

struct LpTolerances {
  static constexpr double pivot = 1e-9;
  static constexpr double reduced_cost = 1e-9;
  static constexpr double phase_one = 1e-8;
  static constexpr double empty_row = 1e-9;
  static constexpr long max_pivots = 100000;
};

/// Maps an original variable onto one or two nonnegative columns.
struct ColumnMap {
  Eigen::Index pos = -1;  // column carrying +x' (or -x' when reflected)
  Eigen::Index neg = -1;  // second column of a free split
  double sign = 1.0;      // x = shift + sign * x'_pos - x'_neg
  double shift = 0.0;
  Eigen::Index upper_row = -1; // standard-form row of x' <= u - l
};

class Tableau {
public:
  Tableau(Matrix A, Vector b, std::vector<Eigen::Index> basis,
          Eigen::Index first_artificial)
      : m_(A.rows()), n_(A.cols()), first_art_(first_artificial),
        basis_(std::move(basis)), T_(m_ + 1, n_ + 1) {
    T_.topLeftCorner(m_, n_) = A;
    T_.topRightCorner(m_, 1) = b;
    T_.row(m_).setZero();
  }

  [[nodiscard]] Eigen::Index rows() const { return m_; }
  [[nodiscard]] Eigen::Index cols() const { return n_; }
  [[nodiscard]] const std::vector<Eigen::Index> &basis() const { return basis_; }
  [[nodiscard]] bool is_artificial(Eigen::Index j) const { return j >= first_art_; }
  [[nodiscard]] double objective() const { return -T_(m_, n_); }
  [[nodiscard]] double rhs(Eigen::Index i) const { return T_(i, n_); }
  [[nodiscard]] long pivots() const { return pivots_; }

  /// Loads cost vector c (length n_) as the pricing row for the current basis.
  void set_costs(const Vector &c) {
    T_.row(m_).setZero();
    T_.row(m_).head(n_) = c.transpose();
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double cb = c(basis_[static_cast<std::size_t>(i)]);
      if (cb != 0.0)
        T_.row(m_) -= cb * T_.row(i);
    }
  }

  /// Runs simplex iterations. Returns false when the problem is unbounded.
  bool optimize(bool allow_artificial) {
    bool bland = false;
    long degenerate = 0;
    const long degenerate_limit = 5 * static_cast<long>(m_ + n_);
    for (;;) {
      const Eigen::Index e = entering(allow_artificial, bland);
      if (e < 0)
        return true;
      const Eigen::Index r = leaving(e);
      if (r < 0)
        return false;
      if (T_(r, n_) / T_(r, e) <= 1e-12) {
        if (++degenerate > degenerate_limit)
          bland = true;
      } else {
        degenerate = 0;
      }
      pivot(r, e);
    }
  }

  /// Pivots zero-level artificials out of the basis where possible. Rows whose
  /// structural part vanished are redundant and keep their artificial.
  void expel_artificials() {
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (!is_artificial(basis_[static_cast<std::size_t>(i)]))
        continue;
      Eigen::Index best = -1;
      double best_mag = LpTolerances::pivot;
      for (Eigen::Index j = 0; j < first_art_; ++j) {
        const double mag = std::abs(T_(i, j));
        if (mag > best_mag) {
          best_mag = mag;
          best = j;
        }
      }
      if (best >= 0)
        pivot(i, best);
    }
  }

private:
  Eigen::Index entering(bool allow_artificial, bool bland) const {
    const Eigen::Index limit = allow_artificial ? n_ : first_art_;
    Eigen::Index best = -1;
    double best_rc = -LpTolerances::reduced_cost;
    for (Eigen::Index j = 0; j < limit; ++j) {
      const double rc = T_(m_, j);
      if (rc < best_rc) {
        best = j;
        if (bland)
          return best;
        best_rc = rc;
      }
    }
    return best;
  }

  Eigen::Index leaving(Eigen::Index e) const {
    Eigen::Index best = -1;
    double best_ratio = kInf;
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double a = T_(i, e);
      if (a <= LpTolerances::pivot)
        continue;
      const double ratio = std::max(T_(i, n_), 0.0) / a;
      const double slack = 1e-12 * (1.0 + std::abs(best_ratio));
      if (best < 0 || ratio < best_ratio - slack) {
        best = i;
        best_ratio = ratio;
      } else if (ratio <= best_ratio + slack &&
                 basis_[static_cast<std::size_t>(i)] <
                     basis_[static_cast<std::size_t>(best)]) {
        best = i;
        best_ratio = std::min(ratio, best_ratio);
      }
    }
    return best;
  }

  void pivot(Eigen::Index r, Eigen::Index e) {
    if (++pivots_ > LpTolerances::max_pivots)
      throw IterationLimitError("solve_lp: pivot limit exceeded");
    T_.row(r) /= T_(r, e);
    for (Eigen::Index i = 0; i <= m_; ++i) {
      if (i == r)
        continue;
      const double f = T_(i, e);
      if (f != 0.0)
        T_.row(i) -= f * T_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = e;
  }

  Eigen::Index m_, n_, first_art_;
  std::vector<Eigen::Index> basis_;
  Matrix T_;
  long pivots_ = 0;
};

} // namespace detail

/// Solves a dense LP by the two-phase simplex method.
///
/// Deterministic for identical input. Throws IterationLimitError after 1e5
/// pivots, which indicates numerical trouble rather than a model property.
inline LpSolution solve_lp(const LpProblem &p) {
  using detail::ColumnMap;
  using detail::LpTolerances;
  using Index = Eigen::Index;
  p.validate();

  const Index n = p.num_vars();
  const double sense = p.sense == Sense::Minimize ? 1.0 : -1.0;
  const Vector c = sense * p.objective;
  const Index m_eq = p.eq_matrix.rows();
  const Index m_in = p.ineq_matrix.rows();

  LpSolution sol;
  for (Index j = 0; j < n; ++j)
    if (p.lower_bound(j) > p.upper_bound(j)) {
      sol.status = LpStatus::Infeasible;
      return sol;
    }

  // Column layout.
  std::vector<ColumnMap> vars(static_cast<std::size_t>(n));
  Index ncols = 0;
  Index n_upper_rows = 0;
  for (Index j = 0; j < n; ++j) {
    auto &v = vars[static_cast<std::size_t>(j)];
    const double lo = p.lower_bound(j), hi = p.upper_bound(j);
    v.pos = ncols++;
    if (std::isfinite(lo)) {
      v.shift = lo;
      if (std::isfinite(hi))
        v.upper_row = m_eq + m_in + n_upper_rows++;
    } else if (std::isfinite(hi)) {
      v.shift = hi;
      v.sign = -1.0;
    } else {
      v.neg = ncols++;
    }
  }
  const Index n_struct = ncols;
  const Index m = m_eq + m_in + n_upper_rows;

  // Structural rows in terms of the nonnegative columns.
  Matrix S = Matrix::Zero(m, n_struct);
  Vector rhs(m);
  Vector cost = Vector::Zero(n_struct);
  std::vector<bool> is_eq(static_cast<std::size_t>(m), false);
  auto map_row = [&](Index r, const auto &row, double b) {
    double shifted = b;
    for (Index j = 0; j < n; ++j) {
      const auto &v = vars[static_cast<std::size_t>(j)];
      const double a = row(j);
      S(r, v.pos) = v.sign * a;
      if (v.neg >= 0)
        S(r, v.neg) = -a;
      shifted -= a * v.shift;
    }
    rhs(r) = shifted;
  };
  for (Index i = 0; i < m_eq; ++i) {
    map_row(i, p.eq_matrix.row(i), p.eq_rhs(i));
    is_eq[static_cast<std::size_t>(i)] = true;
  }
  for (Index i = 0; i < m_in; ++i)
    map_row(m_eq + i, p.ineq_matrix.row(i), p.ineq_rhs(i));
  for (Index j = 0; j < n; ++j) {
    const auto &v = vars[static_cast<std::size_t>(j)];
    cost(v.pos) = v.sign * c(j);
    if (v.neg >= 0)
      cost(v.neg) = -c(j);
    if (v.upper_row >= 0) {
      S(v.upper_row, v.pos) = 1.0;
      rhs(v.upper_row) = p.upper_bound(j) - p.lower_bound(j);
    }
  }

  // Drop empty rows, orient the rest to a nonnegative right-hand side.
  std::vector<Index> kept;
  std::vector<double> flip(static_cast<std::size_t>(m), 1.0);
  for (Index i = 0; i < m; ++i) {
    if (S.row(i).cwiseAbs().maxCoeff() == 0.0) {
      const bool ok = is_eq[static_cast<std::size_t>(i)]
                          ? std::abs(rhs(i)) <= LpTolerances::empty_row
                          : rhs(i) >= -LpTolerances::empty_row;
      if (!ok) {
        sol.status = LpStatus::Infeasible;
        return sol;
      }
      continue;
    }
    if (rhs(i) < 0.0)
      flip[static_cast<std::size_t>(i)] = -1.0;
    kept.push_back(i);
  }
  const Index mk = static_cast<Index>(kept.size());

  Index n_slack = 0, n_art = 0;
  for (Index r : kept) {
    if (!is_eq[static_cast<std::size_t>(r)])
      ++n_slack;
    if (is_eq[static_cast<std::size_t>(r)] || flip[static_cast<std::size_t>(r)] < 0)
      ++n_art;
  }
  const Index first_art = n_struct + n_slack;
  const Index N = first_art + n_art;

  Matrix A = Matrix::Zero(mk, N);
  Vector b(mk);
  std::vector<Index> basis(static_cast<std::size_t>(mk));
  {
    Index slack = n_struct, art = first_art;
    for (Index k = 0; k < mk; ++k) {
      const Index r = kept[static_cast<std::size_t>(k)];
      const double f = flip[static_cast<std::size_t>(r)];
      A.row(k).head(n_struct) = f * S.row(r);
      b(k) = f * rhs(r);
      const bool eq = is_eq[static_cast<std::size_t>(r)];
      if (!eq) {
        A(k, slack) = f;
        if (f > 0)
          basis[static_cast<std::size_t>(k)] = slack;
        ++slack;
      }
      if (eq || f < 0) {
        A(k, art) = 1.0;
        basis[static_cast<std::size_t>(k)] = art++;
      }
    }
  }

  detail::Tableau tab(A, b, basis, first_art);
  if (n_art > 0) {
    Vector c1 = Vector::Zero(N);
    c1.tail(n_art).setOnes();
    tab.set_costs(c1);
    tab.optimize(true);
    if (tab.objective() > LpTolerances::phase_one) {
      sol.status = LpStatus::Infeasible;
      sol.pivots = tab.pivots();
      return sol;
    }
    tab.expel_artificials();
  }

  Vector c2 = Vector::Zero(N);
  c2.head(n_struct) = cost;
  tab.set_costs(c2);
  const bool bounded = tab.optimize(false);
  sol.pivots = tab.pivots();
  if (!bounded) {
    sol.status = LpStatus::Unbounded;
    return sol;
  }

  // Recover the basic solution and row duals from the original columns.
  const auto &final_basis = tab.basis();
  Matrix B(mk, mk);
  Vector cB(mk);
  for (Index k = 0; k < mk; ++k) {
    const Index col = final_basis[static_cast<std::size_t>(k)];
    B.col(k) = A.col(col);
    cB(k) = c2(col);
  }
  Vector xB(mk), y(mk);
  Eigen::PartialPivLU<Matrix> lu;
  bool refined = false;
  if (mk > 0) {
    lu.compute(B);
    const Matrix &U = lu.matrixLU();
    refined = true;
    for (Index k = 0; k < mk; ++k)
      if (std::abs(U(k, k)) < 1e-13)
        refined = false;
  }
  if (refined) {
    xB = lu.solve(b);
    y = lu.transpose().solve(cB);
  } else {
    for (Index k = 0; k < mk; ++k)
      xB(k) = tab.rhs(k);
    y = mk > 0 ? Vector(B.transpose().colPivHouseholderQr().solve(cB))
               : Vector(0);
  }

  Vector col_value = Vector::Zero(N);
  for (Index k = 0; k < mk; ++k)
    col_value(final_basis[static_cast<std::size_t>(k)]) = std::max(xB(k), 0.0);

  sol.x.resize(n);
  for (Index j = 0; j < n; ++j) {
    const auto &v = vars[static_cast<std::size_t>(j)];
    double xj = v.shift + v.sign * col_value(v.pos);
    if (v.neg >= 0)
      xj -= col_value(v.neg);
    sol.x(j) = xj;
  }

  // Row duals (minimization sense) for every standard-form row.
  Vector row_dual = Vector::Zero(m);
  for (Index k = 0; k < mk; ++k) {
    const Index r = kept[static_cast<std::size_t>(k)];
    row_dual(r) = flip[static_cast<std::size_t>(r)] * y(k);
  }
  Vector eq_dual = row_dual.head(m_eq);
  Vector in_dual = row_dual.segment(m_eq, m_in);

  Vector reduced = c;
  if (m_eq > 0)
    reduced -= p.eq_matrix.transpose() * eq_dual;
  if (m_in > 0)
    reduced -= p.ineq_matrix.transpose() * in_dual;

  sol.lower_dual = Vector::Zero(n);
  sol.upper_dual = Vector::Zero(n);
  for (Index j = 0; j < n; ++j) {
    const auto &v = vars[static_cast<std::size_t>(j)];
    const bool has_lo = std::isfinite(p.lower_bound(j));
    const bool has_hi = std::isfinite(p.upper_bound(j));
    if (has_lo && has_hi) {
      sol.upper_dual(j) = row_dual(v.upper_row);
      sol.lower_dual(j) = reduced(j) - sol.upper_dual(j);
    } else if (has_lo) {
      sol.lower_dual(j) = reduced(j);
    } else if (has_hi) {
      sol.upper_dual(j) = reduced(j);
    }
  }

  sol.eq_dual = sense * eq_dual;
  sol.ineq_dual = sense * in_dual;
  sol.lower_dual *= sense;
  sol.upper_dual *= sense;
  sol.objective_value = p.objective.dot(sol.x);
  sol.status = LpStatus::Optimal;
  return sol;
}

} // namespace flexidx

#endif // FLEXIDX_LP_HPP
