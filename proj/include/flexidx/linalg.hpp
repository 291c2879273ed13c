#ifndef FLEXIDX_LINALG_HPP
#define FLEXIDX_LINALG_HPP

// Dense kernels shared by the solvers. Storage and factorizations come from
// Eigen; this header pins the tolerances and error semantics the rest of the
// library relies on.

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "flexidx/errors.hpp"

namespace flexidx {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace tol {
inline constexpr double cholesky_pivot = 1e-13;  // relative to max diagonal
inline constexpr double lu_pivot = 1e-12;        // relative to max |entry|
inline constexpr double rank = 1e-10;            // relative row-rank threshold
inline constexpr double symmetry = 1e-12;        // relative max |A - A^T|
} // namespace tol

/// Lower-triangular factor L with A = L L^T.
struct CholeskyFactor {
  Matrix L;

  [[nodiscard]] Eigen::Index dim() const { return L.rows(); }

  /// Solves L y = b.
  [[nodiscard]] Vector solve_lower(const Vector &b) const {
    return L.triangularView<Eigen::Lower>().solve(b);
  }
  /// Solves L^T x = b.
  [[nodiscard]] Vector solve_upper(const Vector &b) const {
    return L.transpose().triangularView<Eigen::Upper>().solve(b);
  }
  /// x^T A^{-1} x, evaluated as |L^{-1} x|^2.
  [[nodiscard]] double inverse_quadratic(const Vector &x) const {
    return solve_lower(x).squaredNorm();
  }
  [[nodiscard]] Matrix reconstruct() const { return L * L.transpose(); }
};

/// Shape and entry-wise equality (Eigen's operator== asserts equal shapes).
template <typename A, typename B>
bool same_entries(const Eigen::MatrixBase<A> &a, const Eigen::MatrixBase<B> &b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

/// Max |A_ij - A_ji| relative to max |A_ij| (0 for the zero matrix).
inline double asymmetry(const Matrix &A) {
  if (A.rows() != A.cols())
    throw DimensionError("asymmetry: matrix is not square");
  const double scale = A.cwiseAbs().maxCoeff();
  if (scale == 0.0)
    return 0.0;
  return (A - A.transpose()).cwiseAbs().maxCoeff() / scale;
}

/// Cholesky factorization of a symmetric matrix.
///
/// Fails with NotSPDError when a pivot L_ii^2 is at or below 1e-13 times the
/// largest diagonal entry of A, which also covers indefinite input.
inline CholeskyFactor cholesky(const Matrix &A) {
  if (A.rows() != A.cols() || A.rows() == 0)
    throw DimensionError("cholesky: matrix must be square and non-empty");
  if (!A.allFinite())
    throw NotSPDError("cholesky: matrix has non-finite entries");
  if (asymmetry(A) > tol::symmetry)
    throw NotSPDError("cholesky: matrix is not symmetric");

  const Matrix S = 0.5 * (A + A.transpose());
  const double max_diag = S.diagonal().maxCoeff();
  if (!(max_diag > 0.0))
    throw NotSPDError("cholesky: diagonal has no positive entry");

  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success)
    throw NotSPDError("cholesky: matrix is not positive definite");
  Matrix L = llt.matrixL();
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    const double pivot = L(i, i) * L(i, i);
    if (!(pivot > tol::cholesky_pivot * max_diag))
      throw NotSPDError("cholesky: pivot " + std::to_string(i) +
                        " is not positive");
  }
  return CholeskyFactor{std::move(L)};
}

/// Solves A x = b by LU with partial pivoting.
inline Vector solve_linear(const Matrix &A, const Vector &b) {
  if (A.rows() != A.cols())
    throw DimensionError("solve_linear: matrix is not square");
  if (A.rows() != b.size())
    throw DimensionError("solve_linear: right-hand side has wrong length");
  if (A.rows() == 0)
    return Vector(0);

  const double scale = A.cwiseAbs().maxCoeff();
  if (scale == 0.0)
    throw SingularError("solve_linear: zero matrix");
  Eigen::PartialPivLU<Matrix> lu(A);
  const Matrix &U = lu.matrixLU();
  for (Eigen::Index i = 0; i < U.rows(); ++i)
    if (std::abs(U(i, i)) < tol::lu_pivot * scale)
      throw SingularError("solve_linear: matrix is singular");
  return lu.solve(b);
}

/// Numerical row rank via full-pivot LU with relative threshold `tolerance`.
inline Eigen::Index row_rank(const Matrix &A, double tolerance = tol::rank) {
  if (A.rows() == 0 || A.cols() == 0)
    return 0;
  if (A.cwiseAbs().maxCoeff() == 0.0)
    return 0;
  Eigen::FullPivLU<Matrix> lu(A);
  lu.setThreshold(tolerance);
  return lu.rank();
}

/// argmin x^T W x subject to A x = b, where W = L L^T.
///
/// Whitening u = L^T x turns the objective into |u|^2, so the answer is the
/// least-norm solution of (A L^{-T}) u = b mapped back through L^{-T}.
inline Vector least_norm(const Matrix &A, const Vector &b,
                         const CholeskyFactor &W) {
  if (A.rows() != b.size())
    throw DimensionError("least_norm: right-hand side has wrong length");
  if (A.cols() != W.dim())
    throw DimensionError("least_norm: weight dimension mismatch");
  if (A.rows() > A.cols())
    throw DimensionError("least_norm: more rows than columns");

  // B = A L^{-T}, i.e. B^T = L^{-1} A^T.
  const Matrix Bt = W.L.triangularView<Eigen::Lower>().solve(A.transpose());
  const Matrix B = Bt.transpose();
  if (row_rank(B, tol::rank) < B.rows())
    throw RankDeficientError("least_norm: constraint rows are dependent");

  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(B);
  const Vector u = cod.solve(b);
  return W.solve_upper(u);
}

} // namespace flexidx

#endif // FLEXIDX_LINALG_HPP
