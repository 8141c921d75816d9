#pragma once

// Dense kernels shared by the solver, the perturbation constructions and the
// active-set crossover. Everything here is a pure function of its arguments.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>

#include "cpqp/error.hpp"

namespace cpqp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline bool all_finite(const Eigen::Ref<const Matrix>& M) { return M.allFinite(); }

struct LeastSquaresSolution {
  Vector solution;
  double residual_norm = 0.0;
  Eigen::Index rank = 0;
};

/// Minimum-norm minimizer of ||M u - rhs|| via a complete orthogonal
/// decomposition. Columns whose pivots fall below 1e-12 * ||M|| are treated
/// as rank deficient.
inline LeastSquaresSolution least_squares_min_norm(const Matrix& M, const Vector& rhs) {
  detail::require(M.rows() > 0 && M.cols() > 0, Errc::dimension_mismatch,
                  "least_squares_min_norm: empty matrix");
  detail::require(rhs.size() == M.rows(), Errc::dimension_mismatch,
                  "least_squares_min_norm: rhs length must equal M.rows");
  detail::require(M.allFinite() && rhs.allFinite(), Errc::non_finite,
                  "least_squares_min_norm: non-finite input");

  Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
  cod.setThreshold(1e-12);
  cod.compute(M);
  LeastSquaresSolution out;
  out.solution = cod.solve(rhs);
  out.residual_norm = (M * out.solution - rhs).norm();
  out.rank = cod.rank();
  return out;
}

/// Moore-Penrose pseudo-inverse with the same rank rule as least_squares_min_norm.
inline Matrix pseudo_inverse(const Matrix& M) {
  if (M.rows() == 0 || M.cols() == 0) return Matrix::Zero(M.cols(), M.rows());
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
  cod.setThreshold(1e-12);
  cod.compute(M);
  return cod.pseudoInverse();
}

inline bool is_symmetric(const Matrix& M, double tol) {
  if (M.rows() != M.cols()) return false;
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  return (M - M.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

namespace detail {

// Bunch-Kaufman LDL^T through LAPACK. Returns false on an exactly singular
// pivot block or a non-finite result.
inline bool sytrf_solve(Matrix K, const Vector& rhs, Vector& out) {
  const auto n = static_cast<lapack_int>(K.rows());
  std::vector<lapack_int> ipiv(static_cast<std::size_t>(n));
  lapack_int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', n, K.data(), n, ipiv.data());
  if (info != 0) return false;
  out = rhs;
  info = LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', n, 1, K.data(), n, ipiv.data(), out.data(), n);
  return info == 0 && out.allFinite();
}

}  // namespace detail

/// Solves K v = rhs for symmetric (possibly indefinite) K.
///
/// Uses a pivoted symmetric factorization. On breakdown the nonzero diagonal
/// entries are pushed away from zero by 1e-10 * (1 + max|K_ii|), keeping their
/// sign, and the factorization is retried once.
inline Vector solve_symmetric_indefinite(const Matrix& K, const Vector& rhs) {
  detail::require(K.rows() == K.cols() && K.rows() > 0, Errc::dimension_mismatch,
                  "solve_symmetric_indefinite: K must be square and nonempty");
  detail::require(rhs.size() == K.rows(), Errc::dimension_mismatch,
                  "solve_symmetric_indefinite: rhs length mismatch");
  detail::require(K.allFinite() && rhs.allFinite(), Errc::non_finite,
                  "solve_symmetric_indefinite: non-finite input");
  detail::require(is_symmetric(K, 1e-10), Errc::invalid_argument,
                  "solve_symmetric_indefinite: K is not symmetric");

  Vector v;
  const Matrix* factored = &K;
  Matrix regularized;
  if (!detail::sytrf_solve(K, rhs, v)) {
    const double delta = 1e-10 * (1.0 + K.diagonal().cwiseAbs().maxCoeff());
    regularized = K;
    for (Eigen::Index i = 0; i < K.rows(); ++i) {
      const double d = regularized(i, i);
      if (d > 0.0) regularized(i, i) += delta;
      else if (d < 0.0) regularized(i, i) -= delta;
    }
    if (!detail::sytrf_solve(regularized, rhs, v))
      throw Error(Errc::singular, "solve_symmetric_indefinite: singular to working precision");
    factored = &regularized;
  }

  // Refinement against the unregularized matrix.
  for (int round = 0; round < 2; ++round) {
    const Vector r = rhs - K * v;
    if (r.norm() <= 1e-14 * (1.0 + rhs.norm())) break;
    Vector correction;
    if (!detail::sytrf_solve(*factored, r, correction)) break;
    v += correction;
  }
  return v;
}

/// True iff the smallest eigenvalue of the symmetric matrix M is >= -tol.
inline bool is_positive_semidefinite(const Matrix& M, double tol) {
  detail::require(M.rows() == M.cols(), Errc::dimension_mismatch,
                  "is_positive_semidefinite: matrix must be square");
  detail::require(M.allFinite(), Errc::non_finite, "is_positive_semidefinite: non-finite input");
  detail::require(is_symmetric(M, 1e-10), Errc::invalid_argument,
                  "is_positive_semidefinite: matrix is not symmetric");
  if (M.rows() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(M, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -tol;
}

/// Largest singular value. Matrices with a zero dimension have norm 0.
inline double spectral_norm(const Matrix& M) {
  detail::require(M.allFinite(), Errc::non_finite, "spectral_norm: non-finite input");
  if (M.rows() == 0 || M.cols() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()(0);
}

/// Numerical row rank using column-pivoted QR on the transpose.
inline Eigen::Index row_rank(const Matrix& A, double relative_tol) {
  if (A.rows() == 0 || A.cols() == 0) return 0;
  Eigen::ColPivHouseholderQR<Matrix> qr(A.transpose());
  qr.setThreshold(relative_tol);
  return qr.rank();
}

}  // namespace cpqp
