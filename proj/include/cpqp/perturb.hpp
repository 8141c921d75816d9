#pragma once

// Constructions around a known solution (x*, y*, s*):
//  - perturbations that put (x*, s*) exactly on the perturbed central path,
//  - the band test for relaxed perturbations,
//  - a point of the perturbed problem that keeps the optimal active sets,
//    built from a minimal-norm least-squares correction.

#include <cmath>
#include <limits>

#include "cpqp/error.hpp"
#include "cpqp/index_set.hpp"
#include "cpqp/linalg.hpp"
#include "cpqp/model.hpp"

namespace cpqp {

/// Zero test used to split a solution into active and inactive parts.
inline constexpr double kPartitionTolerance = 1e-8;

namespace detail {

inline void check_complementary(const Vector& x, const Vector& s, double tol) {
  require(x.size() == s.size(), Errc::dimension_mismatch, "x and s lengths differ");
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    require(x(i) >= -tol && s(i) >= -tol, Errc::invalid_argument, "x*, s* must be nonnegative");
    if (std::min(x(i), s(i)) > tol)
      throw Error(Errc::not_complementary, "pair is not complementary");
  }
}

}  // namespace detail

/// lambda_i such that (x*_i + lambda_i)(s*_i + lambda_i) = mu_hat for every i.
inline Vector perfect_perturbation(const Vector& x_star, const Vector& s_star, double mu_hat) {
  detail::require(mu_hat > 0.0, Errc::invalid_argument, "perfect_perturbation: mu_hat must be > 0");
  detail::check_complementary(x_star, s_star, 1e-12);
  Vector lambda(x_star.size());
  for (Eigen::Index i = 0; i < x_star.size(); ++i) {
    const double t = x_star(i) + s_star(i);
    // Positive root of l^2 + t l - mu = 0, in the cancellation-free form.
    lambda(i) = 2.0 * mu_hat / (t + std::sqrt(t * t + 4.0 * mu_hat));
  }
  return lambda;
}

/// xi mu <= (x*_i + lambda_i)(s*_i + lambda_i) <= mu / xi with strictly
/// positive shifted variables.
inline bool relaxed_band_check(const Vector& x_star, const Vector& s_star, const Vector& lambda,
                               double mu_hat, double xi) {
  detail::require(xi > 0.0 && xi < 1.0, Errc::invalid_argument,
                  "relaxed_band_check: xi must lie in (0, 1)");
  detail::require(x_star.size() == s_star.size() && lambda.size() == x_star.size(),
                  Errc::dimension_mismatch, "relaxed_band_check: length mismatch");
  detail::require((lambda.array() > 0.0).all(), Errc::invalid_argument,
                  "relaxed_band_check: lambda must be > 0");
  const Eigen::ArrayXd p = (x_star + lambda).array();
  const Eigen::ArrayXd q = (s_star + lambda).array();
  if ((p <= 0.0).any() || (q <= 0.0).any()) return false;
  const Eigen::ArrayXd prod = p * q;
  return (prod >= xi * mu_hat).all() && (prod <= mu_hat / xi).all();
}

/// Primal/dual active and inactive sets of a solution.
struct SolutionSets {
  IndexSet active;        // x*_i = 0
  IndexSet inactive;      // x*_i > 0
  IndexSet dual_active;   // s*_i = 0
  IndexSet dual_inactive; // s*_i > 0
};

inline SolutionSets solution_sets(const Vector& x_star, const Vector& s_star,
                                  double tol = kPartitionTolerance) {
  detail::check_complementary(x_star, s_star, tol);
  const int n = static_cast<int>(x_star.size());
  SolutionSets sets;
  sets.inactive = select_indices(n, [&](int i) { return x_star(i) > tol; });
  sets.active = complement(sets.inactive, n);
  sets.dual_inactive = select_indices(n, [&](int i) { return s_star(i) > tol; });
  sets.dual_active = complement(sets.dual_inactive, n);
  return sets;
}

/// The least-squares system matrices of the preserving-point construction.
///
///   M = [ A_I          0      ]      W = [ A_A          0      ]
///       [ -H_{As,I}    A'_{As} ]          [ -H_{As,A}    I_{As} ]
struct PreservingSystem {
  SolutionSets sets;
  Matrix M;
  Matrix W;
};

inline PreservingSystem preserving_system(const StandardQP& qp, const Vector& x_star,
                                          const Vector& s_star) {
  PreservingSystem sys;
  sys.sets = solution_sets(x_star, s_star);
  const auto& I = sys.sets.inactive;
  const auto& Aset = sys.sets.active;
  const auto& As = sys.sets.dual_active;
  const auto m = qp.m();
  const auto ni = static_cast<Eigen::Index>(I.size());
  const auto na = static_cast<Eigen::Index>(Aset.size());
  const auto nas = static_cast<Eigen::Index>(As.size());
  const IndexSet all_rows = full_range(static_cast<int>(m));

  sys.M = Matrix::Zero(m + nas, ni + m);
  sys.M.topLeftCorner(m, ni) = qp.A(all_rows, I);
  sys.M.bottomLeftCorner(nas, ni) = -qp.H(As, I);
  sys.M.bottomRightCorner(nas, m) = qp.A(all_rows, As).transpose();

  sys.W = Matrix::Zero(m + nas, na + nas);
  sys.W.topLeftCorner(m, na) = qp.A(all_rows, Aset);
  sys.W.bottomLeftCorner(nas, na) = -qp.H(As, Aset);
  sys.W.bottomRightCorner(nas, nas).setIdentity();
  return sys;
}

struct PreservingPoint {
  Vector p_hat;
  Vector y_hat;
  Vector q_hat;
  Vector u_hat;
  Vector v_hat;
  double ls_residual = 0.0;
  double bound_2W_lambda = 0.0;    // 2 ||W|| ||lambda||
  double feasibility_error = 0.0;  // max(||A p - b_l||, ||A'y + q - H p - c_l||)
  bool preserved = false;          // p_I > 0 and q_S > 0
  SolutionSets sets;

  /// Tripartition read off the point with thresholds at -lambda.
  Tripartition tripartition() const {
    const int n = static_cast<int>(p_hat.size());
    Tripartition t;
    t.I = select_indices(n, [&](int i) { return p_hat(i) > 0.0; });
    t.S = select_indices(n, [&](int i) { return q_hat(i) > 0.0; });
    t.T = complement(set_union(t.I, t.S), n);
    return t;
  }
};

/// Builds (p, y, q) for the problem shifted by lambda whose active sets match
/// those of the solution (x*, y*, s*) whenever ||lambda|| is small enough.
inline PreservingPoint preserving_point(const StandardQP& qp, const Vector& x_star,
                                        const Vector& y_star, const Vector& s_star,
                                        const Vector& lambda) {
  const auto n = qp.n();
  detail::require(x_star.size() == n && s_star.size() == n && y_star.size() == qp.m() &&
                      lambda.size() == n,
                  Errc::dimension_mismatch, "preserving_point: dimension mismatch");
  detail::require((lambda.array() >= 0.0).all(), Errc::invalid_argument,
                  "preserving_point: lambda must be nonnegative");

  const PreservingSystem sys = preserving_system(qp, x_star, s_star);
  const auto& I = sys.sets.inactive;
  const auto& Aset = sys.sets.active;
  const auto& As = sys.sets.dual_active;
  const auto& S = sys.sets.dual_inactive;
  const auto m = qp.m();
  const auto ni = static_cast<Eigen::Index>(I.size());
  const IndexSet all_rows = full_range(static_cast<int>(m));

  Vector lam_stack(Aset.size() + As.size());
  lam_stack << lambda(Aset), lambda(As);
  const Vector rhs = sys.W * lam_stack;

  PreservingPoint out;
  out.sets = sys.sets;
  Vector uv;
  if (sys.M.cols() == 0) {
    uv = Vector::Zero(0);
    out.ls_residual = rhs.norm();
  } else if (rhs.isZero(0.0)) {
    uv = Vector::Zero(sys.M.cols());
    out.ls_residual = 0.0;
  } else {
    const LeastSquaresSolution ls = least_squares_min_norm(sys.M, rhs);
    uv = ls.solution;
    out.ls_residual = ls.residual_norm;
  }
  out.u_hat = uv.head(ni);
  out.v_hat = uv.tail(m);

  out.p_hat = Vector::Zero(n);
  out.p_hat(I) = x_star(I) + lambda(I) + out.u_hat;
  out.y_hat = y_star + out.v_hat;
  out.q_hat = Vector::Zero(n);
  if (!S.empty()) {
    out.q_hat(S) = s_star(S) + lambda(S) - qp.H(S, Aset) * lambda(Aset) -
                   qp.A(all_rows, S).transpose() * out.v_hat + qp.H(S, I) * out.u_hat;
  }

  const StandardQP shifted = shifted_problem(qp, lambda);
  const double primal = (qp.A * out.p_hat - shifted.b).norm();
  const double dual =
      (qp.A.transpose() * out.y_hat + out.q_hat - qp.H * out.p_hat - shifted.c).norm();
  out.feasibility_error = std::max(primal, dual);
  out.bound_2W_lambda = 2.0 * spectral_norm(sys.W) * lambda.norm();

  bool ok = true;
  for (int i : I) ok = ok && out.p_hat(i) > 0.0;
  for (int i : S) ok = ok && out.q_hat(i) > 0.0;
  out.preserved = ok;
  return out;
}

/// Size of perturbation below which preserving_point keeps the active sets:
///
///   min( m0 / (2 ||M+W||),  m0 / (||H_SA|| + 2 (||A'_S|| + ||H_SI||) ||M+W||) )
///
/// with m0 the smallest entry of x*_I and s*_S. Returns +inf when I and S are
/// both empty or a denominator vanishes.
inline double lambda_hat_threshold(const StandardQP& qp, const Vector& x_star,
                                   const Vector& s_star) {
  const PreservingSystem sys = preserving_system(qp, x_star, s_star);
  const auto& I = sys.sets.inactive;
  const auto& S = sys.sets.dual_inactive;
  const auto& Aset = sys.sets.active;
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (I.empty() && S.empty()) return inf;

  double m0 = inf;
  for (int i : I) m0 = std::min(m0, x_star(i));
  for (int i : S) m0 = std::min(m0, s_star(i));

  const double mpw = sys.M.cols() == 0 || sys.W.cols() == 0
                         ? 0.0
                         : spectral_norm(pseudo_inverse(sys.M) * sys.W);
  const IndexSet all_rows = full_range(static_cast<int>(qp.m()));
  const double h_sa = spectral_norm(qp.H(S, Aset));
  const double a_s = spectral_norm(qp.A(all_rows, S));
  const double h_si = spectral_norm(qp.H(S, I));

  const double d1 = 2.0 * mpw;
  const double d2 = h_sa + 2.0 * (a_s + h_si) * mpw;
  const double t1 = d1 > 0.0 ? m0 / d1 : inf;
  const double t2 = d2 > 0.0 ? m0 / d2 : inf;
  return std::min(t1, t2);
}

}  // namespace cpqp
