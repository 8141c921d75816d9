#pragma once

// Problem and iterate types for
//
//   min  c'x + 1/2 x'Hx   s.t.  Ax = b,  x >= 0,
//
// together with the perturbed view in which the bounds are relaxed to
// x >= -lambda and s >= -phi.

#include <cmath>
#include <string>
#include <utility>

#include "cpqp/error.hpp"
#include "cpqp/index_set.hpp"
#include "cpqp/linalg.hpp"

namespace cpqp {

/// Default zero threshold for set membership of computed solutions.
inline constexpr double kZeroTolerance = 1e-5;

struct StandardQP {
  Matrix H;  // n x n, symmetric positive semidefinite
  Matrix A;  // m x n, full row rank
  Vector b;  // m
  Vector c;  // n
  std::string name;

  Eigen::Index n() const { return c.size(); }
  Eigen::Index m() const { return b.size(); }

  double objective(const Vector& x) const { return c.dot(x) + 0.5 * x.dot(H * x); }
};

struct Iterate {
  Vector x;
  Vector y;
  Vector s;
};

/// Primal (lambda) and dual (phi) bound relaxations, both componentwise >= 0.
struct Perturbation {
  Vector lambda;
  Vector phi;

  static Perturbation zero(Eigen::Index n) { return {Vector::Zero(n), Vector::Zero(n)}; }
  static Perturbation uniform(Eigen::Index n, double eps) {
    return {Vector::Constant(n, eps), Vector::Constant(n, eps)};
  }
  bool is_zero() const {
    return (lambda.array() == 0.0).all() && (phi.array() == 0.0).all();
  }
};

/// (S, I, T): dual-inactive, primal-inactive, and the common-zero remainder.
struct Tripartition {
  IndexSet S;
  IndexSet I;
  IndexSet T;

  friend bool operator==(const Tripartition&, const Tripartition&) = default;
};

struct KktResiduals {
  Vector primal;           // Ax - b
  Vector dual;             // A'y + s - Hx - c
  Vector complementarity;  // (x + lambda) .* (s + phi)
};

namespace detail {

inline void check_dims(const StandardQP& qp, const Iterate& it) {
  require(it.x.size() == qp.n() && it.s.size() == qp.n() && it.y.size() == qp.m(),
          Errc::dimension_mismatch, "iterate dimensions do not match the problem");
}

inline void check_dims(const Iterate& it, const Perturbation& pert) {
  require(pert.lambda.size() == it.x.size() && pert.phi.size() == it.s.size(),
          Errc::dimension_mismatch, "perturbation dimensions do not match the iterate");
}

}  // namespace detail

/// Checks the structural invariants of a standard-form problem: shapes,
/// finiteness, symmetry and semidefiniteness of H, m <= n and full row rank
/// of A (rank tolerance 1e-10 relative).
inline void validate(const StandardQP& qp) {
  const auto n = qp.n();
  const auto m = qp.m();
  detail::require(qp.H.rows() == n && qp.H.cols() == n, Errc::dimension_mismatch,
                  "StandardQP: H must be n x n");
  detail::require(qp.A.rows() == m && qp.A.cols() == n, Errc::dimension_mismatch,
                  "StandardQP: A must be m x n");
  detail::require(qp.H.allFinite() && qp.A.allFinite() && qp.b.allFinite() && qp.c.allFinite(),
                  Errc::non_finite, "StandardQP: non-finite data");
  detail::require(m <= n, Errc::invalid_argument, "StandardQP: requires m <= n");
  detail::require(is_symmetric(qp.H, 1e-10), Errc::invalid_argument,
                  "StandardQP: H is not symmetric");
  detail::require(is_positive_semidefinite(qp.H, 1e-8), Errc::invalid_argument,
                  "StandardQP: H is not positive semidefinite");
  detail::require(row_rank(qp.A, 1e-10) == m, Errc::rank_deficient,
                  "StandardQP: A does not have full row rank");
}

inline KktResiduals kkt_residuals(const StandardQP& qp, const Iterate& it, const Perturbation& pert) {
  detail::check_dims(qp, it);
  detail::check_dims(it, pert);
  KktResiduals r;
  r.primal = qp.A * it.x - qp.b;
  r.dual = qp.A.transpose() * it.y + it.s - qp.H * it.x - qp.c;
  r.complementarity = ((it.x + pert.lambda).array() * (it.s + pert.phi).array()).matrix();
  return r;
}

/// The problem seen by the shifted variables p = x + lambda:
/// b + A lambda and c + (I - H) lambda; H and A are unchanged.
inline StandardQP shifted_problem(const StandardQP& qp, const Vector& lambda) {
  detail::require(lambda.size() == qp.n(), Errc::dimension_mismatch,
                  "shifted_problem: lambda length mismatch");
  detail::require((lambda.array() >= 0.0).all(), Errc::invalid_argument,
                  "shifted_problem: lambda must be nonnegative");
  StandardQP out = qp;
  if ((lambda.array() == 0.0).all()) return out;
  out.b = qp.b + qp.A * lambda;
  out.c = qp.c + lambda - qp.H * lambda;
  return out;
}

/// (x + lambda)'(s + phi) / n.
inline double mu_lambda(const Iterate& it, const Perturbation& pert) {
  detail::check_dims(it, pert);
  detail::require(it.x.size() >= 1, Errc::dimension_mismatch, "mu_lambda: n must be >= 1");
  return (it.x + pert.lambda).dot(it.s + pert.phi) / static_cast<double>(it.x.size());
}

inline double relative_residual(const StandardQP& qp, const Iterate& it, const Perturbation& pert) {
  const KktResiduals r = kkt_residuals(qp, it, pert);
  double num = 0.0;
  if (r.primal.size() > 0) num = std::max(num, r.primal.cwiseAbs().maxCoeff());
  if (r.dual.size() > 0) num = std::max(num, r.dual.cwiseAbs().maxCoeff());
  if (r.complementarity.size() > 0) num = std::max(num, r.complementarity.cwiseAbs().maxCoeff());
  const double bn = qp.b.size() > 0 ? qp.b.cwiseAbs().maxCoeff() : 0.0;
  const double cn = qp.c.size() > 0 ? qp.c.cwiseAbs().maxCoeff() : 0.0;
  return num / (1.0 + std::max(bn, cn));
}

/// Membership in the symmetric neighbourhood of the perturbed central path:
/// every product (x_i + lambda_i)(s_i + phi_i) lies in [gamma mu, mu / gamma]
/// and the equality residuals vanish to 1e-8 relative.
inline bool in_symmetric_neighbourhood(const StandardQP& qp, const Iterate& it,
                                       const Perturbation& pert, double gamma) {
  detail::require(gamma > 0.0 && gamma < 1.0, Errc::invalid_argument,
                  "in_symmetric_neighbourhood: gamma must lie in (0, 1)");
  const KktResiduals r = kkt_residuals(qp, it, pert);
  if (((it.x + pert.lambda).array() <= 0.0).any() || ((it.s + pert.phi).array() <= 0.0).any())
    return false;
  const double bn = qp.b.size() > 0 ? qp.b.cwiseAbs().maxCoeff() : 0.0;
  const double cn = qp.c.size() > 0 ? qp.c.cwiseAbs().maxCoeff() : 0.0;
  const double feas_tol = 1e-8 * (1.0 + std::max(bn, cn));
  if (r.primal.size() > 0 && r.primal.cwiseAbs().maxCoeff() > feas_tol) return false;
  if (r.dual.size() > 0 && r.dual.cwiseAbs().maxCoeff() > feas_tol) return false;

  const double mu = mu_lambda(it, pert);
  const auto& prod = r.complementarity.array();
  return (prod >= gamma * mu).all() && (prod <= mu / gamma).all();
}

/// Optimal tripartition of a complementary pair at tolerance tol.
inline Tripartition optimal_partition(const Vector& x_star, const Vector& s_star, double tol) {
  detail::require(x_star.size() == s_star.size(), Errc::dimension_mismatch,
                  "optimal_partition: x and s lengths differ");
  detail::require((x_star.array() >= -tol).all() && (s_star.array() >= -tol).all(),
                  Errc::invalid_argument, "optimal_partition: x*, s* must be >= -tol");
  const int n = static_cast<int>(x_star.size());
  Tripartition t;
  t.I = select_indices(n, [&](int i) { return x_star(i) > tol; });
  t.S = select_indices(n, [&](int i) { return s_star(i) > tol; });
  if (!set_intersection(t.I, t.S).empty())
    throw Error(Errc::not_complementary, "optimal_partition: I and S overlap");
  t.T = complement(set_union(t.I, t.S), n);
  return t;
}

/// sqrt(n / gamma) + n.
inline double c2_constant(int n, double gamma) {
  detail::require(n >= 1, Errc::invalid_argument, "c2_constant: n must be >= 1");
  detail::require(gamma > 0.0 && gamma < 1.0, Errc::invalid_argument,
                  "c2_constant: gamma must lie in (0, 1)");
  return std::sqrt(static_cast<double>(n) / gamma) + n;
}

}  // namespace cpqp
