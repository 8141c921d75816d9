#pragma once

// Monotone LCP form of the QP optimality conditions and the residual terms
// r, w whose sum bounds the distance to the solution set.
//
//   M = [ H  -A'  A' ]     q = [  c ]     z = [ x  ]
//       [ A   0   0  ]         [ -b ]         [ y+ ]
//       [-A   0   0  ]         [  b ]         [ y- ]

#include <cmath>

#include "cpqp/linalg.hpp"
#include "cpqp/model.hpp"

namespace cpqp {

struct LcpInstance {
  Matrix M;
  Vector q;
};

inline LcpInstance lcp_embedding(const StandardQP& qp) {
  const auto n = qp.n();
  const auto m = qp.m();
  LcpInstance lcp;
  lcp.M = Matrix::Zero(n + 2 * m, n + 2 * m);
  lcp.M.block(0, 0, n, n) = qp.H;
  lcp.M.block(0, n, n, m) = -qp.A.transpose();
  lcp.M.block(0, n + m, n, m) = qp.A.transpose();
  lcp.M.block(n, 0, m, n) = qp.A;
  lcp.M.block(n + m, 0, m, n) = -qp.A;
  lcp.q.resize(n + 2 * m);
  lcp.q << qp.c, -qp.b, qp.b;
  return lcp;
}

/// v'Mv >= 0 for all v, checked on the symmetric part of M (M itself is not
/// symmetric).
inline bool lcp_is_monotone(const LcpInstance& lcp, double tol) {
  const Matrix sym = 0.5 * (lcp.M + lcp.M.transpose());
  return is_positive_semidefinite(sym, tol);
}

struct ResidualTerms {
  double r = 0.0;
  double w = 0.0;
};

/// r = ||min(x, s)||,  w = ||(-x, -s, x's)_+||.
inline ResidualTerms residual_terms_feasible(const Vector& x, const Vector& s) {
  detail::require(x.size() == s.size(), Errc::dimension_mismatch,
                  "residual_terms_feasible: length mismatch");
  ResidualTerms t;
  t.r = x.cwiseMin(s).norm();
  const double gap = std::max(x.dot(s), 0.0);
  t.w = std::sqrt((-x).cwiseMax(0.0).squaredNorm() + (-s).cwiseMax(0.0).squaredNorm() + gap * gap);
  return t;
}

/// Residual terms for an arbitrary (x, y), with s = c - A'y + Hx:
///   r = ||(min(x, s), min(y+, Ax - b), min(y-, b - Ax))||
///   w = ||(-s, b - Ax, Ax - b, -x, c'x - b'y + x'Hx)_+||
inline ResidualTerms residual_terms_general(const StandardQP& qp, const Vector& x,
                                            const Vector& y) {
  detail::require(x.size() == qp.n() && y.size() == qp.m(), Errc::dimension_mismatch,
                  "residual_terms_general: dimension mismatch");
  const Vector Hx = qp.H * x;
  const Vector s = qp.c - qp.A.transpose() * y + Hx;
  const Vector ypos = y.cwiseMax(0.0);
  const Vector yneg = (-y).cwiseMax(0.0);
  const Vector ax_b = qp.A * x - qp.b;

  ResidualTerms t;
  t.r = std::sqrt(x.cwiseMin(s).squaredNorm() + ypos.cwiseMin(ax_b).squaredNorm() +
                  yneg.cwiseMin(-ax_b).squaredNorm());
  const double gap = std::max(qp.c.dot(x) - qp.b.dot(y) + x.dot(Hx), 0.0);
  t.w = std::sqrt((-s).cwiseMax(0.0).squaredNorm() + (-ax_b).cwiseMax(0.0).squaredNorm() +
                  ax_b.cwiseMax(0.0).squaredNorm() + (-x).cwiseMax(0.0).squaredNorm() + gap * gap);
  return t;
}

}  // namespace cpqp
