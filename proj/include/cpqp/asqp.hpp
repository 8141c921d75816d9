#pragma once

// Crossover: reduce the problem to the variables not predicted active, solve
// the reduced problem with a primal active-set method, and score the result
// against a reference optimum.
//
// The active-set method works on min c'x + 1/2 x'Hx, Ax = b, x >= 0 with the
// working set W = variables fixed at zero. Each iteration minimizes over the
// free variables F in the null space of A_F (kept full row rank), steps to the
// first blocking bound, or, at a subspace minimizer, releases the variable
// with the most negative bound multiplier (lowest index on ties).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "cpqp/error.hpp"
#include "cpqp/index_set.hpp"
#include "cpqp/linalg.hpp"
#include "cpqp/model.hpp"

namespace cpqp {

enum class ActiveSetStatus { optimal, infeasible, unbounded, cycle_limit };

inline const char* to_string(ActiveSetStatus s) {
  switch (s) {
    case ActiveSetStatus::optimal: return "optimal";
    case ActiveSetStatus::infeasible: return "infeasible";
    case ActiveSetStatus::unbounded: return "unbounded";
    case ActiveSetStatus::cycle_limit: return "cycle-limit";
  }
  return "unknown";
}

struct ActiveSetOptions {
  double multiplier_tolerance = 1e-9;   // relative to 1 + ||Hx + c||_inf
  double feasibility_tolerance = 1e-9;  // relative to 1 + ||b||_inf
  int cycle_limit_factor = 10;          // working-set changes per phase <= factor * size
  double start_zero_tolerance = 1e-9;   // warm-start entries below this (relative) start fixed
};

struct ActiveSetResult {
  Vector x;
  Vector y;  // equality multipliers
  Vector z;  // bound multipliers, z = Hx + c - A'y
  int iterations = 0;  // working-set changes, both phases
  int phase1_iterations = 0;
  bool warm_started = false;
  ActiveSetStatus status = ActiveSetStatus::optimal;
};

namespace detail {

enum class CoreOutcome { optimal, unbounded, limit, degenerate_basis };

struct CoreResult {
  CoreOutcome outcome = CoreOutcome::optimal;
  int changes = 0;
  Vector y;
};

inline IndexSet indices_of(const std::vector<char>& mask, bool value) {
  IndexSet out;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (static_cast<bool>(mask[i]) == value) out.push_back(static_cast<int>(i));
  return out;
}

/// Primal active-set iterations from a feasible x whose free set has A_F of
/// full row rank. H may be null (linear objective).
inline CoreResult primal_active_set(const Matrix* H, const Vector& c, const Matrix& A, Vector& x,
                                    std::vector<char>& is_free, int limit,
                                    const ActiveSetOptions& opts) {
  const auto m = A.rows();
  const IndexSet all_rows = full_range(static_cast<int>(m));
  CoreResult res;
  bool at_minimizer = false;

  while (true) {
    const IndexSet F = indices_of(is_free, true);
    const auto nf = static_cast<Eigen::Index>(F.size());
    const Vector g = H ? Vector(*H * x + c) : c;
    const Vector gF = g(F);

    Eigen::HouseholderQR<Matrix> qr;
    Matrix R;
    if (m > 0) {
      if (nf < m) {
        res.outcome = CoreOutcome::degenerate_basis;
        return res;
      }
      qr.compute(A(all_rows, F).transpose());
      R = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
      const double rmax = R.diagonal().cwiseAbs().maxCoeff();
      if (R.diagonal().cwiseAbs().minCoeff() <= 1e-13 * std::max(rmax, 1.0)) {
        res.outcome = CoreOutcome::degenerate_basis;
        return res;
      }
    }

    if (!at_minimizer) {
      const Eigen::Index k = nf - m;
      Vector pF = Vector::Zero(nf);
      bool newton = true;
      if (k > 0) {
        Matrix Z;
        if (m > 0) {
          Matrix E = Matrix::Zero(nf, k);
          E.bottomRows(k).setIdentity();
          Z = qr.householderQ() * E;
        } else {
          Z = Matrix::Identity(nf, k);
        }
        const Vector gz = Z.transpose() * gF;
        Vector pz;
        bool solved = false;
        if (H) {
          const Matrix Hz = Z.transpose() * ((*H)(F, F) * Z);
          Eigen::LLT<Matrix> llt(Hz);
          if (llt.info() == Eigen::Success) {
            const Vector d = Eigen::Matrix<double, Eigen::Dynamic, 1>(llt.matrixL().toDenseMatrix().diagonal());
            const double dmin = d.cwiseAbs().minCoeff();
            const double dmax = d.cwiseAbs().maxCoeff();
            if (dmin * dmin > 1e-12 * dmax * dmax) {
              pz = -llt.solve(gz);
              solved = true;
            }
          }
          if (!solved) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(Hz);
            const Vector& vals = es.eigenvalues();
            const Matrix& V = es.eigenvectors();
            const double thresh = 1e-10 * std::max(1.0, vals.cwiseAbs().maxCoeff());
            Vector coef = V.transpose() * gz;
            Vector null_part = Vector::Zero(k);
            for (Eigen::Index j = 0; j < k; ++j)
              if (vals(j) <= thresh) null_part += coef(j) * V.col(j);
            if (null_part.norm() > 1e-13 * (1.0 + g.cwiseAbs().maxCoeff())) {
              pz = -null_part;
              newton = false;
            } else {
              pz = Vector::Zero(k);
              for (Eigen::Index j = 0; j < k; ++j)
                if (vals(j) > thresh) pz -= (coef(j) / vals(j)) * V.col(j);
            }
            solved = true;
          }
        } else {
          if (gz.norm() > 1e-13 * (1.0 + g.cwiseAbs().maxCoeff())) {
            pz = -gz;
            newton = false;
          } else {
            pz = Vector::Zero(k);
          }
        }
        pF = Z * pz;
      }

      const double pinf = pF.size() > 0 ? pF.cwiseAbs().maxCoeff() : 0.0;
      const double xinf = x.size() > 0 ? x.cwiseAbs().maxCoeff() : 0.0;
      if (newton && pinf <= 1e-14 * (1.0 + xinf)) {
        at_minimizer = true;
      } else {
        double alpha = newton ? 1.0 : std::numeric_limits<double>::infinity();
        int block = -1;
        for (Eigen::Index j = 0; j < nf; ++j) {
          if (pF(j) < -1e-14 * pinf) {
            const int i = F[static_cast<std::size_t>(j)];
            const double a = std::max(0.0, -x(i) / pF(j));
            if (a < alpha) {
              alpha = a;
              block = i;
            }
          }
        }
        if (block < 0 && !newton) {
          res.outcome = CoreOutcome::unbounded;
          return res;
        }
        for (Eigen::Index j = 0; j < nf; ++j) x(F[static_cast<std::size_t>(j)]) += alpha * pF(j);
        if (block >= 0) {
          x(block) = 0.0;
          is_free[static_cast<std::size_t>(block)] = 0;
          ++res.changes;
          at_minimizer = false;
          if (res.changes > limit) {
            res.outcome = CoreOutcome::limit;
            return res;
          }
        } else {
          at_minimizer = true;
        }
        continue;
      }
    }

    // Subspace minimizer: price the fixed variables.
    Vector y = Vector::Zero(m);
    if (m > 0) {
      const Vector qtg = qr.householderQ().transpose() * gF;
      y = R.triangularView<Eigen::Upper>().solve(qtg.head(m));
    }
    const double mult_tol = opts.multiplier_tolerance * (1.0 + g.cwiseAbs().maxCoeff());
    int enter = -1;
    double most_negative = -mult_tol;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (is_free[static_cast<std::size_t>(i)]) continue;
      const double zi = g(i) - A.col(i).dot(y);
      if (zi < most_negative) {
        most_negative = zi;
        enter = static_cast<int>(i);
      }
    }
    if (enter < 0) {
      res.outcome = CoreOutcome::optimal;
      res.y = y;
      return res;
    }
    is_free[static_cast<std::size_t>(enter)] = 1;
    ++res.changes;
    at_minimizer = false;
    if (res.changes > limit) {
      res.outcome = CoreOutcome::limit;
      return res;
    }
  }
}

/// Grows the free set with zero-valued columns until A_F has full row rank.
/// Returns false if A itself is rank deficient.
inline bool complete_free_set(const Matrix& A, std::vector<char>& is_free) {
  const auto m = A.rows();
  if (m == 0) return true;
  const IndexSet all_rows = full_range(static_cast<int>(m));
  const IndexSet F = indices_of(is_free, true);
  const IndexSet rest = indices_of(is_free, false);
  Matrix basis(m, 0);
  Eigen::Index r = 0;
  if (!F.empty()) {
    Eigen::ColPivHouseholderQR<Matrix> qr(A(all_rows, F));
    qr.setThreshold(1e-10);
    r = qr.rank();
    if (r == m) return true;
    basis = (qr.householderQ() * Matrix::Identity(m, m)).leftCols(r);
  }
  if (rest.empty()) return false;
  Matrix residual = A(all_rows, rest);
  if (r > 0) residual -= basis * (basis.transpose() * residual);
  Eigen::ColPivHouseholderQR<Matrix> qr2(residual);
  qr2.setThreshold(1e-10 * std::max(1.0, A.cwiseAbs().maxCoeff()) /
                   std::max(1e-300, residual.cwiseAbs().maxCoeff()));
  if (qr2.rank() < m - r) return false;
  const auto& perm = qr2.colsPermutation().indices();
  for (Eigen::Index j = 0; j < m - r; ++j)
    is_free[static_cast<std::size_t>(rest[static_cast<std::size_t>(perm(j))])] = 1;
  return true;
}

/// Phase 1: min sum(a) s.t. A x + D a = b, x, a >= 0, starting from the
/// artificial basis at x = 0, or from a nonnegative origin with its positive
/// entries free.
inline ActiveSetStatus phase_one(const Matrix& A, const Vector& b, const ActiveSetOptions& opts,
                                 Vector& x, std::vector<char>& is_free, int& changes,
                                 const Vector* origin = nullptr) {
  const auto n = A.cols();
  const auto m = A.rows();
  Matrix A1(m, n + m);
  A1.leftCols(n) = A;
  A1.rightCols(m).setZero();
  Vector x1 = Vector::Zero(n + m);
  std::vector<char> free1(static_cast<std::size_t>(n + m), 0);
  Vector r = b;
  if (origin) {
    x1.head(n) = *origin;
    r -= A * *origin;
    for (Eigen::Index i = 0; i < n; ++i) free1[static_cast<std::size_t>(i)] = (*origin)(i) > 0.0;
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    A1(i, n + i) = r(i) >= 0.0 ? 1.0 : -1.0;
    x1(n + i) = std::abs(r(i));
    free1[static_cast<std::size_t>(n + i)] = 1;
  }
  Vector c1 = Vector::Zero(n + m);
  c1.tail(m).setOnes();

  const int limit = opts.cycle_limit_factor * static_cast<int>(n + m);
  const CoreResult core = primal_active_set(nullptr, c1, A1, x1, free1, limit, opts);
  changes = core.changes;
  if (core.outcome == CoreOutcome::limit) return ActiveSetStatus::cycle_limit;
  if (core.outcome != CoreOutcome::optimal) return ActiveSetStatus::infeasible;
  const double bn = b.size() > 0 ? b.cwiseAbs().maxCoeff() : 0.0;
  if (x1.tail(m).sum() > opts.feasibility_tolerance * (1.0 + bn)) return ActiveSetStatus::infeasible;

  x = x1.head(n).cwiseMax(0.0);
  is_free.assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) is_free[static_cast<std::size_t>(i)] = free1[static_cast<std::size_t>(i)];
  if (!complete_free_set(A, is_free)) return ActiveSetStatus::infeasible;
  return ActiveSetStatus::optimal;
}

/// Nonnegative part of a start point with tiny entries set to zero.
inline Vector clip_start(const Vector& start, const ActiveSetOptions& opts) {
  Vector x0 = start.cwiseMax(0.0);
  const double tol = opts.start_zero_tolerance * std::max(1.0, x0.size() ? x0.maxCoeff() : 0.0);
  for (Eigen::Index i = 0; i < x0.size(); ++i)
    if (x0(i) <= tol) x0(i) = 0.0;
  return x0;
}

/// Projects a start point onto {Ax = b} keeping its small entries fixed at
/// zero. Fails (returns false) if the projection leaves the orthant.
inline bool project_start(const Matrix& A, const Vector& b, const Vector& start,
                          const ActiveSetOptions& opts, Vector& x, std::vector<char>& is_free) {
  const auto n = A.cols();
  const auto m = A.rows();
  const IndexSet all_rows = full_range(static_cast<int>(m));
  const Vector x0 = clip_start(start, opts);
  is_free.assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) is_free[static_cast<std::size_t>(i)] = x0(i) > 0.0;

  for (int round = 0; round < 5; ++round) {
    if (!complete_free_set(A, is_free)) return false;
    const IndexSet F = indices_of(is_free, true);
    x = Vector::Zero(n);
    for (int i : F) x(i) = x0(i);
    if (m > 0 && !F.empty()) {
      const Vector r = b - A(all_rows, F) * x(F);
      const Vector delta = least_squares_min_norm(A(all_rows, F), r).solution;
      for (std::size_t j = 0; j < F.size(); ++j) x(F[j]) += delta(static_cast<Eigen::Index>(j));
    }
    // Round-off below zero is clamped; real violations leave the free set.
    const double tol = opts.feasibility_tolerance * std::max(1.0, x.cwiseAbs().maxCoeff());
    bool negative = false;
    for (int i : F) {
      if (x(i) < -tol) {
        is_free[static_cast<std::size_t>(i)] = 0;
        negative = true;
      } else if (x(i) < 0.0) {
        x(i) = 0.0;
      }
    }
    if (!negative) {
      const double bn = b.size() > 0 ? b.cwiseAbs().maxCoeff() : 0.0;
      return m == 0 || (A * x - b).cwiseAbs().maxCoeff() <= opts.feasibility_tolerance * (1.0 + bn);
    }
  }
  return false;
}

}  // namespace detail

/// Solves the convex QP by a two-phase primal active-set method. A start
/// point (or, without one, the min-norm solution of Ax = b) is projected onto
/// the feasible set; phase 1 runs when that projection fails.
inline ActiveSetResult active_set_solve(const StandardQP& qp,
                                        const std::optional<Vector>& start = std::nullopt,
                                        const ActiveSetOptions& opts = {}) {
  const auto n = qp.n();
  ActiveSetResult out;
  out.x = Vector::Zero(n);
  out.y = Vector::Zero(qp.m());
  out.z = Vector::Zero(n);
  detail::require(start ? start->size() == n : true, Errc::dimension_mismatch,
                  "active_set_solve: start length mismatch");

  const double bn = qp.m() > 0 ? qp.b.cwiseAbs().maxCoeff() : 0.0;
  if (n == 0) {
    out.status = bn <= opts.feasibility_tolerance ? ActiveSetStatus::optimal
                                                  : ActiveSetStatus::infeasible;
    return out;
  }

  // Drop redundant rows; inconsistent ones make the problem infeasible.
  Matrix A = qp.A;
  Vector b = qp.b;
  std::vector<int> kept_rows = full_range(static_cast<int>(qp.m()));
  if (qp.m() > 0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(qp.A.transpose());
    qr.setThreshold(1e-10);
    const auto r = qr.rank();
    if (r < qp.m()) {
      if (r == 0) {
        if (bn > opts.feasibility_tolerance) {
          out.status = ActiveSetStatus::infeasible;
          return out;
        }
        kept_rows.clear();
      } else {
        const LeastSquaresSolution ls = least_squares_min_norm(qp.A, qp.b);
        if (ls.residual_norm > opts.feasibility_tolerance * (1.0 + bn)) {
          out.status = ActiveSetStatus::infeasible;
          return out;
        }
        kept_rows.assign(qr.colsPermutation().indices().data(),
                         qr.colsPermutation().indices().data() + r);
        std::sort(kept_rows.begin(), kept_rows.end());
      }
      const IndexSet all_cols = full_range(static_cast<int>(n));
      A = qp.A(kept_rows, all_cols);
      b = qp.b(kept_rows);
    }
  }

  Vector x;
  std::vector<char> is_free;
  bool have_start = false;
  if (start) {
    have_start = detail::project_start(A, b, *start, opts, x, is_free);
    if (!have_start && A.rows() > 0) {
      const Vector x0 = detail::clip_start(*start, opts);
      const ActiveSetStatus st =
          detail::phase_one(A, b, opts, x, is_free, out.phase1_iterations, &x0);
      out.iterations = out.phase1_iterations;
      if (st == ActiveSetStatus::cycle_limit) {
        out.status = st;
        return out;
      }
      have_start = st == ActiveSetStatus::optimal;
    }
    out.warm_started = have_start;
  }
  if (!have_start && !start && A.rows() > 0) {
    // Crash start: the min-norm solution of Ax = b, when its projection stays feasible.
    have_start = detail::project_start(A, b, least_squares_min_norm(A, b).solution, opts, x, is_free);
  }
  if (!have_start) {
    if (A.rows() == 0) {
      x = Vector::Zero(n);
      is_free.assign(static_cast<std::size_t>(n), 0);
    } else {
      const ActiveSetStatus st = detail::phase_one(A, b, opts, x, is_free, out.phase1_iterations);
      out.iterations = out.phase1_iterations;
      if (st != ActiveSetStatus::optimal) {
        out.status = st;
        return out;
      }
    }
  }

  const int limit = opts.cycle_limit_factor * static_cast<int>(n);
  detail::CoreResult core = detail::primal_active_set(&qp.H, qp.c, A, x, is_free, limit, opts);
  out.iterations += core.changes;
  out.x = x;
  switch (core.outcome) {
    case detail::CoreOutcome::optimal: out.status = ActiveSetStatus::optimal; break;
    case detail::CoreOutcome::unbounded: out.status = ActiveSetStatus::unbounded; break;
    case detail::CoreOutcome::limit: out.status = ActiveSetStatus::cycle_limit; break;
    case detail::CoreOutcome::degenerate_basis: out.status = ActiveSetStatus::cycle_limit; break;
  }
  if (out.status == ActiveSetStatus::optimal) {
    for (std::size_t j = 0; j < kept_rows.size(); ++j)
      out.y(kept_rows[j]) = core.y(static_cast<Eigen::Index>(j));
    out.z = qp.H * out.x + qp.c - qp.A.transpose() * out.y;
  }
  return out;
}

/// Largest violation of the KKT conditions of the QP at (x, y) with
/// z = Hx + c - A'y, relative to 1 + max(||b||, ||c||).
inline double kkt_error(const StandardQP& qp, const Vector& x, const Vector& y) {
  const Vector z = qp.H * x + qp.c - qp.A.transpose() * y;
  double err = 0.0;
  if (qp.m() > 0) err = std::max(err, (qp.A * x - qp.b).cwiseAbs().maxCoeff());
  if (qp.n() > 0) {
    err = std::max(err, (-x).cwiseMax(0.0).maxCoeff());
    err = std::max(err, (-z).cwiseMax(0.0).maxCoeff());
    err = std::max(err, (x.array() * z.array()).abs().maxCoeff());
  }
  const double bn = qp.m() > 0 ? qp.b.cwiseAbs().maxCoeff() : 0.0;
  const double cn = qp.n() > 0 ? qp.c.cwiseAbs().maxCoeff() : 0.0;
  return err / (1.0 + std::max(bn, cn));
}

// ---------------------------------------------------------------------------
// Sub-problems and scores

struct Subproblem {
  StandardQP qp;
  IndexSet kept_indices;  // complement of the predicted active set, ascending
  int parent_n = 0;
  bool full_row_rank = true;

  /// Embeds a reduced vector into the parent space with zeros elsewhere.
  Vector lift(const Vector& x_sub) const {
    Vector x = Vector::Zero(parent_n);
    for (std::size_t j = 0; j < kept_indices.size(); ++j)
      x(kept_indices[j]) = x_sub(static_cast<Eigen::Index>(j));
    return x;
  }
};

inline Subproblem extract_subproblem(const StandardQP& qp, const IndexSet& active) {
  const int n = static_cast<int>(qp.n());
  for (int i : active)
    detail::require(i >= 0 && i < n, Errc::invalid_argument, "extract_subproblem: index out of range");
  Subproblem sub;
  sub.parent_n = n;
  sub.kept_indices = complement(make_index_set(active), n);
  const auto& K = sub.kept_indices;
  const IndexSet all_rows = full_range(static_cast<int>(qp.m()));
  sub.qp.name = qp.name;
  sub.qp.H = qp.H(K, K);
  sub.qp.A = qp.A(all_rows, K);
  sub.qp.b = qp.b;
  sub.qp.c = qp.c(K);
  if (K.empty()) {
    const double bn = qp.m() > 0 ? qp.b.cwiseAbs().maxCoeff() : 0.0;
    detail::require(bn == 0.0, Errc::invalid_argument,
                    "extract_subproblem: every variable fixed but b != 0");
    sub.full_row_rank = qp.m() == 0;
  } else {
    sub.full_row_rank = row_rank(sub.qp.A, 1e-10) == qp.m();
  }
  return sub;
}

struct CrossoverScore {
  double feasibility_error = 0.0;
  double objective_error = 0.0;
  int active_set_iterations = 0;
  Vector lifted;
};

/// Feasibility error ||A_K x_sub - b||_inf / (1 + ||b||_inf) and relative
/// objective difference against the reference optimum x_ref.
inline CrossoverScore crossover_scores(const StandardQP& qp, const IndexSet& active,
                                       const Vector& x_sub, const Vector& x_ref) {
  const int n = static_cast<int>(qp.n());
  const IndexSet kept = complement(make_index_set(active), n);
  detail::require(x_sub.size() == static_cast<Eigen::Index>(kept.size()) && x_ref.size() == n,
                  Errc::dimension_mismatch, "crossover_scores: dimension mismatch");
  const IndexSet all_rows = full_range(static_cast<int>(qp.m()));
  CrossoverScore score;
  const double bn = qp.m() > 0 ? qp.b.cwiseAbs().maxCoeff() : 0.0;
  if (qp.m() > 0) {
    const Vector r = qp.A(all_rows, kept) * x_sub - qp.b;
    score.feasibility_error = r.cwiseAbs().maxCoeff() / (1.0 + bn);
  }
  const double f_sub = qp.c(kept).dot(x_sub) + 0.5 * x_sub.dot(qp.H(kept, kept) * x_sub);
  const double f_ref = qp.objective(x_ref);
  score.objective_error = std::abs(f_sub - f_ref) / (1.0 + std::abs(f_ref));
  score.lifted = Vector::Zero(n);
  for (std::size_t j = 0; j < kept.size(); ++j) score.lifted(kept[j]) = x_sub(static_cast<Eigen::Index>(j));
  return score;
}

/// Solves the sub-problem; when it is infeasible or fails, falls back to the
/// nonnegative part of the min-norm least-squares solution of A_K x = b.
struct SubproblemSolution {
  Vector x;
  int iterations = 0;
  ActiveSetStatus status = ActiveSetStatus::optimal;
  bool fallback = false;
};

inline SubproblemSolution solve_subproblem(const Subproblem& sub,
                                           const std::optional<Vector>& start = std::nullopt,
                                           const ActiveSetOptions& opts = {}) {
  SubproblemSolution sol;
  const ActiveSetResult res = active_set_solve(sub.qp, start, opts);
  sol.iterations = res.iterations;
  sol.status = res.status;
  if (res.status == ActiveSetStatus::optimal) {
    sol.x = res.x;
    return sol;
  }
  sol.fallback = true;
  if (sub.qp.n() == 0 || sub.qp.m() == 0) {
    sol.x = Vector::Zero(sub.qp.n());
  } else {
    sol.x = least_squares_min_norm(sub.qp.A, sub.qp.b).solution.cwiseMax(0.0);
  }
  return sol;
}

}  // namespace cpqp
