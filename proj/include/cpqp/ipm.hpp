#pragma once

// Infeasible primal-dual path-following method on the perturbed problem
//
//   min c'x + 1/2 x'Hx  s.t.  Ax = b,  x >= -lambda   (dual: s >= -phi)
//
// with online active-set prediction. Running it with a zero initial
// perturbation gives the ordinary (unperturbed) method.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "cpqp/error.hpp"
#include "cpqp/linalg.hpp"
#include "cpqp/model.hpp"
#include "cpqp/predict.hpp"

namespace cpqp {

struct SolveOptions {
  double initial_perturbation = 1e-3;  // lambda^0 = phi^0 = eps * e
  double alpha_bar = 0.9995;           // fraction to the boundary
  double mu_tolerance = 1e-3;          // stop when mu_lambda < tol
  double residual_guard = 1e-2;        // ... and the relative residual is below this
  int max_iterations = 100;
  double prediction_threshold = kPredictionThreshold;
  double shrink_fraction = 0.9;
  int stagnation_window = 30;      // stop if the relative residual has not
  double stagnation_factor = 10.0; // dropped by this factor over the window

  static SolveOptions unperturbed() {
    SolveOptions o;
    o.initial_perturbation = 0.0;
    return o;
  }
};

enum class SolveStatus { converged, iteration_limit, numerical_failure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::iteration_limit: return "iteration-limit";
    case SolveStatus::numerical_failure: return "numerical-failure";
  }
  return "unknown";
}

/// State after iteration k (iterate, perturbation and prediction all updated).
struct TraceRecord {
  double mu_lambda = 0.0;
  double mu = 0.0;        // x's / n, without perturbations
  double residual = 0.0;  // relative residual of the perturbed KKT system
  double alpha_p = 0.0;
  double alpha_d = 0.0;
  double sigma = 0.0;
  double lambda_inf = 0.0;
  double phi_inf = 0.0;
  IndexSet predicted_active;
};

struct SolveReport {
  Iterate final_iterate;
  Perturbation final_perturbation;
  int iterations = 0;
  std::vector<TraceRecord> trace;
  SolveStatus status = SolveStatus::iteration_limit;
  PredictionState prediction;
};

// ---------------------------------------------------------------------------
// Starting point

/// Mehrotra-style start built from the min-norm primal point and the
/// least-squares dual point, shifted into the positive orthant.
inline Iterate mehrotra_start(const StandardQP& qp) {
  const auto n = qp.n();
  const auto m = qp.m();
  Iterate it;
  if (m > 0) {
    const LeastSquaresSolution xs = least_squares_min_norm(qp.A, qp.b);
    detail::require(xs.rank == m, Errc::rank_deficient, "mehrotra_start: A is rank deficient");
    it.x = xs.solution;
    it.y = least_squares_min_norm(qp.A.transpose(), qp.c + qp.H * it.x).solution;
  } else {
    it.x = Vector::Zero(n);
    it.y = Vector::Zero(0);
  }
  it.s = qp.c - qp.A.transpose() * it.y + qp.H * it.x;

  const double dx = std::max(-1.5 * it.x.minCoeff(), 0.0);
  const double ds = std::max(-1.5 * it.s.minCoeff(), 0.0);
  const Vector xs = it.x.array() + dx;
  const Vector ss = it.s.array() + ds;
  const double prod = xs.dot(ss);
  const double sum_s = ss.sum();
  const double sum_x = xs.sum();
  // A complementary shifted pair (prod ~ 0) would leave one side on the
  // boundary, so it takes the unit shift as well.
  const double dx_hat = (sum_s > 1e-12 && prod > 1e-12) ? dx + 0.5 * prod / sum_s : dx + 1.0;
  const double ds_hat = (sum_x > 1e-12 && prod > 1e-12) ? ds + 0.5 * prod / sum_x : ds + 1.0;
  it.x = it.x.array() + dx_hat;
  it.s = it.s.array() + ds_hat;
  return it;
}

// ---------------------------------------------------------------------------
// Newton step

struct NewtonSystem {
  Matrix K;    // [ -H - D^-2   A' ]
               // [  A          0  ]
  Vector rhs;  // -[ R_d - (X + L)^-1 R_mu ; R_p ]
  Vector r_mu; // (X + L)(S + F) e - sigma mu_lambda e
};

inline double centering_sigma(double mu_lambda) {
  detail::require(mu_lambda >= 0.0, Errc::invalid_argument, "centering_sigma: mu must be >= 0");
  return std::min(0.1, 100.0 * mu_lambda);
}

inline NewtonSystem assemble_newton_system(const StandardQP& qp, const Iterate& it,
                                           const Perturbation& pert, double sigma) {
  detail::check_dims(qp, it);
  detail::check_dims(it, pert);
  const auto n = qp.n();
  const auto m = qp.m();
  const Vector xl = it.x + pert.lambda;
  const Vector sp = it.s + pert.phi;
  detail::require((xl.array() > 0.0).all() && (sp.array() > 0.0).all(), Errc::invalid_argument,
                  "newton step requires x + lambda > 0 and s + phi > 0");

  const double mu = xl.dot(sp) / static_cast<double>(n);
  const Vector rp = qp.A * it.x - qp.b;
  const Vector rd = qp.A.transpose() * it.y + it.s - qp.H * it.x - qp.c;

  NewtonSystem sys;
  sys.r_mu = (xl.array() * sp.array() - sigma * mu).matrix();
  sys.K = Matrix::Zero(n + m, n + m);
  sys.K.topLeftCorner(n, n) = -qp.H;
  sys.K.topLeftCorner(n, n).diagonal() -= (sp.array() / xl.array()).matrix();
  sys.K.topRightCorner(n, m) = qp.A.transpose();
  sys.K.bottomLeftCorner(m, n) = qp.A;
  sys.rhs.resize(n + m);
  sys.rhs.head(n) = -(rd - (sys.r_mu.array() / xl.array()).matrix());
  sys.rhs.tail(m) = -rp;
  return sys;
}

struct NewtonStep {
  Vector dx;
  Vector dy;
  Vector ds;
};

/// Search direction from the augmented system; ds is recovered from
/// ds = -(X + L)^-1 (R_mu + (S + F) dx).
inline NewtonStep newton_step(const StandardQP& qp, const Iterate& it, const Perturbation& pert,
                              double sigma) {
  detail::require(sigma >= 0.0 && sigma <= 1.0, Errc::invalid_argument,
                  "newton_step: sigma must lie in [0, 1]");
  const NewtonSystem sys = assemble_newton_system(qp, it, pert, sigma);
  const Vector sol = solve_symmetric_indefinite(sys.K, sys.rhs);
  const auto n = qp.n();
  NewtonStep step;
  step.dx = sol.head(n);
  step.dy = sol.tail(qp.m());
  const Vector xl = it.x + pert.lambda;
  const Vector sp = it.s + pert.phi;
  step.ds = -((sys.r_mu.array() + sp.array() * step.dx.array()) / xl.array()).matrix();
  return step;
}

struct StepLengths {
  double alpha_p = 1.0;
  double alpha_d = 1.0;
};

namespace detail {

inline double boundary_step(const Vector& v, const Vector& shift, const Vector& dv,
                            double alpha_bar) {
  double ratio = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv(i) < 0.0) ratio = std::min(ratio, (-v(i) - shift(i)) / dv(i));
  return std::min(alpha_bar * ratio, 1.0);
}

}  // namespace detail

inline StepLengths step_lengths(const Iterate& it, const Perturbation& pert, const Vector& dx,
                                const Vector& ds, double alpha_bar) {
  detail::require(dx.size() == it.x.size() && ds.size() == it.s.size(), Errc::dimension_mismatch,
                  "step_lengths: dimension mismatch");
  return {detail::boundary_step(it.x, pert.lambda, dx, alpha_bar),
          detail::boundary_step(it.s, pert.phi, ds, alpha_bar)};
}

// ---------------------------------------------------------------------------
// Perturbation update

namespace detail {

inline constexpr double kSegmentParameter = 0.9;
inline constexpr double kPositivityFloor = 1.01;

inline Vector shrink_one(const Vector& lam, const Vector& v, double fraction) {
  const double lowest = v.minCoeff();
  Vector out;
  if (lowest > 0.0) {
    out = fraction * lam;
  } else {
    const double target = -lowest;
    out = (1.0 - kSegmentParameter) * lam + Vector::Constant(lam.size(), kSegmentParameter * target);
    out = out.cwiseMax(kPositivityFloor * target);
  }
  if (((v + out).array() <= 0.0).any())
    throw Error(Errc::singular, "shrink_perturbations: cannot keep the shifted iterate positive");
  return out;
}

}  // namespace detail

/// A fixed fraction of the perturbation while the iterate is positive;
/// otherwise a point on the segment towards -min(x) e, floored so that the
/// shifted iterate stays strictly positive.
inline Perturbation shrink_perturbations(const Perturbation& pert, const Iterate& next,
                                         double shrink_fraction) {
  detail::check_dims(next, pert);
  detail::require(shrink_fraction > 0.0 && shrink_fraction < 1.0, Errc::invalid_argument,
                  "shrink_perturbations: fraction must lie in (0, 1)");
  if (next.x.size() == 0) return pert;
  return {detail::shrink_one(pert.lambda, next.x, shrink_fraction),
          detail::shrink_one(pert.phi, next.s, shrink_fraction)};
}

// ---------------------------------------------------------------------------
// Driver

using IterationObserver =
    std::function<void(int iteration, const Iterate& it, const Perturbation& pert)>;

inline SolveReport solve(const StandardQP& qp, const SolveOptions& opts,
                         const IterationObserver& observer = {}) {
  detail::require(opts.initial_perturbation >= 0.0, Errc::invalid_argument,
                  "solve: initial perturbation must be >= 0");
  detail::require(opts.alpha_bar > 0.0 && opts.alpha_bar < 1.0, Errc::invalid_argument,
                  "solve: alpha_bar must lie in (0, 1)");
  const auto n = qp.n();

  SolveReport rep;
  Iterate it = mehrotra_start(qp);
  Perturbation pert = Perturbation::uniform(n, opts.initial_perturbation);
  PredictionState state(static_cast<int>(n));
  rep.status = SolveStatus::iteration_limit;
  if (observer) observer(0, it, pert);

  for (int k = 0; k < opts.max_iterations; ++k) {
    const double mu = mu_lambda(it, pert);
    if (mu < opts.mu_tolerance && relative_residual(qp, it, pert) <= opts.residual_guard) {
      rep.status = SolveStatus::converged;
      break;
    }
    TraceRecord rec;
    rec.sigma = centering_sigma(mu);
    try {
      const NewtonStep step = newton_step(qp, it, pert, rec.sigma);
      const StepLengths len = step_lengths(it, pert, step.dx, step.ds, opts.alpha_bar);
      rec.alpha_p = len.alpha_p;
      rec.alpha_d = len.alpha_d;
      Iterate next{it.x + len.alpha_p * step.dx, it.y + len.alpha_d * step.dy,
                   it.s + len.alpha_d * step.ds};
      if (!next.x.allFinite() || !next.y.allFinite() || !next.s.allFinite())
        throw Error(Errc::non_finite, "solve: non-finite iterate");
      state = update_prediction(state, next.x, next.s, opts.prediction_threshold);
      pert = shrink_perturbations(pert, next, opts.shrink_fraction);
      it = std::move(next);
    } catch (const Error&) {
      rep.status = SolveStatus::numerical_failure;
      break;
    }

    rec.mu_lambda = mu_lambda(it, pert);
    rec.mu = it.x.dot(it.s) / static_cast<double>(n);
    rec.residual = relative_residual(qp, it, pert);
    rec.lambda_inf = pert.lambda.size() > 0 ? pert.lambda.cwiseAbs().maxCoeff() : 0.0;
    rec.phi_inf = pert.phi.size() > 0 ? pert.phi.cwiseAbs().maxCoeff() : 0.0;
    rec.predicted_active = state.active();
    rep.trace.push_back(std::move(rec));
    if (observer) observer(k + 1, it, pert);

    const auto w = static_cast<std::size_t>(opts.stagnation_window);
    if (w > 0 && rep.trace.size() > w) {
      const double now = rep.trace.back().residual;
      const double before = rep.trace[rep.trace.size() - 1 - w].residual;
      if (!(now * opts.stagnation_factor <= before)) break;
    }
    if (k + 1 == opts.max_iterations && rep.trace.back().mu_lambda < opts.mu_tolerance &&
        rep.trace.back().residual <= opts.residual_guard)
      rep.status = SolveStatus::converged;
  }

  rep.final_iterate = std::move(it);
  rep.final_perturbation = std::move(pert);
  rep.iterations = static_cast<int>(rep.trace.size());
  rep.prediction = std::move(state);
  return rep;
}

}  // namespace cpqp
