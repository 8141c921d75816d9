#pragma once

// Experiment drivers.
//
//  ratios:    run both algorithms for a fixed number of iterations and score
//             the predicted active sets against a reference active set.
//  crossover: stop the perturbed algorithm at the gap tolerance, run the
//             unperturbed one for the same number of iterations, and finish
//             both predictions with the active-set solver.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cpqp/asqp.hpp"
#include "cpqp/error.hpp"
#include "cpqp/gen.hpp"
#include "cpqp/io.hpp"
#include "cpqp/ipm.hpp"
#include "cpqp/model.hpp"
#include "cpqp/predict.hpp"

namespace cpqp {

enum class Suite { qts1, qts2, qps };
enum class GroundTruth { active_set, interior_point };

inline Suite parse_suite(const std::string& s) {
  if (s == "qts1") return Suite::qts1;
  if (s == "qts2") return Suite::qts2;
  if (s == "qps") return Suite::qps;
  throw Error(Errc::invalid_argument, "unknown suite '" + s + "'");
}

struct ExperimentConfig {
  Suite suite = Suite::qts2;
  std::string qps_directory;
  int instance_count = 50;
  std::uint64_t seed = 1;  // instance i uses seed + i
  GenParams generator;     // its seed is overwritten per instance
  std::vector<int> stop_iterations{2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
  SolveOptions options_perturbed{};
  SolveOptions options_unperturbed = SolveOptions::unperturbed();
  GroundTruth ground_truth = GroundTruth::active_set;
  bool warm_start = true;  // start the sub-problem solve from the interior point iterate
  double reference_mu = 1e-8;
  std::string output_path;

  void validate() const {
    detail::require(instance_count >= 1, Errc::invalid_argument, "instance count must be >= 1");
    detail::require(!stop_iterations.empty(), Errc::invalid_argument, "no stop iterations");
    for (std::size_t i = 0; i < stop_iterations.size(); ++i) {
      detail::require(stop_iterations[i] >= 1, Errc::invalid_argument, "stop iterations must be >= 1");
      if (i > 0)
        detail::require(stop_iterations[i] > stop_iterations[i - 1], Errc::invalid_argument,
                        "stop iterations must be strictly increasing");
    }
    if (suite == Suite::qps)
      detail::require(!qps_directory.empty(), Errc::invalid_argument, "qps suite needs a directory");
  }
};

struct Instance {
  std::string name;
  StandardQP qp;
  std::optional<Iterate> known_solution;  // exact optimum when the generator provides one
  std::optional<StandardFormMap> map;
};

/// QPS files of a directory, sorted by file name.
inline std::vector<std::filesystem::path> qps_files(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(Errc::io_error, "not a directory: '" + dir + "'");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".qps" || ext == ".mps") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

inline Instance load_qps_instance(const std::string& path) {
  const RawQP raw = parse_qps_file(path);
  StandardForm sf = to_standard_form(raw);
  if (raw.quadratic.empty()) add_identity_on_original(sf);
  Instance inst;
  inst.name = raw.name.empty() ? std::filesystem::path(path).stem().string() : raw.name;
  inst.qp = std::move(sf.qp);
  inst.map = std::move(sf.map);
  return inst;
}

inline int suite_size(const ExperimentConfig& cfg) {
  if (cfg.suite == Suite::qps) return static_cast<int>(qps_files(cfg.qps_directory).size());
  return cfg.instance_count;
}

inline Instance make_instance(const ExperimentConfig& cfg, int index) {
  if (cfg.suite == Suite::qps) {
    const auto files = qps_files(cfg.qps_directory);
    return load_qps_instance(files.at(static_cast<std::size_t>(index)).string());
  }
  GenParams p = cfg.generator;
  p.seed = cfg.seed + static_cast<std::uint64_t>(index);
  Instance inst;
  if (cfg.suite == Suite::qts1) {
    GeneratedQP g = generate_qts1(p);
    inst.qp = std::move(g.qp);
  } else {
    GeneratedQP g = generate_qts2(p);
    inst.qp = std::move(g.qp);
    inst.known_solution = std::move(g.point);
  }
  inst.name = inst.qp.name;
  return inst;
}

// ---------------------------------------------------------------------------
// Reference solutions

struct Reference {
  Vector x;
  IndexSet active;  // x_i < kZeroTolerance
  bool ok = false;
};

/// Primal solution of the unperturbed algorithm driven to a small gap.
inline std::optional<Vector> interior_point_solution(const StandardQP& qp, double mu) {
  SolveOptions o = SolveOptions::unperturbed();
  o.mu_tolerance = mu;
  o.max_iterations = 200;
  const SolveReport r = solve(qp, o);
  if (r.status != SolveStatus::converged) return std::nullopt;
  return r.final_iterate.x;
}

/// Active-set optimum of the full problem, started from the generator's
/// solution when there is one and from a high-accuracy interior point
/// solution otherwise (entries below the zero tolerance start at zero).
inline Reference reference_solution(const Instance& inst, const ExperimentConfig& cfg) {
  Reference ref;
  std::optional<Vector> start;
  if (inst.known_solution) {
    start = inst.known_solution->x;
  } else if (auto x = interior_point_solution(inst.qp, cfg.reference_mu)) {
    start = x->unaryExpr([](double v) { return v < kZeroTolerance ? 0.0 : v; });
  }
  const ActiveSetResult res = active_set_solve(inst.qp, start);
  if (res.status != ActiveSetStatus::optimal) return ref;
  ref.x = res.x;
  ref.active = select_indices(static_cast<int>(res.x.size()),
                              [&](int i) { return res.x(i) < kZeroTolerance; });
  ref.ok = true;
  return ref;
}

/// Reference active set for the ratio study.
inline std::optional<IndexSet> reference_active_set(const Instance& inst, const ExperimentConfig& cfg) {
  const int n = static_cast<int>(inst.qp.n());
  if (cfg.ground_truth == GroundTruth::interior_point) {
    const auto x = interior_point_solution(inst.qp, cfg.reference_mu);
    if (!x) return std::nullopt;
    return select_indices(n, [&](int i) { return (*x)(i) < kZeroTolerance; });
  }
  if (inst.known_solution) {
    const Vector& x = inst.known_solution->x;
    return select_indices(n, [&](int i) { return x(i) < kZeroTolerance; });
  }
  const Reference ref = reference_solution(inst, cfg);
  if (!ref.ok) return std::nullopt;
  return ref.active;
}

// ---------------------------------------------------------------------------
// Prediction-ratio study

struct RatioExperimentResult {
  std::vector<RatioCurvePoint> curve;
  int instances = 0;
  int failures = 0;  // instances excluded at every stop iteration
};

inline RatioExperimentResult run_ratio_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const int kmax = cfg.stop_iterations.back();
  const std::size_t nk = cfg.stop_iterations.size();
  std::vector<PredictionRatios> sum_per(nk, PredictionRatios{0, 0, 0});
  std::vector<PredictionRatios> sum_unp(nk, PredictionRatios{0, 0, 0});
  std::vector<double> res_per(nk, 0.0), res_unp(nk, 0.0);
  std::vector<int> ok(nk, 0);

  RatioExperimentResult out;
  out.instances = suite_size(cfg);
  for (int idx = 0; idx < out.instances; ++idx) {
    bool used = false;
    try {
      const Instance inst = make_instance(cfg, idx);
      const auto truth = reference_active_set(inst, cfg);
      if (!truth) {
        ++out.failures;
        continue;
      }
      SolveOptions op = cfg.options_perturbed;
      SolveOptions ou = cfg.options_unperturbed;
      op.mu_tolerance = ou.mu_tolerance = 0.0;
      op.max_iterations = ou.max_iterations = kmax;
      const SolveReport per = solve(inst.qp, op);
      const SolveReport unp = solve(inst.qp, ou);
      for (std::size_t k = 0; k < nk; ++k) {
        const auto K = static_cast<std::size_t>(cfg.stop_iterations[k]);
        if (per.trace.size() < K || unp.trace.size() < K) continue;
        const TraceRecord& tp = per.trace[K - 1];
        const TraceRecord& tu = unp.trace[K - 1];
        if (!std::isfinite(tp.residual) || !std::isfinite(tu.residual)) continue;
        const PredictionRatios rp = prediction_ratios(tp.predicted_active, *truth);
        const PredictionRatios ru = prediction_ratios(tu.predicted_active, *truth);
        sum_per[k].false_prediction += rp.false_prediction;
        sum_per[k].missed_prediction += rp.missed_prediction;
        sum_per[k].correction += rp.correction;
        sum_unp[k].false_prediction += ru.false_prediction;
        sum_unp[k].missed_prediction += ru.missed_prediction;
        sum_unp[k].correction += ru.correction;
        res_per[k] += tp.residual;
        res_unp[k] += tu.residual;
        ++ok[k];
        used = true;
      }
    } catch (const Error&) {
    }
    if (!used) ++out.failures;
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < nk; ++k) {
    RatioCurvePoint p;
    p.stop_iteration = cfg.stop_iterations[k];
    p.n_ok = ok[k];
    const double c = ok[k] > 0 ? static_cast<double>(ok[k]) : nan;
    p.false_per = sum_per[k].false_prediction / c;
    p.missed_per = sum_per[k].missed_prediction / c;
    p.correction_per = sum_per[k].correction / c;
    p.false_unp = sum_unp[k].false_prediction / c;
    p.missed_unp = sum_unp[k].missed_prediction / c;
    p.correction_unp = sum_unp[k].correction / c;
    p.log10_residual_per = std::log10(res_per[k] / c);
    p.log10_residual_unp = std::log10(res_unp[k] / c);
    out.curve.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Crossover study

struct ArmOutcome {
  IndexSet predicted;
  int iterations = 0;
  double feasibility_error = std::numeric_limits<double>::quiet_NaN();
  double objective_error = std::numeric_limits<double>::quiet_NaN();
  bool fallback = false;
  Vector lifted;
};

/// Predicted active set -> reduced problem -> active-set solve -> scores.
inline ArmOutcome crossover_arm(const StandardQP& qp, const SolveReport& run, const Vector& x_ref,
                                bool warm_start) {
  ArmOutcome arm;
  arm.predicted = run.prediction.active();
  const Subproblem sub = extract_subproblem(qp, arm.predicted);
  std::optional<Vector> start;
  if (warm_start) start = Vector(run.final_iterate.x(sub.kept_indices));
  const SubproblemSolution sol = solve_subproblem(sub, start);
  const CrossoverScore score = crossover_scores(qp, arm.predicted, sol.x, x_ref);
  arm.iterations = sol.iterations;
  arm.fallback = sol.fallback;
  arm.feasibility_error = score.feasibility_error;
  arm.objective_error = score.objective_error;
  arm.lifted = score.lifted;
  return arm;
}

struct CrossoverExperimentResult {
  std::vector<CrossoverRecord> records;
  int failures = 0;
};

inline CrossoverRecord run_crossover_instance(const Instance& inst, const ExperimentConfig& cfg) {
  CrossoverRecord rec;
  rec.name = inst.name;
  rec.m = static_cast<int>(inst.qp.m());
  rec.n = static_cast<int>(inst.qp.n());

  const SolveReport per = solve(inst.qp, cfg.options_perturbed);
  rec.ipm_iterations = per.iterations;
  rec.mu_lambda_K = mu_lambda(per.final_iterate, per.final_perturbation);
  if (per.status != SolveStatus::converged) return rec;

  SolveOptions ou = cfg.options_unperturbed;
  ou.mu_tolerance = 0.0;
  ou.max_iterations = per.iterations;
  const SolveReport unp = solve(inst.qp, ou);
  if (unp.iterations != per.iterations) return rec;
  rec.mu_K = unp.final_iterate.x.dot(unp.final_iterate.s) / static_cast<double>(inst.qp.n());

  const Reference ref = reference_solution(inst, cfg);
  if (!ref.ok) return rec;

  try {
    const ArmOutcome a = crossover_arm(inst.qp, per, ref.x, cfg.warm_start);
    rec.active_iterations_per = a.iterations;
    rec.feasibility_error_per = a.feasibility_error;
    rec.objective_error_per = a.objective_error;
  } catch (const Error&) {
  }
  try {
    const ArmOutcome a = crossover_arm(inst.qp, unp, ref.x, cfg.warm_start);
    rec.active_iterations_unp = a.iterations;
    rec.feasibility_error_unp = a.feasibility_error;
    rec.objective_error_unp = a.objective_error;
  } catch (const Error&) {
  }
  return rec;
}

inline CrossoverExperimentResult run_crossover_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  CrossoverExperimentResult out;
  const int count = suite_size(cfg);
  for (int idx = 0; idx < count; ++idx) {
    CrossoverRecord rec;
    try {
      const Instance inst = make_instance(cfg, idx);
      rec = run_crossover_instance(inst, cfg);
    } catch (const Error&) {
      rec.name = "instance-" + std::to_string(idx);
    }
    if (!rec.ok()) ++out.failures;
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace cpqp
