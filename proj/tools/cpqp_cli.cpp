// cpqp: solve, generate, and run the prediction-ratio and crossover studies.
//
// Every option may also come from a key=value file given with --config
// (keys are the long option names without dashes).

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cpqp/cpqp.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kInstanceFailures = 2, kIoFailure = 3 };

struct Args {
  std::string suite;
  std::string qps_dir;
  std::string qps_file;
  std::string out;
  std::uint64_t seed = 1;
  int count = 50;
  std::vector<int> stops{2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
  std::string truth = "active-set";
  bool cold_start = false;
  bool unperturbed = false;
  double eps = 1e-3;
  double tol = 1e-3;
  double shrink = 0.9;
  int max_iter = 100;
  double density = 0.5;
  int m_lo = 10, m_hi = 200, n_lo = 20, n_hi = 500;
  std::optional<int> m, n;
};

cpqp::SolveOptions solve_options(const Args& a) {
  cpqp::SolveOptions o;
  o.initial_perturbation = a.unperturbed ? 0.0 : a.eps;
  o.mu_tolerance = a.tol;
  o.max_iterations = a.max_iter;
  o.shrink_fraction = a.shrink;
  return o;
}

cpqp::GenParams gen_params(const Args& a) {
  cpqp::GenParams p;
  p.seed = a.seed;
  p.density = a.density;
  p.m_range = {a.m_lo, a.m_hi};
  p.n_range = {a.n_lo, a.n_hi};
  p.m = a.m;
  p.n = a.n;
  return p;
}

cpqp::ExperimentConfig experiment(const Args& a) {
  cpqp::ExperimentConfig cfg;
  cfg.suite = cpqp::parse_suite(a.suite);
  cfg.qps_directory = a.qps_dir;
  cfg.instance_count = a.count;
  cfg.seed = a.seed;
  cfg.generator = gen_params(a);
  cfg.stop_iterations = a.stops;
  cfg.options_perturbed = solve_options(a);
  cfg.options_perturbed.initial_perturbation = a.eps;
  cfg.options_unperturbed = cfg.options_perturbed;
  cfg.options_unperturbed.initial_perturbation = 0.0;
  if (a.truth == "interior-point")
    cfg.ground_truth = cpqp::GroundTruth::interior_point;
  else if (a.truth != "active-set")
    throw cpqp::Error(cpqp::Errc::invalid_argument, "unknown ground truth '" + a.truth + "'");
  cfg.warm_start = !a.cold_start;
  cfg.output_path = a.out;
  cfg.validate();
  return cfg;
}

cpqp::Instance single_instance(const Args& a) {
  if (!a.qps_file.empty()) return cpqp::load_qps_instance(a.qps_file);
  cpqp::ExperimentConfig cfg;
  cfg.suite = cpqp::parse_suite(a.suite.empty() ? "qts1" : a.suite);
  cfg.seed = a.seed;
  cfg.generator = gen_params(a);
  return cpqp::make_instance(cfg, 0);
}

int run_solve(const Args& a) {
  const cpqp::Instance inst = single_instance(a);
  const cpqp::SolveReport r = cpqp::solve(inst.qp, solve_options(a));
  const cpqp::Iterate& it = r.final_iterate;
  const auto predicted = r.prediction.active();
  std::printf("problem      %s (m=%ld, n=%ld)\n", inst.name.c_str(), static_cast<long>(inst.qp.m()),
              static_cast<long>(inst.qp.n()));
  std::printf("status       %s after %d iterations\n", cpqp::to_string(r.status), r.iterations);
  std::printf("mu_lambda    %s\n", cpqp::format_sci(cpqp::mu_lambda(it, r.final_perturbation)).c_str());
  std::printf("objective    %.12g\n", inst.qp.objective(it.x));
  std::printf("predicted    %zu active of %ld\n", predicted.size(), static_cast<long>(inst.qp.n()));

  const cpqp::Subproblem sub = cpqp::extract_subproblem(inst.qp, predicted);
  std::optional<cpqp::Vector> start;
  if (!a.cold_start) start = cpqp::Vector(it.x(sub.kept_indices));
  const cpqp::SubproblemSolution sol = cpqp::solve_subproblem(sub, start);
  const cpqp::Vector x = sub.lift(sol.x);
  std::printf("crossover    %s, %d active-set iterations%s\n", cpqp::to_string(sol.status), sol.iterations,
              sol.fallback ? " (least-squares fallback)" : "");
  std::printf("objective    %.12g\n", inst.qp.objective(x));
  std::printf("feasibility  %s\n", cpqp::format_sci((inst.qp.A * x - inst.qp.b).norm()).c_str());
  if (inst.map && inst.map->objective_offset != 0.0)
    std::printf("offset       %.12g (original objective %.12g)\n", inst.map->objective_offset,
                inst.qp.objective(x) + inst.map->objective_offset);

  if (!a.out.empty()) {
    std::string text;
    char buf[64];
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g\n", x(i));
      text += buf;
    }
    cpqp::write_text_file(a.out, text);
  }
  return r.status == cpqp::SolveStatus::converged && sol.status == cpqp::ActiveSetStatus::optimal
             ? kOk
             : kInstanceFailures;
}

int run_ratios(const Args& a) {
  const cpqp::ExperimentConfig cfg = experiment(a);
  const cpqp::RatioExperimentResult r = cpqp::run_ratio_experiment(cfg);
  cpqp::write_text_file(cfg.output_path, cpqp::format_ratio_csv(r.curve));
  std::fprintf(stderr, "%d instances, %d failed\n", r.instances, r.failures);
  return r.failures > 0 ? kInstanceFailures : kOk;
}

int run_crossover(const Args& a) {
  const cpqp::ExperimentConfig cfg = experiment(a);
  const cpqp::CrossoverExperimentResult r = cpqp::run_crossover_experiment(cfg);
  cpqp::write_report_csv(r.records, cfg.output_path, true);
  const cpqp::CrossoverSummary s = cpqp::summarize(r.records);
  std::fprintf(stderr, "%zu instances, %d failed; mean active-set iterations %.1f (perturbed) %.1f (unperturbed)\n",
               r.records.size(), r.failures, s.active_iterations_per, s.active_iterations_unp);
  return r.failures > 0 ? kInstanceFailures : kOk;
}

int run_generate(const Args& a) {
  const cpqp::Suite suite = cpqp::parse_suite(a.suite);
  if (suite == cpqp::Suite::qps) throw cpqp::Error(cpqp::Errc::invalid_argument, "generate needs qts1 or qts2");
  const cpqp::GenParams p = gen_params(a);
  const cpqp::GeneratedQP g = suite == cpqp::Suite::qts1 ? cpqp::generate_qts1(p) : cpqp::generate_qts2(p);
  cpqp::write_text_file(a.out, cpqp::write_qps(g.qp, g.qp.name));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dense convex QP with controlled perturbations and active-set crossover"};
  app.set_config("--config", "", "key=value file with option defaults");
  app.require_subcommand(1);
  app.fallthrough();

  Args a;
  app.add_option("--suite", a.suite, "qts1, qts2 or qps");
  app.add_option("--seed", a.seed, "base seed; instance i uses seed + i");
  app.add_option("--out", a.out, "output file");
  app.add_option("--qps-dir", a.qps_dir, "directory of .qps files for the qps suite");
  app.add_option("--qps", a.qps_file, "single QPS file (solve)");
  app.add_option("--count", a.count, "instances per random suite")->capture_default_str();
  app.add_option("--stops", a.stops, "stop iterations for the ratio study")->delimiter(',');
  app.add_option("--ground-truth", a.truth, "active-set or interior-point")->capture_default_str();
  app.add_flag("--cold-start", a.cold_start, "start the active-set solve from scratch");
  app.add_flag("--unperturbed", a.unperturbed, "solve without perturbations (solve)");
  app.add_option("--eps", a.eps, "initial perturbation")->capture_default_str();
  app.add_option("--tol", a.tol, "stop when mu_lambda < tol")->capture_default_str();
  app.add_option("--shrink", a.shrink, "perturbation shrink fraction")->capture_default_str();
  app.add_option("--max-iter", a.max_iter, "interior point iteration limit")->capture_default_str();
  app.add_option("--density", a.density, "generator density")->capture_default_str();
  app.add_option("--m-lo", a.m_lo);
  app.add_option("--m-hi", a.m_hi);
  app.add_option("--n-lo", a.n_lo);
  app.add_option("--n-hi", a.n_hi);
  app.add_option("--m", a.m, "fixed row count");
  app.add_option("--n", a.n, "fixed column count");

  auto* solve = app.add_subcommand("solve", "solve one problem and cross over");
  auto* ratios = app.add_subcommand("ratios", "prediction-ratio curves (CSV)");
  auto* crossover = app.add_subcommand("crossover", "crossover table (CSV)");
  auto* generate = app.add_subcommand("generate", "write a random problem as QPS");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  auto missing = [&](std::initializer_list<const char*> names) {
    for (const char* name : names)
      if (app.get_option(name)->count() == 0) {
        std::fprintf(stderr, "%s is required\n", name);
        return true;
      }
    return false;
  };

  try {
    if (*solve) {
      if (a.qps_file.empty() && missing({"--seed"})) return kUsage;
      return run_solve(a);
    }
    if (*generate) {
      if (missing({"--seed", "--suite", "--out"})) return kUsage;
      return run_generate(a);
    }
    if (missing({"--seed", "--suite", "--out"})) return kUsage;
    if (*ratios) return run_ratios(a);
    if (*crossover) return run_crossover(a);
  } catch (const cpqp::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    switch (e.code()) {
      case cpqp::Errc::io_error:
      case cpqp::Errc::parse_error:
        return kIoFailure;
      case cpqp::Errc::invalid_argument:
      case cpqp::Errc::unsupported:
        return kUsage;
      default:
        return kInstanceFailures;
    }
  }
  return kUsage;
}
