#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace cpqp;
using cpqp::test::dq1;
using cpqp::test::dq2;
using cpqp::test::mat;
using cpqp::test::vec;

TEST(ExtractSubproblem, Examples) {
  const Subproblem none = extract_subproblem(dq2(), {});
  EXPECT_EQ(none.qp.H, dq2().H);
  EXPECT_EQ(none.qp.A, dq2().A);
  EXPECT_EQ(none.kept_indices, IndexSet({0, 1}));

  const Subproblem one = extract_subproblem(dq2(), {1});
  EXPECT_EQ(one.qp.H, mat({{1}}));
  EXPECT_EQ(one.qp.A, mat({{1}}));
  EXPECT_EQ(one.qp.b, vec({1}));
  EXPECT_EQ(one.qp.c, vec({0}));
  EXPECT_EQ(one.lift(vec({1})), vec({1, 0}));
  EXPECT_TRUE(one.full_row_rank);

  const Subproblem lost = extract_subproblem(dq2(), {0});
  EXPECT_FALSE(lost.full_row_rank);

  EXPECT_THROW(extract_subproblem(dq2(), {0, 1}), Error);
  EXPECT_THROW(extract_subproblem(dq2(), {2}), Error);
}

TEST(ActiveSetSolve, SmallProblems) {
  const ActiveSetResult a = active_set_solve(dq1());
  ASSERT_EQ(a.status, ActiveSetStatus::optimal);
  EXPECT_NEAR(a.x(0), 0.5, 1e-12);
  EXPECT_NEAR(a.x(1), 0.5, 1e-12);
  EXPECT_NEAR(a.y(0), 0.5, 1e-12);

  const ActiveSetResult b = active_set_solve(dq2());
  ASSERT_EQ(b.status, ActiveSetStatus::optimal);
  EXPECT_NEAR(b.x(0), 1.0, 1e-12);
  EXPECT_NEAR(b.x(1), 0.0, 1e-12);
  EXPECT_NEAR(b.z(1), 1.0, 1e-12);

  const SubproblemSolution reduced = solve_subproblem(extract_subproblem(dq2(), {1}));
  EXPECT_EQ(reduced.status, ActiveSetStatus::optimal);
  EXPECT_NEAR(reduced.x(0), 1.0, 1e-12);
  EXPECT_LE(reduced.iterations, 1);
}

TEST(ActiveSetSolve, InfeasibleAndUnbounded) {
  const StandardQP infeasible = cpqp::test::make_qp(Matrix::Identity(2, 2), mat({{1, 1}}), vec({-1}), vec({0, 0}));
  EXPECT_EQ(active_set_solve(infeasible).status, ActiveSetStatus::infeasible);

  const StandardQP unbounded = cpqp::test::make_qp(Matrix::Zero(2, 2), mat({{1, -1}}), vec({0}), vec({-1, -1}));
  EXPECT_EQ(active_set_solve(unbounded).status, ActiveSetStatus::unbounded);
}

TEST(CrossoverScores, Examples) {
  const CrossoverScore exact = crossover_scores(dq2(), {1}, vec({1}), vec({1, 0}));
  EXPECT_EQ(exact.feasibility_error, 0.0);
  EXPECT_EQ(exact.objective_error, 0.0);
  EXPECT_EQ(exact.lifted, vec({1, 0}));

  // Fixing the wrong index leaves A_K empty; the fallback is x_sub = 0.
  const Subproblem wrong = extract_subproblem(dq2(), {0});
  const SubproblemSolution sol = solve_subproblem(wrong);
  EXPECT_TRUE(sol.fallback);
  const CrossoverScore bad = crossover_scores(dq2(), {0}, sol.x, vec({1, 0}));
  EXPECT_DOUBLE_EQ(bad.feasibility_error, 0.5);

  EXPECT_THROW(crossover_scores(dq2(), {1}, vec({1, 2}), vec({1, 0})), Error);
}

namespace {

GeneratedQP moderate_qts1(std::uint64_t seed) { return generate_qts1(cpqp::test::small_params(seed, 30, 60)); }

}  // namespace

TEST(ActiveSetSolve, AgreesWithInteriorPoint) {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const GeneratedQP g = moderate_qts1(seed);
    const ActiveSetResult as = active_set_solve(g.qp);
    ASSERT_EQ(as.status, ActiveSetStatus::optimal) << g.qp.name;
    EXPECT_LE(kkt_error(g.qp, as.x, as.y), 1e-8) << g.qp.name;

    SolveOptions o = SolveOptions::unperturbed();
    o.mu_tolerance = 1e-8;
    const SolveReport ip = solve(g.qp, o);
    ASSERT_EQ(ip.status, SolveStatus::converged) << g.qp.name;
    const double scale = 1.0 + std::abs(g.qp.objective(as.x));
    EXPECT_NEAR(g.qp.objective(as.x), g.qp.objective(ip.final_iterate.x), 1e-6 * scale) << g.qp.name;
  }
}

TEST(ActiveSetSolve, WarmStartReachesTheSameOptimum) {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const GeneratedQP g = moderate_qts1(seed);
    const ActiveSetResult cold = active_set_solve(g.qp);
    ASSERT_EQ(cold.status, ActiveSetStatus::optimal);
    // A nearby start, and a poor one that needs phase 1.
    for (const Vector& start : {Vector(cold.x.array() + 1e-3), Vector(Vector::Ones(g.qp.n()))}) {
      const ActiveSetResult warm = active_set_solve(g.qp, start);
      ASSERT_EQ(warm.status, ActiveSetStatus::optimal) << g.qp.name;
      EXPECT_LE(kkt_error(g.qp, warm.x, warm.y), 1e-8);
      const double f = g.qp.objective(cold.x);
      EXPECT_NEAR(g.qp.objective(warm.x), f, 1e-9 * (1.0 + std::abs(f)));
    }
  }
}

TEST(ActiveSetSolve, NoCycleLimitOnGeneratedProblems) {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    for (const GeneratedQP& g : {generate_qts1(cpqp::test::small_params(seed)),
                                 generate_qts2(cpqp::test::small_params(seed))}) {
      const ActiveSetResult r = active_set_solve(g.qp);
      EXPECT_NE(r.status, ActiveSetStatus::cycle_limit) << g.qp.name;
      EXPECT_EQ(r.status, ActiveSetStatus::optimal) << g.qp.name;
    }
  }
}

TEST(SolveSubproblem, LiftedPointIsOptimalWhenTheSetIsRight) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const GeneratedQP g = generate_qts2(cpqp::test::small_params(seed));
    const ActiveSetResult full = active_set_solve(g.qp);
    ASSERT_EQ(full.status, ActiveSetStatus::optimal);
    // Fix only indices with a clearly positive multiplier.
    IndexSet strongly;
    for (Eigen::Index i = 0; i < g.qp.n(); ++i)
      if (g.point.s(i) > 0.0) strongly.push_back(static_cast<int>(i));
    const Subproblem sub = extract_subproblem(g.qp, strongly);
    const SubproblemSolution sol = solve_subproblem(sub);
    ASSERT_EQ(sol.status, ActiveSetStatus::optimal);
    const CrossoverScore sc = crossover_scores(g.qp, strongly, sol.x, full.x);
    EXPECT_LE(sc.feasibility_error, 1e-9);
    EXPECT_LE(sc.objective_error, 1e-9);
  }
}
