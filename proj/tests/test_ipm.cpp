#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"

using namespace cpqp;
using cpqp::test::dq1;
using cpqp::test::make_qp;
using cpqp::test::mat;
using cpqp::test::vec;
using cpqp::test::Centred;
using cpqp::test::centred_point;

namespace {

// min 1/2 x^2 s.t. x = 1.
StandardQP one_dim() { return make_qp(mat({{1}}), mat({{1}}), vec({1}), vec({0})); }

// Right-hand side of the augmented system written without any perturbation
// terms, as a separate implementation of the unperturbed algorithm would.
Vector unperturbed_rhs(const StandardQP& qp, const Iterate& it, double sigma) {
  const auto n = qp.n();
  const double mu = it.x.dot(it.s) / static_cast<double>(n);
  const Vector rp = qp.A * it.x - qp.b;
  const Vector rd = qp.A.transpose() * it.y + it.s - qp.H * it.x - qp.c;
  const Vector r_mu = (it.x.array() * it.s.array() - sigma * mu).matrix();
  Vector rhs(n + qp.m());
  rhs.head(n) = -(rd - (r_mu.array() / it.x.array()).matrix());
  rhs.tail(qp.m()) = -rp;
  return rhs;
}

}  // namespace

TEST(MehrotraStart, Dq1) {
  // x~ = (.5, .5), s~ = 0: the products vanish, so both shifts take the unit fallback.
  const Iterate it = mehrotra_start(dq1());
  EXPECT_NEAR(it.y(0), 0.5, 1e-14);
  EXPECT_NEAR(it.x(0), 1.5, 1e-14);
  EXPECT_NEAR(it.x(1), 1.5, 1e-14);
  EXPECT_NEAR(it.s(0), 1.0, 1e-14);
  EXPECT_NEAR(it.s(1), 1.0, 1e-14);
}

TEST(MehrotraStart, ZeroDataFallsBackToOnes) {
  const StandardQP qp = make_qp(Matrix::Identity(3, 3), mat({{1, 1, 1}}), vec({0}), vec({0, 0, 0}));
  const Iterate it = mehrotra_start(qp);
  EXPECT_TRUE(it.x.isApprox(Vector::Ones(3), 1e-14));
  EXPECT_TRUE(it.s.isApprox(Vector::Ones(3), 1e-14));
}

TEST(MehrotraStart, ShiftRuleByHand) {
  // H = 0, A = [1 1], b = 2, c = (1, 3): x~ = (1, 1), y~ = 2, s~ = (-1, 1).
  const StandardQP qp = make_qp(Matrix::Zero(2, 2), mat({{1, 1}}), vec({2}), vec({1, 3}));
  const Iterate it = mehrotra_start(qp);
  const double dx = 0.0, ds = 1.5;
  const Vector xs = vec({1, 1}), ss = vec({0.5, 2.5});
  const double prod = xs.dot(ss);
  const double dxh = dx + 0.5 * prod / ss.sum();
  const double dsh = ds + 0.5 * prod / xs.sum();
  EXPECT_NEAR(it.y(0), 2.0, 1e-14);
  EXPECT_NEAR(it.x(0), 1.0 + dxh, 1e-14);
  EXPECT_NEAR(it.x(1), 1.0 + dxh, 1e-14);
  EXPECT_NEAR(it.s(0), -1.0 + dsh, 1e-14);
  EXPECT_NEAR(it.s(1), 1.0 + dsh, 1e-14);
  EXPECT_TRUE((it.x.array() > 0).all() && (it.s.array() > 0).all());
}

TEST(MehrotraStart, MinNormPointIsLinearInB) {
  const GeneratedQP g = generate_qts1(cpqp::test::small_params(4));
  const Vector x1 = least_squares_min_norm(g.qp.A, g.qp.b).solution;
  const Vector x2 = least_squares_min_norm(g.qp.A, 2.0 * g.qp.b).solution;
  EXPECT_LT((x2 - 2.0 * x1).norm(), 1e-12 * (1.0 + x1.norm()));
}

TEST(MehrotraStart, RejectsRankDeficientA) {
  const StandardQP qp = make_qp(Matrix::Identity(3, 3), mat({{1, 1, 0}, {1, 1, 0}}), vec({1, 1}), vec({0, 0, 0}));
  EXPECT_THROW(mehrotra_start(qp), Error);
}

TEST(NewtonStep, OneDimensionalByHand) {
  const Iterate it{vec({1}), vec({0}), vec({0.5})};
  const NewtonStep d = newton_step(one_dim(), it, Perturbation::zero(1), 0.0);
  EXPECT_NEAR(d.dx(0), 0.0, 1e-14);
  EXPECT_NEAR(d.dy(0), 1.0, 1e-14);
  EXPECT_NEAR(d.ds(0), -0.5, 1e-14);
  EXPECT_NEAR(it.x(0) + d.dx(0), 1.0, 1e-14);
  EXPECT_NEAR(it.y(0) + d.dy(0), 1.0, 1e-14);
  EXPECT_NEAR(it.s(0) + d.ds(0), 0.0, 1e-14);
}

TEST(NewtonStep, ExactCentreIsAFixedPoint) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const Centred c = centred_point(seed, std::pow(10.0, -static_cast<double>(seed % 5)));
    const NewtonStep d = newton_step(c.qp, c.it, Perturbation::zero(c.qp.n()), 1.0);
    const double scale = 1.0 + c.it.x.norm() + c.it.s.norm() + c.it.y.norm();
    EXPECT_LT(d.dx.norm(), 1e-12 * scale) << seed;
    EXPECT_LT(d.dy.norm(), 1e-12 * scale) << seed;
    EXPECT_LT(d.ds.norm(), 1e-12 * scale) << seed;
  }
}

TEST(NewtonStep, LinearisedEquationsHold) {
  SplitMix64 rng(31);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const GeneratedQP g = generate_qts1(cpqp::test::small_params(seed));
    const Iterate it = mehrotra_start(g.qp);
    const Perturbation pert = Perturbation::uniform(g.qp.n(), 1e-3);
    const double sigma = rng.uniform(0, 1);
    const NewtonStep d = newton_step(g.qp, it, pert, sigma);
    const auto r = kkt_residuals(g.qp, it, pert);
    const double rp = (g.qp.A * d.dx + r.primal).cwiseAbs().maxCoeff();
    const double rd =
        (g.qp.A.transpose() * d.dy + d.ds - g.qp.H * d.dx + r.dual).cwiseAbs().maxCoeff();
    EXPECT_LT(rp, 1e-10 * (1.0 + r.primal.cwiseAbs().maxCoeff()));
    EXPECT_LT(rd, 1e-10 * (1.0 + r.dual.cwiseAbs().maxCoeff()));
  }
}

TEST(NewtonStep, RequiresShiftedPositivity) {
  const Iterate it{vec({-1}), vec({0}), vec({0.5})};
  EXPECT_THROW(newton_step(one_dim(), it, Perturbation::zero(1), 0.1), Error);
  EXPECT_THROW(newton_step(one_dim(), Iterate{vec({1}), vec({0}), vec({1})}, Perturbation::zero(1), 1.5), Error);
}

TEST(CenteringSigma, Examples) {
  EXPECT_DOUBLE_EQ(centering_sigma(1e-4), 0.01);
  EXPECT_DOUBLE_EQ(centering_sigma(0.5), 0.1);
  EXPECT_DOUBLE_EQ(centering_sigma(0.0), 0.0);
}

TEST(StepLengths, Examples) {
  const Iterate it{vec({1}), Vector(0), vec({1})};
  EXPECT_DOUBLE_EQ(step_lengths(it, Perturbation::zero(1), vec({-2}), vec({1}), 0.9995).alpha_p, 0.49975);
  EXPECT_DOUBLE_EQ(step_lengths(it, Perturbation::zero(1), vec({3}), vec({1}), 0.9995).alpha_p, 1.0);
  const Perturbation small{vec({0.001}), vec({0.001})};
  EXPECT_DOUBLE_EQ(step_lengths(it, small, vec({-2}), vec({-4}), 0.9995).alpha_p, 0.9995 * 1.001 / 2.0);
  EXPECT_DOUBLE_EQ(step_lengths(it, small, vec({-2}), vec({-4}), 0.9995).alpha_d, 0.9995 * 1.001 / 4.0);
}

TEST(ShrinkPerturbations, FractionBranch) {
  const Iterate next{vec({0.5, 0.2}), Vector(0), vec({1, 1})};
  const Perturbation p = shrink_perturbations(Perturbation::uniform(2, 1e-3), next, 0.1);
  EXPECT_NEAR(p.lambda(0), 1e-4, 1e-18);
  EXPECT_NEAR(p.lambda(1), 1e-4, 1e-18);
  EXPECT_NEAR(p.phi(0), 1e-4, 1e-18);
}

TEST(ShrinkPerturbations, SegmentBranchWithFloor) {
  const Iterate next{vec({-0.002, 0.5}), Vector(0), vec({1, 1})};
  const Perturbation p = shrink_perturbations(Perturbation::uniform(2, 1e-3), next, 0.1);
  // Segment point 0.1 * 1e-3 + 0.9 * 0.002 = 0.0019 is below the floor 1.01 * 0.002.
  EXPECT_NEAR(p.lambda(0), 0.00202, 1e-15);
  EXPECT_NEAR(p.lambda(1), 0.00202, 1e-15);
  EXPECT_GT(next.x(0) + p.lambda(0), 0.0);
}

TEST(ShrinkPerturbations, ZeroStaysZero) {
  const Iterate next{vec({0.5, 0.2}), Vector(0), vec({1, 1})};
  const Perturbation p = shrink_perturbations(Perturbation::zero(2), next, 0.9);
  EXPECT_TRUE(p.is_zero());
  EXPECT_THROW(shrink_perturbations(Perturbation::zero(2), next, 1.0), Error);
}

TEST(Solve, OneDimensional) {
  const SolveReport r = solve(one_dim(), SolveOptions{});
  EXPECT_EQ(r.status, SolveStatus::converged);
  EXPECT_LE(r.iterations, 15);
  EXPECT_LT(mu_lambda(r.final_iterate, r.final_perturbation), 1e-3);
  EXPECT_EQ(static_cast<int>(r.trace.size()), r.iterations);
}

TEST(Solve, Dq1WithAndWithoutPerturbation) {
  for (double eps : {0.0, 1e-3}) {
    SolveOptions o;
    o.initial_perturbation = eps;
    const SolveReport r = solve(dq1(), o);
    EXPECT_EQ(r.status, SolveStatus::converged) << eps;
    EXPECT_NEAR(r.final_iterate.x(0), 0.5, 1e-2);
    EXPECT_NEAR(r.final_iterate.x(1), 0.5, 1e-2);
  }
}

TEST(Solve, InfeasibleDataDoesNotConverge) {
  const StandardQP qp = make_qp(Matrix::Identity(2, 2), mat({{1, 1}}), vec({-1}), vec({0, 0}));
  const SolveReport r = solve(qp, SolveOptions::unperturbed());
  EXPECT_NE(r.status, SolveStatus::converged);
  ASSERT_FALSE(r.trace.empty());
  EXPECT_GT(r.trace.back().residual, 1e-3);
}

TEST(Solve, ShiftedIteratesStayPositive) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const GeneratedQP g = generate_qts2(cpqp::test::small_params(seed));
    SolveOptions o;
    o.mu_tolerance = 1e-8;
    int checked = 0;
    solve(g.qp, o, [&](int, const Iterate& it, const Perturbation& p) {
      EXPECT_TRUE(((it.x + p.lambda).array() > 0.0).all());
      EXPECT_TRUE(((it.s + p.phi).array() > 0.0).all());
      EXPECT_TRUE((p.lambda.array() >= 0.0).all() && (p.phi.array() >= 0.0).all());
      ++checked;
    });
    EXPECT_GT(checked, 1);
  }
}

TEST(Solve, GapMostlyDecreases) {
  int down = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const GeneratedQP g = generate_qts1(cpqp::test::small_params(seed, 60, 120));
    const SolveReport r = solve(g.qp, SolveOptions{});
    for (std::size_t k = 1; k < r.trace.size(); ++k) {
      down += r.trace[k].mu_lambda < r.trace[k - 1].mu_lambda;
      ++total;
    }
  }
  ASSERT_GT(total, 0);
  EXPECT_GE(static_cast<double>(down) / total, 0.9);
}

TEST(Solve, UnperturbedRunMatchesPlainNewtonSystem) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const GeneratedQP g = generate_qts2(cpqp::test::small_params(seed));
    SolveOptions o = SolveOptions::unperturbed();
    o.mu_tolerance = 1e-9;
    int checked = 0;
    solve(g.qp, o, [&](int, const Iterate& it, const Perturbation& p) {
      ASSERT_TRUE(p.is_zero());
      const double sigma = centering_sigma(mu_lambda(it, p));
      const NewtonSystem sys = assemble_newton_system(g.qp, it, p, sigma);
      const Vector plain = unperturbed_rhs(g.qp, it, sigma);
      ASSERT_EQ(sys.rhs.size(), plain.size());
      for (Eigen::Index i = 0; i < plain.size(); ++i) ASSERT_EQ(sys.rhs(i), plain(i));
      ++checked;
    });
    EXPECT_GT(checked, 3);
  }
}

TEST(Solve, TraceRecordsAreConsistent) {
  const GeneratedQP g = generate_qts1(cpqp::test::small_params(6));
  const SolveReport r = solve(g.qp, SolveOptions{});
  ASSERT_EQ(static_cast<int>(r.trace.size()), r.iterations);
  for (const TraceRecord& t : r.trace) {
    EXPECT_GE(t.mu_lambda, 0.0);
    EXPECT_GT(t.alpha_p, 0.0);
    EXPECT_LE(t.alpha_p, 1.0);
    EXPECT_GT(t.alpha_d, 0.0);
    EXPECT_LE(t.alpha_d, 1.0);
    EXPECT_GE(t.sigma, 0.0);
    EXPECT_LE(t.sigma, 0.1);
  }
  EXPECT_EQ(r.trace.back().predicted_active, r.prediction.active());
}
