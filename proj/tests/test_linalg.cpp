#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"

using namespace cpqp;
using cpqp::test::mat;
using cpqp::test::vec;

TEST(LeastSquares, IdentityIsExact) {
  const auto ls = least_squares_min_norm(Matrix::Identity(2, 2), vec({3, 4}));
  EXPECT_NEAR(ls.solution(0), 3.0, 1e-14);
  EXPECT_NEAR(ls.solution(1), 4.0, 1e-14);
  EXPECT_NEAR(ls.residual_norm, 0.0, 1e-14);
}

TEST(LeastSquares, OverdeterminedMatchesNormalEquations) {
  const Matrix M = mat({{1}, {1}});
  const Vector rhs = vec({0, 2});
  const auto ls = least_squares_min_norm(M, rhs);
  const Vector normal = (M.transpose() * M).ldlt().solve(M.transpose() * rhs);
  EXPECT_NEAR(ls.solution(0), normal(0), 1e-14);
  EXPECT_NEAR(ls.solution(0), 1.0, 1e-14);
  EXPECT_NEAR(ls.residual_norm, std::sqrt(2.0), 1e-14);
}

TEST(LeastSquares, UnderdeterminedPicksMinimumNorm) {
  const auto ls = least_squares_min_norm(mat({{1, 1}}), vec({2}));
  EXPECT_NEAR(ls.solution(0), 1.0, 1e-14);
  EXPECT_NEAR(ls.solution(1), 1.0, 1e-14);
  EXPECT_NEAR(ls.residual_norm, 0.0, 1e-14);
}

TEST(LeastSquares, RankDeficientAgreesWithSvd) {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    // 5x3 of rank 2.
    Matrix L(5, 2), R(2, 3);
    for (Eigen::Index i = 0; i < L.size(); ++i) L.data()[i] = rng.uniform(-1, 1);
    for (Eigen::Index i = 0; i < R.size(); ++i) R.data()[i] = rng.uniform(-1, 1);
    const Matrix M = L * R;
    Vector rhs(5);
    for (int i = 0; i < 5; ++i) rhs(i) = rng.uniform(-1, 1);

    const auto ls = least_squares_min_norm(M, rhs);
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-10);
    const Vector oracle = svd.solve(rhs);
    EXPECT_LT((ls.solution - oracle).norm(), 1e-10);
    EXPECT_EQ(ls.rank, 2);

    // Moving along the null space never shortens the solution.
    const Vector null_dir = svd.matrixV().col(2);
    for (double t : {-1.0, -1e-3, 1e-3, 1.0})
      EXPECT_GE((ls.solution + t * null_dir).norm(), ls.solution.norm() - 1e-14);
  }
}

TEST(LeastSquares, RejectsBadInput) {
  EXPECT_THROW(least_squares_min_norm(Matrix::Identity(2, 2), vec({1})), Error);
  EXPECT_THROW(least_squares_min_norm(Matrix(0, 0), Vector(0)), Error);
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  try {
    least_squares_min_norm(bad, vec({1, 1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::non_finite);
  }
}

TEST(SymmetricIndefinite, Diagonal) {
  const Vector v = solve_symmetric_indefinite(mat({{2, 0}, {0, -3}}), vec({4, 6}));
  EXPECT_NEAR(v(0), 2.0, 1e-14);
  EXPECT_NEAR(v(1), -2.0, 1e-14);
}

TEST(SymmetricIndefinite, Permutation) {
  const Vector v = solve_symmetric_indefinite(mat({{0, 1}, {1, 0}}), vec({5, 7}));
  EXPECT_NEAR(v(0), 7.0, 1e-14);
  EXPECT_NEAR(v(1), 5.0, 1e-14);
}

TEST(SymmetricIndefinite, OneDimensionalNewtonSystem) {
  const Vector v = solve_symmetric_indefinite(mat({{-1.5, 1}, {1, 0}}), vec({1, 0}));
  EXPECT_NEAR(v(0), 0.0, 1e-14);
  EXPECT_NEAR(v(1), 1.0, 1e-14);
}

TEST(SymmetricIndefinite, RoundTripOnRandomMatrices) {
  SplitMix64 rng(5);
  for (int n : {3, 40, 150, 400}) {
    Matrix B(n, n);
    for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = rng.uniform(-1, 1);
    Matrix K = 0.5 * (B + B.transpose());
    // Indefinite but safely nonsingular.
    for (int i = 0; i < n; ++i) K(i, i) += (i % 2 == 0 ? 1.0 : -1.0) * std::sqrt(double(n)) * 3.0;
    Vector rhs(n);
    for (int i = 0; i < n; ++i) rhs(i) = rng.uniform(-10, 10);
    const Vector v = solve_symmetric_indefinite(K, rhs);
    EXPECT_LE((K * v - rhs).norm() / (1.0 + rhs.norm()), 1e-8) << "n=" << n;
  }
}

TEST(SymmetricIndefinite, Errors) {
  EXPECT_THROW(solve_symmetric_indefinite(mat({{1, 2}, {0, 1}}), vec({1, 1})), Error);
  EXPECT_THROW(solve_symmetric_indefinite(Matrix::Identity(2, 2), vec({1})), Error);
  try {
    solve_symmetric_indefinite(Matrix::Zero(2, 2), vec({1, 1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::singular);
  }
}

TEST(Semidefinite, Examples) {
  EXPECT_TRUE(is_positive_semidefinite(Matrix::Identity(3, 3), 1e-10));
  EXPECT_FALSE(is_positive_semidefinite(mat({{1, 2}, {2, 1}}), 1e-10));
  EXPECT_TRUE(is_positive_semidefinite(Matrix::Zero(2, 2), 1e-10));
  EXPECT_THROW(is_positive_semidefinite(mat({{1, 2}, {0, 1}}), 1e-10), Error);
}

TEST(Semidefinite, GramMatricesArePsd) {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int r = 1 + trial % 7, n = 2 + trial % 9;
    Matrix B(r, n);
    for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = rng.uniform(-1, 1);
    const Matrix H = B.transpose() * B;
    EXPECT_TRUE(is_positive_semidefinite(0.5 * (H + H.transpose()), 1e-10));
  }
}

TEST(SpectralNorm, Examples) {
  EXPECT_NEAR(spectral_norm(mat({{3, 0}, {0, 1}})), 3.0, 1e-12);
  EXPECT_NEAR(spectral_norm(mat({{0, 2}, {0, 0}})), 2.0, 1e-12);
  EXPECT_NEAR(spectral_norm(mat({{1, 1}, {1, 1}})), 2.0, 1e-12);
}

TEST(SpectralNorm, MatchesGramEigenvalue) {
  SplitMix64 rng(8);
  Matrix M(7, 4);
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = rng.uniform(-2, 2);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(M.transpose() * M);
  const double oracle = std::sqrt(eig.eigenvalues().maxCoeff());
  EXPECT_NEAR(spectral_norm(M), oracle, 1e-8 * oracle);
}
