#pragma once

// Seeded random test problems.
//
//  qts1: a feasible (not optimal) point is drawn first; b and c are built
//        around it.
//  qts2: a complementary optimal point with few positive entries is drawn
//        first, giving primal-dual degenerate problems.
//
// Both use H = B'B with B dense and square, and A uniform on [-1, 1] at the
// requested density.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "cpqp/error.hpp"
#include "cpqp/linalg.hpp"
#include "cpqp/model.hpp"

namespace cpqp {

/// SplitMix64. Fixed constants so that every platform draws the same stream.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform on (0, scale].
  double positive(double scale) { return (1.0 - uniform01()) * scale; }

  /// Integer in [lo, hi].
  int integer(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next() % span);
  }

 private:
  std::uint64_t state_;
};

struct GenParams {
  std::uint64_t seed = 1;
  std::pair<int, int> m_range{10, 200};  // open interval
  std::pair<int, int> n_range{20, 500};  // open interval
  double density = 0.5;
  double scale = 1.0;
  std::optional<int> m;  // fixed sizes override the ranges
  std::optional<int> n;
};

struct GeneratedQP {
  StandardQP qp;
  Iterate point;
};

namespace detail {

inline void check_params(const GenParams& p) {
  require(p.density > 0.0 && p.density <= 1.0, Errc::invalid_argument,
          "generator: density must lie in (0, 1]");
  require(p.scale > 0.0, Errc::invalid_argument, "generator: scale must be > 0");
  if (!p.m)
    require(p.m_range.second - p.m_range.first >= 2, Errc::invalid_argument,
            "generator: empty m range");
  if (!p.n)
    require(p.n_range.second - p.n_range.first >= 2, Errc::invalid_argument,
            "generator: empty n range");
}

inline std::pair<int, int> draw_sizes(const GenParams& p, SplitMix64& rng) {
  const int m = p.m ? *p.m : rng.integer(p.m_range.first + 1, p.m_range.second - 1);
  int n = 0;
  if (p.n) {
    n = *p.n;
  } else {
    const int lo = std::max(p.n_range.first + 1, m + 2);
    require(lo <= p.n_range.second - 1, Errc::invalid_argument, "generator: cannot draw n > m");
    n = rng.integer(lo, p.n_range.second - 1);
  }
  require(m >= 1 && n > m, Errc::invalid_argument, "generator: need 1 <= m < n");
  return {m, n};
}

inline Matrix draw_constraints(int m, int n, double density, SplitMix64& rng) {
  for (int attempt = 0; attempt < 10; ++attempt) {
    Matrix A = Matrix::Zero(m, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < m; ++i)
        if (rng.uniform01() < density) A(i, j) = rng.uniform(-1.0, 1.0);
    if (row_rank(A, 1e-10) == m) return A;
    A.leftCols(m) += 1e-2 * Matrix::Identity(m, m);
    if (row_rank(A, 1e-10) == m) return A;
  }
  throw Error(Errc::rank_deficient, "generator: no full-rank A after 10 draws");
}

inline Matrix draw_hessian(int n, SplitMix64& rng) {
  for (int attempt = 0; attempt < 10; ++attempt) {
    Matrix B(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) B(i, j) = rng.uniform(-1.0, 1.0);
    if (row_rank(B, 1e-10) == n) {
      Matrix H = B.transpose() * B;
      // Exact symmetry regardless of summation order.
      return 0.5 * (H + H.transpose());
    }
  }
  throw Error(Errc::rank_deficient, "generator: no full-rank B after 10 draws");
}

inline Vector draw_multipliers(int m, SplitMix64& rng) {
  Vector y(m);
  for (int i = 0; i < m; ++i) y(i) = rng.uniform(-1.0, 1.0);
  return y;
}

inline GeneratedQP assemble(Matrix H, Matrix A, Iterate pt) {
  GeneratedQP g;
  g.qp.b = A * pt.x;
  g.qp.c = A.transpose() * pt.y + pt.s - H * pt.x;
  g.qp.H = std::move(H);
  g.qp.A = std::move(A);
  g.point = std::move(pt);
  return g;
}

}  // namespace detail

inline GeneratedQP generate_qts1(const GenParams& params) {
  detail::check_params(params);
  SplitMix64 rng(params.seed);
  const auto [m, n] = detail::draw_sizes(params, rng);
  Matrix A = detail::draw_constraints(m, n, params.density, rng);
  Matrix H = detail::draw_hessian(n, rng);
  Iterate pt;
  pt.x = Vector::Zero(n);
  pt.s = Vector::Zero(n);
  for (int i = 0; i < n; ++i)
    if (rng.uniform01() < params.density) pt.x(i) = rng.positive(params.scale);
  for (int i = 0; i < n; ++i)
    if (rng.uniform01() < params.density) pt.s(i) = rng.positive(params.scale);
  pt.y = detail::draw_multipliers(m, rng);
  GeneratedQP g = detail::assemble(std::move(H), std::move(A), std::move(pt));
  g.qp.name = "QTS1-" + std::to_string(params.seed);
  return g;
}

inline GeneratedQP generate_qts2(const GenParams& params) {
  detail::check_params(params);
  SplitMix64 rng(params.seed);
  const auto [m, n] = detail::draw_sizes(params, rng);
  Matrix A = detail::draw_constraints(m, n, params.density, rng);
  Matrix H = detail::draw_hessian(n, rng);

  const int target = static_cast<int>(std::ceil(params.density * n));
  const int nx = std::max(0, std::min(m - 1, target));
  const int ns = std::max(0, std::min(n - m - 1, target));
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(perm[static_cast<std::size_t>(i)],
                                            perm[static_cast<std::size_t>(rng.integer(0, i))]);
  Iterate pt;
  pt.x = Vector::Zero(n);
  pt.s = Vector::Zero(n);
  for (int k = 0; k < nx; ++k) pt.x(perm[static_cast<std::size_t>(k)]) = rng.positive(params.scale);
  for (int k = nx; k < nx + ns; ++k)
    pt.s(perm[static_cast<std::size_t>(k)]) = rng.positive(params.scale);
  pt.y = detail::draw_multipliers(m, rng);
  GeneratedQP g = detail::assemble(std::move(H), std::move(A), std::move(pt));
  g.qp.name = "QTS2-" + std::to_string(params.seed);
  return g;
}

}  // namespace cpqp
