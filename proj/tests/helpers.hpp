#pragma once

#include <initializer_list>
#include <string>

#include "cpqp/cpqp.hpp"

namespace cpqp::test {

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out(i++) = d;
  return out;
}

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.begin()->size());
  Matrix out(r, c);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double d : row) out(i, j++) = d;
    ++i;
  }
  return out;
}

inline StandardQP make_qp(Matrix H, Matrix A, Vector b, Vector c, std::string name = "") {
  StandardQP qp;
  qp.H = std::move(H);
  qp.A = std::move(A);
  qp.b = std::move(b);
  qp.c = std::move(c);
  qp.name = std::move(name);
  return qp;
}

// min 1/2 |x|^2 s.t. x1 + x2 = 1: x* = (.5, .5), y* = .5, s* = 0.
inline StandardQP dq1() {
  return make_qp(Matrix::Identity(2, 2), mat({{1, 1}}), vec({1}), vec({0, 0}), "DQ1");
}

// x1 = 1, cost x2: x* = (1, 0), y* = 1, s* = (0, 1).
inline StandardQP dq2() {
  return make_qp(Matrix::Identity(2, 2), mat({{1, 0}}), vec({1}), vec({0, 1}), "DQ2");
}

// H = diag(0, 1), cost x1, x1 = 1: x* = (1, 0), y* = 1, s* = (0, 0).
inline StandardQP dq3() {
  return make_qp(mat({{0, 0}, {0, 1}}), mat({{1, 0}}), vec({1}), vec({1, 0}), "DQ3");
}

inline GenParams small_params(std::uint64_t seed, int m_hi = 30, int n_hi = 60) {
  GenParams p;
  p.seed = seed;
  p.m_range = {2, m_hi};
  p.n_range = {5, n_hi};
  return p;
}

// Feasible point with every product x_i s_i equal to mu.
struct Centred {
  StandardQP qp;
  Iterate it;
};

inline Centred centred_point(std::uint64_t seed, double mu) {
  SplitMix64 rng(seed);
  const int m = rng.integer(1, 6), n = m + rng.integer(1, 8);
  Matrix A(m, n), B(n, n);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = rng.uniform(-1, 1);
  for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = rng.uniform(-1, 1);
  Matrix H = B.transpose() * B;
  H = 0.5 * (H + H.transpose());
  Iterate it;
  it.x.resize(n);
  it.s.resize(n);
  it.y.resize(m);
  for (int i = 0; i < n; ++i) {
    it.x(i) = rng.uniform(0.1, 3);
    it.s(i) = mu / it.x(i);
  }
  for (int i = 0; i < m; ++i) it.y(i) = rng.uniform(-1, 1);
  Centred c;
  c.qp = make_qp(H, A, A * it.x, A.transpose() * it.y + it.s - H * it.x);
  c.it = it;
  return c;
}

inline std::string fixture(const std::string& name) {
  return std::string(CPQP_FIXTURE_DIR) + "/" + name;
}

}  // namespace cpqp::test
