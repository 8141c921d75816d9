#pragma once

#include <vector>

#include "cpqp/error.hpp"
#include "cpqp/index_set.hpp"
#include "cpqp/linalg.hpp"

namespace cpqp {

/// Default threshold C for the prediction tests.
inline constexpr double kPredictionThreshold = 1e-5;

/// One-shot threshold sets at a point (x, s).
struct PredictedSets {
  IndexSet active;          // x_i <  C
  IndexSet strongly_active; // s_i >= C
  IndexSet inactive;        // x_i >= C
  IndexSet zero;            // complement of strongly_active and inactive
};

inline PredictedSets predicted_sets(const Vector& x, const Vector& s, double C) {
  detail::require(C > 0.0, Errc::invalid_argument, "predicted_sets: C must be > 0");
  detail::require(x.size() == s.size(), Errc::dimension_mismatch,
                  "predicted_sets: x and s lengths differ");
  const int n = static_cast<int>(x.size());
  PredictedSets p;
  p.active = select_indices(n, [&](int i) { return x(i) < C; });
  p.strongly_active = select_indices(n, [&](int i) { return s(i) >= C; });
  p.inactive = select_indices(n, [&](int i) { return x(i) >= C; });
  p.zero = complement(set_union(p.strongly_active, p.inactive), n);
  return p;
}

/// Three-way split of the indices driven by the joint test x_i < C and
/// s_i > C. An undetermined index becomes active after the test holds on two
/// consecutive iterations and inactive as soon as it fails; active indices
/// fall back to undetermined when the test fails, inactive ones when it holds.
class PredictionState {
 public:
  enum class Membership : unsigned char { undetermined, active, inactive };

  PredictionState() = default;
  explicit PredictionState(int n)
      : membership_(static_cast<std::size_t>(n), Membership::undetermined),
        last_test_(static_cast<std::size_t>(n), false) {}

  int size() const { return static_cast<int>(membership_.size()); }
  Membership membership(int i) const { return membership_[static_cast<std::size_t>(i)]; }
  bool last_test(int i) const { return last_test_[static_cast<std::size_t>(i)]; }

  IndexSet active() const { return collect(Membership::active); }
  IndexSet inactive() const { return collect(Membership::inactive); }
  IndexSet undetermined() const { return collect(Membership::undetermined); }

  friend PredictionState update_prediction(const PredictionState& state, const Vector& x,
                                           const Vector& s, double C);

 private:
  IndexSet collect(Membership which) const {
    return select_indices(size(), [&](int i) { return membership(i) == which; });
  }

  std::vector<Membership> membership_;
  std::vector<bool> last_test_;
};

inline PredictionState update_prediction(const PredictionState& state, const Vector& x,
                                         const Vector& s, double C) {
  detail::require(x.size() == state.size() && s.size() == state.size(), Errc::dimension_mismatch,
                  "update_prediction: dimension mismatch");
  using M = PredictionState::Membership;
  PredictionState next = state;
  for (int i = 0; i < state.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const bool test = x(i) < C && s(i) > C;
    switch (state.membership_[k]) {
      case M::undetermined:
        if (test && state.last_test_[k]) next.membership_[k] = M::active;
        else if (!test) next.membership_[k] = M::inactive;
        break;
      case M::active:
        if (!test) next.membership_[k] = M::undetermined;
        break;
      case M::inactive:
        if (test) next.membership_[k] = M::undetermined;
        break;
    }
    next.last_test_[k] = test;
  }
  return next;
}

struct PredictionRatios {
  double false_prediction = 0.0;
  double missed_prediction = 0.0;
  double correction = 1.0;
};

/// Scores a predicted active set against a reference one. Each ratio is a
/// fraction of |predicted U actual|; an empty union scores as a perfect
/// prediction.
inline PredictionRatios prediction_ratios(const IndexSet& predicted, const IndexSet& actual) {
  const IndexSet uni = set_union(predicted, actual);
  if (uni.empty()) return {};
  const IndexSet both = set_intersection(predicted, actual);
  const double denom = static_cast<double>(uni.size());
  PredictionRatios r;
  r.false_prediction = static_cast<double>(predicted.size() - both.size()) / denom;
  r.missed_prediction = static_cast<double>(actual.size() - both.size()) / denom;
  r.correction = static_cast<double>(both.size()) / denom;
  return r;
}

}  // namespace cpqp
