#pragma once

#include <algorithm>
#include <iterator>
#include <vector>

namespace cpqp {

/// Sorted, duplicate-free list of 0-based indices.
using IndexSet = std::vector<int>;

inline IndexSet make_index_set(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline IndexSet full_range(int n) {
  IndexSet out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = i;
  return out;
}

inline IndexSet set_union(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline IndexSet set_intersection(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline IndexSet set_difference(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline IndexSet complement(const IndexSet& a, int n) { return set_difference(full_range(n), a); }

inline bool is_subset(const IndexSet& a, const IndexSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline bool contains(const IndexSet& a, int i) { return std::binary_search(a.begin(), a.end(), i); }

template <typename Pred>
IndexSet select_indices(int n, Pred&& pred) {
  IndexSet out;
  for (int i = 0; i < n; ++i)
    if (pred(i)) out.push_back(i);
  return out;
}

}  // namespace cpqp
