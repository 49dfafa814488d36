#pragma once

#include <vector>

namespace oasf {

// Enumerates k-subsets of {0,...,n-1} in lexicographic order.
// Deterministic order matters: verification witnesses and audit reports
// are defined as the first failure in this order.
template <typename Fn>
void for_each_combination(int n, int k, Fn&& fn) {
  if (k < 0 || k > n) return;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  for (;;) {
    fn(const_cast<const std::vector<int>&>(idx));
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

// All nonempty subsets of {0,...,n-1} with size <= max_size, ascending by
// size, lexicographic within a size.
inline std::vector<std::vector<int>> subsets_up_to(int n, int max_size) {
  std::vector<std::vector<int>> out;
  for (int k = 1; k <= max_size && k <= n; ++k) {
    for_each_combination(n, k, [&](const std::vector<int>& idx) { out.push_back(idx); });
  }
  return out;
}

}  // namespace oasf
