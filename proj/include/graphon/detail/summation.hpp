#pragma once

// Order-canonical summation. Reductions over index sets that a vertex
// relabeling permutes are summed in sorted-value order, which makes results
// invariant under the relabeling (same multiset of terms, same fp result).

#include <algorithm>
#include <span>
#include <vector>

namespace graphon::detail {

inline double canonical_sum(std::span<double> terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double v : terms) s += v;
  return s;
}

inline double canonical_sum(std::vector<double>&& terms) {
  return canonical_sum(std::span<double>(terms));
}

}  // namespace graphon::detail
