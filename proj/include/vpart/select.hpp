#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "vpart/core.hpp"
#include "vpart/rng.hpp"

namespace vpart {

/**
 * Randomized quickselect: reorders `values` so that values[rank] holds the
 * element of that rank in sorted order, everything before it is <= and
 * everything after it is >=. Expected O(n).
 *
 * Pivots come from a generator seeded with the input length, so the
 * permutation is reproducible; the selected value never depends on it.
 */
inline double select_rank(std::span<double> values, std::size_t rank) {
  if (values.empty()) throw Error("selection on an empty sequence");
  if (rank >= values.size()) throw Error("selection rank out of range");
  Rng rng(values.size());
  std::size_t lo = 0;
  std::size_t hi = values.size();  // half-open
  while (hi - lo > 1) {
    const double pivot = values[lo + rng.below(hi - lo)];
    // three-way partition: [lo, lt) < pivot, [lt, gt) == pivot, [gt, hi) > pivot
    std::size_t lt = lo, i = lo, gt = hi;
    while (i < gt) {
      if (values[i] < pivot) {
        std::swap(values[lt++], values[i++]);
      } else if (values[i] > pivot) {
        std::swap(values[i], values[--gt]);
      } else {
        ++i;
      }
    }
    if (rank < lt) {
      hi = lt;
    } else if (rank >= gt) {
      lo = gt;
    } else {
      return pivot;
    }
  }
  return values[lo];
}

/// Lower median: the element at rank floor((n-1)/2) of the sorted order.
inline double select_median(std::vector<double> values) {
  if (values.empty()) throw Error("median of an empty sequence");
  const std::size_t rank = (values.size() - 1) / 2;
  return select_rank(values, rank);
}

}  // namespace vpart
