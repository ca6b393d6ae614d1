#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace actgraph {

/// Priority ordering of test cases. `scores` and `flags` are indexed by the
/// original case index; `order` lists case indices, highest priority first.
struct RankedList {
  std::vector<std::size_t> order;
  std::vector<double> scores;
  std::vector<std::uint8_t> flags;
};

/// Sort by score descending; ties keep ascending original index.
/// +inf is a legal score and ranks first; NaN is rejected.
RankedList prioritize(std::span<const double> scores);

bool is_permutation_of_indices(std::span<const std::size_t> order, std::size_t n);

}  // namespace actgraph
