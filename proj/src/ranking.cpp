#include "actgraph/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "actgraph/error.hpp"

namespace actgraph {

RankedList prioritize(std::span<const double> scores) {
  for (double s : scores) {
    if (std::isnan(s)) throw Error(Errc::kNonFiniteData, "scores must not contain NaN");
  }
  RankedList out;
  out.scores.assign(scores.begin(), scores.end());
  out.order.resize(scores.size());
  std::iota(out.order.begin(), out.order.end(), std::size_t{0});
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return out;
}

bool is_permutation_of_indices(std::span<const std::size_t> order, std::size_t n) {
  if (order.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (std::size_t i : order) {
    if (i >= n || seen[i]) return false;
    seen[i] = true;
  }
  return true;
}

}  // namespace actgraph
