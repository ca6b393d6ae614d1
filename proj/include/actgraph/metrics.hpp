#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "actgraph/tensor.hpp"

namespace actgraph {

/// Number of leading cases a RAUC value covers; `all()` covers the whole list.
struct Cutoff {
  std::size_t n = std::numeric_limits<std::size_t>::max();

  static constexpr Cutoff all() { return Cutoff{}; }
  bool is_all() const { return n == std::numeric_limits<std::size_t>::max(); }
  /// "100", "all", ...
  std::string label() const;
  static Cutoff parse(std::string_view text);
  static std::vector<Cutoff> parse_list(std::string_view comma_separated);

  bool operator==(const Cutoff&) const = default;
};

/// Step-function area: sum over k = 1..min(n, N) of the faults found among
/// the first k cases of `order`.
double prefix_auc(std::span<const std::size_t> order, std::span<const std::uint8_t> flags, Cutoff cutoff);

/// AUC(order, n) / AUC(ideal, n). `flags` is indexed by case index. Throws
/// NoFaults when no case is flagged.
double rauc(std::span<const std::size_t> order, std::span<const std::uint8_t> flags, Cutoff cutoff = Cutoff::all());

/// Mean RAUC of `shuffles` seeded uniformly random orderings.
double random_rauc_mean(std::span<const std::uint8_t> flags, Cutoff cutoff, std::size_t shuffles, std::uint64_t seed);

struct DistanceReport {
  std::vector<std::uint32_t> groups;  // sorted distinct type labels
  Eigen::MatrixXd mean_distance;      // [group, group]; diagonal = intra-group
  std::vector<std::uint8_t> singleton;

  /// group_a,group_b,mean_distance,singleton_warning
  std::string to_csv() const;
};

/// Mean pairwise Euclidean distance within and between type groups. A group
/// with a single member reports an intra distance of 0 and raises its
/// singleton warning.
DistanceReport distance_report(const FeatureMatrix& features, std::span<const std::uint32_t> types);

}  // namespace actgraph
