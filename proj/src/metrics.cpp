#include "actgraph/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <numeric>
#include <sstream>

#include "actgraph/error.hpp"
#include "actgraph/random.hpp"
#include "actgraph/ranking.hpp"
#include "actgraph/tensor_io.hpp"

namespace actgraph {

std::string Cutoff::label() const { return is_all() ? "all" : std::to_string(n); }

Cutoff Cutoff::parse(std::string_view text) {
  if (text == "all" || text == "ALL") return all();
  std::size_t n = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
  if (ec != std::errc{} || ptr != text.data() + text.size() || n == 0) {
    throw Error(Errc::kInvalidArgument, "cutoff must be a positive integer or \"all\", got \"" + std::string(text) + "\"");
  }
  return Cutoff{n};
}

std::vector<Cutoff> Cutoff::parse_list(std::string_view text) {
  std::vector<Cutoff> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) throw Error(Errc::kInvalidArgument, "empty cutoff list");
  return out;
}

double prefix_auc(std::span<const std::size_t> order, std::span<const std::uint8_t> flags, Cutoff cutoff) {
  const std::size_t limit = std::min(cutoff.n, order.size());
  double area = 0.0;
  std::size_t found = 0;
  for (std::size_t k = 0; k < limit; ++k) {
    found += flags[order[k]] ? 1 : 0;
    area += static_cast<double>(found);
  }
  return area;
}

double rauc(std::span<const std::size_t> order, std::span<const std::uint8_t> flags, Cutoff cutoff) {
  if (!is_permutation_of_indices(order, flags.size())) {
    throw Error(Errc::kInvalidArgument, "order must be a permutation of the flagged cases");
  }
  const auto faults = static_cast<std::size_t>(std::count_if(flags.begin(), flags.end(), [](auto f) { return f != 0; }));
  if (faults == 0) throw Error(Errc::kNoFaults, "RAUC is undefined without fault-revealing cases");
  const std::size_t limit = std::min(cutoff.n, order.size());
  double ideal = 0.0;
  for (std::size_t k = 1; k <= limit; ++k) ideal += static_cast<double>(std::min(k, faults));
  return prefix_auc(order, flags, cutoff) / ideal;
}

double random_rauc_mean(std::span<const std::uint8_t> flags, Cutoff cutoff, std::size_t shuffles, std::uint64_t seed) {
  if (shuffles == 0) throw Error(Errc::kInvalidArgument, "need at least one shuffle");
  SplitMix64 rng(seed);
  std::vector<std::size_t> order(flags.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double total = 0.0;
  for (std::size_t s = 0; s < shuffles; ++s) {
    rng.shuffle(std::span<std::size_t>(order));
    total += rauc(order, flags, cutoff);
  }
  return total / static_cast<double>(shuffles);
}

std::string DistanceReport::to_csv() const {
  std::ostringstream out;
  out << "group_a,group_b,mean_distance,singleton_warning\n";
  for (std::size_t a = 0; a < groups.size(); ++a) {
    for (std::size_t b = a; b < groups.size(); ++b) {
      out << groups[a] << ',' << groups[b] << ','
          << format_number(mean_distance(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))) << ','
          << (a == b ? static_cast<int>(singleton[a]) : 0) << '\n';
    }
  }
  return out.str();
}

DistanceReport distance_report(const FeatureMatrix& features, std::span<const std::uint32_t> types) {
  if (static_cast<std::size_t>(features.rows()) != types.size()) {
    throw Error(Errc::kCountMismatch, "feature rows and type labels differ in length");
  }
  std::map<std::uint32_t, std::vector<Eigen::Index>> members;
  for (std::size_t i = 0; i < types.size(); ++i) members[types[i]].push_back(static_cast<Eigen::Index>(i));
  if (members.size() < 2) throw Error(Errc::kInvalidArgument, "distance report needs at least two types");

  DistanceReport rep;
  const auto g = static_cast<Eigen::Index>(members.size());
  rep.mean_distance = Eigen::MatrixXd::Zero(g, g);
  std::vector<const std::vector<Eigen::Index>*> lists;
  for (const auto& [type, rows] : members) {
    rep.groups.push_back(type);
    rep.singleton.push_back(rows.size() == 1 ? 1 : 0);
    lists.push_back(&rows);
  }
  for (Eigen::Index a = 0; a < g; ++a) {
    for (Eigen::Index b = a; b < g; ++b) {
      const auto& ra = *lists[static_cast<std::size_t>(a)];
      const auto& rb = *lists[static_cast<std::size_t>(b)];
      double total = 0.0;
      std::size_t pairs = 0;
      for (std::size_t i = 0; i < ra.size(); ++i) {
        for (std::size_t j = (a == b ? i + 1 : 0); j < rb.size(); ++j) {
          total += (features.row(ra[i]) - features.row(rb[j])).norm();
          ++pairs;
        }
      }
      const double mean = pairs ? total / static_cast<double>(pairs) : 0.0;
      rep.mean_distance(a, b) = mean;
      rep.mean_distance(b, a) = mean;
    }
  }
  return rep;
}

}  // namespace actgraph
