#include "actgraph/baselines.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <utility>

namespace actgraph {
namespace {

std::pair<Eigen::Index, Eigen::Index> top_two(const Eigen::Ref<const Eigen::RowVectorXd>& p) {
  Eigen::Index first = 0;
  for (Eigen::Index c = 1; c < p.size(); ++c) {
    if (p[c] > p[first]) first = c;
  }
  Eigen::Index second = first == 0 ? 1 : 0;
  for (Eigen::Index c = 0; c < p.size(); ++c) {
    if (c != first && p[c] > p[second]) second = c;
  }
  return {first, second};
}

}  // namespace

RankedList mcp_prioritize(const FeatureMatrix& probs) {
  if (probs.cols() < 2) throw Error(Errc::kInvalidArgument, "MCP needs at least two classes");
  check_probability_rows(probs);
  struct Member {
    double ratio;
    std::size_t index;
  };
  std::map<std::pair<Eigen::Index, Eigen::Index>, std::vector<Member>> clusters;
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const Eigen::RowVectorXd row = probs.row(r);
    const auto [t1, t2] = top_two(row);
    const double ratio = row[t1] > 0.0 ? row[t2] / row[t1] : 1.0;
    clusters[{t1, t2}].push_back({ratio, static_cast<std::size_t>(r)});
  }
  std::vector<std::vector<Member>> queues;
  for (auto& [key, members] : clusters) {
    std::stable_sort(members.begin(), members.end(), [](const Member& a, const Member& b) { return a.ratio > b.ratio; });
    queues.push_back(std::move(members));
  }

  const auto n = static_cast<std::size_t>(probs.rows());
  RankedList out;
  out.order.reserve(n);
  std::vector<std::size_t> cursor(queues.size(), 0);
  while (out.order.size() < n) {
    for (std::size_t q = 0; q < queues.size(); ++q) {
      if (cursor[q] < queues[q].size()) out.order.push_back(queues[q][cursor[q]++].index);
    }
  }
  out.scores.resize(n);
  for (std::size_t pos = 0; pos < n; ++pos) out.scores[out.order[pos]] = static_cast<double>(n - pos);
  return out;
}

EmbeddingStore::EmbeddingStore(FeatureMatrix embeddings, std::vector<std::uint32_t> labels)
    : embeddings_(std::move(embeddings)), labels_(std::move(labels)) {
  if (static_cast<std::size_t>(embeddings_.rows()) != labels_.size()) {
    throw Error(Errc::kCountMismatch, "embedding rows and labels differ in length");
  }
  if (std::set<std::uint32_t>(labels_.begin(), labels_.end()).size() < 2) {
    throw Error(Errc::kEmptyClass, "embedding store needs at least two classes");
  }
  if (!embeddings_.allFinite()) throw Error(Errc::kNonFiniteData, "embeddings must be finite");
  const Eigen::Index m = embeddings_.rows();
  other_class_distance_.assign(static_cast<std::size_t>(m), std::numeric_limits<double>::infinity());
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      if (labels_[static_cast<std::size_t>(a)] == labels_[static_cast<std::size_t>(b)]) continue;
      const double d = (embeddings_.row(a) - embeddings_.row(b)).norm();
      auto& best = other_class_distance_[static_cast<std::size_t>(a)];
      best = std::min(best, d);
    }
  }
}

double EmbeddingStore::surprise(std::span<const double> embedding, std::uint32_t predicted) const {
  if (embedding.size() != static_cast<std::size_t>(embeddings_.cols())) {
    throw Error(Errc::kDimensionMismatch, "embedding dimension differs from the store");
  }
  const Eigen::Map<const Eigen::RowVectorXd> e(embedding.data(), static_cast<Eigen::Index>(embedding.size()));
  Eigen::Index nearest = -1;
  double nearest_dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < embeddings_.rows(); ++r) {
    if (labels_[static_cast<std::size_t>(r)] != predicted) continue;
    const double d = (embeddings_.row(r) - e).norm();
    if (d < nearest_dist || nearest < 0) {
      nearest = r;
      nearest_dist = d;
    }
  }
  if (nearest < 0) {
    throw Error(Errc::kInvalidArgument, "predicted class " + std::to_string(predicted) + " has no training embeddings");
  }
  const double denom = other_class_distance_[static_cast<std::size_t>(nearest)];
  if (denom == 0.0) return std::numeric_limits<double>::infinity();
  return nearest_dist / denom;
}

Eigen::VectorXd dsa_scores(const FeatureMatrix& test_embeddings, std::span<const std::uint32_t> predicted,
                           const EmbeddingStore& store) {
  if (static_cast<std::size_t>(test_embeddings.rows()) != predicted.size()) {
    throw Error(Errc::kCountMismatch, "embedding rows and predictions differ in length");
  }
  Eigen::VectorXd out(test_embeddings.rows());
  for (Eigen::Index r = 0; r < test_embeddings.rows(); ++r) {
    const Eigen::RowVectorXd row = test_embeddings.row(r);
    out[r] = store.surprise(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())),
                            predicted[static_cast<std::size_t>(r)]);
  }
  return out;
}

}  // namespace actgraph
