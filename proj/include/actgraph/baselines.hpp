#pragma once

// Reference prioritisation methods: Gini impurity of the softmax output,
// multiple-boundary clustering (MCP), distance-based surprise adequacy
// (DSA) and the confidence + last-hidden "Act" feature vector.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "actgraph/error.hpp"
#include "actgraph/ranking.hpp"
#include "actgraph/tensor.hpp"

namespace actgraph {

constexpr double kProbabilityRowTolerance = 1e-5;

template <typename Derived>
void check_probability_rows(const Eigen::MatrixBase<Derived>& probs) {
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const auto row = probs.row(r);
    if (!row.allFinite() || (row.array() < -kProbabilityRowTolerance).any() ||
        std::abs(row.sum() - 1.0) > kProbabilityRowTolerance) {
      throw Error(Errc::kInvalidArgument, "row " + std::to_string(r) + " is not a probability distribution");
    }
  }
}

/// 1 - sum_c p_c^2 per row. Higher means less confident.
template <typename Derived>
Eigen::VectorXd deepgini_scores(const Eigen::MatrixBase<Derived>& probs) {
  check_probability_rows(probs);
  return (1.0 - probs.template cast<double>().rowwise().squaredNorm().array()).matrix();
}

/// Top-2 boundary clustering: each case joins cluster (top1, top2) with
/// priority p_top2 / p_top1; selection round-robins over clusters in
/// (top1, top2) order, taking the best remaining case of each, until every
/// case is ranked. Scores are n - position so they sort back to the order.
RankedList mcp_prioritize(const FeatureMatrix& probs);

/// Training-set embeddings (last hidden layer) with their class ids.
class EmbeddingStore {
 public:
  EmbeddingStore(FeatureMatrix embeddings, std::vector<std::uint32_t> labels);

  const FeatureMatrix& embeddings() const { return embeddings_; }
  const std::vector<std::uint32_t>& labels() const { return labels_; }

  /// dist(e, x_a) / dist(x_a, x_b): x_a is the nearest training embedding of
  /// `predicted`, x_b the nearest embedding of another class to x_a. A zero
  /// denominator yields +inf.
  double surprise(std::span<const double> embedding, std::uint32_t predicted) const;

 private:
  FeatureMatrix embeddings_;
  std::vector<std::uint32_t> labels_;
  std::vector<double> other_class_distance_;
};

Eigen::VectorXd dsa_scores(const FeatureMatrix& test_embeddings, std::span<const std::uint32_t> predicted,
                           const EmbeddingStore& store);

/// Softmax output followed by the last hidden layer's activations.
template <typename A, typename B>
Eigen::VectorXd act_features(const Eigen::MatrixBase<A>& probs, const Eigen::MatrixBase<B>& hidden) {
  Eigen::VectorXd out(probs.size() + hidden.size());
  out.head(probs.size()) = probs.template cast<double>().reshaped();
  out.tail(hidden.size()) = hidden.template cast<double>().reshaped();
  return out;
}

}  // namespace actgraph
