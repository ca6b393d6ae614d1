#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "actgraph/tensor.hpp"

namespace actgraph {

/// Pointwise training set for the ranker: one feature row per case, label 1
/// when the model mispredicts it.
struct RankTrainSet {
  FeatureMatrix features;
  std::vector<std::uint8_t> labels;
};

/// Resample each class with replacement to exactly `target_per_class` rows.
/// Output holds the negatives first, then the positives.
RankTrainSet balance_trainset(const FeatureMatrix& features, std::span<const std::uint8_t> labels,
                              std::size_t target_per_class, std::uint64_t seed);

struct BoosterParams {
  double learning_rate = 0.1;
  double colsample_bytree = 0.3;
  std::size_t max_depth = 5;
  std::size_t num_rounds = 100;
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
  std::uint64_t seed = 42;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;  // rows with x[feature] < threshold
  int right = -1;
  double value = 0.0;  // leaf weight, before shrinkage
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> row) const;
  std::size_t leaf_count() const;
};

/// Second-order boosted regression trees with a binary logistic objective.
class Booster {
 public:
  Booster() = default;

  static Booster fit(const RankTrainSet& train, const BoosterParams& params = {});

  /// Probability of label 1 for each row.
  Eigen::VectorXd score(const FeatureMatrix& features) const;
  double margin(std::span<const double> row) const;

  const std::vector<RegressionTree>& trees() const { return trees_; }
  const BoosterParams& params() const { return params_; }
  double base_score() const { return base_score_; }
  std::size_t num_features() const { return num_features_; }
  /// Mean logistic loss on the training set; entry 0 is before the first tree.
  const std::vector<double>& training_loss() const { return training_loss_; }

  std::string to_json() const;
  static Booster from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Booster load(const std::filesystem::path& path);

  /// Build a booster from explicit parts (fixtures and tests).
  static Booster from_parts(std::size_t num_features, double base_score, double learning_rate,
                            std::vector<RegressionTree> trees);

 private:
  BoosterParams params_;
  double base_score_ = 0.0;
  std::size_t num_features_ = 0;
  std::vector<RegressionTree> trees_;
  std::vector<double> training_loss_;
};

double logistic_loss(std::span<const double> probs, std::span<const std::uint8_t> labels);

/// Area under the ROC curve with ties counted as 1/2.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

}  // namespace actgraph
