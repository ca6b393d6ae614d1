#include "actgraph/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "actgraph/error.hpp"
#include "actgraph/random.hpp"
#include "actgraph/tensor_io.hpp"

namespace actgraph {
namespace {

using Json = nlohmann::json;

constexpr int kBoosterVersion = 1;
// Minimum loss reduction for a split to count; same role as XGBoost's kRtEps.
constexpr double kMinSplitGain = 1e-6;
constexpr double kMinHessian = 1e-16;

double sigmoid(double m) { return 1.0 / (1.0 + std::exp(-m)); }

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

class TreeGrower {
 public:
  TreeGrower(const FeatureMatrix& x, const std::vector<double>& grad, const std::vector<double>& hess,
             const std::vector<int>& features, const BoosterParams& params)
      : x_(x), grad_(grad), hess_(hess), features_(features), params_(params) {}

  RegressionTree grow(std::vector<std::size_t> rows) {
    tree_.nodes.clear();
    build(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  double weight(double g, double h) const { return -g / (h + params_.lambda); }
  double score(double g, double h) const { return g * g / (h + params_.lambda); }

  int build(std::vector<std::size_t> rows, std::size_t depth) {
    double g = 0.0;
    double h = 0.0;
    for (std::size_t r : rows) {
      g += grad_[r];
      h += hess_[r];
    }
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{-1, 0.0, -1, -1, weight(g, h)});
    if (depth >= params_.max_depth || rows.size() < 2) return id;

    const SplitCandidate best = find_split(rows, g, h);
    if (best.feature < 0 || best.gain <= kMinSplitGain) return id;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t r : rows) {
      (x_(static_cast<Eigen::Index>(r), best.feature) < best.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = build(std::move(left), depth + 1);
    const int r = build(std::move(right), depth + 1);
    TreeNode& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  SplitCandidate find_split(const std::vector<std::size_t>& rows, double g, double h) const {
    SplitCandidate best;
    const double parent = score(g, h);
    std::vector<std::size_t> sorted = rows;
    for (int f : features_) {
      const auto col = static_cast<Eigen::Index>(f);
      std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        return x_(static_cast<Eigen::Index>(a), col) < x_(static_cast<Eigen::Index>(b), col);
      });
      double gl = 0.0;
      double hl = 0.0;
      for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
        gl += grad_[sorted[k]];
        hl += hess_[sorted[k]];
        const double v = x_(static_cast<Eigen::Index>(sorted[k]), col);
        const double next = x_(static_cast<Eigen::Index>(sorted[k + 1]), col);
        if (!(next > v)) continue;
        const double hr = h - hl;
        if (hl < params_.min_child_weight || hr < params_.min_child_weight) continue;
        const double gain = 0.5 * (score(gl, hl) + score(g - gl, hr) - parent) - params_.gamma;
        if (gain > best.gain) {
          double threshold = v + (next - v) / 2.0;
          if (!(threshold > v)) threshold = next;
          best = {gain, f, threshold};
        }
      }
    }
    return best;
  }

  const FeatureMatrix& x_;
  const std::vector<double>& grad_;
  const std::vector<double>& hess_;
  const std::vector<int>& features_;
  const BoosterParams& params_;
  RegressionTree tree_;
};

void check_params(const BoosterParams& p) {
  if (!(p.learning_rate > 0.0)) throw Error(Errc::kInvalidArgument, "learning_rate must be positive");
  if (!(p.colsample_bytree > 0.0 && p.colsample_bytree <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "colsample_bytree must be in (0, 1]");
  }
  if (!(p.lambda >= 0.0) || !(p.gamma >= 0.0) || !(p.min_child_weight >= 0.0)) {
    throw Error(Errc::kInvalidArgument, "lambda, gamma and min_child_weight must be non-negative");
  }
}

}  // namespace

RankTrainSet balance_trainset(const FeatureMatrix& features, std::span<const std::uint8_t> labels,
                              std::size_t target_per_class, std::uint64_t seed) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw Error(Errc::kCountMismatch, "feature rows and labels differ in length");
  }
  if (target_per_class == 0) throw Error(Errc::kInvalidArgument, "target_per_class must be at least 1");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1) throw Error(Errc::kInvalidArgument, "ranker labels must be 0 or 1");
    by_class[labels[i]].push_back(i);
  }
  if (by_class[0].empty() || by_class[1].empty()) {
    throw Error(Errc::kEmptyClass, std::string("no ") + (by_class[0].empty() ? "negative" : "positive") +
                                       " cases to balance");
  }
  SplitMix64 rng(seed);
  RankTrainSet out;
  out.features.resize(static_cast<Eigen::Index>(2 * target_per_class), features.cols());
  out.labels.reserve(2 * target_per_class);
  Eigen::Index row = 0;
  for (std::uint8_t c = 0; c < 2; ++c) {
    for (std::size_t k = 0; k < target_per_class; ++k) {
      const std::size_t src = by_class[c][rng.index(by_class[c].size())];
      out.features.row(row++) = features.row(static_cast<Eigen::Index>(src));
      out.labels.push_back(c);
    }
  }
  return out;
}

double RegressionTree::predict(std::span<const double> row) const {
  std::size_t id = 0;
  while (nodes[id].feature >= 0) {
    const TreeNode& n = nodes[id];
    id = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
  }
  return nodes[id].value;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

double logistic_loss(std::span<const double> probs, std::span<const std::uint8_t> labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], 1e-16, 1.0 - 1e-16);
    total -= labels[i] ? std::log(p) : std::log1p(-p);
  }
  return total / static_cast<double>(probs.size());
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos = 0.0;
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]]) {
        rank_sum += avg_rank;
        pos += 1.0;
      }
    }
    i = j;
  }
  const double neg = static_cast<double>(scores.size()) - pos;
  if (pos == 0.0 || neg == 0.0) throw Error(Errc::kEmptyClass, "AUC needs both classes");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

Booster Booster::fit(const RankTrainSet& train, const BoosterParams& params) {
  check_params(params);
  const auto n = static_cast<std::size_t>(train.features.rows());
  const auto d = static_cast<std::size_t>(train.features.cols());
  if (n != train.labels.size()) throw Error(Errc::kCountMismatch, "feature rows and labels differ in length");
  if (n < 2) throw Error(Errc::kInvalidArgument, "ranker needs at least two training rows");
  if (d == 0) throw Error(Errc::kInvalidArgument, "ranker needs at least one feature");
  if (!train.features.allFinite()) throw Error(Errc::kNonFiniteData, "ranker features must be finite");
  std::size_t positives = 0;
  for (auto y : train.labels) {
    if (y > 1) throw Error(Errc::kInvalidArgument, "ranker labels must be 0 or 1");
    positives += y;
  }
  if (positives == 0 || positives == n) throw Error(Errc::kEmptyClass, "ranker training set has a single class");

  Booster b;
  b.params_ = params;
  b.num_features_ = d;
  const double rate = static_cast<double>(positives) / static_cast<double>(n);
  b.base_score_ = std::log(rate / (1.0 - rate));

  std::vector<double> margin(n, b.base_score_);
  std::vector<double> prob(n);
  std::vector<double> grad(n);
  std::vector<double> hess(n);
  auto refresh = [&]() {
    for (std::size_t i = 0; i < n; ++i) prob[i] = sigmoid(margin[i]);
    b.training_loss_.push_back(logistic_loss(prob, train.labels));
  };
  refresh();

  const auto sampled = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(params.colsample_bytree * static_cast<double>(d))), 1, d);
  SplitMix64 rng(params.seed);
  std::vector<int> all_features(d);
  std::iota(all_features.begin(), all_features.end(), 0);
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});

  for (std::size_t t = 0; t < params.num_rounds; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      grad[i] = prob[i] - static_cast<double>(train.labels[i]);
      hess[i] = std::max(prob[i] * (1.0 - prob[i]), kMinHessian);
    }
    for (std::size_t k = 0; k < sampled; ++k) std::swap(all_features[k], all_features[k + rng.index(d - k)]);
    std::vector<int> features(all_features.begin(), all_features.begin() + static_cast<std::ptrdiff_t>(sampled));
    std::sort(features.begin(), features.end());

    TreeGrower grower(train.features, grad, hess, features, params);
    b.trees_.push_back(grower.grow(rows));
    const RegressionTree& tree = b.trees_.back();
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::RowVectorXd row = train.features.row(static_cast<Eigen::Index>(i));
      margin[i] += params.learning_rate * tree.predict(std::span<const double>(row.data(), d));
    }
    refresh();
  }
  return b;
}

double Booster::margin(std::span<const double> row) const {
  if (row.size() != num_features_) {
    throw Error(Errc::kDimensionMismatch, "ranker expects " + std::to_string(num_features_) + " features, got " +
                                              std::to_string(row.size()));
  }
  double m = base_score_;
  for (const auto& tree : trees_) m += params_.learning_rate * tree.predict(row);
  return m;
}

Eigen::VectorXd Booster::score(const FeatureMatrix& features) const {
  if (static_cast<std::size_t>(features.cols()) != num_features_) {
    throw Error(Errc::kDimensionMismatch, "ranker expects " + std::to_string(num_features_) + " features, got " +
                                              std::to_string(features.cols()));
  }
  Eigen::VectorXd out(features.rows());
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    const Eigen::RowVectorXd row = features.row(r);
    out[r] = sigmoid(margin(std::span<const double>(row.data(), num_features_)));
  }
  return out;
}

Booster Booster::from_parts(std::size_t num_features, double base_score, double learning_rate,
                            std::vector<RegressionTree> trees) {
  Booster b;
  b.num_features_ = num_features;
  b.base_score_ = base_score;
  b.params_.learning_rate = learning_rate;
  b.params_.num_rounds = trees.size();
  for (const auto& tree : trees) {
    for (const auto& node : tree.nodes) {
      if (node.feature >= static_cast<int>(num_features)) throw Error(Errc::kDimensionMismatch, "split feature out of range");
    }
  }
  b.trees_ = std::move(trees);
  return b;
}

std::string Booster::to_json() const {
  Json trees = Json::array();
  for (const auto& tree : trees_) {
    Json nodes = Json::array();
    for (const auto& n : tree.nodes) {
      nodes.push_back(Json{{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right},
                           {"value", n.value}});
    }
    trees.push_back(Json{{"nodes", nodes}});
  }
  Json j{{"version", kBoosterVersion},
         {"objective", "binary:logistic"},
         {"num_features", num_features_},
         {"base_score", base_score_},
         {"params",
          {{"learning_rate", params_.learning_rate},
           {"colsample_bytree", params_.colsample_bytree},
           {"max_depth", params_.max_depth},
           {"num_rounds", params_.num_rounds},
           {"lambda", params_.lambda},
           {"gamma", params_.gamma},
           {"min_child_weight", params_.min_child_weight},
           {"seed", params_.seed}}},
         {"training_loss", training_loss_},
         {"trees", trees}};
  return j.dump(1);
}

Booster Booster::from_json(std::string_view text) {
  try {
    const Json j = Json::parse(text);
    if (j.at("version").get<int>() != kBoosterVersion) {
      throw Error(Errc::kUnsupportedVersion, "ranker model version " + j.at("version").dump());
    }
    Booster b;
    b.num_features_ = j.at("num_features").get<std::size_t>();
    b.base_score_ = j.at("base_score").get<double>();
    const Json& p = j.at("params");
    b.params_.learning_rate = p.at("learning_rate").get<double>();
    b.params_.colsample_bytree = p.at("colsample_bytree").get<double>();
    b.params_.max_depth = p.at("max_depth").get<std::size_t>();
    b.params_.num_rounds = p.at("num_rounds").get<std::size_t>();
    b.params_.lambda = p.at("lambda").get<double>();
    b.params_.gamma = p.at("gamma").get<double>();
    b.params_.min_child_weight = p.at("min_child_weight").get<double>();
    b.params_.seed = p.at("seed").get<std::uint64_t>();
    b.training_loss_ = j.value("training_loss", std::vector<double>{});
    for (const auto& t : j.at("trees")) {
      RegressionTree tree;
      for (const auto& n : t.at("nodes")) {
        TreeNode node{n.at("feature").get<int>(), n.at("threshold").get<double>(), n.at("left").get<int>(),
                      n.at("right").get<int>(), n.at("value").get<double>()};
        const int count = static_cast<int>(t.at("nodes").size());
        const int self = static_cast<int>(tree.nodes.size());
        // Children always follow their parent, which rules out cycles.
        if (node.feature >= static_cast<int>(b.num_features_) ||
            (node.feature >= 0 && (node.left <= self || node.right <= self || node.left >= count || node.right >= count))) {
          throw Error(Errc::kBadHeader, "malformed tree node");
        }
        tree.nodes.push_back(node);
      }
      if (tree.nodes.empty()) throw Error(Errc::kBadHeader, "empty tree");
      b.trees_.push_back(std::move(tree));
    }
    return b;
  } catch (const Json::exception& e) {
    throw Error(Errc::kBadHeader, std::string("invalid ranker JSON: ") + e.what());
  }
}

void Booster::save(const std::filesystem::path& path) const { write_file(path, to_json()); }

Booster Booster::load(const std::filesystem::path& path) { return from_json(read_file(path)); }

}  // namespace actgraph
