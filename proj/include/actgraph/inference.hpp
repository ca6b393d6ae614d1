#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "actgraph/graph.hpp"
#include "actgraph/model.hpp"
#include "actgraph/tensor.hpp"

namespace actgraph {

enum class Method { kActGraph, kAct, kGini, kMcp, kDsa };

Method parse_method(std::string_view name);
std::string_view to_string(Method method);
/// ActGraph and Act train the boosted ranker; the others score directly.
bool is_supervised(Method method);

/// Run fn(i) for i in [0, n) on up to `threads` workers. Each index is
/// handled exactly once, so results written per index do not depend on the
/// thread count.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

/// Everything the prioritisation methods need from one forward pass per case.
struct InferenceResult {
  FeatureMatrix probs;        // [n, classes]
  FeatureMatrix last_hidden;  // [n, units of the last hidden trainable layer]
  FeatureMatrix graph;        // [n, cnf dims]; empty unless an extractor was given
  std::vector<std::uint32_t> predicted;
};

InferenceResult run_inference(const Network& net, const Tensor& inputs, const CnfExtractor<double>* extractor,
                              std::size_t threads = 1);

/// argmax with ties going to the lowest class index.
std::uint32_t argmax(std::span<const double> probs);

/// 1 where the prediction differs from the ground-truth label.
std::vector<std::uint8_t> label_faults(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> labels);
std::vector<std::uint8_t> label_faults(const Network& net, const LabeledDataset& data, std::size_t threads = 1);

/// Ranker input for a supervised method: cnf features or [probs | last hidden].
FeatureMatrix method_features(Method method, const InferenceResult& inference);

}  // namespace actgraph
