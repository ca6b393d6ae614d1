#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "actgraph/model.hpp"
#include "actgraph/tensor.hpp"

namespace actgraph {

struct TrainOptions {
  std::size_t epochs = 20;
  double learning_rate = 0.05;
  std::uint64_t seed = 42;
  std::size_t batch_size = 1;
};

struct TrainResult {
  LayerWeights weights;
  /// Mean training cross-entropy; entry 0 is before the first epoch.
  std::vector<double> epoch_loss;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) kernels, zero biases.
LayerWeights initial_weights(const ModelSpec& spec, std::uint64_t seed);

/// Plain minibatch SGD on softmax cross-entropy. Throws Diverged as soon as
/// the loss becomes non-finite.
TrainResult train_sgd(const ModelSpec& spec, const LabeledDataset& data, const TrainOptions& options);

double mean_cross_entropy(const Network& net, const LabeledDataset& data);
double accuracy(const Network& net, const LabeledDataset& data);

}  // namespace actgraph
