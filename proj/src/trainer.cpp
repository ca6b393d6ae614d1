#include "actgraph/trainer.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "actgraph/error.hpp"
#include "actgraph/random.hpp"

namespace actgraph {

LayerWeights initial_weights(const ModelSpec& spec, std::uint64_t seed) {
  infer_shapes(spec);
  SplitMix64 rng(seed);
  LayerWeights weights;
  for (std::size_t i : trainable_layers(spec)) {
    const Shape ks = kernel_shape(spec.layers[i]);
    const std::size_t out = ks.back();
    const std::size_t fan_in = element_count(ks) / out;
    const double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<float> kernel(element_count(ks));
    for (auto& v : kernel) v = static_cast<float>(rng.uniform(-limit, limit));
    weights.push_back({Tensor(ks, std::move(kernel)), Tensor::zeros({out})});
  }
  return weights;
}

double mean_cross_entropy(const Network& net, const LabeledDataset& data) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) total += net.loss_and_gradients(data.inputs.row(i), data.labels[i], nullptr);
  return total / static_cast<double>(data.size());
}

double accuracy(const Network& net, const LabeledDataset& data) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto probs = net.forward(data.inputs.row(i)).probs;
    Eigen::Index best = 0;
    probs.maxCoeff(&best);
    if (static_cast<std::uint32_t>(best) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainResult train_sgd(const ModelSpec& spec, const LabeledDataset& data, const TrainOptions& options) {
  if (data.size() == 0) throw Error(Errc::kInvalidArgument, "training set is empty");
  if (!(options.learning_rate > 0.0)) throw Error(Errc::kInvalidArgument, "learning rate must be positive");
  if (options.batch_size == 0) throw Error(Errc::kInvalidArgument, "batch size must be positive");
  data.validate(spec.num_classes);

  Network net(spec, initial_weights(spec, options.seed));
  TrainResult result;
  if (options.epochs == 0) {
    result.weights = net.weights();
    return result;
  }
  auto record_loss = [&](std::size_t epoch) {
    const double loss = mean_cross_entropy(net, data);
    if (!std::isfinite(loss)) {
      throw Error(Errc::kDiverged, "training loss became non-finite at epoch " + std::to_string(epoch));
    }
    result.epoch_loss.push_back(loss);
  };
  record_loss(0);

  // The shuffle stream is separate from the init stream so changing the
  // epoch count never perturbs the initial weights.
  SplitMix64 rng(options.seed ^ 0x5DEECE66DULL);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      Gradients grads = net.zero_gradients();
      for (std::size_t k = start; k < end; ++k) {
        const double loss = net.loss_and_gradients(data.inputs.row(order[k]), data.labels[order[k]], &grads);
        if (!std::isfinite(loss)) {
          throw Error(Errc::kDiverged, "non-finite loss during epoch " + std::to_string(epoch));
        }
      }
      net.apply_gradients(grads, options.learning_rate / static_cast<double>(end - start));
    }
    record_loss(epoch);
  }
  result.weights = net.weights();
  return result;
}

}  // namespace actgraph
