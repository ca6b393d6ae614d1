#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "actgraph/tensor.hpp"

namespace actgraph {

struct DenseSpec {
  std::size_t in = 0;
  std::size_t out = 0;
  bool operator==(const DenseSpec&) const = default;
};

struct Conv2DSpec {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;
  bool operator==(const Conv2DSpec&) const = default;
};

struct MaxPoolSpec {
  std::size_t size = 2;
  std::size_t stride = 2;
  bool operator==(const MaxPoolSpec&) const = default;
};

struct FlattenSpec {
  bool operator==(const FlattenSpec&) const = default;
};
struct ReLUSpec {
  bool operator==(const ReLUSpec&) const = default;
};
struct SoftmaxSpec {
  bool operator==(const SoftmaxSpec&) const = default;
};

using LayerSpec = std::variant<DenseSpec, Conv2DSpec, MaxPoolSpec, FlattenSpec, ReLUSpec, SoftmaxSpec>;

inline bool is_trainable(const LayerSpec& layer) {
  return std::holds_alternative<DenseSpec>(layer) || std::holds_alternative<Conv2DSpec>(layer);
}

/// Feed-forward architecture. Images are laid out as [H, W, C].
struct ModelSpec {
  Shape input_shape;
  std::vector<LayerSpec> layers;
  std::size_t num_classes = 0;

  bool operator==(const ModelSpec&) const = default;
};

/// Output shape of every layer, in order. Throws SpecMismatch when adjacent
/// layers do not compose or the softmax/trainable-layer rules are violated.
std::vector<Shape> infer_shapes(const ModelSpec& spec);

/// Indices into `spec.layers` of the Dense/Conv2D layers.
std::vector<std::size_t> trainable_layers(const ModelSpec& spec);

/// One neuron per Dense output unit, one per Conv2D filter.
std::vector<std::size_t> neuron_counts(const ModelSpec& spec);

std::string spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(std::string_view json);

struct LayerParams {
  Tensor kernel;  // Dense: [in, out]; Conv2D: [kh, kw, in_ch, out_ch]
  Tensor bias;    // [out]
  bool operator==(const LayerParams&) const = default;
};

/// One entry per trainable layer, in layer order.
using LayerWeights = std::vector<LayerParams>;

Shape kernel_shape(const LayerSpec& layer);
void check_weights(const ModelSpec& spec, const LayerWeights& weights);

/// Rows are spatial positions (row-major over H, W), columns are neurons.
/// Dense layers produce a single row.
using ActivationMap = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Post-nonlinearity output of every trainable layer for one case.
struct ActivationCapture {
  std::vector<ActivationMap> layers;
};

struct ForwardResult {
  Eigen::VectorXd probs;
  ActivationCapture capture;
};

/// Parameter gradients laid out like the compiled kernels.
struct Gradients {
  std::vector<ActivationMap> kernel;
  std::vector<Eigen::RowVectorXd> bias;

  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double s);
};

/// A ModelSpec with its parameters compiled into double-precision matrices.
/// Immutable for inference; forward() may be called concurrently.
class Network {
 public:
  Network(ModelSpec spec, const LayerWeights& weights);

  const ModelSpec& spec() const { return spec_; }
  std::size_t num_trainable() const { return trainable_.size(); }
  const std::vector<std::size_t>& neuron_counts() const { return neurons_; }

  /// `x` holds one case laid out as spec().input_shape.
  ForwardResult forward(std::span<const float> x) const;

  /// Number of forward passes run through this network (shared by copies).
  std::size_t forward_calls() const { return calls_->load(); }

  /// Parameters rounded back to float-32.
  LayerWeights weights() const;

  /// Cross-entropy of one case; accumulates dLoss/dParams into `grads` when non-null.
  double loss_and_gradients(std::span<const float> x, std::uint32_t label, Gradients* grads) const;

  Gradients zero_gradients() const;

  /// params -= step * grads
  void apply_gradients(const Gradients& grads, double step);

  /// Flat parameter access, mainly for finite-difference checks.
  std::size_t parameter_count() const;
  double parameter(std::size_t i) const;
  void set_parameter(std::size_t i, double v);
  double gradient_entry(const Gradients& g, std::size_t i) const;

 private:
  struct Layer {
    LayerSpec spec;
    Shape in_shape;
    Shape out_shape;
    int trainable = -1;
  };
  struct Trace;

  ForwardResult run(std::span<const float> x, Trace* trace) const;

  ModelSpec spec_;
  std::vector<Layer> layers_;
  std::vector<std::size_t> trainable_;
  std::vector<std::size_t> neurons_;
  std::vector<ActivationMap> kernels_;  // [fan_in, out]
  std::vector<Eigen::RowVectorXd> biases_;
  std::shared_ptr<std::atomic<std::size_t>> calls_ = std::make_shared<std::atomic<std::size_t>>(0);
};

ForwardResult forward(const ModelSpec& spec, const LayerWeights& weights, const Tensor& x);

// AGMF: "AGMF" | u32 version(=1) | u32 json_len | json spec | per trainable layer:
// u32 len + AGTD(kernel), u32 len + AGTD(bias).
struct Model {
  ModelSpec spec;
  LayerWeights weights;
};

std::string encode_model(const ModelSpec& spec, const LayerWeights& weights);
Model decode_model(std::string_view bytes);
void save_model(const ModelSpec& spec, const LayerWeights& weights, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace actgraph
