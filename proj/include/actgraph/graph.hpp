#pragma once

// Activation graph over the last K trainable layers of a feed-forward net.
//
// Nodes are neurons (dense units or conv filters). The edge j -> i between
// consecutive graph layers carries the min-max normalised, spatially
// averaged kernel weight w(j, i) scaled by the normalised activation of
// the target neuron: A(j, i) = w(j, i) * phi(i). Node features are weighted
// in-degrees nf(i) = sum_j A(j, i), and centre-node features aggregate the
// predecessors' node features along the incoming edges:
// cnf(i) = sum_z A(z, i) * nf(z).

#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "actgraph/error.hpp"
#include "actgraph/model.hpp"
#include "actgraph/tensor_io.hpp"

namespace actgraph {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Min-max rescale to [0, 1]. A constant input maps to all zeros.
template <typename Derived>
typename Derived::PlainObject min_max_normalized(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  typename Derived::PlainObject out = x;
  if (x.size() == 0) return out;
  const Scalar lo = x.minCoeff();
  const Scalar hi = x.maxCoeff();
  if (!(hi > lo)) {
    out.setZero();
    return out;
  }
  out = (x.array() - lo) / (hi - lo);
  return out;
}

template <typename Scalar = double>
struct GraphSkeleton {
  std::vector<std::size_t> layer_sizes;
  /// Block l is [layer_sizes[l], layer_sizes[l + 1]], entries in [0, 1].
  std::vector<Matrix<Scalar>> weight_blocks;

  std::size_t depth() const { return layer_sizes.size(); }
};

template <typename Scalar = double>
struct ActivationTrace {
  /// Normalised activation per graph layer, entries in [0, 1].
  std::vector<Vector<Scalar>> phi;
};

template <typename Scalar = double>
struct ActivationGraph {
  std::vector<std::size_t> layer_sizes;
  std::vector<Matrix<Scalar>> adjacency;  // same layout as the weight blocks
  std::vector<Vector<Scalar>> nf;
  std::vector<Vector<Scalar>> cnf;
};

/// Average the kernel over everything except (source neuron, target neuron).
/// Kernels are viewed as [fan_in, out] with fan_in rows ordered so that row r
/// belongs to source neuron r % source_size; this holds for conv kernels
/// [kh, kw, in, out] and for dense kernels fed by a flattened [H, W, C] map.
template <typename Scalar = double>
Matrix<Scalar> average_kernel(const Tensor& kernel, std::size_t source_size) {
  const std::size_t out = kernel.shape().back();
  const std::size_t fan_in = kernel.size() / out;
  if (source_size == 0 || fan_in % source_size != 0) {
    throw Error(Errc::kSpecMismatch, "kernel fan-in " + std::to_string(fan_in) +
                                         " is not a multiple of the source layer size " + std::to_string(source_size));
  }
  const std::size_t per_source = fan_in / source_size;
  Matrix<Scalar> w = Matrix<Scalar>::Zero(static_cast<Eigen::Index>(source_size), static_cast<Eigen::Index>(out));
  const auto data = kernel.data();
  for (std::size_t r = 0; r < fan_in; ++r) {
    const auto j = static_cast<Eigen::Index>(r % source_size);
    for (std::size_t i = 0; i < out; ++i) w(j, static_cast<Eigen::Index>(i)) += static_cast<Scalar>(data[r * out + i]);
  }
  w /= static_cast<Scalar>(per_source);
  return w;
}

/// Normalised weight blocks between the last `k` trainable layers. Computed
/// once per model and shared by every case.
template <typename Scalar = double>
GraphSkeleton<Scalar> build_skeleton(const ModelSpec& spec, const LayerWeights& weights, std::size_t k) {
  check_weights(spec, weights);
  const auto sizes = neuron_counts(spec);
  if (k < 2) throw Error(Errc::kInvalidArgument, "graph needs at least two layers (K >= 2)");
  if (k > sizes.size()) {
    throw Error(Errc::kInvalidArgument, "K = " + std::to_string(k) + " exceeds the " + std::to_string(sizes.size()) +
                                            " trainable layers of the model");
  }
  const std::size_t first = sizes.size() - k;
  GraphSkeleton<Scalar> sk;
  sk.layer_sizes.assign(sizes.begin() + static_cast<std::ptrdiff_t>(first), sizes.end());
  for (std::size_t t = first + 1; t < sizes.size(); ++t) {
    sk.weight_blocks.push_back(min_max_normalized(average_kernel<Scalar>(weights[t].kernel, sizes[t - 1])));
  }
  return sk;
}

/// Spatially averaged, per-layer normalised activations of the last `k`
/// captured layers.
template <typename Scalar = double>
ActivationTrace<Scalar> trace_activations(const ActivationCapture& capture, std::size_t k) {
  if (capture.layers.empty()) throw Error(Errc::kInvalidArgument, "activation capture is empty");
  if (k == 0 || k > capture.layers.size()) {
    throw Error(Errc::kInvalidArgument, "capture covers " + std::to_string(capture.layers.size()) +
                                            " layers, K = " + std::to_string(k));
  }
  ActivationTrace<Scalar> trace;
  for (std::size_t l = capture.layers.size() - k; l < capture.layers.size(); ++l) {
    const ActivationMap& map = capture.layers[l];
    if (map.rows() == 0) throw Error(Errc::kInvalidArgument, "empty feature map");
    Vector<Scalar> mean = map.colwise().mean().transpose().template cast<Scalar>();
    trace.phi.push_back(min_max_normalized(mean));
  }
  return trace;
}

template <typename Scalar>
ActivationGraph<Scalar> build_graph(const GraphSkeleton<Scalar>& skeleton, const ActivationTrace<Scalar>& trace) {
  const std::size_t depth = skeleton.depth();
  if (trace.phi.size() != depth || skeleton.weight_blocks.size() + 1 != depth) {
    throw Error(Errc::kDimensionMismatch, "skeleton and trace cover different layer counts");
  }
  for (std::size_t l = 0; l < depth; ++l) {
    if (static_cast<std::size_t>(trace.phi[l].size()) != skeleton.layer_sizes[l]) {
      throw Error(Errc::kDimensionMismatch, "layer " + std::to_string(l) + " size differs between skeleton and trace");
    }
  }
  ActivationGraph<Scalar> g;
  g.layer_sizes = skeleton.layer_sizes;
  g.nf.push_back(Vector<Scalar>::Zero(static_cast<Eigen::Index>(skeleton.layer_sizes[0])));
  g.cnf.push_back(Vector<Scalar>::Zero(static_cast<Eigen::Index>(skeleton.layer_sizes[0])));
  for (std::size_t l = 0; l + 1 < depth; ++l) {
    g.adjacency.push_back(skeleton.weight_blocks[l] * trace.phi[l + 1].asDiagonal());
    const Matrix<Scalar>& a = g.adjacency.back();
    g.nf.push_back(a.transpose() * Vector<Scalar>::Ones(a.rows()));
    g.cnf.push_back(a.transpose() * g.nf[l]);
  }
  return g;
}

struct FeatureOptions {
  std::size_t k = 4;
  /// Trailing graph layers whose cnf vectors are concatenated.
  std::size_t cnf_layers = 2;
};

/// Per-model feature extractor: holds the normalised weight skeleton and turns
/// a forward-pass capture into the concatenated cnf of the trailing layers.
template <typename Scalar = double>
class CnfExtractor {
 public:
  CnfExtractor(const ModelSpec& spec, const LayerWeights& weights, FeatureOptions options = {})
      : options_(options), skeleton_(build_skeleton<Scalar>(spec, weights, options.k)) {
    if (options_.cnf_layers == 0 || options_.cnf_layers > options_.k) {
      throw Error(Errc::kInvalidArgument, "cnf layer count must be in [1, K]");
    }
    for (std::size_t l = options_.k - options_.cnf_layers; l < options_.k; ++l) dim_ += skeleton_.layer_sizes[l];
  }

  const GraphSkeleton<Scalar>& skeleton() const { return skeleton_; }
  std::size_t dimension() const { return dim_; }

  ActivationGraph<Scalar> graph(const ActivationCapture& capture) const {
    return build_graph(skeleton_, trace_activations<Scalar>(capture, options_.k));
  }

  Vector<Scalar> operator()(const ActivationCapture& capture) const {
    const ActivationGraph<Scalar> g = graph(capture);
    Vector<Scalar> out(static_cast<Eigen::Index>(dim_));
    Eigen::Index pos = 0;
    for (std::size_t l = options_.k - options_.cnf_layers; l < options_.k; ++l) {
      out.segment(pos, g.cnf[l].size()) = g.cnf[l];
      pos += g.cnf[l].size();
    }
    return out;
  }

 private:
  FeatureOptions options_;
  GraphSkeleton<Scalar> skeleton_;
  std::size_t dim_ = 0;
};

template <typename Scalar = double>
Vector<Scalar> extract_features(const ModelSpec& spec, const LayerWeights& weights, const ActivationCapture& capture,
                                std::size_t k = 4) {
  return CnfExtractor<Scalar>(spec, weights, FeatureOptions{k, 2})(capture);
}

struct GraphExport {
  std::string dot;
  std::string csv;
  std::size_t edge_count = 0;
};

/// Diagnostic rendering: edges with A >= threshold (and A > 0), nodes
/// annotated with their nf value. Has no effect on features.
template <typename Scalar>
GraphExport export_graph(const ActivationGraph<Scalar>& g, double threshold) {
  std::ostringstream dot;
  std::ostringstream csv;
  GraphExport out;
  dot << "digraph activation_graph {\n  rankdir=LR;\n";
  for (std::size_t l = 0; l < g.layer_sizes.size(); ++l) {
    for (std::size_t i = 0; i < g.layer_sizes[l]; ++i) {
      dot << "  n" << l << '_' << i << " [layer=" << l << ", nf=" << format_number(static_cast<double>(g.nf[l](static_cast<Eigen::Index>(i))))
          << "];\n";
    }
  }
  csv << "source_layer,source,target_layer,target,weight\n";
  for (std::size_t l = 0; l < g.adjacency.size(); ++l) {
    const auto& a = g.adjacency[l];
    for (Eigen::Index j = 0; j < a.rows(); ++j) {
      for (Eigen::Index i = 0; i < a.cols(); ++i) {
        const double v = static_cast<double>(a(j, i));
        if (v > 0.0 && v >= threshold) {
          const std::string w = format_number(v);
          dot << "  n" << l << '_' << j << " -> n" << (l + 1) << '_' << i << " [weight=" << w << "];\n";
          csv << l << ',' << j << ',' << (l + 1) << ',' << i << ',' << w << '\n';
          ++out.edge_count;
        }
      }
    }
  }
  dot << "}\n";
  out.dot = dot.str();
  out.csv = csv.str();
  return out;
}

}  // namespace actgraph
