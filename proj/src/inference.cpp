#include "actgraph/inference.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "actgraph/baselines.hpp"
#include "actgraph/error.hpp"

namespace actgraph {

Method parse_method(std::string_view name) {
  if (name == "actgraph") return Method::kActGraph;
  if (name == "act") return Method::kAct;
  if (name == "gini") return Method::kGini;
  if (name == "mcp") return Method::kMcp;
  if (name == "dsa") return Method::kDsa;
  throw Error(Errc::kInvalidArgument, "unknown method \"" + std::string(name) + "\"");
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kActGraph: return "actgraph";
    case Method::kAct: return "act";
    case Method::kGini: return "gini";
    case Method::kMcp: return "mcp";
    case Method::kDsa: return "dsa";
  }
  return "unknown";
}

bool is_supervised(Method method) { return method == Method::kActGraph || method == Method::kAct; }

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> workers;
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  workers.clear();
  if (failure) std::rethrow_exception(failure);
}

std::uint32_t argmax(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < probs.size(); ++c) {
    if (probs[c] > probs[best]) best = c;
  }
  return static_cast<std::uint32_t>(best);
}

InferenceResult run_inference(const Network& net, const Tensor& inputs, const CnfExtractor<double>* extractor,
                              std::size_t threads) {
  if (net.num_trainable() < 2) throw Error(Errc::kSpecMismatch, "model needs a hidden trainable layer");
  const std::size_t n = inputs.rank() == 0 ? 0 : inputs.rows();
  const auto classes = static_cast<Eigen::Index>(net.spec().num_classes);
  InferenceResult out;
  out.probs.resize(static_cast<Eigen::Index>(n), classes);
  out.predicted.resize(n);
  if (extractor) out.graph.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(extractor->dimension()));
  std::vector<ActivationMap> hidden(n);

  parallel_for(n, threads, [&](std::size_t i) {
    ForwardResult fr = net.forward(inputs.row(i));
    const auto r = static_cast<Eigen::Index>(i);
    out.probs.row(r) = fr.probs.transpose();
    out.predicted[i] = argmax(std::span<const double>(fr.probs.data(), static_cast<std::size_t>(fr.probs.size())));
    if (extractor) out.graph.row(r) = (*extractor)(fr.capture).transpose();
    hidden[i] = std::move(fr.capture.layers[fr.capture.layers.size() - 2]);
  });

  const Eigen::Index hidden_dim = n ? hidden[0].size() : 0;
  out.last_hidden.resize(static_cast<Eigen::Index>(n), hidden_dim);
  for (std::size_t i = 0; i < n; ++i) {
    out.last_hidden.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(hidden[i].data(), hidden_dim);
  }
  return out;
}

std::vector<std::uint8_t> label_faults(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> labels) {
  if (predicted.size() != labels.size()) throw Error(Errc::kCountMismatch, "predictions and labels differ in length");
  std::vector<std::uint8_t> flags(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) flags[i] = predicted[i] != labels[i] ? 1 : 0;
  return flags;
}

std::vector<std::uint8_t> label_faults(const Network& net, const LabeledDataset& data, std::size_t threads) {
  data.validate(net.spec().num_classes);
  std::vector<std::uint32_t> predicted(data.size());
  parallel_for(data.size(), threads, [&](std::size_t i) {
    const auto probs = net.forward(data.inputs.row(i)).probs;
    predicted[i] = argmax(std::span<const double>(probs.data(), static_cast<std::size_t>(probs.size())));
  });
  return label_faults(predicted, data.labels);
}

FeatureMatrix method_features(Method method, const InferenceResult& inference) {
  switch (method) {
    case Method::kActGraph:
      if (inference.graph.rows() != inference.probs.rows()) {
        throw Error(Errc::kInvalidArgument, "inference ran without the graph feature extractor");
      }
      return inference.graph;
    case Method::kAct: {
      FeatureMatrix out(inference.probs.rows(), inference.probs.cols() + inference.last_hidden.cols());
      for (Eigen::Index r = 0; r < out.rows(); ++r) {
        out.row(r) = act_features(inference.probs.row(r), inference.last_hidden.row(r)).transpose();
      }
      return out;
    }
    default:
      throw Error(Errc::kInvalidArgument, std::string(to_string(method)) + " does not use ranker features");
  }
}

}  // namespace actgraph
