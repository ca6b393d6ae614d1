#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "actgraph/model.hpp"
#include "actgraph/random.hpp"
#include "actgraph/tensor.hpp"

namespace actgraph::testing {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(ACTGRAPH_FIXTURE_DIR) / name; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() / ("actgraph_" + tag + "_" + std::to_string(counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static int& counter() {
    static int n = 0;
    return n;
  }
  std::filesystem::path path_;
};

/// Dense-only network: flatten-free chain of Dense(+ReLU) with a softmax head.
inline ModelSpec dense_spec(const std::vector<std::size_t>& widths) {
  ModelSpec spec;
  spec.input_shape = {widths.front()};
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    spec.layers.emplace_back(DenseSpec{widths[i], widths[i + 1]});
    spec.layers.emplace_back(i + 2 < widths.size() ? LayerSpec{ReLUSpec{}} : LayerSpec{SoftmaxSpec{}});
  }
  spec.num_classes = widths.back();
  return spec;
}

inline LayerWeights random_weights(const ModelSpec& spec, SplitMix64& rng, double lo, double hi) {
  LayerWeights out;
  for (std::size_t t : trainable_layers(spec)) {
    const Shape ks = kernel_shape(spec.layers[t]);
    std::vector<float> k(element_count(ks));
    for (auto& v : k) v = static_cast<float>(rng.uniform(lo, hi));
    std::vector<float> b(ks.back());
    for (auto& v : b) v = static_cast<float>(rng.uniform(0.0, 0.1));
    out.push_back({Tensor(ks, std::move(k)), Tensor({ks.back()}, std::move(b))});
  }
  return out;
}

inline Tensor random_input(const Shape& shape, SplitMix64& rng) {
  std::vector<float> x(element_count(shape));
  for (auto& v : x) v = static_cast<float>(rng.uniform());
  return Tensor(shape, std::move(x));
}

/// Four Gaussian-ish blobs at the corners of a square, `per_class` points each.
inline LabeledDataset blobs(std::size_t classes, std::size_t per_class, double spread, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<float> x;
  std::vector<std::uint32_t> y;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t c = 0; c < classes; ++c) {
      const double cx = (c & 1) ? 1.0 : -1.0;
      const double cy = (c & 2) ? 1.0 : -1.0;
      x.push_back(static_cast<float>(cx + spread * (rng.uniform() * 2 - 1)));
      x.push_back(static_cast<float>(cy + spread * (rng.uniform() * 2 - 1)));
      y.push_back(static_cast<std::uint32_t>(c));
    }
  }
  const std::size_t n = y.size();
  return {Tensor({n, 2}, std::move(x)), std::move(y), std::nullopt};
}

}  // namespace actgraph::testing
