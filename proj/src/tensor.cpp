#include "actgraph/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "actgraph/error.hpp"

namespace actgraph {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::kBadMagic: return "BadMagic";
    case Errc::kTruncated: return "Truncated";
    case Errc::kShapeMismatch: return "ShapeMismatch";
    case Errc::kNonFiniteData: return "NonFiniteData";
    case Errc::kCountMismatch: return "CountMismatch";
    case Errc::kIo: return "IoError";
    case Errc::kBadHeader: return "BadHeader";
    case Errc::kUnsupportedVersion: return "UnsupportedVersion";
    case Errc::kSpecMismatch: return "SpecMismatch";
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kEmptyClass: return "EmptyClass";
    case Errc::kNoFaults: return "NoFaults";
    case Errc::kDiverged: return "Diverged";
  }
  return "Unknown";
}

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (element_count(shape_) != data_.size()) {
    throw Error(Errc::kShapeMismatch, "shape holds " + std::to_string(element_count(shape_)) +
                                          " elements but payload has " + std::to_string(data_.size()));
  }
  if (!std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); })) {
    throw Error(Errc::kNonFiniteData, "tensor contains NaN or Inf");
  }
}

Tensor Tensor::zeros(Shape shape) {
  const std::size_t n = element_count(shape);
  return Tensor(std::move(shape), std::vector<float>(n, 0.0f));
}

Tensor Tensor::from_matrix(const FeatureMatrix& m) {
  std::vector<float> data(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      data[static_cast<std::size_t>(r * m.cols() + c)] = static_cast<float>(m(r, c));
    }
  }
  return Tensor({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())}, std::move(data));
}

std::size_t Tensor::row_size() const {
  if (shape_.empty()) return 1;
  std::size_t n = 1;
  for (std::size_t i = 1; i < shape_.size(); ++i) n *= shape_[i];
  return n;
}

std::span<const float> Tensor::row(std::size_t i) const {
  if (i >= rows()) throw Error(Errc::kInvalidArgument, "row index out of range");
  const std::size_t stride = row_size();
  return std::span<const float>(data_).subspan(i * stride, stride);
}

Tensor Tensor::select_rows(std::span<const std::size_t> rows) const {
  const std::size_t stride = row_size();
  std::vector<float> out;
  out.reserve(rows.size() * stride);
  for (std::size_t r : rows) {
    auto src = row(r);
    out.insert(out.end(), src.begin(), src.end());
  }
  Shape shape = shape_;
  if (shape.empty()) shape = {1};
  shape[0] = rows.size();
  return Tensor(std::move(shape), std::move(out));
}

FeatureMatrix Tensor::to_matrix() const {
  const auto n = static_cast<Eigen::Index>(rows());
  const auto d = static_cast<Eigen::Index>(row_size());
  return Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(data_.data(), n, d)
      .cast<double>();
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  if (a.rank() == 0 || b.rank() == 0 ||
      !std::equal(a.shape().begin() + 1, a.shape().end(), b.shape().begin() + 1, b.shape().end())) {
    throw Error(Errc::kShapeMismatch, "concat_rows: trailing dimensions differ");
  }
  std::vector<float> data(a.data().begin(), a.data().end());
  data.insert(data.end(), b.data().begin(), b.data().end());
  Shape shape = a.shape();
  shape[0] += b.dim(0);
  return Tensor(std::move(shape), std::move(data));
}

void LabeledDataset::validate(std::optional<std::size_t> num_classes) const {
  if (inputs.rank() == 0 || inputs.dim(0) != labels.size()) {
    throw Error(Errc::kCountMismatch, "dataset has " + std::to_string(inputs.rank() ? inputs.dim(0) : 0) +
                                          " inputs but " + std::to_string(labels.size()) + " labels");
  }
  if (num_classes) {
    for (auto label : labels) {
      if (label >= *num_classes) {
        throw Error(Errc::kInvalidArgument, "label " + std::to_string(label) + " >= num_classes");
      }
    }
  }
  if (flags) {
    if (flags->size() != labels.size()) throw Error(Errc::kCountMismatch, "flags length differs from labels");
    for (auto f : *flags) {
      if (f > 1) throw Error(Errc::kInvalidArgument, "flags must be 0 or 1");
    }
  }
}

LabeledDataset LabeledDataset::select(std::span<const std::size_t> rows) const {
  LabeledDataset out;
  out.inputs = inputs.select_rows(rows);
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) out.labels.push_back(labels.at(r));
  if (flags) {
    std::vector<std::uint8_t> f;
    f.reserve(rows.size());
    for (std::size_t r : rows) f.push_back(flags->at(r));
    out.flags = std::move(f);
  }
  return out;
}

}  // namespace actgraph
