#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace actgraph {

using Shape = std::vector<std::size_t>;

/// Row-major dense matrix used for feature and probability tables
/// (one row per test case).
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::size_t element_count(const Shape& shape);

/// Dense float-32 tensor, row-major. Construction validates that the shape
/// matches the payload and that every value is finite.
class Tensor {
 public:
  Tensor() : shape_{0} {}
  Tensor(Shape shape, std::vector<float> data);

  static Tensor zeros(Shape shape);
  static Tensor from_matrix(const FeatureMatrix& m);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

  std::span<const float> data() const { return data_; }
  std::span<float> mutable_data() { return data_; }

  /// Number of leading-axis entries and the element count of each entry.
  std::size_t rows() const { return shape_.empty() ? 1 : shape_[0]; }
  std::size_t row_size() const;
  std::span<const float> row(std::size_t i) const;

  /// Tensor holding the given leading-axis entries, in order.
  Tensor select_rows(std::span<const std::size_t> rows) const;

  /// View as [rows, row_size] doubles.
  FeatureMatrix to_matrix() const;

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<float> data_;
};

/// Concatenate along the leading axis; trailing dims must agree.
Tensor concat_rows(const Tensor& a, const Tensor& b);

struct LabeledDataset {
  Tensor inputs;
  std::vector<std::uint32_t> labels;
  /// 1 marks a case that triggers misbehaviour.
  std::optional<std::vector<std::uint8_t>> flags;

  std::size_t size() const { return labels.size(); }
  void validate(std::optional<std::size_t> num_classes = std::nullopt) const;
  LabeledDataset select(std::span<const std::size_t> rows) const;
};

}  // namespace actgraph
