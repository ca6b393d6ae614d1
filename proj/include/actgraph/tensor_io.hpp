#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "actgraph/tensor.hpp"

namespace actgraph {

// AGTD: "AGTD" | u32 rank | u32 dims[rank] | f32 data[prod(dims)], little-endian.
std::string encode_tensor(const Tensor& t);
Tensor decode_tensor(std::string_view bytes);

void write_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor read_tensor(const std::filesystem::path& path);

// AGLB: "AGLB" | u32 count | u32 labels[count] | u8 has_flags | u8 flags[count] if has_flags.
struct LabelFile {
  std::vector<std::uint32_t> labels;
  std::optional<std::vector<std::uint8_t>> flags;

  bool operator==(const LabelFile&) const = default;
};

std::string encode_labels(const LabelFile& labels);
LabelFile decode_labels(std::string_view bytes);

void write_labels(const LabelFile& labels, const std::filesystem::path& path);
LabelFile read_labels(const std::filesystem::path& path);

LabeledDataset read_dataset(const std::filesystem::path& inputs, const std::filesystem::path& labels);
void write_dataset(const LabeledDataset& ds, const std::filesystem::path& inputs, const std::filesystem::path& labels);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// Shortest decimal string that parses back to the same value.
std::string format_number(double v);
std::string format_number(float v);

/// `index,score` CSV, rows in the given index order.
void write_scores_csv(std::ostream& out, std::span<const double> scores,
                      std::span<const std::size_t> order = {});
void write_scores_csv(const std::filesystem::path& path, std::span<const double> scores,
                      std::span<const std::size_t> order = {});
/// Reads an `index,score` CSV; returns scores indexed by the index column.
std::vector<double> read_scores_csv(const std::filesystem::path& path);

/// `index,f0,f1,...` CSV.
void write_features_csv(std::ostream& out, const FeatureMatrix& features);
void write_features_csv(const std::filesystem::path& path, const FeatureMatrix& features);

}  // namespace actgraph
