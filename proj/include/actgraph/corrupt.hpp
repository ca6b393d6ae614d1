#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "actgraph/tensor.hpp"

namespace actgraph {

/// Counter-clockwise. Multiples of 90 degrees are exact pixel permutations
/// (90/270 need square images); other angles use nearest-neighbour sampling.
struct Rotate {
  double degrees = 90.0;
  bool operator==(const Rotate&) const = default;
};

/// Shift right by dx and down by dy; vacated pixels are zero.
struct Translate {
  int dx = 0;
  int dy = 0;
  bool operator==(const Translate&) const = default;
};

enum class FlipAxis { kHorizontal, kVertical };

struct Flip {
  FlipAxis axis = FlipAxis::kHorizontal;
  bool operator==(const Flip&) const = default;
};

using CorruptionOp = std::variant<Rotate, Translate, Flip>;

/// "rotate:90", "translate:1,0", "flip:h", "flip:v".
CorruptionOp parse_corruption(std::string_view text);
std::vector<CorruptionOp> parse_corruption_list(std::span<const std::string> items);
std::string to_string(const CorruptionOp& op);

/// Apply to one [H, W, C] image.
Tensor apply_corruption(const Tensor& image, const CorruptionOp& op);

/// Every case receives one op drawn uniformly from `ops`. Inputs must be
/// [n, H, W, C]; labels are preserved and fault flags are dropped.
LabeledDataset corrupt(const LabeledDataset& data, std::span<const CorruptionOp> ops, std::uint64_t seed);

}  // namespace actgraph
