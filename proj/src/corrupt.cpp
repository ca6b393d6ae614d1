#include "actgraph/corrupt.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <numbers>

#include "actgraph/error.hpp"
#include "actgraph/random.hpp"

namespace actgraph {
namespace {

template <typename T>
T parse_value(std::string_view text, std::string_view what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(Errc::kInvalidArgument, "bad " + std::string(what) + " \"" + std::string(text) + "\"");
  }
  return v;
}

struct ImageView {
  std::span<const float> data;
  std::size_t h, w, c;
  float at(std::ptrdiff_t y, std::ptrdiff_t x, std::size_t ch) const {
    if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(h) || x >= static_cast<std::ptrdiff_t>(w)) return 0.0f;
    return data[(static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)) * c + ch];
  }
};

// Writes out(y, x) = in(source(y, x)) for every pixel and channel.
template <typename Source>
std::vector<float> remap(const ImageView& in, std::size_t oh, std::size_t ow, Source source) {
  std::vector<float> out(oh * ow * in.c);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      const auto [sy, sx] = source(static_cast<std::ptrdiff_t>(y), static_cast<std::ptrdiff_t>(x));
      for (std::size_t ch = 0; ch < in.c; ++ch) out[(y * ow + x) * in.c + ch] = in.at(sy, sx, ch);
    }
  }
  return out;
}

std::vector<float> transform(const ImageView& in, const CorruptionOp& op) {
  const auto H = static_cast<std::ptrdiff_t>(in.h);
  const auto W = static_cast<std::ptrdiff_t>(in.w);
  if (const auto* r = std::get_if<Rotate>(&op)) {
    const double turns = r->degrees / 90.0;
    if (turns == std::round(turns)) {
      const auto quarter = ((static_cast<long long>(std::round(turns)) % 4) + 4) % 4;
      if ((quarter == 1 || quarter == 3) && in.h != in.w) {
        throw Error(Errc::kShapeMismatch, "quarter-turn rotation needs a square image");
      }
      switch (quarter) {
        case 0: return remap(in, in.h, in.w, [](auto y, auto x) { return std::pair{y, x}; });
        case 1: return remap(in, in.h, in.w, [W](auto y, auto x) { return std::pair{x, W - 1 - y}; });
        case 2: return remap(in, in.h, in.w, [H, W](auto y, auto x) { return std::pair{H - 1 - y, W - 1 - x}; });
        default: return remap(in, in.h, in.w, [H](auto y, auto x) { return std::pair{H - 1 - x, y}; });
      }
    }
    const double theta = r->degrees * std::numbers::pi / 180.0;
    const double cy = (static_cast<double>(H) - 1.0) / 2.0;
    const double cx = (static_cast<double>(W) - 1.0) / 2.0;
    const double cs = std::cos(theta);
    const double sn = std::sin(theta);
    return remap(in, in.h, in.w, [=](auto y, auto x) {
      const double dy = static_cast<double>(y) - cy;
      const double dx = static_cast<double>(x) - cx;
      return std::pair{static_cast<std::ptrdiff_t>(std::lround(cy + sn * dx + cs * dy)),
                       static_cast<std::ptrdiff_t>(std::lround(cx + cs * dx - sn * dy))};
    });
  }
  if (const auto* t = std::get_if<Translate>(&op)) {
    const std::ptrdiff_t dx = t->dx;
    const std::ptrdiff_t dy = t->dy;
    return remap(in, in.h, in.w, [=](auto y, auto x) { return std::pair{y - dy, x - dx}; });
  }
  const auto& f = std::get<Flip>(op);
  if (f.axis == FlipAxis::kHorizontal) {
    return remap(in, in.h, in.w, [W](auto y, auto x) { return std::pair{y, W - 1 - x}; });
  }
  return remap(in, in.h, in.w, [H](auto y, auto x) { return std::pair{H - 1 - y, x}; });
}

}  // namespace

CorruptionOp parse_corruption(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const std::string_view arg = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  if (name == "rotate") return Rotate{parse_value<double>(arg, "rotation angle")};
  if (name == "translate") {
    const auto comma = arg.find(',');
    if (comma == std::string_view::npos) throw Error(Errc::kInvalidArgument, "translate expects dx,dy");
    return Translate{parse_value<int>(arg.substr(0, comma), "dx"), parse_value<int>(arg.substr(comma + 1), "dy")};
  }
  if (name == "flip") {
    if (arg == "h") return Flip{FlipAxis::kHorizontal};
    if (arg == "v") return Flip{FlipAxis::kVertical};
    throw Error(Errc::kInvalidArgument, "flip expects h or v");
  }
  throw Error(Errc::kInvalidArgument, "unknown corruption \"" + std::string(text) + "\"");
}

std::vector<CorruptionOp> parse_corruption_list(std::span<const std::string> items) {
  std::vector<CorruptionOp> out;
  for (const auto& s : items) out.push_back(parse_corruption(s));
  return out;
}

std::string to_string(const CorruptionOp& op) {
  if (const auto* r = std::get_if<Rotate>(&op)) {
    std::array<char, 32> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), r->degrees);
    return "rotate:" + std::string(buf.data(), end);
  }
  if (const auto* t = std::get_if<Translate>(&op)) return "translate:" + std::to_string(t->dx) + "," + std::to_string(t->dy);
  return std::get<Flip>(op).axis == FlipAxis::kHorizontal ? "flip:h" : "flip:v";
}

Tensor apply_corruption(const Tensor& image, const CorruptionOp& op) {
  if (image.rank() != 3) throw Error(Errc::kShapeMismatch, "image must be [H, W, C]");
  const ImageView view{image.data(), image.dim(0), image.dim(1), image.dim(2)};
  return Tensor(image.shape(), transform(view, op));
}

LabeledDataset corrupt(const LabeledDataset& data, std::span<const CorruptionOp> ops, std::uint64_t seed) {
  if (data.inputs.rank() != 4) throw Error(Errc::kShapeMismatch, "corruption needs [n, H, W, C] image inputs");
  if (ops.empty()) throw Error(Errc::kInvalidArgument, "no corruption operations given");
  data.validate();
  const std::size_t h = data.inputs.dim(1);
  const std::size_t w = data.inputs.dim(2);
  const std::size_t c = data.inputs.dim(3);
  SplitMix64 rng(seed);
  std::vector<float> out;
  out.reserve(data.inputs.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const CorruptionOp& op = ops[rng.index(ops.size())];
    const auto pixels = transform(ImageView{data.inputs.row(i), h, w, c}, op);
    out.insert(out.end(), pixels.begin(), pixels.end());
  }
  return LabeledDataset{Tensor(data.inputs.shape(), std::move(out)), data.labels, std::nullopt};
}

}  // namespace actgraph
