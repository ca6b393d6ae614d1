#include "actgraph/model.hpp"

#include <cmath>
#include <string>

#include <json.hpp>

#include "actgraph/error.hpp"
#include "actgraph/tensor_io.hpp"

namespace actgraph {
namespace {

using Json = nlohmann::json;

constexpr std::string_view kModelMagic = "AGMF";
constexpr std::uint32_t kModelVersion = 1;

[[noreturn]] void spec_error(std::size_t layer, const std::string& msg) {
  throw Error(Errc::kSpecMismatch, "layer " + std::to_string(layer) + ": " + msg);
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

std::size_t conv_extent(std::size_t in, std::size_t pad, std::size_t kernel, std::size_t stride) {
  return (in + 2 * pad - kernel) / stride + 1;
}

ActivationMap im2col(const ActivationMap& in, std::size_t h, std::size_t w, std::size_t c, const Conv2DSpec& s,
                     std::size_t oh, std::size_t ow) {
  ActivationMap cols = ActivationMap::Zero(static_cast<Eigen::Index>(oh * ow),
                                           static_cast<Eigen::Index>(s.kernel_h * s.kernel_w * c));
  const auto C = static_cast<Eigen::Index>(c);
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      const auto row = static_cast<Eigen::Index>(oy * ow + ox);
      for (std::size_t ky = 0; ky < s.kernel_h; ++ky) {
        const auto iy = static_cast<std::ptrdiff_t>(oy * s.stride + ky) - static_cast<std::ptrdiff_t>(s.padding);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t kx = 0; kx < s.kernel_w; ++kx) {
          const auto ix = static_cast<std::ptrdiff_t>(ox * s.stride + kx) - static_cast<std::ptrdiff_t>(s.padding);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
          cols.block(row, static_cast<Eigen::Index>(ky * s.kernel_w + kx) * C, 1, C) =
              in.row(static_cast<Eigen::Index>(iy) * static_cast<Eigen::Index>(w) + ix);
        }
      }
    }
  }
  return cols;
}

ActivationMap col2im(const ActivationMap& cols, std::size_t h, std::size_t w, std::size_t c, const Conv2DSpec& s,
                     std::size_t oh, std::size_t ow) {
  ActivationMap in = ActivationMap::Zero(static_cast<Eigen::Index>(h * w), static_cast<Eigen::Index>(c));
  const auto C = static_cast<Eigen::Index>(c);
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      const auto row = static_cast<Eigen::Index>(oy * ow + ox);
      for (std::size_t ky = 0; ky < s.kernel_h; ++ky) {
        const auto iy = static_cast<std::ptrdiff_t>(oy * s.stride + ky) - static_cast<std::ptrdiff_t>(s.padding);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t kx = 0; kx < s.kernel_w; ++kx) {
          const auto ix = static_cast<std::ptrdiff_t>(ox * s.stride + kx) - static_cast<std::ptrdiff_t>(s.padding);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
          in.row(static_cast<Eigen::Index>(iy) * static_cast<Eigen::Index>(w) + ix) +=
              cols.block(row, static_cast<Eigen::Index>(ky * s.kernel_w + kx) * C, 1, C);
        }
      }
    }
  }
  return in;
}

// Spatial layout of an activation shape: [n] -> 1x1, [H,W,C] -> HxW.
std::pair<std::size_t, std::size_t> spatial(const Shape& shape) {
  if (shape.size() == 3) return {shape[0], shape[1]};
  return {1, 1};
}

std::size_t channels(const Shape& shape) { return shape.back(); }

Json layer_to_json(const LayerSpec& layer) {
  return std::visit(
      Overloaded{
          [](const DenseSpec& d) { return Json{{"type", "dense"}, {"in", d.in}, {"out", d.out}}; },
          [](const Conv2DSpec& c) {
            return Json{{"type", "conv2d"},        {"in_channels", c.in_channels}, {"out_channels", c.out_channels},
                        {"kernel_h", c.kernel_h},  {"kernel_w", c.kernel_w},       {"stride", c.stride},
                        {"padding", c.padding}};
          },
          [](const MaxPoolSpec& p) { return Json{{"type", "maxpool"}, {"size", p.size}, {"stride", p.stride}}; },
          [](const FlattenSpec&) { return Json{{"type", "flatten"}}; },
          [](const ReLUSpec&) { return Json{{"type", "relu"}}; },
          [](const SoftmaxSpec&) { return Json{{"type", "softmax"}}; },
      },
      layer);
}

LayerSpec layer_from_json(const Json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "dense") return DenseSpec{j.at("in").get<std::size_t>(), j.at("out").get<std::size_t>()};
  if (type == "conv2d") {
    return Conv2DSpec{j.at("in_channels").get<std::size_t>(), j.at("out_channels").get<std::size_t>(),
                      j.at("kernel_h").get<std::size_t>(),    j.at("kernel_w").get<std::size_t>(),
                      j.value("stride", std::size_t{1}),      j.value("padding", std::size_t{0})};
  }
  if (type == "maxpool") return MaxPoolSpec{j.at("size").get<std::size_t>(), j.value("stride", j.at("size").get<std::size_t>())};
  if (type == "flatten") return FlattenSpec{};
  if (type == "relu") return ReLUSpec{};
  if (type == "softmax") return SoftmaxSpec{};
  throw Error(Errc::kBadHeader, "unknown layer type \"" + type + "\"");
}

}  // namespace

std::vector<Shape> infer_shapes(const ModelSpec& spec) {
  if (spec.input_shape.size() != 1 && spec.input_shape.size() != 3) {
    throw Error(Errc::kSpecMismatch, "input shape must be [n] or [H, W, C]");
  }
  if (element_count(spec.input_shape) == 0) throw Error(Errc::kSpecMismatch, "input shape has a zero dimension");
  std::vector<Shape> shapes;
  Shape cur = spec.input_shape;
  std::size_t softmax_count = 0;
  std::size_t trainable_count = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    std::visit(
        Overloaded{
            [&](const DenseSpec& d) {
              if (cur.size() != 1 || cur[0] != d.in) spec_error(i, "dense input must be a vector of size " + std::to_string(d.in));
              if (d.out == 0) spec_error(i, "dense layer needs at least one output");
              cur = {d.out};
              ++trainable_count;
            },
            [&](const Conv2DSpec& c) {
              if (cur.size() != 3 || cur[2] != c.in_channels) spec_error(i, "conv2d input must be [H, W, in_channels]");
              if (c.kernel_h == 0 || c.kernel_w == 0 || c.stride == 0 || c.out_channels == 0) {
                spec_error(i, "conv2d kernel, stride and filters must be positive");
              }
              if (c.kernel_h > cur[0] + 2 * c.padding || c.kernel_w > cur[1] + 2 * c.padding) {
                spec_error(i, "conv2d kernel larger than padded input");
              }
              cur = {conv_extent(cur[0], c.padding, c.kernel_h, c.stride),
                     conv_extent(cur[1], c.padding, c.kernel_w, c.stride), c.out_channels};
              ++trainable_count;
            },
            [&](const MaxPoolSpec& p) {
              if (cur.size() != 3) spec_error(i, "maxpool input must be [H, W, C]");
              if (p.size == 0 || p.stride == 0 || p.size > cur[0] || p.size > cur[1]) spec_error(i, "bad maxpool window");
              cur = {(cur[0] - p.size) / p.stride + 1, (cur[1] - p.size) / p.stride + 1, cur[2]};
            },
            [&](const FlattenSpec&) { cur = {element_count(cur)}; },
            [&](const ReLUSpec&) {},
            [&](const SoftmaxSpec&) {
              ++softmax_count;
              if (i + 1 != spec.layers.size()) spec_error(i, "softmax must be the final layer");
              if (cur.size() != 1 || cur[0] != spec.num_classes) {
                spec_error(i, "softmax input must be a vector of num_classes entries");
              }
            },
        },
        spec.layers[i]);
    shapes.push_back(cur);
  }
  if (softmax_count != 1) throw Error(Errc::kSpecMismatch, "model needs exactly one terminal softmax");
  if (trainable_count == 0) throw Error(Errc::kSpecMismatch, "model needs at least one trainable layer");
  if (spec.num_classes < 2) throw Error(Errc::kSpecMismatch, "num_classes must be at least 2");
  return shapes;
}

std::vector<std::size_t> trainable_layers(const ModelSpec& spec) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (is_trainable(spec.layers[i])) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> neuron_counts(const ModelSpec& spec) {
  std::vector<std::size_t> out;
  for (const auto& layer : spec.layers) {
    if (const auto* d = std::get_if<DenseSpec>(&layer)) out.push_back(d->out);
    if (const auto* c = std::get_if<Conv2DSpec>(&layer)) out.push_back(c->out_channels);
  }
  return out;
}

std::string spec_to_json(const ModelSpec& spec) {
  Json layers = Json::array();
  for (const auto& layer : spec.layers) layers.push_back(layer_to_json(layer));
  Json j{{"input_shape", spec.input_shape}, {"num_classes", spec.num_classes}, {"layers", layers}};
  return j.dump();
}

ModelSpec spec_from_json(std::string_view text) {
  try {
    const Json j = Json::parse(text);
    ModelSpec spec;
    spec.input_shape = j.at("input_shape").get<Shape>();
    spec.num_classes = j.at("num_classes").get<std::size_t>();
    for (const auto& layer : j.at("layers")) spec.layers.push_back(layer_from_json(layer));
    return spec;
  } catch (const Json::exception& e) {
    throw Error(Errc::kBadHeader, std::string("invalid model spec JSON: ") + e.what());
  }
}

Shape kernel_shape(const LayerSpec& layer) {
  if (const auto* d = std::get_if<DenseSpec>(&layer)) return {d->in, d->out};
  if (const auto* c = std::get_if<Conv2DSpec>(&layer)) return {c->kernel_h, c->kernel_w, c->in_channels, c->out_channels};
  throw Error(Errc::kInvalidArgument, "layer has no kernel");
}

void check_weights(const ModelSpec& spec, const LayerWeights& weights) {
  const auto trainable = trainable_layers(spec);
  if (weights.size() != trainable.size()) {
    throw Error(Errc::kSpecMismatch, "expected weights for " + std::to_string(trainable.size()) +
                                         " trainable layers, got " + std::to_string(weights.size()));
  }
  for (std::size_t t = 0; t < trainable.size(); ++t) {
    const auto& layer = spec.layers[trainable[t]];
    const Shape ks = kernel_shape(layer);
    if (weights[t].kernel.shape() != ks) {
      throw Error(Errc::kSpecMismatch, "kernel shape mismatch at trainable layer " + std::to_string(t));
    }
    if (weights[t].bias.shape() != Shape{ks.back()}) {
      throw Error(Errc::kSpecMismatch, "bias shape mismatch at trainable layer " + std::to_string(t));
    }
  }
}

Gradients& Gradients::operator+=(const Gradients& other) {
  for (std::size_t t = 0; t < kernel.size(); ++t) {
    kernel[t] += other.kernel[t];
    bias[t] += other.bias[t];
  }
  return *this;
}

Gradients& Gradients::operator*=(double s) {
  for (std::size_t t = 0; t < kernel.size(); ++t) {
    kernel[t] *= s;
    bias[t] *= s;
  }
  return *this;
}

struct Network::Trace {
  std::vector<ActivationMap> inputs;
  std::vector<ActivationMap> cols;
  std::vector<std::vector<Eigen::Index>> argmax;
};

Network::Network(ModelSpec spec, const LayerWeights& weights) : spec_(std::move(spec)) {
  const auto shapes = infer_shapes(spec_);
  check_weights(spec_, weights);
  trainable_ = trainable_layers(spec_);
  neurons_ = actgraph::neuron_counts(spec_);
  Shape in = spec_.input_shape;
  int t = 0;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    Layer layer{spec_.layers[i], in, shapes[i], -1};
    if (is_trainable(layer.spec)) {
      const auto& p = weights[static_cast<std::size_t>(t)];
      const auto out = static_cast<Eigen::Index>(p.kernel.shape().back());
      const auto fan_in = static_cast<Eigen::Index>(p.kernel.size()) / out;
      kernels_.push_back(Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                             p.kernel.data().data(), fan_in, out)
                             .cast<double>());
      biases_.push_back(Eigen::Map<const Eigen::RowVectorXf>(p.bias.data().data(), out).cast<double>());
      layer.trainable = t++;
    }
    layers_.push_back(std::move(layer));
    in = shapes[i];
  }
}

ForwardResult Network::run(std::span<const float> x, Trace* trace) const {
  if (x.size() != element_count(spec_.input_shape)) {
    throw Error(Errc::kShapeMismatch, "input has " + std::to_string(x.size()) + " values, model expects " +
                                          std::to_string(element_count(spec_.input_shape)));
  }
  calls_->fetch_add(1, std::memory_order_relaxed);
  const std::size_t in_ch = channels(spec_.input_shape);
  ActivationMap cur = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                          x.data(), static_cast<Eigen::Index>(x.size() / in_ch), static_cast<Eigen::Index>(in_ch))
                          .cast<double>();

  ForwardResult result;
  result.capture.layers.resize(trainable_.size());
  if (trace) {
    trace->inputs.resize(layers_.size());
    trace->cols.resize(layers_.size());
    trace->argmax.resize(layers_.size());
  }
  int pending = -1;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& layer = layers_[i];
    if (trace) trace->inputs[i] = cur;
    std::visit(Overloaded{
                   [&](const DenseSpec&) {
                     const auto t = static_cast<std::size_t>(layer.trainable);
                     ActivationMap out = cur * kernels_[t];
                     out.row(0) += biases_[t];
                     cur = std::move(out);
                   },
                   [&](const Conv2DSpec& c) {
                     const auto t = static_cast<std::size_t>(layer.trainable);
                     const auto [h, w] = spatial(layer.in_shape);
                     const auto [oh, ow] = spatial(layer.out_shape);
                     ActivationMap cols = im2col(cur, h, w, c.in_channels, c, oh, ow);
                     ActivationMap out = cols * kernels_[t];
                     out.rowwise() += biases_[t];
                     if (trace) trace->cols[i] = std::move(cols);
                     cur = std::move(out);
                   },
                   [&](const MaxPoolSpec& p) {
                     const auto [h, w] = spatial(layer.in_shape);
                     const auto [oh, ow] = spatial(layer.out_shape);
                     const Eigen::Index C = cur.cols();
                     ActivationMap out(static_cast<Eigen::Index>(oh * ow), C);
                     std::vector<Eigen::Index> arg(static_cast<std::size_t>(out.size()));
                     for (std::size_t oy = 0; oy < oh; ++oy) {
                       for (std::size_t ox = 0; ox < ow; ++ox) {
                         const auto orow = static_cast<Eigen::Index>(oy * ow + ox);
                         for (Eigen::Index ch = 0; ch < C; ++ch) {
                           Eigen::Index best = static_cast<Eigen::Index>(oy * p.stride * w + ox * p.stride);
                           for (std::size_t ky = 0; ky < p.size; ++ky) {
                             for (std::size_t kx = 0; kx < p.size; ++kx) {
                               const auto r = static_cast<Eigen::Index>((oy * p.stride + ky) * w + ox * p.stride + kx);
                               if (cur(r, ch) > cur(best, ch)) best = r;
                             }
                           }
                           out(orow, ch) = cur(best, ch);
                           arg[static_cast<std::size_t>(orow * C + ch)] = best;
                         }
                       }
                     }
                     (void)h;
                     if (trace) trace->argmax[i] = std::move(arg);
                     cur = std::move(out);
                   },
                   [&](const FlattenSpec&) {
                     ActivationMap flat = Eigen::Map<const ActivationMap>(cur.data(), 1, cur.size());
                     cur = std::move(flat);
                   },
                   [&](const ReLUSpec&) { cur = cur.cwiseMax(0.0); },
                   [&](const SoftmaxSpec&) {
                     const double m = cur.maxCoeff();
                     ActivationMap e = (cur.array() - m).exp().matrix();
                     cur = e / e.sum();
                   },
               },
               layer.spec);

    if (layer.trainable >= 0) {
      pending = layer.trainable;
      result.capture.layers[static_cast<std::size_t>(pending)] = cur;
    } else if (std::holds_alternative<ReLUSpec>(layer.spec) || std::holds_alternative<SoftmaxSpec>(layer.spec)) {
      if (pending >= 0) result.capture.layers[static_cast<std::size_t>(pending)] = cur;
    } else {
      pending = -1;
    }
  }
  result.probs = cur.row(0).transpose();
  return result;
}

ForwardResult Network::forward(std::span<const float> x) const { return run(x, nullptr); }

LayerWeights Network::weights() const {
  LayerWeights out;
  for (std::size_t t = 0; t < trainable_.size(); ++t) {
    const auto& k = kernels_[t];
    std::vector<float> kd(static_cast<std::size_t>(k.size()));
    for (Eigen::Index i = 0; i < k.size(); ++i) kd[static_cast<std::size_t>(i)] = static_cast<float>(k.data()[i]);
    std::vector<float> bd(static_cast<std::size_t>(biases_[t].size()));
    for (Eigen::Index i = 0; i < biases_[t].size(); ++i) bd[static_cast<std::size_t>(i)] = static_cast<float>(biases_[t][i]);
    const std::size_t units = bd.size();
    out.push_back({Tensor(kernel_shape(spec_.layers[trainable_[t]]), std::move(kd)), Tensor({units}, std::move(bd))});
  }
  return out;
}

Gradients Network::zero_gradients() const {
  Gradients g;
  for (std::size_t t = 0; t < kernels_.size(); ++t) {
    g.kernel.push_back(ActivationMap::Zero(kernels_[t].rows(), kernels_[t].cols()));
    g.bias.push_back(Eigen::RowVectorXd::Zero(biases_[t].size()));
  }
  return g;
}

double Network::loss_and_gradients(std::span<const float> x, std::uint32_t label, Gradients* grads) const {
  if (label >= spec_.num_classes) throw Error(Errc::kInvalidArgument, "label out of range");
  Trace trace;
  const ForwardResult fr = run(x, &trace);
  const ActivationMap& logits = trace.inputs.back();
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  const double loss = lse - logits(0, static_cast<Eigen::Index>(label));
  if (!grads) return loss;

  ActivationMap delta = fr.probs.transpose();
  delta(0, static_cast<Eigen::Index>(label)) -= 1.0;
  for (std::size_t i = layers_.size() - 1; i-- > 0;) {
    const Layer& layer = layers_[i];
    const ActivationMap& in = trace.inputs[i];
    std::visit(Overloaded{
                   [&](const DenseSpec&) {
                     const auto t = static_cast<std::size_t>(layer.trainable);
                     grads->kernel[t].noalias() += in.transpose() * delta;
                     grads->bias[t] += delta.row(0);
                     delta = delta * kernels_[t].transpose();
                   },
                   [&](const Conv2DSpec& c) {
                     const auto t = static_cast<std::size_t>(layer.trainable);
                     const auto [h, w] = spatial(layer.in_shape);
                     const auto [oh, ow] = spatial(layer.out_shape);
                     grads->kernel[t].noalias() += trace.cols[i].transpose() * delta;
                     grads->bias[t] += delta.colwise().sum();
                     const ActivationMap dcols = delta * kernels_[t].transpose();
                     delta = col2im(dcols, h, w, c.in_channels, c, oh, ow);
                   },
                   [&](const MaxPoolSpec&) {
                     ActivationMap din = ActivationMap::Zero(in.rows(), in.cols());
                     const auto& arg = trace.argmax[i];
                     const Eigen::Index C = delta.cols();
                     for (Eigen::Index r = 0; r < delta.rows(); ++r) {
                       for (Eigen::Index ch = 0; ch < C; ++ch) {
                         din(arg[static_cast<std::size_t>(r * C + ch)], ch) += delta(r, ch);
                       }
                     }
                     delta = std::move(din);
                   },
                   [&](const FlattenSpec&) {
                     ActivationMap back = Eigen::Map<const ActivationMap>(delta.data(), in.rows(), in.cols());
                     delta = std::move(back);
                   },
                   [&](const ReLUSpec&) { delta = delta.cwiseProduct((in.array() > 0.0).cast<double>().matrix()); },
                   [&](const SoftmaxSpec&) {},
               },
               layer.spec);
  }
  return loss;
}

void Network::apply_gradients(const Gradients& grads, double step) {
  for (std::size_t t = 0; t < kernels_.size(); ++t) {
    kernels_[t] -= step * grads.kernel[t];
    biases_[t] -= step * grads.bias[t];
  }
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t t = 0; t < kernels_.size(); ++t) n += static_cast<std::size_t>(kernels_[t].size() + biases_[t].size());
  return n;
}

namespace {
template <typename KernelVec, typename BiasVec>
auto& locate(KernelVec& kernels, BiasVec& biases, std::size_t i) {
  for (std::size_t t = 0; t < kernels.size(); ++t) {
    const auto ks = static_cast<std::size_t>(kernels[t].size());
    if (i < ks) return kernels[t].data()[i];
    i -= ks;
    const auto bs = static_cast<std::size_t>(biases[t].size());
    if (i < bs) return biases[t].data()[i];
    i -= bs;
  }
  throw Error(Errc::kInvalidArgument, "parameter index out of range");
}
}  // namespace

double Network::parameter(std::size_t i) const { return locate(kernels_, biases_, i); }
void Network::set_parameter(std::size_t i, double v) { locate(kernels_, biases_, i) = v; }
double Network::gradient_entry(const Gradients& g, std::size_t i) const { return locate(g.kernel, g.bias, i); }

ForwardResult forward(const ModelSpec& spec, const LayerWeights& weights, const Tensor& x) {
  return Network(spec, weights).forward(x.data());
}

std::string encode_model(const ModelSpec& spec, const LayerWeights& weights) {
  infer_shapes(spec);
  check_weights(spec, weights);
  const std::string json = spec_to_json(spec);
  std::string out(kModelMagic);
  auto put_u32 = [&out](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  put_u32(kModelVersion);
  put_u32(static_cast<std::uint32_t>(json.size()));
  out += json;
  for (const auto& p : weights) {
    for (const Tensor* t : {&p.kernel, &p.bias}) {
      const std::string blob = encode_tensor(*t);
      put_u32(static_cast<std::uint32_t>(blob.size()));
      out += blob;
    }
  }
  return out;
}

Model decode_model(std::string_view bytes) {
  std::size_t pos = 0;
  auto u32 = [&]() {
    if (bytes.size() - pos < 4) throw Error(Errc::kTruncated, "model file truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    pos += 4;
    return v;
  };
  auto take = [&](std::uint32_t n) {
    if (bytes.size() - pos < n) throw Error(Errc::kTruncated, "model file truncated");
    auto s = bytes.substr(pos, n);
    pos += n;
    return s;
  };
  if (bytes.substr(0, 4) != kModelMagic) throw Error(Errc::kBadMagic, "expected magic \"AGMF\"");
  pos = 4;
  const std::uint32_t version = u32();
  if (version != kModelVersion) {
    throw Error(Errc::kUnsupportedVersion, "model version " + std::to_string(version) + " (expected 1)");
  }
  Model model;
  model.spec = spec_from_json(take(u32()));
  infer_shapes(model.spec);
  const std::size_t trainable = trainable_layers(model.spec).size();
  for (std::size_t t = 0; t < trainable; ++t) {
    Tensor kernel = decode_tensor(take(u32()));
    Tensor bias = decode_tensor(take(u32()));
    model.weights.push_back({std::move(kernel), std::move(bias)});
  }
  if (pos != bytes.size()) throw Error(Errc::kSpecMismatch, "trailing data after weight blobs");
  check_weights(model.spec, model.weights);
  return model;
}

void save_model(const ModelSpec& spec, const LayerWeights& weights, const std::filesystem::path& path) {
  write_file(path, encode_model(spec, weights));
}

Model load_model(const std::filesystem::path& path) { return decode_model(read_file(path)); }

}  // namespace actgraph
