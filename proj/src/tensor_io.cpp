#include "actgraph/tensor_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "actgraph/error.hpp"

namespace actgraph {
namespace {

constexpr std::string_view kTensorMagic = "AGTD";
constexpr std::string_view kLabelMagic = "AGLB";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  void expect_magic(std::string_view magic) {
    if (bytes_.size() < magic.size() || bytes_.substr(0, magic.size()) != magic) {
      throw Error(Errc::kBadMagic, "expected magic \"" + std::string(magic) + "\"");
    }
    pos_ = magic.size();
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n) const {
    if (remaining() < n) throw Error(Errc::kTruncated, "unexpected end of data");
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_tensor(const Tensor& t) {
  std::string out(kTensorMagic);
  out.reserve(8 + 4 * t.rank() + 4 * t.size());
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) {
    if (d > std::numeric_limits<std::uint32_t>::max()) throw Error(Errc::kInvalidArgument, "dimension exceeds u32");
    put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (float v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Tensor decode_tensor(std::string_view bytes) {
  Reader in(bytes);
  in.expect_magic(kTensorMagic);
  const std::uint32_t rank = in.u32();
  in.need(4ULL * rank);
  Shape shape(rank);
  for (auto& d : shape) d = in.u32();
  const std::size_t count = element_count(shape);
  if (in.remaining() < 4 * count) throw Error(Errc::kTruncated, "payload shorter than shape requires");
  if (in.remaining() > 4 * count) {
    throw Error(Errc::kShapeMismatch, "payload holds more values than the shape declares");
  }
  std::vector<float> data(count);
  for (auto& v : data) v = std::bit_cast<float>(in.u32());
  return Tensor(std::move(shape), std::move(data));
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) { write_file(path, encode_tensor(t)); }

Tensor read_tensor(const std::filesystem::path& path) { return decode_tensor(read_file(path)); }

std::string encode_labels(const LabelFile& labels) {
  std::string out(kLabelMagic);
  put_u32(out, static_cast<std::uint32_t>(labels.labels.size()));
  for (auto v : labels.labels) put_u32(out, v);
  if (labels.flags) {
    if (labels.flags->size() != labels.labels.size()) {
      throw Error(Errc::kCountMismatch, "flags length differs from labels");
    }
    out.push_back(1);
    for (auto f : *labels.flags) {
      if (f > 1) throw Error(Errc::kInvalidArgument, "flags must be 0 or 1");
      out.push_back(static_cast<char>(f));
    }
  } else {
    out.push_back(0);
  }
  return out;
}

LabelFile decode_labels(std::string_view bytes) {
  Reader in(bytes);
  in.expect_magic(kLabelMagic);
  const std::uint32_t count = in.u32();
  if (in.remaining() < 4ULL * count + 1) {
    throw Error(Errc::kCountMismatch, "label section shorter than header count " + std::to_string(count));
  }
  LabelFile out;
  out.labels.resize(count);
  for (auto& v : out.labels) v = in.u32();
  const std::uint8_t has_flags = in.u8();
  if (has_flags > 1) throw Error(Errc::kBadHeader, "flag presence byte must be 0 or 1");
  if (has_flags == 1) {
    if (in.remaining() != count) throw Error(Errc::kCountMismatch, "flag section length differs from count");
    std::vector<std::uint8_t> flags(count);
    for (auto& f : flags) {
      f = in.u8();
      if (f > 1) throw Error(Errc::kInvalidArgument, "flags must be 0 or 1");
    }
    out.flags = std::move(flags);
  }
  if (in.remaining() != 0) throw Error(Errc::kCountMismatch, "trailing bytes after label data");
  return out;
}

void write_labels(const LabelFile& labels, const std::filesystem::path& path) {
  write_file(path, encode_labels(labels));
}

LabelFile read_labels(const std::filesystem::path& path) { return decode_labels(read_file(path)); }

LabeledDataset read_dataset(const std::filesystem::path& inputs, const std::filesystem::path& labels) {
  LabelFile lf = read_labels(labels);
  LabeledDataset ds{read_tensor(inputs), std::move(lf.labels), std::move(lf.flags)};
  ds.validate();
  return ds;
}

void write_dataset(const LabeledDataset& ds, const std::filesystem::path& inputs,
                   const std::filesystem::path& labels) {
  ds.validate();
  write_tensor(ds.inputs, inputs);
  write_labels(LabelFile{ds.labels, ds.flags}, labels);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(Errc::kIo, "read failed: " + path.string());
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::kIo, "write failed: " + path.string());
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

std::string format_number(float v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

void write_scores_csv(std::ostream& out, std::span<const double> scores, std::span<const std::size_t> order) {
  out << "index,score\n";
  if (order.empty()) {
    for (std::size_t i = 0; i < scores.size(); ++i) out << i << ',' << format_number(scores[i]) << '\n';
  } else {
    for (std::size_t i : order) out << i << ',' << format_number(scores[i]) << '\n';
  }
}

void write_scores_csv(const std::filesystem::path& path, std::span<const double> scores,
                      std::span<const std::size_t> order) {
  std::ostringstream ss;
  write_scores_csv(ss, scores, order);
  write_file(path, ss.str());
}

std::vector<double> read_scores_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("index,score", 0) != 0) {
    throw Error(Errc::kBadHeader, path.string() + ": expected header `index,score`");
  }
  std::vector<std::pair<std::size_t, double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(Errc::kBadHeader, "malformed score row: " + line);
    std::size_t index = 0;
    double score = 0;
    const char* b = line.data();
    auto r1 = std::from_chars(b, b + comma, index);
    const char* s = b + comma + 1;
    const char* e = b + line.size();
    auto r2 = std::from_chars(s, e, score);
    if (r1.ec != std::errc{} || r2.ec != std::errc{}) throw Error(Errc::kBadHeader, "malformed score row: " + line);
    rows.emplace_back(index, score);
  }
  std::vector<double> scores(rows.size(), std::numeric_limits<double>::quiet_NaN());
  for (auto [i, s] : rows) {
    if (i >= scores.size() || !std::isnan(scores[i])) {
      throw Error(Errc::kCountMismatch, "score indices must be a permutation of 0..n-1");
    }
    scores[i] = s;
  }
  return scores;
}

void write_features_csv(std::ostream& out, const FeatureMatrix& features) {
  out << "index";
  for (Eigen::Index c = 0; c < features.cols(); ++c) out << ",f" << c;
  out << '\n';
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    out << r;
    for (Eigen::Index c = 0; c < features.cols(); ++c) out << ',' << format_number(features(r, c));
    out << '\n';
  }
}

void write_features_csv(const std::filesystem::path& path, const FeatureMatrix& features) {
  std::ostringstream ss;
  write_features_csv(ss, features);
  write_file(path, ss.str());
}

}  // namespace actgraph
