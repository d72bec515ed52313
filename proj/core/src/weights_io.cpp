// LHDRW001 weight files and LHDRT001 tensor files. All integers and floats
// little-endian.
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

#include "lhdr/errors.hpp"
#include "lhdr/pfm.hpp"
#include "lhdr/tinycnn.hpp"

namespace lhdr::nn {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kWeightMagic = "LHDRW001";
constexpr std::string_view kWeightMagicPrefix = "LHDRW";
constexpr std::string_view kTensorMagic = "LHDRT001";

class Writer {
 public:
  void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(std::span<const float> values) {
    for (float f : values) u32(std::bit_cast<std::uint32_t>(f));
  }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError(what_ + ": truncated");
  }
  std::string_view str(std::size_t n) {
    need(n);
    std::string_view s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::vector<float> f32(std::size_t n) {
    if (n > (bytes_.size() - pos_) / 4) throw FormatError(what_ + ": truncated");
    std::vector<float> v(n);
    for (auto& f : v) f = std::bit_cast<float>(u32());
    return v;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

}  // namespace

std::vector<std::uint8_t> serialize_weights(const WeightBundle& bundle) {
  Writer w;
  w.bytes(kWeightMagic);
  w.u32(static_cast<std::uint32_t>(bundle.layers.size()));
  for (const auto& l : bundle.layers) {
    if (l.kernel.size() != l.spec.kernel_size() ||
        l.bias.size() != static_cast<std::size_t>(l.spec.out_channels)) {
      throw ParameterError("layer arrays do not match their shape");
    }
    w.u32(static_cast<std::uint32_t>(l.spec.kernel));
    w.u32(static_cast<std::uint32_t>(l.spec.in_channels));
    w.u32(static_cast<std::uint32_t>(l.spec.out_channels));
    w.u8(static_cast<std::uint8_t>(l.spec.activation));
    w.f32(l.kernel);
    w.f32(l.bias);
  }
  w.u64(fnv1a64(w.data()));
  return std::move(w.data());
}

WeightBundle parse_weights(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kWeightMagic.size() + 4 + 8) throw FormatError("weight file: truncated");
  const std::string_view magic(reinterpret_cast<const char*>(bytes.data()), kWeightMagic.size());
  if (magic.substr(0, kWeightMagicPrefix.size()) != kWeightMagicPrefix) {
    throw FormatError("weight file: bad magic");
  }
  if (magic != kWeightMagic) {
    throw FormatError("weight file: unsupported version '" + std::string(magic.substr(5)) + "'");
  }
  const auto body = bytes.first(bytes.size() - 8);
  Reader tail(bytes.last(8), "weight file");
  if (tail.u64() != fnv1a64(body)) throw FormatError("weight file: checksum mismatch");

  Reader r(body, "weight file");
  r.str(kWeightMagic.size());
  WeightBundle bundle;
  bundle.version = 1;
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    LayerWeights l;
    const std::uint32_t k = r.u32();
    const std::uint32_t in = r.u32();
    const std::uint32_t out = r.u32();
    const std::uint8_t act = r.u8();
    if (k == 0 || k % 2 == 0 || k > 15 || in == 0 || out == 0 || in > 4096 || out > 4096) {
      throw FormatError("weight file: invalid layer geometry");
    }
    if (act > static_cast<std::uint8_t>(Activation::tanh)) {
      throw FormatError("weight file: unknown activation " + std::to_string(act));
    }
    l.spec = {static_cast<int>(k), static_cast<int>(in), static_cast<int>(out),
              static_cast<Activation>(act)};
    l.kernel = r.f32(l.spec.kernel_size());
    l.bias = r.f32(out);
    bundle.layers.push_back(std::move(l));
  }
  if (r.pos() != body.size()) throw FormatError("weight file: trailing bytes before checksum");
  return bundle;
}

void save_weights(const WeightBundle& bundle, const fs::path& path) {
  write_bytes(path, serialize_weights(bundle));
}

WeightBundle load_weights(const fs::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return parse_weights(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_tensor(const Tensor& t, const fs::path& path) {
  Writer w;
  w.bytes(kTensorMagic);
  w.u32(static_cast<std::uint32_t>(t.height()));
  w.u32(static_cast<std::uint32_t>(t.width()));
  w.u32(static_cast<std::uint32_t>(t.channels()));
  w.f32(t.data());
  write_bytes(path, w.data());
}

Tensor load_tensor(const fs::path& path) {
  const auto bytes = read_bytes(path);
  Reader r(bytes, path.string());
  if (r.str(kTensorMagic.size()) != kTensorMagic) throw FormatError(path.string() + ": bad magic");
  const std::uint32_t h = r.u32();
  const std::uint32_t w = r.u32();
  const std::uint32_t c = r.u32();
  if (h > 65536 || w > 65536 || c > 4096) throw FormatError(path.string() + ": invalid shape");
  auto data = r.f32(static_cast<std::size_t>(h) * w * c);
  if (r.pos() != bytes.size()) throw FormatError(path.string() + ": trailing bytes");
  return Tensor(static_cast<int>(w), static_cast<int>(h), static_cast<int>(c), std::move(data));
}

}  // namespace lhdr::nn
