#include "lhdr/tinycnn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#endif
#include <random>

#include "lhdr/errors.hpp"
#include "lhdr/parallel.hpp"

namespace lhdr::nn {

namespace {

constexpr int kMaxKernel = 15;

struct ConvArgs {
  const float* input;
  int width;
  int height;
  int in_channels;
  const float* kernel;
  const float* bias;
  int k;
  int out_channels;
  float* output;
};

// Output pixels are processed in blocks so that several independent
// accumulator chains are in flight; each accumulator still sees the exact
// bias, (ky, kx, ci) sequence. Vector lanes use the same single-rounding fma
// as std::fma, so every path produces identical bits.
constexpr int kBlock = 8;

#if defined(__AVX2__) && defined(__FMA__)
constexpr bool kSimd = true;

// kOut a multiple of 8: lanes run over output channels. kK > 0 fixes the
// kernel size at compile time.
template <int kOut, int kPix, int kK>
void conv_row_simd_channels(const ConvArgs& a, const std::array<const float*, kMaxKernel>& rows,
                            float* out_row, int& x) {
  constexpr int kVec = kOut / 8;
  const int k = kK > 0 ? kK : a.k;
  const int r = k / 2;
  const int cin = a.in_channels;
  __m256 bias[kVec];
  for (int v = 0; v < kVec; ++v) bias[v] = _mm256_loadu_ps(a.bias + 8 * v);
  for (; x + kPix <= a.width; x += kPix) {
    __m256 acc[kPix][kVec];
    for (int p = 0; p < kPix; ++p) {
      for (int v = 0; v < kVec; ++v) acc[p][v] = bias[v];
    }
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const float* src[kPix];
        for (int p = 0; p < kPix; ++p) {
          src[p] = rows[ky] + static_cast<std::size_t>(std::clamp(x + p + kx - r, 0, a.width - 1)) * cin;
        }
        const float* w = a.kernel + static_cast<std::size_t>(ky * k + kx) * cin * kOut;
        for (int ci = 0; ci < cin; ++ci) {
          __m256 wv[kVec];
          for (int v = 0; v < kVec; ++v) wv[v] = _mm256_loadu_ps(w + ci * kOut + 8 * v);
          for (int p = 0; p < kPix; ++p) {
            const __m256 s = _mm256_broadcast_ss(src[p] + ci);
            for (int v = 0; v < kVec; ++v) acc[p][v] = _mm256_fmadd_ps(s, wv[v], acc[p][v]);
          }
        }
      }
    }
    for (int p = 0; p < kPix; ++p) {
      for (int v = 0; v < kVec; ++v) {
        _mm256_storeu_ps(out_row + static_cast<std::size_t>(x + p) * kOut + 8 * v, acc[p][v]);
      }
    }
  }
}

#if defined(__AVX512F__)
// kOut a multiple of 16 on AVX-512: one zmm holds 16 output channels. kCin
// > 0 fixes the input channel count; interior blocks then address every
// pixel from one base pointer.
template <int kOut, int kPix, int kK, int kCin, bool kInterior>
[[gnu::always_inline]] inline void conv_block_zmm(const ConvArgs& a,
                                                  const std::array<const float*, kMaxKernel>& rows,
                                                  float* out_row, int x) {
  constexpr int kVec = kOut / 16;
  const int k = kK > 0 ? kK : a.k;
  const int r = k / 2;
  const int cin = kCin > 0 ? kCin : a.in_channels;
  __m512 acc[kPix][kVec];
  for (int v = 0; v < kVec; ++v) {
    const __m512 b = _mm512_loadu_ps(a.bias + 16 * v);
    for (int p = 0; p < kPix; ++p) acc[p][v] = b;
  }
  for (int ky = 0; ky < k; ++ky) {
    for (int kx = 0; kx < k; ++kx) {
      const float* w = a.kernel + static_cast<std::size_t>(ky * k + kx) * cin * kOut;
      if constexpr (kInterior) {
        const float* src = rows[ky] + static_cast<std::size_t>(x + kx - r) * cin;
        for (int ci = 0; ci < cin; ++ci) {
          __m512 wv[kVec];
          for (int v = 0; v < kVec; ++v) wv[v] = _mm512_loadu_ps(w + ci * kOut + 16 * v);
          for (int p = 0; p < kPix; ++p) {
            const __m512 s = _mm512_set1_ps(src[p * cin + ci]);
            for (int v = 0; v < kVec; ++v) acc[p][v] = _mm512_fmadd_ps(s, wv[v], acc[p][v]);
          }
        }
      } else {
        const float* src[kPix];
        for (int p = 0; p < kPix; ++p) {
          src[p] = rows[ky] + static_cast<std::size_t>(std::clamp(x + p + kx - r, 0, a.width - 1)) * cin;
        }
        for (int ci = 0; ci < cin; ++ci) {
          __m512 wv[kVec];
          for (int v = 0; v < kVec; ++v) wv[v] = _mm512_loadu_ps(w + ci * kOut + 16 * v);
          for (int p = 0; p < kPix; ++p) {
            const __m512 s = _mm512_set1_ps(src[p][ci]);
            for (int v = 0; v < kVec; ++v) acc[p][v] = _mm512_fmadd_ps(s, wv[v], acc[p][v]);
          }
        }
      }
    }
  }
  for (int p = 0; p < kPix; ++p) {
    for (int v = 0; v < kVec; ++v) {
      _mm512_storeu_ps(out_row + static_cast<std::size_t>(x + p) * kOut + 16 * v, acc[p][v]);
    }
  }
}

template <int kOut, int kPix, int kK, int kCin>
void conv_row_zmm_channels(const ConvArgs& a, const std::array<const float*, kMaxKernel>& rows,
                           float* out_row, int& x) {
  const int r = (kK > 0 ? kK : a.k) / 2;
  for (; x + kPix <= a.width; x += kPix) {
    if (x >= r && x + kPix + r <= a.width) {
      conv_block_zmm<kOut, kPix, kK, kCin, true>(a, rows, out_row, x);
    } else {
      conv_block_zmm<kOut, kPix, kK, kCin, false>(a, rows, out_row, x);
    }
  }
}

template <int kOut, int kPix>
void conv_row_zmm_dispatch(const ConvArgs& a, const std::array<const float*, kMaxKernel>& rows,
                           float* out_row, int& x) {
  if (a.k != 3) return conv_row_zmm_channels<kOut, kPix, 0, 0>(a, rows, out_row, x);
  switch (a.in_channels) {
    case 8: return conv_row_zmm_channels<kOut, kPix, 3, 8>(a, rows, out_row, x);
    case 12: return conv_row_zmm_channels<kOut, kPix, 3, 12>(a, rows, out_row, x);
    case 16: return conv_row_zmm_channels<kOut, kPix, 3, 16>(a, rows, out_row, x);
    case 24: return conv_row_zmm_channels<kOut, kPix, 3, 24>(a, rows, out_row, x);
    default: return conv_row_zmm_channels<kOut, kPix, 3, 0>(a, rows, out_row, x);
  }
}
#endif

// Narrow outputs (up to 4 channels): lanes run over neighbouring pixels. The
// k input rows in use are kept channel-planar, replicate-padded by r on both
// sides, in a small ring indexed by row.
#if defined(__AVX512F__)
using Vec = __m512;
constexpr int kLanes = 16;
inline Vec vset1(float v) { return _mm512_set1_ps(v); }
inline Vec vload(const float* p) { return _mm512_loadu_ps(p); }
inline Vec vfma(Vec a, Vec b, Vec c) { return _mm512_fmadd_ps(a, b, c); }
inline void vstore(float* p, Vec v) { _mm512_store_ps(p, v); }
#else
using Vec = __m256;
constexpr int kLanes = 8;
inline Vec vset1(float v) { return _mm256_set1_ps(v); }
inline Vec vload(const float* p) { return _mm256_loadu_ps(p); }
inline Vec vfma(Vec a, Vec b, Vec c) { return _mm256_fmadd_ps(a, b, c); }
inline void vstore(float* p, Vec v) { _mm256_store_ps(p, v); }
#endif

template <int kOut>
void conv_rows_narrow(const ConvArgs& a, int y0, int y1) {
  constexpr int kGroups = kOut <= 2 ? 4 : 2;
  constexpr int kSpan = kLanes * kGroups;
  const int r = a.k / 2;
  const int cin = a.in_channels;
  const int w = a.width;
  const std::size_t stride = static_cast<std::size_t>(w) + 2 * r + kSpan;  // per channel
  std::vector<float> ring(stride * cin * a.k, 0.0f);
  std::vector<int> ring_row(a.k, -1);
  auto planar_row = [&](int yy) -> const float* {
    const int slot = yy % a.k;
    float* dst = ring.data() + static_cast<std::size_t>(slot) * stride * cin;
    if (ring_row[slot] != yy) {
      const float* src = a.input + static_cast<std::size_t>(yy) * w * cin;
      for (int xx = -r; xx < w + r; ++xx) {
        const float* px = src + static_cast<std::size_t>(std::clamp(xx, 0, w - 1)) * cin;
        for (int ci = 0; ci < cin; ++ci) dst[ci * stride + (xx + r)] = px[ci];
      }
      ring_row[slot] = yy;
    }
    return dst;
  };

  std::array<const float*, kMaxKernel> rows{};
  alignas(64) float lanes[kOut][kSpan];
  for (int y = y0; y < y1; ++y) {
    for (int ky = 0; ky < a.k; ++ky) rows[ky] = planar_row(std::clamp(y + ky - r, 0, a.height - 1));
    float* out_row = a.output + static_cast<std::size_t>(y) * w * kOut;
    for (int x = 0; x < w; x += kSpan) {
      Vec acc[kGroups][kOut];
      for (int g = 0; g < kGroups; ++g) {
        for (int co = 0; co < kOut; ++co) acc[g][co] = vset1(a.bias[co]);
      }
      for (int ky = 0; ky < a.k; ++ky) {
        for (int kx = 0; kx < a.k; ++kx) {
          const float* wk = a.kernel + static_cast<std::size_t>(ky * a.k + kx) * cin * kOut;
          const float* src = rows[ky] + x + kx;
          for (int ci = 0; ci < cin; ++ci) {
            const float* sc = src + ci * stride;
            for (int co = 0; co < kOut; ++co) {
              const Vec wv = vset1(wk[ci * kOut + co]);
              for (int g = 0; g < kGroups; ++g) {
                acc[g][co] = vfma(vload(sc + kLanes * g), wv, acc[g][co]);
              }
            }
          }
        }
      }
      for (int g = 0; g < kGroups; ++g) {
        for (int co = 0; co < kOut; ++co) vstore(lanes[co] + kLanes * g, acc[g][co]);
      }
      const int n = std::min(kSpan, w - x);
      for (int p = 0; p < n; ++p) {
        for (int co = 0; co < kOut; ++co) out_row[static_cast<std::size_t>(x + p) * kOut + co] = lanes[co][p];
      }
    }
  }
}
#else
constexpr bool kSimd = false;
#endif

// Scalar reference path for pixels [x, end).
template <int kOut>
void conv_pixels_scalar(const ConvArgs& a, const std::array<const float*, kMaxKernel>& rows,
                        float* out_row, int x, int end) {
  const int r = a.k / 2;
  const int cin = a.in_channels;
  for (; x < end; ++x) {
    float acc[kOut];
    for (int co = 0; co < kOut; ++co) acc[co] = a.bias[co];
    for (int ky = 0; ky < a.k; ++ky) {
      for (int kx = 0; kx < a.k; ++kx) {
        const float* src =
            rows[ky] + static_cast<std::size_t>(std::clamp(x + kx - r, 0, a.width - 1)) * cin;
        const float* w = a.kernel + static_cast<std::size_t>(ky * a.k + kx) * cin * kOut;
        for (int ci = 0; ci < cin; ++ci) {
          for (int co = 0; co < kOut; ++co) {
            acc[co] = std::fma(src[ci], w[static_cast<std::size_t>(ci) * kOut + co], acc[co]);
          }
        }
      }
    }
    std::copy(acc, acc + kOut, out_row + static_cast<std::size_t>(x) * kOut);
  }
}

template <int kOut>
void conv_row_fixed(const ConvArgs& a, int y, float* out_row) {
  const int r = a.k / 2;
  const int cin = a.in_channels;
  std::array<const float*, kMaxKernel> rows{};
  for (int ky = 0; ky < a.k; ++ky) {
    const int yy = std::clamp(y + ky - r, 0, a.height - 1);
    rows[ky] = a.input + static_cast<std::size_t>(yy) * a.width * cin;
  }
  int x = 0;
#if defined(__AVX512F__)
  if constexpr (kOut % 16 == 0) {
    conv_row_zmm_dispatch<kOut, kOut == 16 ? 16 : 8>(a, rows, out_row, x);
    conv_pixels_scalar<kOut>(a, rows, out_row, x, a.width);
    return;
  }
#endif
#if defined(__AVX2__) && defined(__FMA__)
  if constexpr (kOut % 8 == 0) {
    // Accumulator count stays within the 32 vector registers of AVX-512VL
    // builds and 16 otherwise.
#if defined(__AVX512VL__)
    constexpr int kPix = kOut == 8 ? 16 : kOut == 16 ? 12 : kOut == 24 ? 8 : 6;
#else
    constexpr int kPix = kOut == 8 ? 12 : kOut == 16 ? 6 : 4;
#endif
    if (a.k == 3) {
      conv_row_simd_channels<kOut, kPix, 3>(a, rows, out_row, x);
    } else {
      conv_row_simd_channels<kOut, kPix, 0>(a, rows, out_row, x);
    }
  }
#endif
  conv_pixels_scalar<kOut>(a, rows, out_row, x, a.width);
}

void conv_row_generic(const ConvArgs& a, int y) {
  const int r = a.k / 2;
  const int cin = a.in_channels;
  const int cout = a.out_channels;
  std::vector<float> acc(cout);
  float* out_row = a.output + static_cast<std::size_t>(y) * a.width * cout;
  for (int x = 0; x < a.width; ++x) {
    std::copy(a.bias, a.bias + cout, acc.begin());
    for (int ky = 0; ky < a.k; ++ky) {
      const int yy = std::clamp(y + ky - r, 0, a.height - 1);
      for (int kx = 0; kx < a.k; ++kx) {
        const int xx = std::clamp(x + kx - r, 0, a.width - 1);
        const float* src = a.input + (static_cast<std::size_t>(yy) * a.width + xx) * cin;
        const float* w = a.kernel + static_cast<std::size_t>(ky * a.k + kx) * cin * cout;
        for (int ci = 0; ci < cin; ++ci) {
          for (int co = 0; co < cout; ++co) {
            acc[co] = std::fma(src[ci], w[static_cast<std::size_t>(ci) * cout + co], acc[co]);
          }
        }
      }
    }
    std::copy(acc.begin(), acc.end(), out_row + static_cast<std::size_t>(x) * cout);
  }
}

void conv_row(const ConvArgs& a, int y) {
  float* out_row = a.output + static_cast<std::size_t>(y) * a.width * a.out_channels;
  switch (a.out_channels) {
    case 8: return conv_row_fixed<8>(a, y, out_row);
    case 16: return conv_row_fixed<16>(a, y, out_row);
    case 24: return conv_row_fixed<24>(a, y, out_row);
    case 32: return conv_row_fixed<32>(a, y, out_row);
    default: return conv_row_generic(a, y);
  }
}

// Fewer than 8 outputs: run the 8-wide kernel on zero-padded weights and
// keep the leading channels. The real lanes see the same fma sequence.
[[maybe_unused]] void conv_rows_padded(const ConvArgs& a, int y0, int y1) {
  const int cout = a.out_channels;
  const std::size_t taps = static_cast<std::size_t>(a.k) * a.k * a.in_channels;
  std::vector<float> kernel(taps * 8, 0.0f);
  std::vector<float> bias(8, 0.0f);
  for (std::size_t t = 0; t < taps; ++t) {
    std::copy(a.kernel + t * cout, a.kernel + (t + 1) * cout, kernel.begin() + t * 8);
  }
  std::copy(a.bias, a.bias + cout, bias.begin());
  ConvArgs padded = a;
  padded.kernel = kernel.data();
  padded.bias = bias.data();
  padded.out_channels = 8;
  std::vector<float> row(static_cast<std::size_t>(a.width) * 8);
  for (int y = y0; y < y1; ++y) {
    conv_row_fixed<8>(padded, y, row.data());
    float* out_row = a.output + static_cast<std::size_t>(y) * a.width * cout;
    for (int x = 0; x < a.width; ++x) {
      std::copy(row.data() + x * 8, row.data() + x * 8 + cout, out_row + static_cast<std::size_t>(x) * cout);
    }
  }
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

LayerSpec make_layer(int k, int in, int out, Activation act) { return {k, in, out, act}; }

}  // namespace

const char* to_string(Activation act) {
  switch (act) {
    case Activation::none: return "none";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "?";
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t hash) {
  for (std::uint8_t b : bytes) {
    hash ^= b;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::size_t NetworkSpec::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.param_count();
  return n;
}

std::uint64_t NetworkSpec::architecture_hash() const {
  std::vector<std::uint8_t> bytes;
  put_u32(bytes, static_cast<std::uint32_t>(layers.size()));
  for (const auto& l : layers) {
    put_u32(bytes, static_cast<std::uint32_t>(l.kernel));
    put_u32(bytes, static_cast<std::uint32_t>(l.in_channels));
    put_u32(bytes, static_cast<std::uint32_t>(l.out_channels));
    bytes.push_back(static_cast<std::uint8_t>(l.activation));
  }
  return fnv1a64(bytes);
}

void NetworkSpec::validate() const {
  if (layers.empty()) throw ParameterError("network '" + name + "' has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.kernel < 1 || l.kernel % 2 == 0 || l.kernel > kMaxKernel) {
      throw ParameterError("layer kernel size must be odd and <= 15");
    }
    if (l.in_channels <= 0 || l.out_channels <= 0) throw ParameterError("layer channels must be > 0");
    if (i > 0 && layers[i - 1].out_channels != l.in_channels) {
      throw ParameterError("layer channel counts do not chain in '" + name + "'");
    }
  }
}

NetworkSpec NetworkSpec::coarse_align() {
  return {"coarse",
          {make_layer(3, 12, 24, Activation::relu), make_layer(3, 24, 24, Activation::relu),
           make_layer(3, 24, 24, Activation::relu), make_layer(3, 24, 2, Activation::tanh)}};
}

NetworkSpec NetworkSpec::fine_align() {
  return {"fine",
          {make_layer(3, 12, 16, Activation::relu), make_layer(3, 16, 16, Activation::relu),
           make_layer(3, 16, 2, Activation::tanh)}};
}

NetworkSpec NetworkSpec::merge() {
  return {"merge",
          {make_layer(3, 8, 16, Activation::relu), make_layer(3, 16, 16, Activation::relu),
           make_layer(3, 16, 2, Activation::none)}};
}

NetworkSpec WeightBundle::spec(std::string name) const {
  NetworkSpec s{std::move(name), {}};
  for (const auto& l : layers) s.layers.push_back(l.spec);
  return s;
}

WeightBundle WeightBundle::zeros(const NetworkSpec& spec) {
  spec.validate();
  WeightBundle b;
  for (const auto& l : spec.layers) {
    b.layers.push_back({l, std::vector<float>(l.kernel_size(), 0.0f),
                        std::vector<float>(l.out_channels, 0.0f)});
  }
  return b;
}

WeightBundle WeightBundle::random(const NetworkSpec& spec, std::uint64_t seed, float scale) {
  WeightBundle b = zeros(spec);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-scale, scale);
  for (auto& l : b.layers) {
    for (float& w : l.kernel) w = dist(rng);
    for (float& w : l.bias) w = dist(rng);
  }
  return b;
}

namespace {

void activate(float* begin, float* end, Activation act) {
  switch (act) {
    case Activation::none:
      break;
    case Activation::relu:
      for (float* v = begin; v != end; ++v) *v = std::max(0.0f, *v);
      break;
    case Activation::tanh:
      for (float* v = begin; v != end; ++v) *v = std::tanh(*v);
      break;
  }
}

// Intermediate activations of forward() reuse per-thread storage, so repeated
// calls do not fault in fresh pages for every layer.
thread_local std::vector<std::vector<float>> scratch_pool;

std::vector<float> take_scratch() {
  if (scratch_pool.empty()) return {};
  std::vector<float> v = std::move(scratch_pool.back());
  scratch_pool.pop_back();
  return v;
}

void give_scratch(std::vector<float> v) {
  if (scratch_pool.size() < 2) scratch_pool.push_back(std::move(v));
}

// Convolution followed by the activation, applied per row while it is hot.
// `storage` is reused for the output when it has capacity.
Tensor conv2d_activated(const Tensor& input, std::span<const float> kernel,
                        std::span<const float> bias, int k, int out_channels, Activation act,
                        std::vector<float> storage = {}) {
  if (k < 1 || k % 2 == 0 || k > kMaxKernel) throw ParameterError("conv2d kernel must be odd, <= 15");
  if (out_channels <= 0) throw ParameterError("conv2d needs out_channels > 0");
  const int cin = input.channels();
  if (kernel.size() != static_cast<std::size_t>(k) * k * cin * out_channels) {
    throw ParameterError("conv2d kernel size does not match input channels");
  }
  if (bias.size() != static_cast<std::size_t>(out_channels)) {
    throw ParameterError("conv2d bias size does not match out_channels");
  }
  storage.resize(input.pixel_count() * out_channels);
  Tensor out(input.width(), input.height(), out_channels, std::move(storage));
  if (input.pixel_count() == 0) return out;
  const ConvArgs args{input.data().data(), input.width(), input.height(), cin, kernel.data(),
                      bias.data(), k, out_channels, out.data().data()};
  const std::size_t row_len = static_cast<std::size_t>(input.width()) * out_channels;
  parallel_rows(input.height(), [&](int y0, int y1) {
    auto finish = [&] {
      float* base = out.data().data();
      activate(base + y0 * row_len, base + y1 * row_len, act);
    };
#if defined(__AVX2__) && defined(__FMA__)
    switch (out_channels) {
      case 1: conv_rows_narrow<1>(args, y0, y1); return finish();
      case 2: conv_rows_narrow<2>(args, y0, y1); return finish();
      case 3: conv_rows_narrow<3>(args, y0, y1); return finish();
      case 4: conv_rows_narrow<4>(args, y0, y1); return finish();
      case 5: case 6: case 7: conv_rows_padded(args, y0, y1); return finish();
      default: break;
    }
#endif
    for (int y = y0; y < y1; ++y) {
      conv_row(args, y);
      activate(out.data().data() + y * row_len, out.data().data() + (y + 1) * row_len, act);
    }
  });
  return out;
}

}  // namespace

Tensor conv2d(const Tensor& input, std::span<const float> kernel, std::span<const float> bias,
              int k, int out_channels) {
  return conv2d_activated(input, kernel, bias, k, out_channels, Activation::none);
}

Tensor conv2d(const Tensor& input, const LayerWeights& layer) {
  if (input.channels() != layer.spec.in_channels) {
    throw ParameterError("conv2d: input has " + std::to_string(input.channels()) +
                         " channels, layer expects " + std::to_string(layer.spec.in_channels));
  }
  return conv2d(input, layer.kernel, layer.bias, layer.spec.kernel, layer.spec.out_channels);
}

void apply_activation(Tensor& t, Activation act) {
  activate(t.data().data(), t.data().data() + t.size(), act);
}

Tensor softmax_channels(const Tensor& t) {
  const int c = t.channels();
  if (c < 2) throw ParameterError("softmax needs at least two channels");
  Tensor out(t.width(), t.height(), c);
  for (std::size_t p = 0; p < t.pixel_count(); ++p) {
    const float* in = t.data().data() + p * c;
    float* o = out.data().data() + p * c;
    const float m = *std::max_element(in, in + c);
    float sum = 0.0f;
    for (int i = 0; i < c; ++i) {
      o[i] = std::exp(in[i] - m);
      sum += o[i];
    }
    for (int i = 0; i < c; ++i) o[i] /= sum;
  }
  return out;
}

Tensor avg_downsample(const Tensor& t, int d) {
  if (d < 1) throw ParameterError("downsample factor must be >= 1");
  if (d == 1) return t;
  const int w = (t.width() + d - 1) / d;
  const int h = (t.height() + d - 1) / d;
  const int c = t.channels();
  Tensor out(w, h, c);
  std::vector<double> acc(c);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int j = 0; j < d; ++j) {
        const int sy = std::min(y * d + j, t.height() - 1);
        for (int i = 0; i < d; ++i) {
          const float* px = t.pixel(std::min(x * d + i, t.width() - 1), sy);
          for (int ch = 0; ch < c; ++ch) acc[ch] += px[ch];
        }
      }
      for (int ch = 0; ch < c; ++ch) out.at(x, y, ch) = static_cast<float>(acc[ch] / (d * d));
    }
  }
  return out;
}

Tensor bilinear_upsample(const Tensor& t, int d, int out_width, int out_height) {
  if (d < 1) throw ParameterError("upsample factor must be >= 1");
  if (out_width < 0 || out_height < 0) throw ParameterError("negative upsample size");
  const int c = t.channels();
  Tensor out(out_width, out_height, c);
  if (t.pixel_count() == 0) return out;
  const int w = t.width();
  const int h = t.height();
  struct Tap {
    int i0, i1;
    double f;
  };
  auto tap = [d](int i, int n) {
    const double s = std::clamp((i + 0.5) / d - 0.5, 0.0, static_cast<double>(n - 1));
    const int i0 = static_cast<int>(s);
    return Tap{i0, std::min(i0 + 1, n - 1), s - i0};
  };
  std::vector<Tap> cols(out_width);
  for (int x = 0; x < out_width; ++x) cols[x] = tap(x, w);
  for (int y = 0; y < out_height; ++y) {
    const Tap ty = tap(y, h);
    const float* r0 = t.pixel(0, ty.i0);
    const float* r1 = t.pixel(0, ty.i1);
    float* o = out.pixel(0, y);
    for (int x = 0; x < out_width; ++x) {
      const Tap tx = cols[x];
      for (int ch = 0; ch < c; ++ch) {
        const double top = (1.0 - tx.f) * r0[tx.i0 * c + ch] + tx.f * r0[tx.i1 * c + ch];
        const double bot = (1.0 - tx.f) * r1[tx.i0 * c + ch] + tx.f * r1[tx.i1 * c + ch];
        o[x * c + ch] = static_cast<float>((1.0 - ty.f) * top + ty.f * bot);
      }
    }
  }
  return out;
}

Tensor bilinear_upsample(const Tensor& t, int d) {
  return bilinear_upsample(t, d, t.width() * d, t.height() * d);
}

Tensor forward(const NetworkSpec& spec, const WeightBundle& weights, const Tensor& input) {
  spec.validate();
  if (weights.architecture_hash() != spec.architecture_hash()) {
    throw WeightMismatchError("weights do not match the '" + spec.name + "' architecture");
  }
  for (const auto& l : weights.layers) {
    if (l.kernel.size() != l.spec.kernel_size() ||
        l.bias.size() != static_cast<std::size_t>(l.spec.out_channels)) {
      throw WeightMismatchError("weight arrays do not match their layer shape");
    }
  }
  if (input.channels() != spec.input_channels()) {
    throw ParameterError("network '" + spec.name + "' expects " +
                         std::to_string(spec.input_channels()) + " input channels, got " +
                         std::to_string(input.channels()));
  }
  Tensor x;
  for (std::size_t i = 0; i < weights.layers.size(); ++i) {
    const auto& layer = weights.layers[i];
    const bool last = i + 1 == weights.layers.size();
    Tensor y = conv2d_activated(i == 0 ? input : x, layer.kernel, layer.bias, layer.spec.kernel,
                                layer.spec.out_channels, layer.spec.activation,
                                last ? std::vector<float>{} : take_scratch());
    if (i > 0) give_scratch(std::move(x.values()));
    x = std::move(y);
  }
  return x;
}

Network::Network(NetworkSpec spec, WeightBundle weights)
    : spec_(std::move(spec)), weights_(std::move(weights)) {
  spec_.validate();
  if (weights_.architecture_hash() != spec_.architecture_hash()) {
    throw WeightMismatchError("weights do not match the '" + spec_.name + "' architecture");
  }
}

Tensor Network::operator()(const Tensor& input) const { return forward(spec_, weights_, input); }

}  // namespace lhdr::nn
