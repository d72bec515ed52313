#include "lhdr/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lhdr/errors.hpp"
#include "lhdr/parallel.hpp"

namespace lhdr {

LinearImage normalize_raw(const RawImage& raw, int black_level, int white_level,
                          double exposure_scale) {
  if (white_level <= black_level) throw ParameterError("white_level must exceed black_level");
  if (raw.data.size() != static_cast<std::size_t>(raw.width) * raw.height * raw.channels) {
    throw ParameterError("raw data length does not match its dimensions");
  }
  const double range = static_cast<double>(white_level - black_level);
  std::vector<float> out(raw.data.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = (static_cast<double>(raw.data[i]) - black_level) / range;
    out[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return LinearImage(Raster(raw.width, raw.height, raw.channels, std::move(out)), exposure_scale);
}

LinearImage exposure_normalize(const LinearImage& img, double e_ref) {
  if (!(e_ref > 0.0)) throw ParameterError("reference exposure must be > 0");
  if (e_ref == img.exposure_scale()) {
    LinearImage out(clamp01(img), e_ref);
    return out;
  }
  const double factor = e_ref / img.exposure_scale();
  LinearImage out(Raster(img.width(), img.height(), img.channels()), e_ref);
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = static_cast<float>(std::clamp(src[i] * factor, 0.0, 1.0));
  }
  return out;
}

float tone_map_mu(float x, double mu) {
  if (!(mu > 0.0)) throw ParameterError("mu must be > 0");
  return ToneCurve(mu)(x);
}

Raster tone_map_mu(const Raster& img, double mu) {
  if (!(mu > 0.0)) throw ParameterError("mu must be > 0");
  const ToneCurve curve(mu);
  Raster out(img.width(), img.height(), img.channels());
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = curve(src[i]);
  return out;
}

Raster luma(const Raster& img) {
  if (img.channels() != 3) throw ParameterError("luma needs a 3-channel raster");
  Raster out(img.width(), img.height(), 1);
  const float* src = img.data().data();
  float* dst = out.data().data();
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const float* p = src + 3 * i;
    dst[i] = kLumaWeights[0] * p[0] + kLumaWeights[1] * p[1] + kLumaWeights[2] * p[2];
  }
  return out;
}

Raster gamma_encode(const Raster& img, double gamma) {
  if (!(gamma > 0.0)) throw ParameterError("gamma must be > 0");
  const float inv = static_cast<float>(1.0 / gamma);
  Raster out(img.width(), img.height(), img.channels());
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::pow(std::max(0.0f, src[i]), inv);
  return out;
}

Raster grad_mag(const Raster& chan) {
  if (chan.channels() != 1) throw ParameterError("grad_mag needs a 1-channel raster");
  const int w = chan.width();
  const int h = chan.height();
  Raster out(w, h, 1);
  for (int y = 0; y < h; ++y) {
    const int ym = std::max(0, y - 1);
    const int yp = std::min(h - 1, y + 1);
    for (int x = 0; x < w; ++x) {
      const int xm = std::max(0, x - 1);
      const int xp = std::min(w - 1, x + 1);
      const float gx = 0.5f * (chan.at(xp, y) - chan.at(xm, y));
      const float gy = 0.5f * (chan.at(x, yp) - chan.at(x, ym));
      out.at(x, y) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

BilinearTaps bilinear_taps(int width, int height, float sx, float sy) {
  BilinearTaps taps;
  if (!std::isfinite(sx) || !std::isfinite(sy)) return taps;
  const float fx0 = std::floor(sx);
  const float fy0 = std::floor(sy);
  // Far outside: avoid int overflow in the casts below.
  if (fx0 < -2.0f || fy0 < -2.0f || fx0 > width + 1.0f || fy0 > height + 1.0f) return taps;
  const int x0 = static_cast<int>(fx0);
  const int y0 = static_cast<int>(fy0);
  const float fx = sx - fx0;
  const float fy = sy - fy0;

  // Per-axis in-bounds weights; validity is their product.
  const float wx[2] = {(x0 >= 0 && x0 < width) ? 1.0f - fx : 0.0f,
                       (x0 + 1 >= 0 && x0 + 1 < width) ? fx : 0.0f};
  const float wy[2] = {(y0 >= 0 && y0 < height) ? 1.0f - fy : 0.0f,
                       (y0 + 1 >= 0 && y0 + 1 < height) ? fy : 0.0f};
  const float mx = wx[0] + wx[1];
  const float my = wy[0] + wy[1];
  if (mx <= 0.0f || my <= 0.0f) return taps;
  taps.validity = std::min(1.0f, mx * my);

  for (int j = 0; j < 2; ++j) {
    if (wy[j] <= 0.0f) continue;
    const float ny = wy[j] / my;
    for (int i = 0; i < 2; ++i) {
      if (wx[i] <= 0.0f) continue;
      taps.pixel[taps.count] = static_cast<std::size_t>(y0 + j) * width + (x0 + i);
      taps.weight[taps.count] = (wx[i] / mx) * ny;
      ++taps.count;
    }
  }
  return taps;
}

namespace {

template <class Image>
WarpResult<Image> warp_impl(const Image& img, const ShiftField& shift) {
  if (img.width() != shift.width() || img.height() != shift.height()) {
    throw ParameterError("shift field size does not match image");
  }
  const int w = img.width();
  const int h = img.height();
  const int c = img.channels();
  WarpResult<Image> result{img, ValidityMask(w, h, 0.0f)};
  std::fill(result.image.values().begin(), result.image.values().end(), 0.0f);
  const float* src = img.data().data();
  float* dst = result.image.data().data();
  float* valid = result.validity.data().data();

  parallel_rows(h, [&](int y_begin, int y_end) {
    for (int y = y_begin; y < y_end; ++y) {
      for (int x = 0; x < w; ++x) {
        const Shift s = shift.at(x, y);
        const BilinearTaps taps =
            bilinear_taps(w, h, static_cast<float>(x) + s.dx, static_cast<float>(y) + s.dy);
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        valid[p] = taps.validity;
        if (taps.count == 0) continue;
        for (int ch = 0; ch < c; ++ch) {
          float acc = 0.0f;
          float lo = std::numeric_limits<float>::max();
          float hi = std::numeric_limits<float>::lowest();
          for (int t = 0; t < taps.count; ++t) {
            const float v = src[taps.pixel[t] * c + ch];
            acc += taps.weight[t] * v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
          }
          // Exact arithmetic lands in [lo, hi]; the clamp only absorbs rounding.
          dst[p * c + ch] = std::clamp(acc, lo, hi);
        }
      }
    }
  });
  return result;
}

}  // namespace

WarpResult<LinearImage> bilinear_warp(const LinearImage& img, const ShiftField& shift) {
  return warp_impl(img, shift);
}

WarpResult<Raster> bilinear_warp(const Raster& img, const ShiftField& shift) {
  return warp_impl(img, shift);
}

double psnr(const Raster& pred, const Raster& ref, PsnrDomain domain, const ValidityMask* mask) {
  if (!pred.same_shape(ref)) throw ParameterError("psnr: shape mismatch");
  if (mask && !mask->same_size(pred)) throw ParameterError("psnr: mask size mismatch");
  const double denom = std::log1p(kToneMu);
  auto map = [&](float v) -> double {
    if (domain == PsnrDomain::linear) return v;
    return std::log1p(kToneMu * std::max(0.0, static_cast<double>(v))) / denom;
  };
  const int c = pred.channels();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < pred.pixel_count(); ++p) {
    if (mask && mask->values()[p] <= 0.5f) continue;
    for (int ch = 0; ch < c; ++ch) {
      const double d = map(pred.values()[p * c + ch]) - map(ref.values()[p * c + ch]);
      sum += d * d;
    }
    count += c;
  }
  if (count == 0) throw ParameterError("psnr: no pixels selected");
  const double mse = sum / static_cast<double>(count);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double percentile(std::span<const float> values, double q) {
  if (values.empty()) throw ParameterError("percentile of an empty set");
  if (!(q >= 0.0 && q <= 100.0)) throw ParameterError("percentile must be in [0, 100]");
  std::vector<float> v(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  std::nth_element(v.begin(), v.begin() + lo, v.end());
  const double a = v[lo];
  if (frac == 0.0 || lo + 1 >= v.size()) return a;
  const double b = *std::min_element(v.begin() + lo + 1, v.end());
  return a + frac * (b - a);
}

Raster max_channel(const Raster& img) {
  Raster out(img.width(), img.height(), 1);
  const int c = img.channels();
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    const float* px = img.data().data() + p * c;
    out.values()[p] = *std::max_element(px, px + c);
  }
  return out;
}

Raster scale(const Raster& img, float factor) {
  Raster out = img;
  for (float& v : out.values()) v *= factor;
  return out;
}

Raster clamp01(const Raster& img) {
  Raster out = img;
  for (float& v : out.values()) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

}  // namespace lhdr
