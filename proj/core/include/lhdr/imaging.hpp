#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lhdr/image.hpp"

namespace lhdr {

// Shared constants. The trainer mirrors these exactly.
inline constexpr double kToneMu = 5000.0;
inline constexpr double kGamma = 2.2;
inline constexpr std::array<float, 3> kLumaWeights = {0.2126f, 0.7152f, 0.0722f};

/// Integer sensor raster (e.g. 16-bit raw), channel-interleaved.
struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint16_t> data;
};

/// clamp((raw - black) / (white - black), 0, 1).
LinearImage normalize_raw(const RawImage& raw, int black_level, int white_level,
                          double exposure_scale = 1.0);

/// Rescale to a reference exposure and clamp to [0, 1].
LinearImage exposure_normalize(const LinearImage& img, double e_ref);

/// log(1 + mu * max(x, 0)) / log(1 + mu), evaluated in single precision.
struct ToneCurve {
  float mu;
  float inv_denom;

  explicit ToneCurve(double mu_ = kToneMu)
      : mu(static_cast<float>(mu_)), inv_denom(static_cast<float>(1.0 / std::log1p(mu_))) {}
  float operator()(float x) const { return std::log(1.0f + mu * std::max(0.0f, x)) * inv_denom; }
};

float tone_map_mu(float x, double mu = kToneMu);
Raster tone_map_mu(const Raster& img, double mu = kToneMu);

/// Rec.709 luma of a 3-channel raster.
Raster luma(const Raster& img);

/// Elementwise x^(1/gamma).
Raster gamma_encode(const Raster& img, double gamma = kGamma);

/// Central-difference gradient magnitude of a 1-channel raster, replicate borders.
Raster grad_mag(const Raster& chan);

/// One bilinear sample: up to four source taps with weights renormalized over
/// the in-bounds taps, plus the in-bounds weight mass (the validity).
struct BilinearTaps {
  std::array<std::size_t, 4> pixel{};  ///< linear pixel index (y * width + x)
  std::array<float, 4> weight{};
  int count = 0;
  float validity = 0.0f;
};

/// Taps for sampling a width x height raster at continuous position (sx, sy).
/// Taps with zero bilinear weight are omitted.
BilinearTaps bilinear_taps(int width, int height, float sx, float sy);

template <class Image>
struct WarpResult {
  Image image;
  ValidityMask validity;
};

/// output(x) = img(x + shift(x)) by bilinear sampling.
///
/// Out-of-bounds taps are dropped and the remaining taps renormalized, so
/// every output value is a convex combination of in-bounds source pixels.
/// validity(x) is the in-bounds share of the bilinear weight (0 when all four
/// taps fall outside, in which case the output is 0).
WarpResult<LinearImage> bilinear_warp(const LinearImage& img, const ShiftField& shift);
WarpResult<Raster> bilinear_warp(const Raster& img, const ShiftField& shift);

enum class PsnrDomain { linear, mu_tonemapped };

/// 10 log10(1 / MSE), peak 1. Identical inputs give +infinity. When `mask`
/// is given, only pixels with mask > 0.5 contribute.
double psnr(const Raster& pred, const Raster& ref, PsnrDomain domain = PsnrDomain::linear,
            const ValidityMask* mask = nullptr);

/// Linear-interpolated percentile (q in [0, 100]) of a set of values.
double percentile(std::span<const float> values, double q);

/// Per-pixel maximum over channels.
Raster max_channel(const Raster& img);

Raster scale(const Raster& img, float factor);
Raster clamp01(const Raster& img);

}  // namespace lhdr
