#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lhdr/image.hpp"

namespace lhdr {

struct DeviceLimits {
  double base_iso = 100.0;
  double max_iso = 6400.0;
  double min_duration_s = 1e-5;
  double max_duration_s = 1.0;  ///< handheld ceiling

  double min_total() const { return min_duration_s; }
  double max_total() const { return max_duration_s * max_iso / base_iso; }
};

struct ExposureSettings {
  double duration_s = 1.0 / 60.0;
  double iso = 100.0;
  double base_iso = 100.0;

  /// duration x (iso / base_iso), in seconds at base ISO.
  double total() const { return duration_s * iso / base_iso; }
};

/// Longest duration at base ISO up to the duration ceiling, then gain.
ExposureSettings factorize_exposure(double total, const DeviceLimits& limits = {});

struct BracketPlan {
  std::vector<ExposureSettings> settings;  ///< short to long
  std::vector<double> ev_offsets;          ///< stops relative to the reference
  std::vector<double> unclamped_totals;
  int reference_index = 0;
  bool constrained = false;  ///< a limit could not be honored exactly
  std::string warning;
};

inline constexpr double kShadowPercentile = 15.0;
inline constexpr double kClipCenter = 0.95;
inline constexpr double kClipWidth = 0.0125;
inline constexpr double kHalvingClipThreshold = 0.05;
inline constexpr double kDefaultAeLambda = 0.05;
inline constexpr double kMinShadowSnrDb = 20.0;

/// Per-pixel intensity used for metering: luma for 3-channel, the value for 1-channel.
Raster metering_intensity(const Raster& v);

/// x / sqrt(a x + b) at the 15th percentile intensity x.
double shadow_snr(const Raster& v, const NoiseModel& noise);
double shadow_snr_at(double x, const NoiseModel& noise);

/// Mean soft clipping indicator, sigmoid((v - 0.95) / 0.0125) on the per-pixel
/// channel maximum.
double clip_score(const Raster& v);

/// C(V) - lambda log S(V); +infinity when S = 0.
double ae_loss(const Raster& v, const NoiseModel& noise, double lambda);

struct ReferenceSearch {
  int grid_points = 41;
  double min_multiplier = 1.0 / 16.0;
  double max_multiplier = 16.0;
  double clip_threshold = kHalvingClipThreshold;
  int max_halvings = 20;
};

/// Chooses the total exposure minimizing ae_loss by synthetically rescaling
/// the viewfinder frame, or halves exposure while the frame is clipped.
ExposureSettings select_reference_exposure(const Raster& v, const ExposureSettings& current,
                                           const NoiseModel& noise, double lambda,
                                           const DeviceLimits& limits = {},
                                           const ReferenceSearch& search = {});

struct BracketOptions {
  int n = 5;
  double span_ev = 4.0;
  /// 15th-percentile intensity at the reference exposure; enables the shadow SNR floor.
  std::optional<double> shadow_level;
  double min_shadow_snr_db = kMinShadowSnrDb;
  /// Most the bracket may be pushed up to satisfy the floor: the shortest
  /// frame is never brighter than the reference.
  double max_raise_ev = 2.0;
  DeviceLimits limits{};
};

BracketPlan plan_bracket(const ExposureSettings& reference, const NoiseModel& noise,
                         const BracketOptions& options = {});

}  // namespace lhdr
