#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "lhdr/image.hpp"

namespace lhdr {

using Rng = std::mt19937_64;

/// Seed for stream `index` derived from a root seed (splitmix64 finalizer).
/// Independent samples get independent streams without sharing an engine.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct ShiftMixture {
  double p = 0.05;    ///< probability of the large component
  double m_s = 2.0;   ///< small half-width, px
  double m_l = 16.0;  ///< large half-width, px
};

struct SimConfig {
  int n_frames = 3;
  std::vector<double> exposure_step_ev = {2.0, 3.0};  ///< sampled per scene
  Range ns_range{1e-5, 1e-3};
  Range no_range{1e-7, 1e-5};
  ShiftMixture shift_mixture{};
  double blur_prob = 0.3;
  double bg_blur_max = 5.0;
  double fg_blur_max = 7.0;
  double unmatchable_shift_px = 7.0;
  Range powerlaw_range{1.0, 1.5};
  Range clip_fraction_range{0.05, 0.25};  ///< clipped share of the longest frame
  double fg_prob = 1.0;                    ///< chance of adding a moving foreground
  Range fg_motion_range{8.0, 40.0};        ///< per-frame foreground motion, px
  int polygon_min_vertices = 5;
  int polygon_max_vertices = 10;
  Range polygon_radius_frac{0.10, 0.25};  ///< of image height
  int bit_depth = 12;                     ///< 0 disables quantization
  bool integer_shifts = false;            ///< round global shifts to whole pixels
  bool zero_noise = false;                ///< skip the noise step entirely

  void validate() const;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Simple polygon; inside test uses the even-odd rule.
struct Polygon {
  std::vector<Point2> vertices;

  Polygon translated(double dx, double dy) const;
};

/// Scanline fill of `poly` sampled at pixel centers (x + 0.5, y + 0.5).
ValidityMask rasterize_polygon(const Polygon& poly, int width, int height);

struct BurstSample {
  std::vector<LinearImage> frames;           ///< short to long
  std::vector<LinearImage> noshift_targets;  ///< same frames without global jitter
  std::vector<ValidityMask> validity_masks;  ///< in base-frame coordinates
  ValidityMask fg_mask;
  LinearImage gt_hdr;  ///< clean scene as seen by the base frame, scene units
  std::vector<Shift> gt_shifts;
  std::vector<bool> blurred;
  std::vector<bool> unmatchable;
  int base_index = 0;
  NoiseModel noise;
  double exposure_step_ev = 0.0;
  double power_exponent = 1.0;
  std::uint64_t seed = 0;

  std::vector<double> exposures() const;
};

/// Normalize by the 99.9th percentile, clip to [0, 1], raise to `exponent`.
LinearImage prepare_hdr(const LinearImage& source, double exponent);
/// As above with the exponent drawn from `powerlaw_range`.
LinearImage prepare_hdr(const LinearImage& source, Rng& rng, Range powerlaw_range = {1.0, 1.5});

/// Sensor step on an already exposure-scaled signal: add N(0, a x + b) noise,
/// clip to [0, 1] and quantize to `bit_depth` bits (0 = no quantization).
Raster apply_sensor(const Raster& signal, const NoiseModel& noise, Rng& rng, int bit_depth = 12);

/// Re-expose a clean image at relative exposure e.
LinearImage expose_frame(const LinearImage& hdr, double e, const NoiseModel& noise, Rng& rng,
                         int bit_depth = 12);

struct Composite {
  LinearImage image;
  ValidityMask mask;  ///< 1 where the foreground was pasted
};

/// Paste the horizontally flipped scene, cut by `poly`, translated by
/// (tx, ty) whole pixels, over the scene.
Composite composite_foreground(const LinearImage& hdr, const Polygon& poly, int tx, int ty);

/// Star-shaped polygon around a random center.
Polygon sample_polygon(int width, int height, const SimConfig& cfg, Rng& rng);

struct ForegroundMotion {
  Polygon polygon;
  std::vector<std::pair<int, int>> translations;  ///< one per frame
};

ForegroundMotion sample_foreground_motion(int width, int height, int n_frames,
                                          const SimConfig& cfg, Rng& rng);

ValidityMask motion_footprint(const ForegroundMotion& motion, int width, int height);

/// Samples a moving foreground and returns the base-frame composite, the union
/// of the foreground footprint over all frames and the per-frame translations.
struct ForegroundSample {
  Composite base;
  ValidityMask footprint;
  ForegroundMotion motion;
};
ForegroundSample composite_foreground(const LinearImage& hdr, int n_frames, const SimConfig& cfg,
                                      Rng& rng);

/// Two-component uniform mixture over [-m, m]^2.
Shift sample_global_shift(Rng& rng, const ShiftMixture& mixture);

/// Box blur along a segment of length 2 * radius through each pixel, sampled
/// with 2 * ceil(radius) + 1 bilinear taps (clamp-to-edge).
Raster motion_blur(const Raster& img, double radius_px, Shift direction);
LinearImage motion_blur(const LinearImage& img, double radius_px, Shift direction);

/// out(x) = img(x - delta), bilinear with clamp-to-edge sampling.
Raster translate(const Raster& img, Shift delta);

BurstSample simulate_burst(const LinearImage& source, const SimConfig& cfg, std::uint64_t seed);

/// Procedural linear HDR test scene: smooth gradients, texture and a few
/// small, very bright emitters. Values are >= 0 and unbounded above.
LinearImage make_procedural_scene(int width, int height, std::uint64_t seed);

}  // namespace lhdr
