#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lhdr/align.hpp"
#include "lhdr/image.hpp"
#include "lhdr/merge.hpp"
#include "lhdr/models.hpp"

namespace lhdr {

struct PipelineConfig {
  AlignConfig align{};
  double gamma = kGamma;
  /// Keep per-iteration shift, validity, weights and warped frames in the
  /// trace. Needed by the convexity audit and the warp loss.
  bool keep_fields = true;
};

struct IterationRecord {
  int frame_index = 0;
  double exposure_ratio = 1.0;  ///< e_frame / e_base
  double shift_mean = 0.0;      ///< mean |s| (Euclidean), px
  double shift_max = 0.0;       ///< max |component|, px
  double mean_w_alt = 0.0;
  double validity_coverage = 0.0;

  ShiftField shift;
  ValidityMask validity;
  MergeWeights weights;
  LinearImage warped;
};

struct MergeTrace {
  std::vector<IterationRecord> iterations;
  LinearImage estimate;  ///< in base-exposure units
};

/// Align and merge short to long: the estimate starts as the base frame and
/// every following frame is registered onto it and blended in. `frames` must
/// have non-decreasing exposure scales. When `injected_shifts` is non-empty
/// it supplies the shift for frames 1..n-1 and the alignment networks are
/// skipped.
MergeTrace iterative_merge(std::span<const LinearImage> frames, const ModelSet& models,
                           const PipelineConfig& cfg = {},
                           std::span<const ShiftField> injected_shifts = {});

struct ConvexityAudit {
  bool ok = true;
  int checked = 0;
  double max_value_error = 0.0;   ///< |replayed - estimate|
  double max_weight_error = 0.0;  ///< |sum of coefficients - 1|
  double min_coefficient = 0.0;
};

/// Replays the recorded weights and warp taps at `samples` random pixels,
/// expressing each output value as a combination of input pixels, and checks
/// that the combination is convex and reproduces the estimate within `tol`.
/// `samples <= 0` audits every pixel.
ConvexityAudit audit_convexity(std::span<const LinearImage> frames, const MergeTrace& trace,
                               int samples = 1000, std::uint64_t seed = 0, double tol = 1e-5);

/// Mean |T_mu(pred) - T_mu(ref)|.
double loss_pred(const Raster& pred, const Raster& ref, double mu = kToneMu);

struct WarpLoss {
  double value = 0.0;
  int empty_masks = 0;  ///< frames skipped because their mask was all zero
};

/// Sum over frames of the mask-weighted mean absolute difference, each
/// normalized by that frame's mask mass times channel count.
WarpLoss loss_warp(std::span<const LinearImage> warped, std::span<const LinearImage> noshift,
                   std::span<const ValidityMask> masks);

/// Sum over fields of Var(dx) + Var(dy) (population variance).
double loss_var(std::span<const ShiftField> shifts);

}  // namespace lhdr
