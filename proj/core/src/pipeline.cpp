#include "lhdr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "lhdr/errors.hpp"

namespace lhdr {

namespace {

void check_burst(std::span<const LinearImage> frames) {
  if (frames.size() < 2) throw ParameterError("iterative merge needs at least 2 frames");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].channels() != 3) throw ParameterError("frames must have 3 channels");
    if (!frames[i].same_shape(frames[0])) throw ParameterError("frames differ in shape");
    if (i > 0 && frames[i].exposure_scale() < frames[i - 1].exposure_scale()) {
      throw ParameterError("frame exposures must be ordered short to long");
    }
  }
}

void shift_stats(const ShiftField& field, double& mean, double& max_abs) {
  double sum = 0.0;
  for (const Shift& s : field.data()) sum += std::hypot(s.dx, s.dy);
  mean = field.pixel_count() ? sum / static_cast<double>(field.pixel_count()) : 0.0;
  max_abs = field.max_abs_component();
}

double mean_of(const Raster& r) {
  double sum = 0.0;
  for (float v : r.values()) sum += v;
  return r.size() ? sum / static_cast<double>(r.size()) : 0.0;
}

}  // namespace

MergeTrace iterative_merge(std::span<const LinearImage> frames, const ModelSet& models,
                           const PipelineConfig& cfg, std::span<const ShiftField> injected_shifts) {
  check_burst(frames);
  cfg.align.validate();
  if (!injected_shifts.empty() && injected_shifts.size() != frames.size() - 1) {
    throw ParameterError("injected shifts must cover every non-base frame");
  }
  for (const ShiftField& s : injected_shifts) {
    if (s.width() != frames[0].width() || s.height() != frames[0].height()) {
      throw ParameterError("injected shift field size mismatch");
    }
  }

  const double e_base = frames[0].exposure_scale();
  MergeTrace trace;
  trace.estimate = exposure_normalize(frames[0], e_base);
  trace.iterations.reserve(frames.size() - 1);

  for (std::size_t i = 1; i < frames.size(); ++i) {
    AlignResult aligned = injected_shifts.empty()
                              ? align(trace.estimate, frames[i], models, cfg.align)
                              : align_with_shift(trace.estimate, frames[i], injected_shifts[i - 1]);
    MergeWeights weights =
        merge_weights(merge_feature(trace.estimate, cfg.gamma),
                      merge_feature(aligned.warped, cfg.gamma), aligned.validity, models.merge);
    trace.estimate = fuse(trace.estimate, aligned.warped, weights);

    IterationRecord rec;
    rec.frame_index = static_cast<int>(i);
    rec.exposure_ratio = frames[i].exposure_scale() / e_base;
    shift_stats(aligned.shift, rec.shift_mean, rec.shift_max);
    rec.mean_w_alt = mean_of(weights.w_alt);
    rec.validity_coverage = aligned.validity.coverage();
    if (cfg.keep_fields) {
      rec.shift = std::move(aligned.shift);
      rec.validity = std::move(aligned.validity);
      rec.weights = std::move(weights);
      rec.warped = std::move(aligned.warped);
    }
    trace.iterations.push_back(std::move(rec));
  }
  return trace;
}

ConvexityAudit audit_convexity(std::span<const LinearImage> frames, const MergeTrace& trace,
                               int samples, std::uint64_t seed, double tol) {
  check_burst(frames);
  if (trace.iterations.size() != frames.size() - 1) {
    throw ParameterError("trace does not match the burst length");
  }
  for (const auto& rec : trace.iterations) {
    if (rec.shift.pixel_count() == 0 || rec.weights.w_alt.empty()) {
      throw ParameterError("trace was recorded without per-iteration fields");
    }
  }
  const int w = frames[0].width();
  const int h = frames[0].height();
  const int c = frames[0].channels();
  const double e_base = frames[0].exposure_scale();
  std::vector<LinearImage> normalized;
  normalized.reserve(frames.size());
  for (const auto& f : frames) normalized.push_back(exposure_normalize(f, e_base));

  ConvexityAudit audit;
  audit.min_coefficient = 1.0;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> px(0, w - 1);
  std::uniform_int_distribution<int> py(0, h - 1);

  struct Term {
    std::size_t frame;
    std::size_t pixel;
    double coef;
  };
  std::vector<Term> terms;
  const bool exhaustive = samples <= 0;
  const long long count = exhaustive ? static_cast<long long>(w) * h : samples;
  for (long long s = 0; s < count; ++s) {
    const int x = exhaustive ? static_cast<int>(s % w) : px(rng);
    const int y = exhaustive ? static_cast<int>(s / w) : py(rng);
    const std::size_t p = static_cast<std::size_t>(y) * w + x;

    // Walk back from the last iteration; `carry` is the coefficient that the
    // running estimate holds in the final value.
    terms.clear();
    double carry = 1.0;
    for (std::size_t k = trace.iterations.size(); k-- > 0;) {
      const IterationRecord& rec = trace.iterations[k];
      const double wa = rec.weights.w_alt.values()[p];
      const double wb = rec.weights.w_base.values()[p];
      const Shift sh = rec.shift.data()[p];
      const BilinearTaps taps = bilinear_taps(w, h, x + sh.dx, y + sh.dy);
      for (int t = 0; t < taps.count; ++t) {
        terms.push_back({k + 1, taps.pixel[t], carry * wa * taps.weight[t]});
      }
      carry *= wb;
    }
    terms.push_back({0, p, carry});

    double total = 0.0;
    for (const Term& t : terms) {
      total += t.coef;
      audit.min_coefficient = std::min(audit.min_coefficient, t.coef);
    }
    audit.max_weight_error = std::max(audit.max_weight_error, std::abs(total - 1.0));
    for (int ch = 0; ch < c; ++ch) {
      double value = 0.0;
      for (const Term& t : terms) {
        value += t.coef * normalized[t.frame].values()[t.pixel * c + ch];
      }
      const double err = std::abs(value - trace.estimate.values()[p * c + ch]);
      audit.max_value_error = std::max(audit.max_value_error, err);
    }
    ++audit.checked;
  }
  audit.ok = audit.min_coefficient >= 0.0 && audit.max_weight_error <= tol &&
             audit.max_value_error <= tol;
  return audit;
}

double loss_pred(const Raster& pred, const Raster& ref, double mu) {
  if (!pred.same_shape(ref)) throw ParameterError("loss_pred: shape mismatch");
  if (pred.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    sum += std::abs(static_cast<double>(tone_map_mu(pred.values()[i], mu)) -
                    tone_map_mu(ref.values()[i], mu));
  }
  return sum / static_cast<double>(pred.size());
}

WarpLoss loss_warp(std::span<const LinearImage> warped, std::span<const LinearImage> noshift,
                   std::span<const ValidityMask> masks) {
  if (warped.size() != noshift.size() || warped.size() != masks.size()) {
    throw ParameterError("loss_warp: list lengths differ");
  }
  WarpLoss loss;
  for (std::size_t i = 0; i < warped.size(); ++i) {
    const auto& a = warped[i];
    const auto& b = noshift[i];
    const auto& m = masks[i];
    if (!a.same_shape(b) || !a.same_size(m)) throw ParameterError("loss_warp: shape mismatch");
    const int c = a.channels();
    double num = 0.0;
    double mass = 0.0;
    for (std::size_t p = 0; p < a.pixel_count(); ++p) {
      const double mv = m.values()[p];
      if (mv <= 0.0) continue;
      mass += mv;
      for (int ch = 0; ch < c; ++ch) {
        num += mv * std::abs(static_cast<double>(a.values()[p * c + ch]) - b.values()[p * c + ch]);
      }
    }
    if (mass <= 0.0) {
      ++loss.empty_masks;
      continue;
    }
    loss.value += num / (mass * c);
  }
  return loss;
}

double loss_var(std::span<const ShiftField> shifts) {
  if (shifts.empty()) throw ParameterError("loss_var needs at least one shift field");
  double total = 0.0;
  for (const ShiftField& f : shifts) {
    const double n = static_cast<double>(f.pixel_count());
    if (n == 0) continue;
    double mx = 0.0, my = 0.0;
    for (const Shift& s : f.data()) {
      mx += s.dx;
      my += s.dy;
    }
    mx /= n;
    my /= n;
    double vx = 0.0, vy = 0.0;
    for (const Shift& s : f.data()) {
      vx += (s.dx - mx) * (s.dx - mx);
      vy += (s.dy - my) * (s.dy - my);
    }
    total += (vx + vy) / n;
  }
  return total;
}

}  // namespace lhdr
