#include "lhdr/auto_exposure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lhdr/errors.hpp"
#include "lhdr/imaging.hpp"

namespace lhdr {

namespace {

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

Raster scaled_clamped(const Raster& v, double m) {
  Raster out = v;
  for (float& x : out.values()) x = static_cast<float>(std::clamp(x * m, 0.0, 1.0));
  return out;
}

void check_limits(const DeviceLimits& limits) {
  if (!(limits.base_iso > 0.0) || limits.max_iso < limits.base_iso ||
      !(limits.min_duration_s > 0.0) || limits.max_duration_s < limits.min_duration_s) {
    throw ParameterError("invalid device limits");
  }
}

}  // namespace

ExposureSettings factorize_exposure(double total, const DeviceLimits& limits) {
  check_limits(limits);
  if (!(total > 0.0)) throw ParameterError("total exposure must be > 0");
  ExposureSettings s;
  s.base_iso = limits.base_iso;
  if (total <= limits.max_duration_s) {
    s.duration_s = std::max(total, limits.min_duration_s);
    s.iso = limits.base_iso;
  } else {
    s.duration_s = limits.max_duration_s;
    s.iso = std::min(limits.max_iso, limits.base_iso * total / limits.max_duration_s);
  }
  return s;
}

Raster metering_intensity(const Raster& v) {
  if (v.channels() == 3) return luma(v);
  if (v.channels() == 1) return v;
  throw ParameterError("metering needs a 1- or 3-channel frame");
}

double shadow_snr_at(double x, const NoiseModel& noise) {
  noise.validate();
  if (!(x > 0.0)) return 0.0;
  const double var = noise.variance(x);
  if (var <= 0.0) return std::numeric_limits<double>::infinity();
  return x / std::sqrt(var);
}

double shadow_snr(const Raster& v, const NoiseModel& noise) {
  if (v.empty()) throw ParameterError("shadow_snr of an empty frame");
  const Raster intensity = metering_intensity(v);
  return shadow_snr_at(percentile(intensity.data(), kShadowPercentile), noise);
}

double clip_score(const Raster& v) {
  if (v.empty()) throw ParameterError("clip_score of an empty frame");
  const Raster peak = max_channel(v);
  double sum = 0.0;
  for (float x : peak.values()) sum += sigmoid((x - kClipCenter) / kClipWidth);
  return sum / static_cast<double>(peak.size());
}

double ae_loss(const Raster& v, const NoiseModel& noise, double lambda) {
  const double c = clip_score(v);
  if (lambda == 0.0) return c;
  const double s = shadow_snr(v, noise);
  if (!(s > 0.0)) return std::numeric_limits<double>::infinity();
  return c - lambda * std::log(s);
}

ExposureSettings select_reference_exposure(const Raster& v, const ExposureSettings& current,
                                           const NoiseModel& noise, double lambda,
                                           const DeviceLimits& limits,
                                           const ReferenceSearch& search) {
  check_limits(limits);
  const double total = current.total();
  if (!(total > 0.0)) throw ParameterError("current exposure must be > 0");
  if (search.grid_points < 2 || !(search.min_multiplier > 0.0) ||
      search.max_multiplier <= search.min_multiplier) {
    throw ParameterError("invalid reference search grid");
  }
  auto clamp_total = [&](double t) { return std::clamp(t, limits.min_total(), limits.max_total()); };

  if (clip_score(v) > search.clip_threshold) {
    double m = 1.0;
    for (int i = 0; i < search.max_halvings; ++i) {
      m *= 0.5;
      if (clip_score(scaled_clamped(v, m)) <= search.clip_threshold) {
        return factorize_exposure(clamp_total(total * m), limits);
      }
    }
    throw DeviceLimitError("frame still clipped after " + std::to_string(search.max_halvings) +
                           " halvings");
  }

  const double log_lo = std::log(search.min_multiplier);
  const double log_hi = std::log(search.max_multiplier);
  double best_m = 1.0;
  double best_loss = std::numeric_limits<double>::infinity();
  for (int k = 0; k < search.grid_points; ++k) {
    const double m = std::exp(log_lo + (log_hi - log_lo) * k / (search.grid_points - 1));
    const double loss = ae_loss(scaled_clamped(v, m), noise, lambda);
    if (loss < best_loss) {
      best_loss = loss;
      best_m = m;
    }
  }
  return factorize_exposure(clamp_total(total * best_m), limits);
}

BracketPlan plan_bracket(const ExposureSettings& reference, const NoiseModel& noise,
                         const BracketOptions& options) {
  check_limits(options.limits);
  noise.validate();
  if (options.n < 1) throw ParameterError("bracket needs at least one frame");
  const double ref_total = reference.total();
  if (!(ref_total > 0.0)) throw ParameterError("reference exposure must be > 0");

  BracketPlan plan;
  const int n = options.n;
  for (int i = 0; i < n; ++i) {
    plan.ev_offsets.push_back(n == 1 ? 0.0 : -0.5 * options.span_ev + options.span_ev * i / (n - 1));
  }

  if (options.shadow_level && n > 1) {
    const double target = std::pow(10.0, options.min_shadow_snr_db / 20.0);
    const double x_short = *options.shadow_level * std::exp2(plan.ev_offsets.front());
    if (shadow_snr_at(x_short, noise) < target) {
      // Smallest intensity meeting the floor: x^2 = S^2 (a x + b).
      const double s2 = target * target;
      const double x_needed = 0.5 * (s2 * noise.a + std::sqrt(s2 * s2 * noise.a * noise.a +
                                                               4.0 * s2 * noise.b));
      double raise = x_short > 0.0 ? std::log2(x_needed / x_short)
                                   : std::numeric_limits<double>::infinity();
      if (raise > options.max_raise_ev || x_needed > 1.0) {
        raise = std::min(raise, options.max_raise_ev);
        plan.constrained = true;
        plan.warning = "shadow SNR floor of the shortest frame not reachable without clipping";
      }
      for (double& o : plan.ev_offsets) o += raise;
    }
  }

  for (double o : plan.ev_offsets) {
    const double unclamped = ref_total * std::exp2(o);
    plan.unclamped_totals.push_back(unclamped);
    const double clamped =
        std::clamp(unclamped, options.limits.min_total(), options.limits.max_total());
    if (clamped != unclamped) {
      plan.constrained = true;
      if (plan.warning.empty()) plan.warning = "bracket clamped to device limits";
    }
    plan.settings.push_back(factorize_exposure(clamped, options.limits));
  }

  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    if (std::fabs(plan.ev_offsets[i]) < best) {
      best = std::fabs(plan.ev_offsets[i]);
      plan.reference_index = i;
    }
  }
  return plan;
}

}  // namespace lhdr
