#include "lhdr/burst_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lhdr/errors.hpp"
#include "lhdr/imaging.hpp"
#include "lhdr/parallel.hpp"

namespace lhdr {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double uniform(Rng& rng, Range r) { return r.lo == r.hi ? r.lo : uniform(rng, r.lo, r.hi); }

void check_range(const Range& r, const char* name, bool allow_point = false) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi || (!allow_point && r.lo == r.hi)) {
    throw ParameterError(std::string("invalid range for ") + name);
  }
}

// Bilinear sample with coordinates clamped to the raster.
float sample_clamped(const Raster& img, double sx, double sy, int c) {
  const int w = img.width();
  const int h = img.height();
  sx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
  sy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = sx - x0;
  const double fy = sy - y0;
  const double top = (1.0 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
  const double bottom = (1.0 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
  return static_cast<float>((1.0 - fy) * top + fy * bottom);
}

Raster multiply(const Raster& img, const ValidityMask& alpha) {
  Raster out = img;
  const int c = img.channels();
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    for (int ch = 0; ch < c; ++ch) out.values()[p * c + ch] *= alpha.values()[p];
  }
  return out;
}

// premultiplied_fg + (1 - alpha) * bg
Raster over(const Raster& premultiplied_fg, const Raster& alpha, const Raster& bg) {
  Raster out = bg;
  const int c = bg.channels();
  for (std::size_t p = 0; p < bg.pixel_count(); ++p) {
    const float a = alpha.values()[p];
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t i = p * c + ch;
      out.values()[i] = premultiplied_fg.values()[i] + (1.0f - a) * bg.values()[i];
    }
  }
  return out;
}

// Horizontally flipped scene shifted by (tx, ty), edges clamped.
Raster flipped_layer(const Raster& img, int tx, int ty) {
  const int w = img.width();
  const int h = img.height();
  Raster out(w, h, img.channels());
  for (int y = 0; y < h; ++y) {
    const int sy = std::clamp(y - ty, 0, h - 1);
    for (int x = 0; x < w; ++x) {
      const int sx = std::clamp(x - tx, 0, w - 1);
      const float* src = img.pixel(w - 1 - sx, sy);
      std::copy(src, src + img.channels(), out.pixel(x, y));
    }
  }
  return out;
}

}  // namespace

// Union of the foreground footprint over all frames.
ValidityMask motion_footprint(const ForegroundMotion& motion, int width, int height) {
  ValidityMask out(width, height, 0.0f);
  for (const auto& [tx, ty] : motion.translations) {
    ValidityMask m = rasterize_polygon(motion.polygon.translated(tx, ty), width, height);
    for (std::size_t p = 0; p < m.size(); ++p) {
      out.values()[p] = std::max(out.values()[p], m.values()[p]);
    }
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
  return splitmix64(root ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

void SimConfig::validate() const {
  if (n_frames < 2) throw ParameterError("n_frames must be >= 2");
  if (exposure_step_ev.empty()) throw ParameterError("exposure_step_ev needs at least one value");
  for (double s : exposure_step_ev) {
    if (!(s > 0.0)) throw ParameterError("exposure steps must be > 0");
  }
  check_range(ns_range, "ns_range", true);
  check_range(no_range, "no_range", true);
  check_range(powerlaw_range, "powerlaw_range", true);
  check_range(clip_fraction_range, "clip_fraction_range", true);
  check_range(fg_motion_range, "fg_motion_range", true);
  check_range(polygon_radius_frac, "polygon_radius_frac", true);
  if (ns_range.lo < 0.0 || no_range.lo < 0.0) throw ParameterError("noise ranges must be >= 0");
  if (clip_fraction_range.lo < 0.0 || clip_fraction_range.hi >= 1.0) {
    throw ParameterError("clip_fraction_range must lie in [0, 1)");
  }
  for (double p : {shift_mixture.p, blur_prob, fg_prob}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("probabilities must lie in [0, 1]");
  }
  if (shift_mixture.m_s < 0.0 || shift_mixture.m_l < 0.0) {
    throw ParameterError("shift mixture widths must be >= 0");
  }
  if (bg_blur_max < 0.0 || fg_blur_max < 0.0) throw ParameterError("blur radii must be >= 0");
  if (polygon_min_vertices < 3 || polygon_max_vertices < polygon_min_vertices) {
    throw ParameterError("invalid polygon vertex range");
  }
  if (bit_depth < 0 || bit_depth > 24) throw ParameterError("bit_depth must be in [0, 24]");
}

std::vector<double> BurstSample::exposures() const {
  std::vector<double> e;
  for (const auto& f : frames) e.push_back(f.exposure_scale());
  return e;
}

Polygon Polygon::translated(double dx, double dy) const {
  Polygon out = *this;
  for (auto& v : out.vertices) {
    v.x += dx;
    v.y += dy;
  }
  return out;
}

ValidityMask rasterize_polygon(const Polygon& poly, int width, int height) {
  ValidityMask mask(width, height, 0.0f);
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  if (n < 3) return mask;
  std::vector<double> xs;
  for (int y = 0; y < height; ++y) {
    const double cy = y + 0.5;
    xs.clear();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      if ((v[i].y > cy) != (v[j].y > cy)) {
        xs.push_back((v[j].x - v[i].x) * (cy - v[i].y) / (v[j].y - v[i].y) + v[i].x);
      }
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const int x_begin = std::max(0, static_cast<int>(std::floor(xs[k])) - 1);
      const int x_end = std::min(width - 1, static_cast<int>(std::ceil(xs[k + 1])) + 1);
      for (int x = x_begin; x <= x_end; ++x) {
        const double cx = x + 0.5;
        if (xs[k] <= cx && cx < xs[k + 1]) mask(x, y) = 1.0f;
      }
    }
  }
  return mask;
}

LinearImage prepare_hdr(const LinearImage& source, double exponent) {
  if (source.empty()) throw DegenerateInputError("empty HDR source");
  if (!(exponent > 0.0)) throw ParameterError("power-law exponent must be > 0");
  for (float v : source.values()) {
    if (!(v >= 0.0f) || !std::isfinite(v)) {
      throw ParameterError("HDR source values must be finite and >= 0");
    }
  }
  double ref = percentile(source.data(), 99.9);
  if (!(ref > 0.0)) ref = *std::max_element(source.values().begin(), source.values().end());
  if (!(ref > 0.0)) throw DegenerateInputError("HDR source is all zero");
  LinearImage out(Raster(source.width(), source.height(), source.channels()), 1.0);
  for (std::size_t i = 0; i < source.size(); ++i) {
    const double v = std::clamp(source.values()[i] / ref, 0.0, 1.0);
    out.values()[i] = static_cast<float>(exponent == 1.0 ? v : std::pow(v, exponent));
  }
  return out;
}

LinearImage prepare_hdr(const LinearImage& source, Rng& rng, Range powerlaw_range) {
  return prepare_hdr(source, uniform(rng, powerlaw_range));
}

Raster apply_sensor(const Raster& signal, const NoiseModel& noise, Rng& rng, int bit_depth) {
  noise.validate();
  Raster out(signal.width(), signal.height(), signal.channels());
  const bool noisy = noise.a > 0.0 || noise.b > 0.0;
  const double levels = bit_depth > 0 ? std::ldexp(1.0, bit_depth) - 1.0 : 0.0;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < signal.size(); ++i) {
    double x = signal.values()[i];
    if (noisy) x += noise.sigma(std::max(0.0, x)) * gauss(rng);
    x = std::clamp(x, 0.0, 1.0);
    if (bit_depth > 0) x = std::round(x * levels) / levels;
    out.values()[i] = static_cast<float>(x);
  }
  return out;
}

LinearImage expose_frame(const LinearImage& hdr, double e, const NoiseModel& noise, Rng& rng,
                         int bit_depth) {
  if (!(e > 0.0)) throw ParameterError("exposure must be > 0");
  Raster signal = hdr;
  for (float& v : signal.values()) v = static_cast<float>(v * e);
  return LinearImage(apply_sensor(signal, noise, rng, bit_depth), e);
}

Composite composite_foreground(const LinearImage& hdr, const Polygon& poly, int tx, int ty) {
  ValidityMask mask = rasterize_polygon(poly.translated(tx, ty), hdr.width(), hdr.height());
  Raster layer = flipped_layer(hdr, tx, ty);
  Raster image = over(multiply(layer, mask), mask, hdr);
  return {LinearImage(std::move(image), hdr.exposure_scale()), std::move(mask)};
}

Polygon sample_polygon(int width, int height, const SimConfig& cfg, Rng& rng) {
  Polygon poly;
  const int n = std::uniform_int_distribution<int>(cfg.polygon_min_vertices,
                                                   cfg.polygon_max_vertices)(rng);
  const double cx = uniform(rng, 0.0, width);
  const double cy = uniform(rng, 0.0, height);
  const double radius = uniform(rng, cfg.polygon_radius_frac) * height;
  const double step = 2.0 * std::numbers::pi / n;
  for (int k = 0; k < n; ++k) {
    const double theta = k * step + uniform(rng, 0.0, 0.8 * step);
    const double r = radius * uniform(rng, 0.5, 1.0);
    poly.vertices.push_back({cx + r * std::cos(theta), cy + r * std::sin(theta)});
  }
  return poly;
}

ForegroundMotion sample_foreground_motion(int width, int height, int n_frames,
                                          const SimConfig& cfg, Rng& rng) {
  ForegroundMotion motion;
  motion.polygon = sample_polygon(width, height, cfg, rng);
  const double theta = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double magnitude = uniform(rng, cfg.fg_motion_range);
  const double t0x = uniform(rng, -0.5 * magnitude, 0.5 * magnitude);
  const double t0y = uniform(rng, -0.5 * magnitude, 0.5 * magnitude);
  for (int i = 0; i < n_frames; ++i) {
    motion.translations.emplace_back(
        static_cast<int>(std::lround(t0x + i * magnitude * std::cos(theta))),
        static_cast<int>(std::lround(t0y + i * magnitude * std::sin(theta))));
  }
  return motion;
}

ForegroundSample composite_foreground(const LinearImage& hdr, int n_frames, const SimConfig& cfg,
                                      Rng& rng) {
  ForegroundSample out;
  out.motion = sample_foreground_motion(hdr.width(), hdr.height(), n_frames, cfg, rng);
  const auto [bx, by] = out.motion.translations.front();
  out.base = composite_foreground(hdr, out.motion.polygon, bx, by);
  out.footprint = motion_footprint(out.motion, hdr.width(), hdr.height());
  return out;
}

Shift sample_global_shift(Rng& rng, const ShiftMixture& mixture) {
  const bool large = uniform(rng, 0.0, 1.0) < mixture.p;
  const double m = large ? mixture.m_l : mixture.m_s;
  if (m == 0.0) return {};
  return {static_cast<float>(uniform(rng, -m, m)), static_cast<float>(uniform(rng, -m, m))};
}

Raster motion_blur(const Raster& img, double radius_px, Shift direction) {
  if (radius_px < 0.0) throw ParameterError("blur radius must be >= 0");
  const double norm = std::hypot(direction.dx, direction.dy);
  if (radius_px == 0.0 || norm == 0.0) return img;
  const double ux = direction.dx / norm;
  const double uy = direction.dy / norm;
  const int taps = 2 * static_cast<int>(std::ceil(radius_px)) + 1;
  std::vector<double> offsets(taps);
  for (int k = 0; k < taps; ++k) offsets[k] = -radius_px + 2.0 * radius_px * k / (taps - 1);

  Raster out(img.width(), img.height(), img.channels());
  const int c = img.channels();
  parallel_rows(img.height(), [&](int y0, int y1) {
    for (int y = y0; y < y1; ++y) {
      for (int x = 0; x < img.width(); ++x) {
        for (int ch = 0; ch < c; ++ch) {
          double acc = 0.0;
          for (double t : offsets) acc += sample_clamped(img, x + t * ux, y + t * uy, ch);
          out.at(x, y, ch) = static_cast<float>(acc / taps);
        }
      }
    }
  });
  return out;
}

LinearImage motion_blur(const LinearImage& img, double radius_px, Shift direction) {
  return LinearImage(motion_blur(static_cast<const Raster&>(img), radius_px, direction),
                     img.exposure_scale());
}

Raster translate(const Raster& img, Shift delta) {
  if (delta.dx == 0.0f && delta.dy == 0.0f) return img;
  Raster out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int ch = 0; ch < img.channels(); ++ch) {
        out.at(x, y, ch) = sample_clamped(img, static_cast<double>(x) - delta.dx,
                                          static_cast<double>(y) - delta.dy, ch);
      }
    }
  }
  return out;
}

BurstSample simulate_burst(const LinearImage& source, const SimConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  BurstSample sample;
  sample.seed = seed;

  // Scene preparation and per-scene draws.
  sample.power_exponent = uniform(rng, cfg.powerlaw_range);
  const LinearImage hdr = prepare_hdr(source, sample.power_exponent);
  const int w = hdr.width();
  const int h = hdr.height();
  if (!cfg.zero_noise) {
    sample.noise = {uniform(rng, cfg.ns_range), uniform(rng, cfg.no_range)};
  }
  const auto step_index = std::uniform_int_distribution<std::size_t>(
      0, cfg.exposure_step_ev.size() - 1)(rng);
  sample.exposure_step_ev = cfg.exposure_step_ev[step_index];

  // The longest frame clips a sampled share of pixels.
  const double clip_fraction = uniform(rng, cfg.clip_fraction_range);
  const double bright = percentile(max_channel(hdr).data(), 100.0 * (1.0 - clip_fraction));
  const double e_max = bright > 0.0 ? 1.0 / bright : 1.0;
  std::vector<double> exposures(cfg.n_frames);
  for (int i = 0; i < cfg.n_frames; ++i) {
    exposures[i] = e_max * std::exp2(-(cfg.n_frames - 1 - i) * sample.exposure_step_ev);
  }

  // Moving foreground.
  const bool with_fg = uniform(rng, 0.0, 1.0) < cfg.fg_prob;
  ForegroundMotion motion;
  ValidityMask footprint(w, h, 0.0f);
  if (with_fg) {
    motion = sample_foreground_motion(w, h, cfg.n_frames, cfg, rng);
    footprint = motion_footprint(motion, w, h);
  }
  sample.fg_mask = footprint;

  for (int i = 0; i < cfg.n_frames; ++i) {
    const bool is_base = i == sample.base_index;
    const bool blurred = !is_base && uniform(rng, 0.0, 1.0) < cfg.blur_prob;
    const double blur_theta = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    Shift shift = is_base ? Shift{} : sample_global_shift(rng, cfg.shift_mixture);
    if (cfg.integer_shifts) shift = {std::round(shift.dx), std::round(shift.dy)};
    const std::uint64_t noise_seed = rng();

    // Scene for this frame: background plus (optionally blurred) foreground.
    Raster alpha(w, h, 1, 0.0f);
    Raster fg_premult(w, h, hdr.channels(), 0.0f);
    if (with_fg) {
      const auto [tx, ty] = motion.translations[i];
      ValidityMask a = rasterize_polygon(motion.polygon.translated(tx, ty), w, h);
      fg_premult = multiply(flipped_layer(hdr, tx, ty), a);
      alpha = std::move(a);
    }
    Raster background = hdr;
    if (blurred) {
      const Shift dir{static_cast<float>(std::cos(blur_theta)),
                      static_cast<float>(std::sin(blur_theta))};
      const double ratio = exposures[i] / exposures.back();
      background = motion_blur(background, cfg.bg_blur_max * ratio, dir);
      fg_premult = motion_blur(fg_premult, cfg.fg_blur_max * ratio, dir);
      alpha = motion_blur(alpha, cfg.fg_blur_max * ratio, dir);
    }
    Raster scene = over(fg_premult, alpha, background);
    if (is_base) sample.gt_hdr = LinearImage(scene, 1.0);

    Raster signal = scale(scene, static_cast<float>(exposures[i]));
    Rng frame_rng(noise_seed);
    Rng noshift_rng(noise_seed);
    sample.frames.emplace_back(apply_sensor(translate(signal, shift), sample.noise, frame_rng,
                                            cfg.bit_depth),
                               exposures[i]);
    sample.noshift_targets.emplace_back(
        apply_sensor(signal, sample.noise, noshift_rng, cfg.bit_depth), exposures[i]);

    const bool unmatchable =
        !is_base && (std::max(std::fabs(shift.dx), std::fabs(shift.dy)) > cfg.unmatchable_shift_px ||
                     blurred);
    ValidityMask mask(w, h, 1.0f);
    for (std::size_t p = 0; p < mask.size(); ++p) {
      mask.values()[p] = unmatchable ? 0.0f : 1.0f - footprint.values()[p];
    }
    sample.validity_masks.push_back(std::move(mask));
    sample.gt_shifts.push_back(shift);
    sample.blurred.push_back(blurred);
    sample.unmatchable.push_back(unmatchable);
  }
  return sample;
}

LinearImage make_procedural_scene(int width, int height, std::uint64_t seed) {
  if (width <= 0 || height <= 0) throw ParameterError("scene size must be positive");
  Rng rng(seed);
  LinearImage img(width, height, 3, 0.0f, 1.0);
  const double fx = uniform(rng, 0.05, 0.4);
  const double fy = uniform(rng, 0.05, 0.4);
  const double phase = uniform(rng, 0.0, 6.28);
  double tint[3];
  for (double& t : tint) t = uniform(rng, 0.6, 1.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double gx = static_cast<double>(x) / width;
      const double gy = static_cast<double>(y) / height;
      const double texture = 0.5 + 0.5 * std::sin(fx * x + phase) * std::sin(fy * y + 0.5 * phase);
      for (int c = 0; c < 3; ++c) {
        img.at(x, y, c) = static_cast<float>(tint[c] * (0.02 + 0.25 * gx * gy + 0.12 * texture));
      }
    }
  }
  // Diffuse discs over a wide intensity range, then a few small emitters.
  const int discs = 6 + static_cast<int>(rng() % 6);
  for (int k = 0; k < discs + 3; ++k) {
    const bool emitter = k >= discs;
    const double cx = uniform(rng, 0.0, width);
    const double cy = uniform(rng, 0.0, height);
    const double r = emitter ? uniform(rng, 1.5, 4.0) : uniform(rng, 0.05, 0.2) * std::min(width, height);
    const double level = emitter ? uniform(rng, 20.0, 80.0) : std::exp(uniform(rng, -3.0, 1.5));
    double color[3];
    for (double& col : color) col = uniform(rng, 0.3, 1.0);
    for (int y = std::max(0, static_cast<int>(cy - r)); y < std::min(height, static_cast<int>(cy + r) + 1); ++y) {
      for (int x = std::max(0, static_cast<int>(cx - r)); x < std::min(width, static_cast<int>(cx + r) + 1); ++x) {
        const double d = std::hypot(x + 0.5 - cx, y + 0.5 - cy);
        if (d > r) continue;
        const double falloff = emitter ? 1.0 : 0.6 + 0.4 * (1.0 - d / r);
        for (int c = 0; c < 3; ++c) {
          img.at(x, y, c) = static_cast<float>(emitter ? level * color[c]
                                                      : img.at(x, y, c) * 0.3 + level * color[c] * falloff);
        }
      }
    }
  }
  return img;
}

}  // namespace lhdr
