// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Runs single-threaded with the repository fixture weights.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "lhdr/auto_exposure.hpp"
#include "lhdr/burst_sim.hpp"
#include "lhdr/imaging.hpp"
#include "lhdr/models.hpp"
#include "lhdr/parallel.hpp"
#include "lhdr/pipeline.hpp"
#include "lhdr/tinycnn.hpp"
#include "support/oracles.hpp"

using namespace lhdr;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp(std::uniform_real_distribution<double>(std::log(lo), std::log(hi))(rng));
}

Outcome convexity() {
  std::mt19937_64 rng(101);
  int bursts = 0, failed = 0;
  long long pixels = 0;
  double worst_value = 0.0, worst_weight = 0.0, min_coef = 1.0;
  for (; bursts < 120; ++bursts) {
    SimConfig cfg;
    cfg.n_frames = std::uniform_int_distribution<int>(3, 9)(rng);
    cfg.exposure_step_ev = {1.0, 2.0, 3.0};
    const int w = std::uniform_int_distribution<int>(20, 48)(rng);
    const int h = std::uniform_int_distribution<int>(16, 40)(rng);
    const BurstSample s = simulate_burst(make_procedural_scene(w, h, rng()), cfg, rng());
    const float scale = static_cast<float>(log_uniform(rng, 0.05, 4.0));
    const MergeTrace t = iterative_merge(s.frames, random_model_set(rng(), scale));
    const ConvexityAudit a = audit_convexity(s.frames, t, 0);
    failed += a.ok ? 0 : 1;
    pixels += a.checked;
    worst_value = std::max(worst_value, a.max_value_error);
    worst_weight = std::max(worst_weight, a.max_weight_error);
    min_coef = std::min(min_coef, a.min_coefficient);
  }
  return {failed == 0,
          fmt("%d random-weight bursts of 3-9 frames, %lld pixels; max |value err| %.2e, "
              "max |sum-1| %.2e, min coefficient %.2e (tol 1e-5)",
              bursts, pixels, worst_value, worst_weight, min_coef)};
}

Outcome shift_bound() {
  std::mt19937_64 rng(202);
  const AlignConfig cfg;
  float worst_total = 0.0f, worst_coarse = 0.0f;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    const int w = std::uniform_int_distribution<int>(8, 20)(rng);
    const int h = std::uniform_int_distribution<int>(8, 20)(rng);
    const float scale = static_cast<float>(log_uniform(rng, 0.01, 100.0));
    const ModelSet m = random_model_set(rng(), scale);
    const LinearImage base = test::random_image(w, h, rng(), 1.0);
    const LinearImage alt = test::random_image(w, h, rng(), log_uniform(rng, 1.0, 64.0));
    const ShiftPrediction p = predict_shift_stages(base, alt, m, cfg);
    worst_coarse = std::max(worst_coarse, p.coarse.max_abs_component());
    worst_total = std::max(worst_total, p.total.max_abs_component());
  }
  const bool ok = worst_coarse <= cfg.coarse_reach() && worst_total <= cfg.total_reach();
  return {ok, fmt("%d trials; max |coarse| %.4f px (bound %.0f), max |total| %.4f px (bound %.0f)",
                  trials, worst_coarse, cfg.coarse_reach(), worst_total, cfg.total_reach())};
}

Outcome noise_fidelity() {
  std::mt19937_64 rng(303);
  const SimConfig defaults;
  const std::vector<float> levels = {0.02f, 0.05f, 0.1f, 0.2f, 0.3f, 0.4f, 0.5f, 0.6f, 0.7f, 0.8f};
  const int per_level = 100000;  // 10^6 samples per noise pair
  double worst = 0.0;
  std::string pairs;
  for (int k = 0; k < 5; ++k) {
    const NoiseModel n{std::uniform_real_distribution<double>(defaults.ns_range.lo, defaults.ns_range.hi)(rng),
                       std::uniform_real_distribution<double>(defaults.no_range.lo, defaults.no_range.hi)(rng)};
    Raster signal(per_level, static_cast<int>(levels.size()), 1);
    for (int y = 0; y < signal.height(); ++y)
      for (int x = 0; x < per_level; ++x) signal.at(x, y) = levels[y];
    Rng sensor_rng(rng());
    const Raster out = apply_sensor(signal, n, sensor_rng, 0);
    for (int y = 0; y < out.height(); ++y) {
      double m = 0.0, m2 = 0.0;
      for (int x = 0; x < per_level; ++x) m += out.at(x, y);
      m /= per_level;
      for (int x = 0; x < per_level; ++x) m2 += (out.at(x, y) - m) * (out.at(x, y) - m);
      const double var = m2 / (per_level - 1);
      worst = std::max(worst, std::fabs(var / n.variance(levels[y]) - 1.0));
    }
    pairs += fmt("%s(%.2e,%.2e)", k ? " " : "", n.a, n.b);
  }
  return {worst <= 0.02,
          fmt("5 pairs x 10 bins x 1e5 samples, max relative variance error %.2f%% (tol 2%%); "
              "pairs %s",
              100.0 * worst, pairs.c_str())};
}

Outcome warp_oracle() {
  int cases = 0, mismatched = 0;
  for (int dy = -5; dy <= 5; ++dy)
    for (int dx = -5; dx <= 5; ++dx, ++cases) {
      const LinearImage img = test::random_image(64, 64, 1000 + cases);
      Raster valid;
      const Raster oracle = test::translate_oracle(img, dx, dy, &valid);
      const auto w = bilinear_warp(img, ShiftField(64, 64, {float(dx), float(dy)}));
      bool same = true;
      for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
          const bool interior = x + dx >= 0 && x + dx < 64 && y + dy >= 0 && y + dy < 64;
          if (!interior) {
            same = same && w.validity(x, y) == 0.0f;
            continue;
          }
          same = same && w.validity(x, y) == 1.0f;
          for (int c = 0; c < 3; ++c) same = same && w.image.at(x, y, c) == oracle.at(x, y, c);
        }
      mismatched += same ? 0 : 1;
    }
  return {mismatched == 0,
          fmt("%d integer shifts in [-5,5]^2 on 64x64: %d differ from the translation oracle "
              "(exact equality on the interior, zero validity outside)",
              cases, mismatched)};
}

Outcome ae_contract() {
  std::mt19937_64 rng(404);
  int violations = 0, snr_checked = 0, infeasible = 0;
  double min_snr_db = 1e9;
  for (int i = 0; i < 20; ++i) {
    ExposureSettings ref = factorize_exposure(log_uniform(rng, 1e-3, 2.0));
    const NoiseModel n{log_uniform(rng, 1e-5, 1e-3), log_uniform(rng, 1e-7, 1e-5)};
    BracketOptions opt;
    opt.shadow_level = log_uniform(rng, 1e-3, 0.3);
    const BracketPlan p = plan_bracket(ref, n, opt);

    bool ok = p.settings.size() == 5;
    ok = ok && std::fabs(std::log2(p.unclamped_totals.back() / p.unclamped_totals.front()) - 4.0) < 1e-9;
    ok = ok && std::fabs(std::log2(p.settings.back().total() / p.settings.front().total()) - 4.0) < 1e-9;
    for (std::size_t k = 0; k < p.settings.size(); ++k) {
      const auto& s = p.settings[k];
      ok = ok && s.duration_s <= opt.limits.max_duration_s;
      ok = ok && ((s.iso > opt.limits.base_iso) == (p.unclamped_totals[k] > opt.limits.max_duration_s));
    }
    // Feasible: the level needed for 20 dB exists below saturation and within the raise limit.
    const double target = 10.0;
    const double x0 = *opt.shadow_level * std::exp2(-2.0);
    const double x_needed = 0.5 * (100.0 * n.a + std::sqrt(1e4 * n.a * n.a + 400.0 * n.b));
    const bool feasible = x0 / std::sqrt(n.variance(x0)) >= target ||
                          (x_needed <= 1.0 && std::log2(x_needed / x0) <= opt.max_raise_ev);
    const double x_short = *opt.shadow_level * std::exp2(p.ev_offsets.front());
    const double snr_db = 20.0 * std::log10(shadow_snr_at(x_short, n));
    if (feasible) {
      ++snr_checked;
      min_snr_db = std::min(min_snr_db, snr_db);
      ok = ok && snr_db >= 20.0 - 1e-9;
    } else {
      ++infeasible;
      ok = ok && p.constrained && !p.warning.empty();
    }
    violations += ok ? 0 : 1;
  }
  return {violations == 0,
          fmt("20 references: 5 frames over 4 EV, durations <= 1 s, gain only past 1 s; "
              "%d feasible with min shortest-frame shadow SNR %.2f dB (floor 20), %d infeasible "
              "flagged; %d violations",
              snr_checked, min_snr_db, infeasible, violations)};
}

Outcome tiny_cnn() {
  std::mt19937_64 rng(505);
  int mismatched = 0;
  for (int i = 0; i < 50; ++i) {
    const int k = std::array{1, 3, 3, 3, 5}[rng() % 5];
    const int w = std::uniform_int_distribution<int>(1, 40)(rng);
    const int h = std::uniform_int_distribution<int>(1, 24)(rng);
    const int cin = std::uniform_int_distribution<int>(1, 24)(rng);
    const int cout = std::uniform_int_distribution<int>(1, 32)(rng);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    std::vector<float> kernel(static_cast<std::size_t>(k) * k * cin * cout), bias(cout);
    for (float& v : kernel) v = u(rng);
    for (float& v : bias) v = u(rng);
    const nn::Tensor in = test::random_raster(w, h, cin, rng(), -3.0f, 3.0f);
    mismatched += nn::conv2d(in, kernel, bias, k, cout) == test::naive_conv(in, kernel, bias, k, cout) ? 0 : 1;
  }
  int roundtrip_failures = 0;
  const auto dir = test::scratch_dir("acceptance_weights");
  for (const auto& spec : {nn::NetworkSpec::coarse_align(), nn::NetworkSpec::fine_align(), nn::NetworkSpec::merge()}) {
    const nn::WeightBundle b = nn::WeightBundle::random(spec, rng(), 3.0f);
    nn::save_weights(b, dir / "w.lhdrw");
    const nn::WeightBundle back = nn::load_weights(dir / "w.lhdrw");
    roundtrip_failures += (back == b && nn::serialize_weights(back) == nn::serialize_weights(b)) ? 0 : 1;
  }
  const std::size_t params = nn::NetworkSpec::coarse_align().param_count() +
                             nn::NetworkSpec::fine_align().param_count() +
                             nn::NetworkSpec::merge().param_count();
  return {mismatched == 0 && roundtrip_failures == 0 && params <= nn::kParamBudget,
          fmt("conv2d vs naive fma oracle: %d/50 bitwise mismatches; weight round-trip failures "
              "%d/3; default specs %zu params (budget %zu)",
              mismatched, roundtrip_failures, params, nn::kParamBudget)};
}

Outcome performance(const ModelSet& models) {
  const LinearImage scene = make_procedural_scene(512, 512, 7);
  const std::vector<LinearImage> frames{exposure_normalize(LinearImage(scene, 1.0), 1.0),
                                        LinearImage(clamp01(scale(scene, 4.0f)), 4.0)};
  PipelineConfig cfg;
  cfg.keep_fields = false;
  iterative_merge(frames, models, cfg);  // warm-up
  std::vector<double> ms;
  for (int i = 0; i < 9; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    iterative_merge(frames, models, cfg);
    ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(ms.begin(), ms.end());
  const double median = ms[ms.size() / 2];
  return {median <= 200.0,
          fmt("512x512 align+merge iteration, 1 thread: median %.1f ms, min %.1f ms over 9 runs "
              "(limit 200 ms; reference GPU figure 7 ms per merge, no parity claimed)",
              median, ms.front())};
}

Outcome gt_injection(const ModelSet& models) {
  std::mt19937_64 rng(606);
  double worst = 1e9, worst_base = 1e9;
  const int bursts = 10;
  for (int i = 0; i < bursts; ++i) {
    SimConfig cfg;
    cfg.zero_noise = true;
    cfg.integer_shifts = true;
    cfg.fg_prob = 0.0;
    cfg.blur_prob = 0.0;
    cfg.n_frames = std::uniform_int_distribution<int>(3, 5)(rng);
    const BurstSample s = simulate_burst(make_procedural_scene(128, 96, rng()), cfg, rng());
    std::vector<ShiftField> inj;
    for (std::size_t k = 1; k < s.frames.size(); ++k) inj.emplace_back(128, 96, s.gt_shifts[k]);
    const MergeTrace t = iterative_merge(s.frames, models, {}, inj);
    const double e_base = s.exposures()[0];
    const Raster ref = scale(s.gt_hdr, static_cast<float>(e_base));
    // Unclipped in at least one frame is equivalent to unclipped in the shortest frame.
    ValidityMask mask(128, 96, 1.0f);
    for (std::size_t p = 0; p < mask.pixel_count(); ++p)
      for (int c = 0; c < 3; ++c)
        if (s.frames[0].values()[3 * p + c] >= 1.0f) mask.values()[p] = 0.0f;
    worst = std::min(worst, psnr(t.estimate, ref, PsnrDomain::linear, &mask));
    worst_base = std::min(worst_base, psnr(exposure_normalize(s.frames[0], e_base), ref,
                                           PsnrDomain::linear, &mask));
  }
  return {worst >= 60.0,
          fmt("%d noiseless 12-bit bursts, true shifts, fixture clip-aware weights: min PSNR_l "
              "%.2f dB on pixels unclipped in >= 1 frame (limit 60 dB; base frame alone %.2f dB)",
              bursts, worst, worst_base)};
}

}  // namespace

int main() {
  set_max_threads(1);
  const ModelSet fixture = load_model_set(LHDR_FIXTURE_WEIGHTS);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"convexity", convexity},
      {"shift-bound", shift_bound},
      {"noise-fidelity", noise_fidelity},
      {"warp-oracle", warp_oracle},
      {"ae-contract", ae_contract},
      {"tiny-cnn", tiny_cnn},
      {"performance", [&] { return performance(fixture); }},
      {"gt-injection", [&] { return gt_injection(fixture); }},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
