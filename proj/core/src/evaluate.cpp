#include "lhdr/evaluate.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "lhdr/dataset.hpp"
#include "lhdr/errors.hpp"

namespace lhdr {

namespace {

using nlohmann::ordered_json;

ordered_json number_or_sentinel(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

template <class Get>
double mean_finite(const std::vector<SampleReport>& samples, Get get) {
  double sum = 0.0;
  int n = 0;
  for (const auto& s : samples) {
    if (s.error) continue;
    const double v = get(s);
    if (!std::isfinite(v)) continue;
    sum += v;
    ++n;
  }
  return n ? sum / n : std::nan("");
}

std::string fixed2(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

int EvalReport::evaluated() const {
  int n = 0;
  for (const auto& s : samples) n += s.error ? 0 : 1;
  return n;
}

double EvalReport::mean_psnr_l() const {
  return mean_finite(samples, [](const SampleReport& s) { return s.psnr_l; });
}
double EvalReport::mean_psnr_mu() const {
  return mean_finite(samples, [](const SampleReport& s) { return s.psnr_mu; });
}
double EvalReport::mean_psnr_l_base() const {
  return mean_finite(samples, [](const SampleReport& s) { return s.psnr_l_base; });
}
double EvalReport::mean_psnr_mu_base() const {
  return mean_finite(samples, [](const SampleReport& s) { return s.psnr_mu_base; });
}

SampleReport evaluate_sample(const std::filesystem::path& sample_dir, const ModelSet& models,
                             const EvalOptions& options) {
  SampleReport report;
  report.sample_id = sample_dir.filename().string();
  try {
    StoredSample sample = read_burst_sample(sample_dir);
    report.sample_id = sample.sample_id;
    if (sample.base_index != 0) throw FormatError("base frame must be the first (shortest) frame");

    PipelineConfig cfg = options.pipeline;
    cfg.keep_fields = true;
    const auto start = std::chrono::steady_clock::now();
    const MergeTrace trace = iterative_merge(sample.frames, models, cfg);
    const auto stop = std::chrono::steady_clock::now();
    if (options.timing) {
      report.ms_per_merge = std::chrono::duration<double, std::milli>(stop - start).count();
    }

    const double e_base = sample.frames[0].exposure_scale();
    const Raster reference = scale(sample.gt, static_cast<float>(e_base));
    if (!reference.same_shape(trace.estimate)) throw FormatError("gt shape does not match frames");
    const LinearImage base = exposure_normalize(sample.frames[0], e_base);

    report.psnr_l = psnr(trace.estimate, reference, PsnrDomain::linear);
    report.psnr_mu = psnr(trace.estimate, reference, PsnrDomain::mu_tonemapped);
    report.psnr_l_base = psnr(base, reference, PsnrDomain::linear);
    report.psnr_mu_base = psnr(base, reference, PsnrDomain::mu_tonemapped);
    report.l_pred = loss_pred(trace.estimate, reference);

    std::vector<LinearImage> warped;
    std::vector<LinearImage> targets;
    std::vector<ValidityMask> masks;
    std::vector<ShiftField> shifts;
    for (const auto& rec : trace.iterations) {
      warped.push_back(rec.warped);
      targets.push_back(exposure_normalize(sample.noshift_targets[rec.frame_index], e_base));
      masks.push_back(sample.masks[rec.frame_index]);
      shifts.push_back(rec.shift);
    }
    report.l_warp = loss_warp(warped, targets, masks).value;
    report.l_var = loss_var(shifts);
    report.convexity_ok = audit_convexity(sample.frames, trace, options.audit_samples).ok;
  } catch (const Error& e) {
    report.error = e.what();
  }
  return report;
}

EvalReport evaluate(const std::filesystem::path& dataset_dir, const ModelSet& models,
                    const EvalOptions& options) {
  EvalReport report;
  for (const auto& dir : list_samples(dataset_dir)) {
    report.samples.push_back(evaluate_sample(dir, models, options));
  }
  return report;
}

std::string to_jsonl(const EvalReport& report) {
  std::string out;
  for (const auto& s : report.samples) {
    ordered_json line;
    line["sample_id"] = s.sample_id;
    if (s.error) {
      line["error"] = *s.error;
    } else {
      line["psnr_l"] = number_or_sentinel(s.psnr_l);
      line["psnr_mu"] = number_or_sentinel(s.psnr_mu);
      line["psnr_l_base"] = number_or_sentinel(s.psnr_l_base);
      line["psnr_mu_base"] = number_or_sentinel(s.psnr_mu_base);
      line["l_pred"] = s.l_pred;
      line["l_warp"] = s.l_warp;
      line["l_var"] = s.l_var;
      line["convexity_ok"] = s.convexity_ok;
      line["ms_per_merge"] = s.ms_per_merge;
    }
    out += line.dump() + "\n";
  }
  return out;
}

std::string to_table(const EvalReport& report) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-24s %9s %9s %9s %9s %9s %6s %9s\n", "sample", "psnr_l",
                "psnr_mu", "base_l", "base_mu", "l_pred", "convex", "ms");
  os << buf;
  for (const auto& s : report.samples) {
    if (s.error) {
      os << s.sample_id << "  skipped: " << *s.error << "\n";
      continue;
    }
    std::snprintf(buf, sizeof buf, "%-24s %9s %9s %9s %9s %9.5f %6s %9.1f\n", s.sample_id.c_str(),
                  fixed2(s.psnr_l).c_str(), fixed2(s.psnr_mu).c_str(),
                  fixed2(s.psnr_l_base).c_str(), fixed2(s.psnr_mu_base).c_str(), s.l_pred,
                  s.convexity_ok ? "yes" : "NO", s.ms_per_merge);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "%-24s %9s %9s %9s %9s\n", "mean", fixed2(report.mean_psnr_l()).c_str(),
                fixed2(report.mean_psnr_mu()).c_str(), fixed2(report.mean_psnr_l_base()).c_str(),
                fixed2(report.mean_psnr_mu_base()).c_str());
  os << buf;
  os << report.evaluated() << " of " << report.samples.size() << " samples evaluated\n";
  return os.str();
}

}  // namespace lhdr
