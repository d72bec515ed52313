#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lhdr/models.hpp"
#include "lhdr/pipeline.hpp"

namespace lhdr {

struct SampleReport {
  std::string sample_id;
  double psnr_l = 0.0;
  double psnr_mu = 0.0;
  double psnr_l_base = 0.0;  ///< base frame alone, for comparison
  double psnr_mu_base = 0.0;
  double l_pred = 0.0;
  double l_warp = 0.0;
  double l_var = 0.0;
  bool convexity_ok = false;
  double ms_per_merge = 0.0;
  std::optional<std::string> error;  ///< set when the sample was skipped
};

struct EvalOptions {
  PipelineConfig pipeline{};
  bool timing = true;  ///< wall-clock is the only non-deterministic field
  int audit_samples = 1000;
};

struct EvalReport {
  std::vector<SampleReport> samples;

  int evaluated() const;
  /// Means over evaluated samples with finite values.
  double mean_psnr_l() const;
  double mean_psnr_mu() const;
  double mean_psnr_l_base() const;
  double mean_psnr_mu_base() const;
};

/// Metrics are computed in base-exposure units against gt scaled by the base
/// exposure.
SampleReport evaluate_sample(const std::filesystem::path& sample_dir, const ModelSet& models,
                             const EvalOptions& options = {});
EvalReport evaluate(const std::filesystem::path& dataset_dir, const ModelSet& models,
                    const EvalOptions& options = {});

/// One JSON object per line; infinite PSNR is written as the string "inf".
std::string to_jsonl(const EvalReport& report);
/// Human-readable table with 2-decimal PSNR.
std::string to_table(const EvalReport& report);

}  // namespace lhdr
