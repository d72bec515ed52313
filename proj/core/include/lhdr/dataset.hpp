#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lhdr/burst_sim.hpp"
#include "lhdr/image.hpp"

namespace lhdr {

/// On-disk burst sample. One directory holding frames_{i}.pfm,
/// noshift_{i}.pfm, mask_{i}.pfm (each with a .meta sidecar for frames),
/// gt.pfm, fg_mask.pfm and manifest.json.
struct StoredSample {
  std::string sample_id;
  std::vector<LinearImage> frames;
  std::vector<LinearImage> noshift_targets;
  std::vector<ValidityMask> masks;
  LinearImage gt;
  std::vector<Shift> gt_shifts;
  int base_index = 0;
};

/// Nominal metadata for simulated frames: iso 100, duration = exposure / 60 s.
inline constexpr double kSimulatedUnitDuration = 1.0 / 60.0;

/// Pretty-printed JSON echo of every simulation setting.
std::string sim_config_json(const SimConfig& cfg);

void write_burst_sample(const std::filesystem::path& dir, const std::string& sample_id,
                        const BurstSample& sample, const SimConfig& cfg);
StoredSample read_burst_sample(const std::filesystem::path& dir);

/// Sample directories (those containing manifest.json), sorted by name.
std::vector<std::filesystem::path> list_samples(const std::filesystem::path& dataset_dir);

}  // namespace lhdr
