#include "lhdr/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "lhdr/errors.hpp"
#include "lhdr/pfm.hpp"

namespace lhdr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json range_json(Range r) { return json::array({r.lo, r.hi}); }

json config_to_json(const SimConfig& cfg) {
  return {
      {"n_frames", cfg.n_frames},
      {"exposure_step_ev", cfg.exposure_step_ev},
      {"ns_range", range_json(cfg.ns_range)},
      {"no_range", range_json(cfg.no_range)},
      {"shift_p", cfg.shift_mixture.p},
      {"shift_m_s", cfg.shift_mixture.m_s},
      {"shift_m_l", cfg.shift_mixture.m_l},
      {"blur_prob", cfg.blur_prob},
      {"bg_blur_max", cfg.bg_blur_max},
      {"fg_blur_max", cfg.fg_blur_max},
      {"unmatchable_shift_px", cfg.unmatchable_shift_px},
      {"powerlaw_range", range_json(cfg.powerlaw_range)},
      {"clip_fraction_range", range_json(cfg.clip_fraction_range)},
      {"fg_prob", cfg.fg_prob},
      {"fg_motion_range", range_json(cfg.fg_motion_range)},
      {"polygon_min_vertices", cfg.polygon_min_vertices},
      {"polygon_max_vertices", cfg.polygon_max_vertices},
      {"polygon_radius_frac", range_json(cfg.polygon_radius_frac)},
      {"bit_depth", cfg.bit_depth},
      {"integer_shifts", cfg.integer_shifts},
      {"zero_noise", cfg.zero_noise},
  };
}

std::string frame_name(const char* stem, std::size_t i) {
  return std::string(stem) + "_" + std::to_string(i) + ".pfm";
}

}  // namespace

std::string sim_config_json(const SimConfig& cfg) { return config_to_json(cfg).dump(2); }

void write_burst_sample(const fs::path& dir, const std::string& sample_id,
                        const BurstSample& sample, const SimConfig& cfg) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  const std::vector<double> exposures = sample.exposures();
  for (std::size_t i = 0; i < sample.frames.size(); ++i) {
    FrameMetadata meta;
    meta.exposure_scale = exposures[i];
    meta.iso = 100.0;
    meta.duration_s = exposures[i] * kSimulatedUnitDuration;
    write_frame(dir / frame_name("frames", i), sample.frames[i], meta);
    write_pfm(dir / frame_name("noshift", i), sample.noshift_targets[i]);
    write_pfm(dir / frame_name("mask", i), sample.validity_masks[i]);
  }
  write_pfm(dir / "gt.pfm", sample.gt_hdr);
  write_pfm(dir / "fg_mask.pfm", sample.fg_mask);

  json shifts = json::array();
  for (const Shift& s : sample.gt_shifts) shifts.push_back({s.dx, s.dy});
  json manifest = {
      {"sample_id", sample_id},
      {"n_frames", sample.frames.size()},
      {"base_index", sample.base_index},
      {"width", sample.gt_hdr.width()},
      {"height", sample.gt_hdr.height()},
      {"exposures", exposures},
      {"gt_shifts", shifts},
      {"blurred", sample.blurred},
      {"unmatchable", sample.unmatchable},
      {"noise", {{"a", sample.noise.a}, {"b", sample.noise.b}}},
      {"exposure_step_ev", sample.exposure_step_ev},
      {"power_exponent", sample.power_exponent},
      {"seed", sample.seed},
      {"config", config_to_json(cfg)},
  };
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

StoredSample read_burst_sample(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }

  StoredSample out;
  try {
    out.sample_id = manifest.value("sample_id", dir.filename().string());
    const std::size_t n = manifest.at("n_frames").get<std::size_t>();
    const auto exposures = manifest.at("exposures").get<std::vector<double>>();
    if (n < 1 || exposures.size() != n) throw FormatError("manifest exposures do not match n_frames");
    out.base_index = manifest.value("base_index", 0);
    for (const auto& s : manifest.value("gt_shifts", json::array())) {
      out.gt_shifts.push_back({s.at(0).get<float>(), s.at(1).get<float>()});
    }
    for (std::size_t i = 0; i < n; ++i) {
      LinearImage frame = read_frame(dir / frame_name("frames", i));
      frame.set_exposure_scale(exposures[i]);
      out.frames.push_back(std::move(frame));
      out.noshift_targets.emplace_back(read_pfm(dir / frame_name("noshift", i)), exposures[i]);
      out.masks.emplace_back(read_pfm(dir / frame_name("mask", i)));
    }
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  out.gt = LinearImage(read_pfm(dir / "gt.pfm"), 1.0);
  return out;
}

std::vector<fs::path> list_samples(const fs::path& dataset_dir) {
  if (!fs::is_directory(dataset_dir)) throw IoError("not a directory: " + dataset_dir.string());
  std::vector<fs::path> dirs;
  if (fs::exists(dataset_dir / "manifest.json")) dirs.push_back(dataset_dir);
  for (const auto& entry : fs::directory_iterator(dataset_dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

}  // namespace lhdr
