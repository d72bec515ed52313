#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "lhdr/image.hpp"

namespace lhdr {

/// Reads a portable float map ("PF" = 3 channels, "Pf" = 1 channel). Both
/// byte orders are accepted; rows are stored bottom-to-top on disk.
Raster read_pfm(const std::filesystem::path& path);

/// Writes little-endian PFM (scale -1.0). The file is written to a temporary
/// name and renamed into place.
void write_pfm(const std::filesystem::path& path, const Raster& img);

/// Per-frame sidecar ("key=value" lines).
struct FrameMetadata {
  double exposure_scale = 1.0;
  double iso = 100.0;
  double duration_s = 0.0;
};

std::filesystem::path sidecar_path(const std::filesystem::path& image_path);
FrameMetadata read_frame_metadata(const std::filesystem::path& path);
void write_frame_metadata(const std::filesystem::path& path, const FrameMetadata& meta);

/// Image plus its sidecar (exposure_scale comes from the sidecar when present).
LinearImage read_frame(const std::filesystem::path& pfm_path);
void write_frame(const std::filesystem::path& pfm_path, const LinearImage& img,
                 const FrameMetadata& meta);

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

/// Writes `contents` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace lhdr
