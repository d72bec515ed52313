#include "lhdr/pfm.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "lhdr/errors.hpp"

namespace lhdr {

namespace fs = std::filesystem;

namespace {

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

// Reads one whitespace-delimited header token starting at `pos`.
std::string next_token(const std::string& buf, std::size_t& pos) {
  while (pos < buf.size() && std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
  std::size_t start = pos;
  while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
  return buf.substr(start, pos - start);
}

}  // namespace

Raster read_pfm(const fs::path& path) {
  const std::string buf = read_all(path);
  std::size_t pos = 0;
  const std::string magic = next_token(buf, pos);
  int channels = 0;
  if (magic == "PF") {
    channels = 3;
  } else if (magic == "Pf") {
    channels = 1;
  } else {
    throw FormatError(path.string() + ": not a PFM file");
  }
  int width = 0;
  int height = 0;
  double scale = 0.0;
  try {
    width = std::stoi(next_token(buf, pos));
    height = std::stoi(next_token(buf, pos));
    scale = std::stod(next_token(buf, pos));
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": malformed PFM header");
  }
  if (width <= 0 || height <= 0 || scale == 0.0) {
    throw FormatError(path.string() + ": invalid PFM dimensions or scale");
  }
  ++pos;  // single whitespace byte after the scale
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  if (buf.size() < pos + count * 4) throw FormatError(path.string() + ": truncated PFM data");

  const bool file_little = scale < 0.0;
  const bool swap = file_little != (std::endian::native == std::endian::little);
  std::vector<float> data(count);
  const std::size_t row = static_cast<std::size_t>(width) * channels;
  for (int y = 0; y < height; ++y) {
    // Rows run bottom-to-top on disk.
    const char* src = buf.data() + pos + static_cast<std::size_t>(height - 1 - y) * row * 4;
    for (std::size_t i = 0; i < row; ++i) {
      std::uint32_t bits;
      std::memcpy(&bits, src + i * 4, 4);
      if (swap) bits = byteswap32(bits);
      data[static_cast<std::size_t>(y) * row + i] = std::bit_cast<float>(bits);
    }
  }
  return Raster(width, height, channels, std::move(data));
}

void write_pfm(const fs::path& path, const Raster& img) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw ParameterError("PFM supports 1 or 3 channels, got " + std::to_string(img.channels()));
  }
  std::string out = (img.channels() == 3 ? "PF\n" : "Pf\n") + std::to_string(img.width()) + " " +
                    std::to_string(img.height()) + "\n-1.0\n";
  const std::size_t header = out.size();
  const std::size_t row = static_cast<std::size_t>(img.width()) * img.channels();
  out.resize(header + row * img.height() * 4);
  for (int y = 0; y < img.height(); ++y) {
    char* dst = out.data() + header + static_cast<std::size_t>(img.height() - 1 - y) * row * 4;
    for (std::size_t i = 0; i < row; ++i) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(img.values()[y * row + i]);
      if constexpr (std::endian::native == std::endian::big) bits = byteswap32(bits);
      std::memcpy(dst + i * 4, &bits, 4);
    }
  }
  write_file_atomic(path, out);
}

fs::path sidecar_path(const fs::path& image_path) {
  fs::path p = image_path;
  p.replace_extension(".meta");
  return p;
}

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(path.string() + ": expected key=value");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

FrameMetadata read_frame_metadata(const fs::path& path) {
  const auto kv = read_key_values(path);
  FrameMetadata meta;
  auto get = [&](const char* key, double& dst) {
    if (auto it = kv.find(key); it != kv.end()) {
      try {
        dst = std::stod(it->second);
      } catch (const std::exception&) {
        throw FormatError(path.string() + ": bad value for " + key);
      }
    }
  };
  get("exposure_scale", meta.exposure_scale);
  get("iso", meta.iso);
  get("duration_s", meta.duration_s);
  if (!(meta.exposure_scale > 0.0)) throw FormatError(path.string() + ": exposure_scale must be > 0");
  return meta;
}

void write_frame_metadata(const fs::path& path, const FrameMetadata& meta) {
  std::ostringstream ss;
  ss << std::setprecision(17);
  ss << "exposure_scale=" << meta.exposure_scale << "\n";
  ss << "iso=" << meta.iso << "\n";
  ss << "duration_s=" << meta.duration_s << "\n";
  write_file_atomic(path, ss.str());
}

LinearImage read_frame(const fs::path& pfm_path) {
  Raster r = read_pfm(pfm_path);
  const fs::path meta = sidecar_path(pfm_path);
  double e = 1.0;
  if (fs::exists(meta)) e = read_frame_metadata(meta).exposure_scale;
  return LinearImage(std::move(r), e);
}

void write_frame(const fs::path& pfm_path, const LinearImage& img, const FrameMetadata& meta) {
  write_pfm(pfm_path, img);
  write_frame_metadata(sidecar_path(pfm_path), meta);
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

}  // namespace lhdr
