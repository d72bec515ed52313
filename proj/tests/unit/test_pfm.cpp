#include <cstring>
#include <fstream>

#include "doctest.h"
#include "lhdr/errors.hpp"
#include "lhdr/pfm.hpp"
#include "support/oracles.hpp"

using namespace lhdr;
namespace fs = std::filesystem;

namespace {

void write_raw(const fs::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

std::string be32(float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  return {static_cast<char>(u >> 24), static_cast<char>(u >> 16), static_cast<char>(u >> 8),
          static_cast<char>(u)};
}

}  // namespace

TEST_CASE("PFM round-trips 1 and 3 channel rasters bit-exactly") {
  const auto dir = test::scratch_dir("pfm_rt");
  const Raster rgb = test::random_raster(7, 5, 3, 1, -2.0f, 1e4f);
  write_pfm(dir / "rgb.pfm", rgb);
  CHECK(read_pfm(dir / "rgb.pfm") == rgb);
  const Raster mono = test::random_raster(3, 9, 1, 2);
  write_pfm(dir / "mono.pfm", mono);
  CHECK(read_pfm(dir / "mono.pfm") == mono);
  CHECK_THROWS_AS(write_pfm(dir / "x.pfm", Raster(2, 2, 2)), ParameterError);
}

TEST_CASE("PFM written little-endian with rows bottom-to-top") {
  const auto dir = test::scratch_dir("pfm_layout");
  Raster r(1, 2, 1, std::vector<float>{1.0f, 2.0f});  // top row 1, bottom row 2
  write_pfm(dir / "a.pfm", r);
  std::ifstream in(dir / "a.pfm", std::ios::binary);
  const std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  REQUIRE(s.substr(0, 12) == "Pf\n1 2\n-1.0\n");
  float first;
  std::memcpy(&first, s.data() + 12, 4);
  CHECK(first == 2.0f);
}

TEST_CASE("big-endian PFM from another writer") {
  const auto dir = test::scratch_dir("pfm_be");
  write_raw(dir / "be.pfm", "Pf\n2 1\n1.0\n" + be32(0.5f) + be32(-3.25f));
  const Raster r = read_pfm(dir / "be.pfm");
  CHECK(r.values() == std::vector<float>{0.5f, -3.25f});
}

TEST_CASE("malformed PFM files are format errors") {
  const auto dir = test::scratch_dir("pfm_bad");
  write_raw(dir / "magic.pfm", "P6\n1 1\n-1.0\n0000");
  CHECK_THROWS_AS(read_pfm(dir / "magic.pfm"), FormatError);
  write_raw(dir / "trunc.pfm", "PF\n2 2\n-1.0\n0000");
  CHECK_THROWS_AS(read_pfm(dir / "trunc.pfm"), FormatError);
  write_raw(dir / "header.pfm", "PF\nabc 2\n-1.0\n");
  CHECK_THROWS_AS(read_pfm(dir / "header.pfm"), FormatError);
  write_raw(dir / "zero.pfm", "Pf\n0 2\n-1.0\n");
  CHECK_THROWS_AS(read_pfm(dir / "zero.pfm"), FormatError);
  CHECK_THROWS_AS(read_pfm(dir / "missing.pfm"), IoError);
}

TEST_CASE("frame sidecars carry the exposure") {
  const auto dir = test::scratch_dir("pfm_meta");
  const LinearImage img(test::random_raster(3, 3, 3, 4), 8.0);
  write_frame(dir / "f.pfm", img, {8.0, 400.0, 1.0 / 30.0});
  CHECK(sidecar_path(dir / "f.pfm") == dir / "f.meta");
  const LinearImage back = read_frame(dir / "f.pfm");
  CHECK(back == img);
  const FrameMetadata meta = read_frame_metadata(dir / "f.meta");
  CHECK(meta.iso == 400.0);
  CHECK(meta.duration_s == 1.0 / 30.0);

  write_pfm(dir / "bare.pfm", img);
  CHECK(read_frame(dir / "bare.pfm").exposure_scale() == 1.0);

  write_raw(dir / "bad.meta", "exposure_scale=-1\n");
  CHECK_THROWS_AS(read_frame_metadata(dir / "bad.meta"), FormatError);
  write_raw(dir / "bad2.meta", "exposure_scale=abc\n");
  CHECK_THROWS_AS(read_frame_metadata(dir / "bad2.meta"), FormatError);
  write_raw(dir / "bad3.meta", "no equals sign\n");
  CHECK_THROWS_AS(read_frame_metadata(dir / "bad3.meta"), FormatError);
}

TEST_CASE("atomic writes leave no temporary files behind") {
  const auto dir = test::scratch_dir("atomic");
  write_file_atomic(dir / "x.txt", "one");
  write_file_atomic(dir / "x.txt", "two");
  std::ifstream in(dir / "x.txt");
  std::string s;
  in >> s;
  CHECK(s == "two");
  CHECK(std::distance(fs::directory_iterator(dir), fs::directory_iterator()) == 1);
  CHECK_THROWS_AS(write_file_atomic(dir / "no" / "such" / "x.txt", "z"), IoError);
}
