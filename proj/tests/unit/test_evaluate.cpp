#include <cmath>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "lhdr/dataset.hpp"
#include "lhdr/evaluate.hpp"
#include "support/oracles.hpp"

using namespace lhdr;
namespace fs = std::filesystem;

namespace {

fs::path make_dataset(const std::string& name, int samples) {
  const auto dir = test::scratch_dir(name);
  const SimConfig cfg;
  for (int i = 0; i < samples; ++i) {
    const auto seed = derive_seed(17, i);
    const std::string id = "sample_" + std::to_string(i);
    write_burst_sample(dir / id, id, simulate_burst(make_procedural_scene(32, 24, seed), cfg, seed),
                       cfg);
  }
  return dir;
}

}  // namespace

TEST_CASE("evaluating one sample fills every metric") {
  const auto dir = make_dataset("eval_one", 1);
  EvalOptions opt;
  opt.timing = false;
  const SampleReport r = evaluate_sample(dir / "sample_0", clip_aware_model_set(), opt);
  REQUIRE_FALSE(r.error);
  CHECK(r.sample_id == "sample_0");
  CHECK(r.convexity_ok);
  CHECK(r.ms_per_merge == 0.0);
  CHECK(r.l_pred >= 0.0);
  CHECK(r.l_warp >= 0.0);
  CHECK(r.l_var == 0.0);  // zero-shift networks

  const StoredSample s = read_burst_sample(dir / "sample_0");
  const Raster ref = scale(s.gt, static_cast<float>(s.frames[0].exposure_scale()));
  const Raster base = exposure_normalize(s.frames[0], s.frames[0].exposure_scale());
  CHECK(r.psnr_l_base == doctest::Approx(psnr(base, ref)));
  CHECK(r.psnr_mu_base == doctest::Approx(psnr(base, ref, PsnrDomain::mu_tonemapped)));

  opt.timing = true;
  CHECK(evaluate_sample(dir / "sample_0", clip_aware_model_set(), opt).ms_per_merge > 0.0);
}

TEST_CASE("broken samples are reported and skipped") {
  const auto dir = make_dataset("eval_broken", 2);
  fs::remove(dir / "sample_1" / "gt.pfm");
  EvalOptions opt;
  opt.timing = false;
  const EvalReport rep = evaluate(dir, zero_model_set(), opt);
  REQUIRE(rep.samples.size() == 2);
  CHECK(rep.evaluated() == 1);
  CHECK(rep.samples[1].error);
  CHECK(rep.mean_psnr_l() == doctest::Approx(rep.samples[0].psnr_l));

  const std::string jsonl = to_jsonl(rep);
  std::istringstream lines(jsonl);
  std::string line;
  std::vector<nlohmann::json> rows;
  while (std::getline(lines, line)) rows.push_back(nlohmann::json::parse(line));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0]["sample_id"] == "sample_0");
  CHECK(rows[0].contains("psnr_mu"));
  CHECK(rows[1].contains("error"));
  CHECK(to_table(rep).find("1 of 2 samples evaluated") != std::string::npos);
}

TEST_CASE("reports are deterministic without timing") {
  const auto dir = make_dataset("eval_det", 2);
  EvalOptions opt;
  opt.timing = false;
  const ModelSet m = random_model_set(3, 0.2f);
  CHECK(to_jsonl(evaluate(dir, m, opt)) == to_jsonl(evaluate(dir, m, opt)));
}

TEST_CASE("infinite PSNR is written as a string") {
  EvalReport rep;
  SampleReport s;
  s.sample_id = "x";
  s.psnr_l = std::numeric_limits<double>::infinity();
  s.l_var = std::nan("");
  rep.samples.push_back(s);
  const auto j = nlohmann::json::parse(to_jsonl(rep));
  CHECK(j["psnr_l"] == "inf");
  CHECK(j["l_var"].is_null());
  CHECK(to_table(rep).find("inf") != std::string::npos);
}

TEST_CASE("an empty dataset yields an empty report") {
  const auto dir = test::scratch_dir("eval_empty");
  const EvalReport rep = evaluate(dir, zero_model_set());
  CHECK(rep.samples.empty());
  CHECK(to_jsonl(rep).empty());
  CHECK(to_table(rep).find("0 of 0 samples evaluated") != std::string::npos);
}
