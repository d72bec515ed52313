#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lhdr/auto_exposure.hpp"
#include "lhdr/burst_sim.hpp"
#include "lhdr/dataset.hpp"
#include "lhdr/errors.hpp"
#include "lhdr/evaluate.hpp"
#include "lhdr/models.hpp"
#include "lhdr/parallel.hpp"
#include "lhdr/pfm.hpp"
#include "lhdr/pipeline.hpp"
#include "lhdr/tinycnn.hpp"

namespace lhdr::cli {

namespace fs = std::filesystem;

namespace {

using Pair = std::pair<double, double>;

Range to_range(const Pair& p) { return {p.first, p.second}; }
Pair to_pair(const Range& r) { return {r.lo, r.hi}; }

std::string format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw IoError("no such file: " + p.string());
}

void require_dir(const fs::path& p) {
  if (!fs::is_directory(p)) throw IoError("no such directory: " + p.string());
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::vector<std::string> sources;
  std::optional<std::string> procedural;
  std::string out;
  std::optional<std::uint64_t> seed;
  int samples = 1;
  SimConfig cfg;
  Pair ns_range, no_range, powerlaw_range, clip_fraction_range, fg_motion_range,
      polygon_radius_frac;
};

void add_simulate(CLI::App& app, SimulateArgs& a) {
  a.ns_range = to_pair(a.cfg.ns_range);
  a.no_range = to_pair(a.cfg.no_range);
  a.powerlaw_range = to_pair(a.cfg.powerlaw_range);
  a.clip_fraction_range = to_pair(a.cfg.clip_fraction_range);
  a.fg_motion_range = to_pair(a.cfg.fg_motion_range);
  a.polygon_radius_frac = to_pair(a.cfg.polygon_radius_frac);

  auto* sub = app.add_subcommand("simulate", "Generate synthetic bracketed bursts");
  auto* src = sub->add_option("--source", a.sources, "Linear HDR source image(s), PFM");
  auto* proc = sub->add_option("--procedural", a.procedural,
                               "Use generated scenes of size WxH instead of --source");
  src->excludes(proc);
  sub->add_option("--out", a.out, "Dataset directory")->required();
  sub->add_option("--seed", a.seed, "Root seed (required)")->required();
  sub->add_option("--samples", a.samples, "Number of bursts")->check(CLI::PositiveNumber);

  SimConfig& c = a.cfg;
  sub->add_option("--n_frames", c.n_frames, "Frames per burst")->capture_default_str();
  sub->add_option("--exposure_step_ev", c.exposure_step_ev, "Stops between frames, one value picked per burst")->capture_default_str();
  sub->add_option("--ns_range", a.ns_range, "Shot-noise slope range");
  sub->add_option("--no_range", a.no_range, "Read-noise variance range");
  sub->add_option("--shift_p", c.shift_mixture.p, "Probability of large hand-shake")->capture_default_str();
  sub->add_option("--shift_m_s", c.shift_mixture.m_s, "Small hand-shake scale, px")->capture_default_str();
  sub->add_option("--shift_m_l", c.shift_mixture.m_l, "Large hand-shake scale, px")->capture_default_str();
  sub->add_option("--blur_prob", c.blur_prob, "Per-frame motion blur probability")->capture_default_str();
  sub->add_option("--bg_blur_max", c.bg_blur_max, "Max background blur radius, px")->capture_default_str();
  sub->add_option("--fg_blur_max", c.fg_blur_max, "Max foreground blur radius, px")->capture_default_str();
  sub->add_option("--unmatchable_shift_px", c.unmatchable_shift_px, "Shifts beyond this mark a frame unmatchable")->capture_default_str();
  sub->add_option("--powerlaw_range", a.powerlaw_range, "Source tone power-law exponent range");
  sub->add_option("--clip_fraction_range", a.clip_fraction_range, "Clipped share of the longest frame, range");
  sub->add_option("--fg_prob", c.fg_prob, "Probability of a moving foreground polygon")->capture_default_str();
  sub->add_option("--fg_motion_range", a.fg_motion_range, "Foreground motion magnitude range, px");
  sub->add_option("--polygon_min_vertices", c.polygon_min_vertices, "Min foreground polygon vertices")->capture_default_str();
  sub->add_option("--polygon_max_vertices", c.polygon_max_vertices, "Max foreground polygon vertices")->capture_default_str();
  sub->add_option("--polygon_radius_frac", a.polygon_radius_frac, "Polygon radius range, fraction of image height");
  sub->add_option("--bit_depth", c.bit_depth, "Sensor quantization bits, 0 disables")->capture_default_str();
  sub->add_flag("--integer_shifts", c.integer_shifts, "Round all motion to whole pixels");
  sub->add_flag("--zero_noise", c.zero_noise, "Disable shot and read noise");
}

std::pair<int, int> parse_size(const std::string& s) {
  int w = 0, h = 0;
  char x = 0;
  std::istringstream is(s);
  if (!(is >> w >> x >> h) || (x != 'x' && x != 'X') || w <= 0 || h <= 0) {
    throw ParameterError("--procedural expects WxH, got '" + s + "'");
  }
  return {w, h};
}

int cmd_simulate(SimulateArgs& a, std::ostream& out) {
  a.cfg.ns_range = to_range(a.ns_range);
  a.cfg.no_range = to_range(a.no_range);
  a.cfg.powerlaw_range = to_range(a.powerlaw_range);
  a.cfg.clip_fraction_range = to_range(a.clip_fraction_range);
  a.cfg.fg_motion_range = to_range(a.fg_motion_range);
  a.cfg.polygon_radius_frac = to_range(a.polygon_radius_frac);
  a.cfg.validate();
  if (a.sources.empty() && !a.procedural) {
    throw ParameterError("simulate needs --source or --procedural");
  }
  std::vector<LinearImage> sources;
  for (const auto& s : a.sources) {
    require_file(s);
    sources.emplace_back(read_pfm(s), 1.0);
  }
  std::pair<int, int> size{0, 0};
  if (a.procedural) size = parse_size(*a.procedural);

  fs::create_directories(a.out);
  out << sim_config_json(a.cfg) << "\n";
  for (int i = 0; i < a.samples; ++i) {
    const std::uint64_t seed = derive_seed(*a.seed, static_cast<std::uint64_t>(i));
    const LinearImage scene = sources.empty()
                                  ? make_procedural_scene(size.first, size.second, seed)
                                  : sources[static_cast<std::size_t>(i) % sources.size()];
    const BurstSample sample = simulate_burst(scene, a.cfg, seed);
    char id[32];
    std::snprintf(id, sizeof id, "sample_%04d", i);
    write_burst_sample(fs::path(a.out) / id, id, sample, a.cfg);
    out << id << ": exposures";
    for (double e : sample.exposures()) out << " " << format("%.6g", e);
    out << "\n";
  }
  return kOk;
}

// ---- merge ------------------------------------------------------------------

struct MergeArgs {
  std::vector<std::string> frames;
  std::vector<double> exposures;
  std::string weights;
  std::string out;
  std::optional<std::string> trace;
  std::optional<std::string> heatmaps;
  AlignConfig align;
  double gamma = kGamma;
};

void add_merge(CLI::App& app, MergeArgs& a) {
  auto* sub = app.add_subcommand("merge", "Align and merge a bracketed burst");
  sub->add_option("--frames", a.frames, "Frames ordered short to long (PFM + .meta)")
      ->required()
      ->expected(2, 64);
  sub->add_option("--exposures", a.exposures, "Exposure scales overriding the sidecars");
  sub->add_option("--weights", a.weights, "Weight directory (coarse/fine/merge .lhdrw)")
      ->required();
  sub->add_option("--out", a.out, "Output HDR estimate, PFM")->required();
  sub->add_option("--trace", a.trace, "Per-iteration trace, JSON");
  sub->add_option("--heatmaps", a.heatmaps, "Directory for per-iteration w_alt maps");
  sub->add_option("--d", a.align.d, "Coarse downsampling factor")->capture_default_str();
  sub->add_option("--m_c", a.align.m_c, "Coarse shift bound, coarse pixels")->capture_default_str();
  sub->add_option("--m_f", a.align.m_f, "Fine residual bound, pixels")->capture_default_str();
  sub->add_option("--gamma", a.gamma, "Gamma of the merge luma feature")->capture_default_str();
}

int cmd_merge(const MergeArgs& a, std::ostream& out) {
  for (const auto& f : a.frames) require_file(f);
  require_dir(a.weights);
  if (!a.exposures.empty() && a.exposures.size() != a.frames.size()) {
    throw ParameterError("--exposures must list one value per frame");
  }
  const ModelSet models = load_model_set(a.weights);
  std::vector<LinearImage> frames;
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    LinearImage f = read_frame(a.frames[i]);
    if (!a.exposures.empty()) f.set_exposure_scale(a.exposures[i]);
    frames.push_back(std::move(f));
  }
  PipelineConfig cfg;
  cfg.align = a.align;
  cfg.gamma = a.gamma;
  cfg.keep_fields = a.heatmaps.has_value();
  const MergeTrace trace = iterative_merge(frames, models, cfg);

  write_pfm(a.out, trace.estimate);
  FrameMetadata meta;
  meta.exposure_scale = trace.estimate.exposure_scale();
  write_frame_metadata(sidecar_path(a.out), meta);

  nlohmann::ordered_json iterations = nlohmann::ordered_json::array();
  for (const auto& rec : trace.iterations) {
    out << "frame " << rec.frame_index << ": ratio " << format("%.4g", rec.exposure_ratio)
        << ", shift mean " << format("%.3f", rec.shift_mean) << " max "
        << format("%.3f", rec.shift_max) << ", mean w_alt " << format("%.4f", rec.mean_w_alt)
        << ", coverage " << format("%.4f", rec.validity_coverage) << "\n";
    iterations.push_back({{"frame_index", rec.frame_index},
                          {"exposure_ratio", rec.exposure_ratio},
                          {"shift_mean", rec.shift_mean},
                          {"shift_max", rec.shift_max},
                          {"mean_w_alt", rec.mean_w_alt},
                          {"validity_coverage", rec.validity_coverage}});
    if (a.heatmaps) {
      fs::create_directories(*a.heatmaps);
      write_pfm(fs::path(*a.heatmaps) / ("w_alt_" + std::to_string(rec.frame_index) + ".pfm"),
                rec.weights.w_alt);
    }
  }
  if (a.trace) {
    nlohmann::ordered_json doc = {{"frames", a.frames},
                                  {"base_exposure", trace.estimate.exposure_scale()},
                                  {"iterations", iterations}};
    write_file_atomic(*a.trace, doc.dump(2) + "\n");
  }
  out << "wrote " << a.out << "\n";
  return kOk;
}

// ---- plan-exposure ----------------------------------------------------------

struct PlanArgs {
  std::string frame;
  double a = 0.0;
  double b = 0.0;
  double lambda = kDefaultAeLambda;
  double duration = 1.0 / 60.0;
  double iso = 100.0;
  BracketOptions options;
};

void add_plan(CLI::App& app, PlanArgs& a) {
  auto* sub = app.add_subcommand("plan-exposure", "Plan a bracket from a viewfinder frame");
  sub->add_option("--frame", a.frame, "Viewfinder frame, PFM")->required();
  sub->add_option("--a", a.a, "Shot-noise slope")->required();
  sub->add_option("--b", a.b, "Read-noise floor")->required();
  sub->add_option("--lambda", a.lambda, "Weight of the shadow-SNR term")->capture_default_str();
  sub->add_option("--duration", a.duration, "Viewfinder duration, s")->capture_default_str();
  sub->add_option("--iso", a.iso, "Viewfinder ISO")->capture_default_str();
  sub->add_option("--n", a.options.n, "Frames in the bracket")->capture_default_str();
  sub->add_option("--span_ev", a.options.span_ev, "Bracket span, stops")->capture_default_str();
  sub->add_option("--min_shadow_snr_db", a.options.min_shadow_snr_db, "Shadow SNR floor of the shortest frame, dB")->capture_default_str();
  sub->add_option("--max_raise_ev", a.options.max_raise_ev, "Max bracket raise to meet the floor, stops")->capture_default_str();
}

int cmd_plan(const PlanArgs& a, std::ostream& out, std::ostream& err) {
  require_file(a.frame);
  const Raster frame = read_pfm(a.frame);
  const NoiseModel noise{a.a, a.b};
  noise.validate(true);
  ExposureSettings current;
  current.duration_s = a.duration;
  current.iso = a.iso;
  current.base_iso = a.options.limits.base_iso;
  const ExposureSettings reference = select_reference_exposure(frame, current, noise, a.lambda,
                                                               a.options.limits);
  BracketOptions options = a.options;
  const Raster metering = metering_intensity(frame);
  options.shadow_level =
      percentile(metering.data(), kShadowPercentile) * reference.total() / current.total();
  const BracketPlan plan = plan_bracket(reference, noise, options);
  if (!plan.warning.empty()) err << "warning: " << plan.warning << "\n";
  for (std::size_t i = 0; i < plan.settings.size(); ++i) {
    char line[128];
    std::snprintf(line, sizeof line, "%+.2f %.6g %.0f\n", plan.ev_offsets[i],
                  plan.settings[i].duration_s, plan.settings[i].iso);
    out << line;
  }
  return kOk;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string dataset;
  std::string weights;
  std::optional<std::string> out;
  bool no_timing = false;
  int audit_samples = 1000;
};

void add_eval(CLI::App& app, EvalArgs& a) {
  auto* sub = app.add_subcommand("eval", "Evaluate a weight set on a simulated dataset");
  sub->add_option("--dataset", a.dataset, "Dataset directory")->required();
  sub->add_option("--weights", a.weights, "Weight directory")->required();
  sub->add_option("--out", a.out, "Report, one JSON record per line");
  sub->add_flag("--no-timing", a.no_timing, "Omit wall-clock (deterministic report)");
  sub->add_option("--audit_samples", a.audit_samples)->capture_default_str();
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  require_dir(a.dataset);
  require_dir(a.weights);
  const ModelSet models = load_model_set(a.weights);
  EvalOptions options;
  options.timing = !a.no_timing;
  options.audit_samples = a.audit_samples;
  const EvalReport report = evaluate(a.dataset, models, options);
  if (a.out) write_file_atomic(*a.out, to_jsonl(report));
  out << to_table(report);
  return kOk;
}

// ---- weights-inspect --------------------------------------------------------

void inspect_bundle(const std::string& label, const nn::WeightBundle& b, std::ostream& out) {
  char line[160];
  out << label << "\n";
  std::snprintf(line, sizeof line, "  %-5s %-4s %-4s %-4s %-6s %8s\n", "layer", "k", "in", "out",
                "act", "params");
  out << line;
  for (std::size_t i = 0; i < b.layers.size(); ++i) {
    const auto& l = b.layers[i].spec;
    std::snprintf(line, sizeof line, "  %-5zu %-4d %-4d %-4d %-6s %8zu\n", i, l.kernel,
                  l.in_channels, l.out_channels, nn::to_string(l.activation), l.param_count());
    out << line;
  }
  std::snprintf(line, sizeof line, "  params %zu, architecture hash %016llx\n", b.param_count(),
                static_cast<unsigned long long>(b.architecture_hash()));
  out << line;
}

int cmd_inspect(const std::string& path, std::ostream& out, std::ostream& err) {
  std::size_t total = 0;
  if (fs::is_directory(path)) {
    const ModelSet models = load_model_set(path);
    inspect_bundle(kCoarseWeightsFile, models.coarse.weights(), out);
    inspect_bundle(kFineWeightsFile, models.fine.weights(), out);
    inspect_bundle(kMergeWeightsFile, models.merge.weights(), out);
    total = models.param_count();
  } else {
    require_file(path);
    const nn::WeightBundle b = nn::load_weights(path);
    inspect_bundle(fs::path(path).filename().string(), b, out);
    total = b.param_count();
  }
  out << "total params " << total << " (budget " << nn::kParamBudget << ")\n";
  if (total > nn::kParamBudget) {
    err << "error: parameter count exceeds the budget\n";
    return kData;
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bracketed-burst HDR align and merge"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: LHDR_THREADS or 1)")
      ->check(CLI::PositiveNumber);

  SimulateArgs sim;
  MergeArgs merge;
  PlanArgs plan;
  EvalArgs eval;
  std::string inspect_path;
  add_simulate(app, sim);
  add_merge(app, merge);
  add_plan(app, plan);
  add_eval(app, eval);
  app.add_subcommand("weights-inspect", "Print a weight file or directory summary")
      ->add_option("path", inspect_path, "Weight file or directory")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream msg, emsg;
    const int code = app.exit(e, msg, emsg);
    out << msg.str();
    err << emsg.str();
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (threads > 0) set_max_threads(threads);
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "simulate") return cmd_simulate(sim, out);
    if (name == "merge") return cmd_merge(merge, out);
    if (name == "plan-exposure") return cmd_plan(plan, out, err);
    if (name == "eval") return cmd_eval(eval, out);
    return cmd_inspect(inspect_path, out, err);
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
}

}  // namespace lhdr::cli
