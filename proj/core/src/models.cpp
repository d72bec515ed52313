#include "lhdr/models.hpp"

#include "lhdr/errors.hpp"

namespace lhdr {

namespace fs = std::filesystem;

std::size_t ModelSet::param_count() const {
  return coarse.spec().param_count() + fine.spec().param_count() + merge.spec().param_count();
}

ModelSet load_model_set(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("weights directory not found: " + dir.string());
  auto load = [&](const char* file, nn::NetworkSpec spec) {
    const fs::path path = dir / file;
    if (!fs::exists(path)) throw IoError("missing weight file " + path.string());
    try {
      return nn::Network(std::move(spec), nn::load_weights(path));
    } catch (const WeightMismatchError& e) {
      throw WeightMismatchError(path.string() + ": " + e.what());
    }
  };
  return {load(kCoarseWeightsFile, nn::NetworkSpec::coarse_align()),
          load(kFineWeightsFile, nn::NetworkSpec::fine_align()),
          load(kMergeWeightsFile, nn::NetworkSpec::merge())};
}

void save_model_set(const ModelSet& models, const fs::path& dir) {
  fs::create_directories(dir);
  nn::save_weights(models.coarse.weights(), dir / kCoarseWeightsFile);
  nn::save_weights(models.fine.weights(), dir / kFineWeightsFile);
  nn::save_weights(models.merge.weights(), dir / kMergeWeightsFile);
}

ModelSet zero_model_set() {
  auto make = [](nn::NetworkSpec spec) {
    auto w = nn::WeightBundle::zeros(spec);
    return nn::Network(std::move(spec), std::move(w));
  };
  return {make(nn::NetworkSpec::coarse_align()), make(nn::NetworkSpec::fine_align()),
          make(nn::NetworkSpec::merge())};
}

ModelSet random_model_set(std::uint64_t seed, float scale) {
  auto make = [&](nn::NetworkSpec spec, std::uint64_t salt) {
    auto w = nn::WeightBundle::random(spec, seed * 3 + salt, scale);
    return nn::Network(std::move(spec), std::move(w));
  };
  return {make(nn::NetworkSpec::coarse_align(), 0), make(nn::NetworkSpec::fine_align(), 1),
          make(nn::NetworkSpec::merge(), 2)};
}

nn::WeightBundle clip_aware_merge_weights(float tolerance) {
  const nn::NetworkSpec spec = nn::NetworkSpec::merge();
  nn::WeightBundle w = nn::WeightBundle::zeros(spec);
  constexpr float kSlope = 1.0e6f;   // per unit of darkening beyond tolerance
  constexpr float kPreferAlt = 20.0f;  // logit margin for the alternate frame
  const int k = spec.layers[0].kernel;
  const int center = (k / 2) * k + k / 2;

  // Layer 1: unit c = relu(slope * (base_c - alt_c - tolerance)), c in RGB.
  auto& l1 = w.layers[0];
  const int out1 = l1.spec.out_channels;
  const int in1 = l1.spec.in_channels;
  for (int c = 0; c < 3; ++c) {
    l1.kernel[(static_cast<std::size_t>(center) * in1 + c) * out1 + c] = kSlope;
    l1.kernel[(static_cast<std::size_t>(center) * in1 + 4 + c) * out1 + c] = -kSlope;
    l1.bias[c] = -kSlope * tolerance;
  }
  // Layer 2: unit 0 sums the three clipping detectors.
  auto& l2 = w.layers[1];
  const int out2 = l2.spec.out_channels;
  const int in2 = l2.spec.in_channels;
  for (int c = 0; c < 3; ++c) l2.kernel[(static_cast<std::size_t>(center) * in2 + c) * out2] = 1.0f;
  // Layer 3: logit_base = detector sum, logit_alt = constant preference.
  auto& l3 = w.layers[2];
  const int out3 = l3.spec.out_channels;
  l3.kernel[(static_cast<std::size_t>(center) * l3.spec.in_channels) * out3 + 0] = 1.0f;
  l3.bias[1] = kPreferAlt;
  return w;
}

ModelSet clip_aware_model_set(float tolerance) {
  ModelSet m = zero_model_set();
  m.merge = nn::Network(nn::NetworkSpec::merge(), clip_aware_merge_weights(tolerance));
  return m;
}

}  // namespace lhdr
