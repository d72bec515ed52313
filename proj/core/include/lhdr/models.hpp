#pragma once

#include <filesystem>

#include "lhdr/tinycnn.hpp"

namespace lhdr {

/// The three networks of one align-and-merge block. The same set is reused
/// at every iteration.
struct ModelSet {
  nn::Network coarse;
  nn::Network fine;
  nn::Network merge;

  std::size_t param_count() const;
};

inline constexpr const char* kCoarseWeightsFile = "coarse.lhdrw";
inline constexpr const char* kFineWeightsFile = "fine.lhdrw";
inline constexpr const char* kMergeWeightsFile = "merge.lhdrw";

/// Loads coarse.lhdrw, fine.lhdrw and merge.lhdrw from `dir` and checks them
/// against the default architectures.
ModelSet load_model_set(const std::filesystem::path& dir);
void save_model_set(const ModelSet& models, const std::filesystem::path& dir);

/// All-zero networks: zero shift, equal merge logits.
ModelSet zero_model_set();

/// Random weights for every network (adversarial testing).
ModelSet random_model_set(std::uint64_t seed, float scale = 0.5f);

/// Zero-shift alignment with a hand-built, clip-aware merge network: it
/// prefers the alternate frame unless the alternate reads darker than the
/// base by more than `tolerance` in any channel, which after exposure
/// normalization marks a clipped alternate.
ModelSet clip_aware_model_set(float tolerance = 2.0e-4f);
nn::WeightBundle clip_aware_merge_weights(float tolerance = 2.0e-4f);

}  // namespace lhdr
