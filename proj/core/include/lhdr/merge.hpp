#pragma once

#include "lhdr/image.hpp"
#include "lhdr/imaging.hpp"
#include "lhdr/tinycnn.hpp"

namespace lhdr {

/// Per-pixel convex pair. w_base + w_alt = 1, both >= 0, w_alt = 0 where the
/// warp is invalid.
struct MergeWeights {
  Raster w_base;
  Raster w_alt;
};

/// Concat(I, L(Gamma(I))): raw linear RGB plus gamma-space luma.
nn::Tensor merge_feature(const LinearImage& img, double gamma = kGamma);

/// Softmax over two logit channels, gate w_alt by validity, renormalize.
MergeWeights weights_from_logits(const nn::Tensor& logits, const ValidityMask& validity);

MergeWeights merge_weights(const nn::Tensor& psi_base, const nn::Tensor& psi_alt,
                           const ValidityMask& validity, const nn::Network& net);

/// w_base * base + w_alt * alt, per pixel and channel.
LinearImage fuse(const LinearImage& base, const LinearImage& alt_warped, const MergeWeights& w);

}  // namespace lhdr
