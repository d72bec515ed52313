#pragma once

#include "lhdr/image.hpp"
#include "lhdr/imaging.hpp"
#include "lhdr/models.hpp"
#include "lhdr/tinycnn.hpp"

namespace lhdr {

struct AlignConfig {
  int d = 4;           ///< coarse downsampling factor
  double m_c = 13.0;   ///< coarse bound, px at coarse resolution
  double m_f = 6.0;    ///< fine bound, px at full resolution
  double mu = kToneMu;

  double coarse_reach() const { return d * m_c; }
  double total_reach() const { return d * m_c + m_f; }
  void validate() const;
};

/// Concat(Norm(T_mu(I)), |grad L(Norm(T_mu(I)))|), 4 channels. Norm
/// standardizes the tone-mapped RGB jointly over all three channels.
nn::Tensor align_feature(const LinearImage& img, double mu = kToneMu);

/// Concat(phi_a, phi_b, phi_a - phi_b), 12 channels.
nn::Tensor build_align_input(const nn::Tensor& phi_a, const nn::Tensor& phi_b);

struct ShiftPrediction {
  ShiftField coarse;  ///< d * Up(m_c * tanh(g_coarse(Down(input))))
  ShiftField fine;    ///< m_f * tanh(g_fine(...))
  ShiftField total;
};

/// Coarse-to-fine bounded shift that registers `alt` onto `base`. Both are
/// expected at the same (base) exposure.
ShiftPrediction predict_shift_stages(const LinearImage& base, const LinearImage& alt,
                                     const ModelSet& models, const AlignConfig& cfg = {});
ShiftField predict_shift(const LinearImage& base, const LinearImage& alt, const ModelSet& models,
                         const AlignConfig& cfg = {});

struct AlignResult {
  LinearImage warped;  ///< at the base exposure
  ValidityMask validity;
  ShiftField shift;
};

/// Normalizes `alt` to the base exposure, predicts the shift and warps.
AlignResult align(const LinearImage& base, const LinearImage& alt, const ModelSet& models,
                  const AlignConfig& cfg = {});

/// Same as align() with a given shift field instead of the networks.
AlignResult align_with_shift(const LinearImage& base, const LinearImage& alt,
                             const ShiftField& shift);

}  // namespace lhdr
