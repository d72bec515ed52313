#include "lhdr/merge.hpp"

#include <algorithm>
#include <cmath>

#include "lhdr/errors.hpp"

namespace lhdr {

nn::Tensor merge_feature(const LinearImage& img, double gamma) {
  if (img.channels() != 3) throw ParameterError("merge_feature needs a 3-channel image");
  if (!(gamma > 0.0)) throw ParameterError("gamma must be > 0");
  const float inv = static_cast<float>(1.0 / gamma);
  nn::Tensor out(img.width(), img.height(), 4);
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    const float* src = img.data().data() + 3 * p;
    float* dst = out.data().data() + 4 * p;
    float encoded[3];
    for (int c = 0; c < 3; ++c) {
      dst[c] = src[c];
      encoded[c] = std::pow(std::max(0.0f, src[c]), inv);
    }
    dst[3] = kLumaWeights[0] * encoded[0] + kLumaWeights[1] * encoded[1] + kLumaWeights[2] * encoded[2];
  }
  return out;
}

MergeWeights weights_from_logits(const nn::Tensor& logits, const ValidityMask& validity) {
  if (logits.channels() != 2) throw ParameterError("merge logits must have two channels");
  if (!logits.same_size(validity)) throw ParameterError("validity mask size mismatch");
  MergeWeights w{Raster(logits.width(), logits.height(), 1),
                 Raster(logits.width(), logits.height(), 1)};
  for (std::size_t p = 0; p < logits.pixel_count(); ++p) {
    const double lb = logits.values()[2 * p];
    const double la = logits.values()[2 * p + 1];
    const double m = std::max(lb, la);
    const double eb = std::exp(lb - m);
    const double ea = std::exp(la - m);
    const double wb = eb / (eb + ea);
    const double wa = ea / (eb + ea);
    const double v = std::clamp(static_cast<double>(validity.values()[p]), 0.0, 1.0);
    const double gated = wa * v;
    const double denom = wb + gated;
    const double alt = denom > 0.0 ? gated / denom : 0.0;
    w.w_alt.values()[p] = static_cast<float>(alt);
    w.w_base.values()[p] = static_cast<float>(1.0 - alt);
  }
  return w;
}

MergeWeights merge_weights(const nn::Tensor& psi_base, const nn::Tensor& psi_alt,
                           const ValidityMask& validity, const nn::Network& net) {
  if (!psi_base.same_shape(psi_alt)) throw ParameterError("merge features differ in shape");
  const int cb = psi_base.channels();
  const int ca = psi_alt.channels();
  nn::Tensor input(psi_base.width(), psi_base.height(), cb + ca);
  for (std::size_t p = 0; p < psi_base.pixel_count(); ++p) {
    float* dst = input.data().data() + p * (cb + ca);
    const float* b = psi_base.data().data() + p * cb;
    const float* a = psi_alt.data().data() + p * ca;
    std::copy(a, a + ca, std::copy(b, b + cb, dst));
  }
  return weights_from_logits(net(input), validity);
}

LinearImage fuse(const LinearImage& base, const LinearImage& alt_warped, const MergeWeights& w) {
  if (!base.same_shape(alt_warped)) throw ParameterError("fuse: frame shape mismatch");
  if (!w.w_base.same_size(base) || !w.w_alt.same_size(base)) {
    throw ParameterError("fuse: weight size mismatch");
  }
  LinearImage out(Raster(base.width(), base.height(), base.channels()), base.exposure_scale());
  const int c = base.channels();
  for (std::size_t p = 0; p < base.pixel_count(); ++p) {
    const double wb = w.w_base.values()[p];
    const double wa = w.w_alt.values()[p];
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t i = p * c + ch;
      const float b = base.values()[i];
      const float a = alt_warped.values()[i];
      const double v = wb * b + wa * a;
      out.values()[i] = std::clamp(static_cast<float>(v), std::min(a, b), std::max(a, b));
    }
  }
  return out;
}

}  // namespace lhdr
