#include "lhdr/align.hpp"

#include <cmath>
#include <vector>

#include "lhdr/errors.hpp"

namespace lhdr {

namespace {

// Bounded shift from a network whose last activation is tanh.
ShiftField shift_from_output(const nn::Tensor& out, double bound, int scale_up, int width,
                             int height) {
  nn::Tensor scaled = out;
  for (float& v : scaled.values()) v = static_cast<float>(bound * v);
  if (scale_up > 1) {
    scaled = nn::bilinear_upsample(scaled, scale_up, width, height);
    for (float& v : scaled.values()) v *= static_cast<float>(scale_up);
  }
  ShiftField field(width, height);
  for (std::size_t p = 0; p < field.pixel_count(); ++p) {
    field.data()[p] = {scaled.values()[2 * p], scaled.values()[2 * p + 1]};
  }
  return field;
}

void check_shift_net(const nn::Network& net, const char* which) {
  const auto& layers = net.spec().layers;
  if (layers.empty() || layers.back().out_channels != 2 ||
      layers.back().activation != nn::Activation::tanh) {
    throw WeightMismatchError(std::string(which) + " alignment network must end in a 2-channel tanh layer");
  }
  if (net.spec().input_channels() != 12) {
    throw WeightMismatchError(std::string(which) + " alignment network must take 12 channels");
  }
}

LinearImage to_base_exposure(const LinearImage& base, const LinearImage& alt) {
  if (!base.same_shape(alt)) throw ParameterError("base and alternate frames differ in shape");
  return exposure_normalize(alt, base.exposure_scale());
}

}  // namespace

void AlignConfig::validate() const {
  if (d < 1) throw ParameterError("coarse factor d must be >= 1");
  if (!(m_c > 0.0) || !(m_f > 0.0)) throw ParameterError("shift bounds must be > 0");
  if (!(mu > 0.0)) throw ParameterError("mu must be > 0");
}

nn::Tensor align_feature(const LinearImage& img, double mu) {
  if (img.channels() != 3) throw ParameterError("align_feature needs a 3-channel image");
  const ToneCurve curve(mu);
  const int w = img.width();
  const int h = img.height();
  nn::Tensor out(w, h, 4);
  const float* src = img.data().data();
  float* dst = out.data().data();
  const std::size_t n_px = img.pixel_count();
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t p = 0; p < n_px; ++p) {
    for (int c = 0; c < 3; ++c) {
      const float v = curve(src[3 * p + c]);
      dst[4 * p + c] = v;
      sum += v;
      sum_sq += static_cast<double>(v) * v;
    }
  }
  const double n = 3.0 * static_cast<double>(n_px);
  const double mean = n > 0 ? sum / n : 0.0;
  const double var = n > 0 ? std::max(0.0, sum_sq / n - mean * mean) : 0.0;
  const double inv = 1.0 / (std::sqrt(var) + 1e-6);
  Raster lum(w, h, 1);
  for (std::size_t p = 0; p < n_px; ++p) {
    float* px = dst + 4 * p;
    for (int c = 0; c < 3; ++c) px[c] = static_cast<float>((px[c] - mean) * inv);
    lum.values()[p] = kLumaWeights[0] * px[0] + kLumaWeights[1] * px[1] + kLumaWeights[2] * px[2];
  }
  const Raster grad = grad_mag(lum);
  for (std::size_t p = 0; p < n_px; ++p) dst[4 * p + 3] = grad.values()[p];
  return out;
}

nn::Tensor build_align_input(const nn::Tensor& phi_a, const nn::Tensor& phi_b) {
  if (!phi_a.same_shape(phi_b)) throw ParameterError("align features differ in shape");
  const int c = phi_a.channels();
  std::vector<float> data(phi_a.size() * 3);
  const float* a = phi_a.data().data();
  const float* b = phi_b.data().data();
  float* dst = data.data();
  for (std::size_t p = 0; p < phi_a.pixel_count(); ++p, a += c, b += c) {
    for (int i = 0; i < c; ++i) dst[i] = a[i];
    for (int i = 0; i < c; ++i) dst[c + i] = b[i];
    for (int i = 0; i < c; ++i) dst[2 * c + i] = a[i] - b[i];
    dst += 3 * c;
  }
  return nn::Tensor(phi_a.width(), phi_a.height(), 3 * c, std::move(data));
}

namespace {

ShiftPrediction predict_normalized(const LinearImage& base, const LinearImage& alt_n,
                                   const ModelSet& models, const AlignConfig& cfg) {
  cfg.validate();
  check_shift_net(models.coarse, "coarse");
  check_shift_net(models.fine, "fine");
  const int w = base.width();
  const int h = base.height();

  const nn::Tensor phi_base = align_feature(base, cfg.mu);
  const nn::Tensor coarse_in = nn::avg_downsample(build_align_input(align_feature(alt_n, cfg.mu), phi_base), cfg.d);
  ShiftPrediction pred;
  pred.coarse = shift_from_output(models.coarse(coarse_in), cfg.m_c, cfg.d, w, h);

  const LinearImage alt_coarse = bilinear_warp(alt_n, pred.coarse).image;
  const nn::Tensor fine_in = build_align_input(align_feature(alt_coarse, cfg.mu), phi_base);
  pred.fine = shift_from_output(models.fine(fine_in), cfg.m_f, 1, w, h);
  pred.total = pred.coarse + pred.fine;
  return pred;
}

}  // namespace

ShiftPrediction predict_shift_stages(const LinearImage& base, const LinearImage& alt,
                                     const ModelSet& models, const AlignConfig& cfg) {
  return predict_normalized(base, to_base_exposure(base, alt), models, cfg);
}

ShiftField predict_shift(const LinearImage& base, const LinearImage& alt, const ModelSet& models,
                         const AlignConfig& cfg) {
  return predict_shift_stages(base, alt, models, cfg).total;
}

AlignResult align(const LinearImage& base, const LinearImage& alt, const ModelSet& models,
                  const AlignConfig& cfg) {
  const LinearImage alt_n = to_base_exposure(base, alt);
  ShiftField shift = predict_normalized(base, alt_n, models, cfg).total;
  auto warped = bilinear_warp(alt_n, shift);
  return {std::move(warped.image), std::move(warped.validity), std::move(shift)};
}

AlignResult align_with_shift(const LinearImage& base, const LinearImage& alt,
                             const ShiftField& shift) {
  const LinearImage alt_n = to_base_exposure(base, alt);
  auto warped = bilinear_warp(alt_n, shift);
  return {std::move(warped.image), std::move(warped.validity), shift};
}

}  // namespace lhdr
