#include "lhdr/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lhdr/errors.hpp"

namespace lhdr {

namespace {

void check_dims(int width, int height, int channels) {
  if (width < 0 || height < 0 || channels < 0) {
    throw ParameterError("raster dimensions must be non-negative");
  }
}

}  // namespace

Raster::Raster(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
  check_dims(width, height, channels);
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Raster::Raster(int width, int height, int channels, std::vector<float> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_dims(width, height, channels);
  if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw ParameterError("raster data length " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(width) + "x" +
                         std::to_string(height) + "x" + std::to_string(channels));
  }
}

Raster Raster::channel(int c) const {
  if (c < 0 || c >= channels_) throw ParameterError("channel index out of range");
  Raster out(width_, height_, 1);
  for (std::size_t i = 0; i < pixel_count(); ++i) out.values()[i] = data_[i * channels_ + c];
  return out;
}

LinearImage::LinearImage(int width, int height, int channels, float fill, double exposure_scale)
    : Raster(width, height, channels, fill) {
  set_exposure_scale(exposure_scale);
}

LinearImage::LinearImage(Raster raster, double exposure_scale) : Raster(std::move(raster)) {
  set_exposure_scale(exposure_scale);
}

void LinearImage::set_exposure_scale(double e) {
  if (!(e > 0.0) || !std::isfinite(e)) throw ParameterError("exposure_scale must be > 0");
  exposure_scale_ = e;
}

ValidityMask::ValidityMask(int width, int height, float fill) : Raster(width, height, 1, fill) {}

ValidityMask::ValidityMask(Raster single_channel) : Raster(std::move(single_channel)) {
  if (channels() != 1) throw ParameterError("validity mask must have one channel");
}

double ValidityMask::coverage() const {
  if (empty()) return 0.0;
  double sum = std::accumulate(values().begin(), values().end(), 0.0);
  return sum / static_cast<double>(size());
}

ShiftField::ShiftField(int width, int height, Shift fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw ParameterError("shift field dimensions must be non-negative");
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

float ShiftField::max_abs_component() const {
  float m = 0.0f;
  for (const Shift& s : data_) m = std::max({m, std::fabs(s.dx), std::fabs(s.dy)});
  return m;
}

ShiftField ShiftField::operator+(const ShiftField& other) const {
  if (width_ != other.width_ || height_ != other.height_) {
    throw ParameterError("shift field size mismatch");
  }
  ShiftField out(width_, height_);
  for (std::size_t i = 0; i < data_.size(); ++i) {
    out.data_[i] = {data_[i].dx + other.data_[i].dx, data_[i].dy + other.data_[i].dy};
  }
  return out;
}

double NoiseModel::sigma(double x) const { return std::sqrt(std::max(0.0, variance(x))); }

void NoiseModel::validate(bool require_nonzero) const {
  if (!std::isfinite(a) || !std::isfinite(b) || a < 0.0 || b < 0.0) {
    throw ParameterError("noise model terms must be finite and >= 0");
  }
  if (require_nonzero && a == 0.0 && b == 0.0) {
    throw ParameterError("noise model must not be identically zero");
  }
}

}  // namespace lhdr
