#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lhdr {

/// Row-major, channel-interleaved float raster (H x W x C).
///
/// This is the storage type behind every image, mask and network tensor in
/// the library. Element (x, y, c) lives at ((y * width + x) * channels + c).
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, int channels, float fill = 0.0f);
  Raster(int width, int height, int channels, std::vector<float> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  std::vector<float>& values() { return data_; }
  const std::vector<float>& values() const { return data_; }

  float* pixel(int x, int y) { return data_.data() + index(x, y); }
  const float* pixel(int x, int y) const { return data_.data() + index(x, y); }
  float& at(int x, int y, int c = 0) { return data_[index(x, y) + c]; }
  float at(int x, int y, int c = 0) const { return data_[index(x, y) + c]; }

  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_;
  }

  bool same_size(const Raster& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }
  bool same_shape(const Raster& other) const {
    return same_size(other) && channels_ == other.channels_;
  }

  /// Copy of a single channel as a 1-channel raster.
  Raster channel(int c) const;

  bool operator==(const Raster&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Linear radiometric image tagged with the relative exposure it represents.
class LinearImage : public Raster {
 public:
  LinearImage() = default;
  LinearImage(int width, int height, int channels, float fill = 0.0f,
              double exposure_scale = 1.0);
  LinearImage(Raster raster, double exposure_scale = 1.0);

  double exposure_scale() const { return exposure_scale_; }
  void set_exposure_scale(double e);

  bool operator==(const LinearImage&) const = default;

 private:
  double exposure_scale_ = 1.0;
};

/// Per-pixel confidence in [0, 1]; 1 = usable sample.
class ValidityMask : public Raster {
 public:
  ValidityMask() = default;
  ValidityMask(int width, int height, float fill = 1.0f);
  explicit ValidityMask(Raster single_channel);

  float operator()(int x, int y) const { return at(x, y); }
  float& operator()(int x, int y) { return at(x, y); }

  /// Mean value over all pixels.
  double coverage() const;
};

struct Shift {
  float dx = 0.0f;
  float dy = 0.0f;
  bool operator==(const Shift&) const = default;
};

/// Dense per-pixel displacement field at full resolution, in pixels.
class ShiftField {
 public:
  ShiftField() = default;
  ShiftField(int width, int height, Shift fill = {});

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return data_.size(); }

  Shift& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  const Shift& at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<Shift> data() { return data_; }
  std::span<const Shift> data() const { return data_; }

  /// Largest |dx| or |dy| in the field.
  float max_abs_component() const;

  ShiftField operator+(const ShiftField& other) const;
  bool operator==(const ShiftField&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Shift> data_;
};

/// Affine sensor noise: variance(x) = a * x + b in normalized units.
struct NoiseModel {
  double a = 0.0;  ///< shot-noise slope
  double b = 0.0;  ///< read-noise floor

  double variance(double x) const { return a * x + b; }
  double sigma(double x) const;

  /// Throws ParameterError on negative or non-finite terms. When
  /// `require_nonzero` is set, (0, 0) is also rejected.
  void validate(bool require_nonzero = false) const;
};

}  // namespace lhdr
