#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lhdr/image.hpp"

namespace lhdr::nn {

/// H x W x C float tensor; same layout as Raster.
using Tensor = Raster;

enum class Activation : std::uint8_t { none = 0, relu = 1, tanh = 2 };

const char* to_string(Activation act);

struct LayerSpec {
  int kernel = 3;
  int in_channels = 0;
  int out_channels = 0;
  Activation activation = Activation::none;

  std::size_t kernel_size() const {
    return static_cast<std::size_t>(kernel) * kernel * in_channels * out_channels;
  }
  std::size_t param_count() const { return kernel_size() + out_channels; }
  bool operator==(const LayerSpec&) const = default;
};

/// Stack of same-size (replicate padded, stride 1) convolutions.
struct NetworkSpec {
  std::string name;
  std::vector<LayerSpec> layers;

  int input_channels() const { return layers.empty() ? 0 : layers.front().in_channels; }
  int output_channels() const { return layers.empty() ? 0 : layers.back().out_channels; }
  std::size_t param_count() const;
  /// FNV-1a over the layer geometry and activations.
  std::uint64_t architecture_hash() const;
  void validate() const;

  static NetworkSpec coarse_align();
  static NetworkSpec fine_align();
  static NetworkSpec merge();
};

inline constexpr std::size_t kParamBudget = 70000;

struct LayerWeights {
  LayerSpec spec;
  std::vector<float> kernel;  ///< (ky, kx, in, out) order
  std::vector<float> bias;    ///< out_channels
  bool operator==(const LayerWeights&) const = default;
};

struct WeightBundle {
  std::uint32_t version = 1;
  std::vector<LayerWeights> layers;

  NetworkSpec spec(std::string name = {}) const;
  std::uint64_t architecture_hash() const { return spec().architecture_hash(); }
  std::size_t param_count() const { return spec().param_count(); }

  static WeightBundle zeros(const NetworkSpec& spec);
  /// Uniform(-scale, scale) weights and biases.
  static WeightBundle random(const NetworkSpec& spec, std::uint64_t seed, float scale = 0.5f);

  bool operator==(const WeightBundle&) const = default;
};

/// Same-size convolution with replicate padding. Accumulation order for each
/// output is: bias, then for ky, kx, ci a fused multiply-add. The result is
/// bitwise reproducible regardless of threading.
Tensor conv2d(const Tensor& input, const LayerWeights& layer);
Tensor conv2d(const Tensor& input, std::span<const float> kernel, std::span<const float> bias,
              int k, int out_channels);

void apply_activation(Tensor& t, Activation act);

/// Per-pixel softmax across channels (max-subtracted).
Tensor softmax_channels(const Tensor& t);

/// d x d box average; edges are replicate-padded up to a multiple of d.
Tensor avg_downsample(const Tensor& t, int d);
/// Bilinear upsample by d (half-pixel centers, clamped edges), output size
/// (width * d, height * d).
Tensor bilinear_upsample(const Tensor& t, int d);
/// Bilinear upsample by d cropped to out_width x out_height.
Tensor bilinear_upsample(const Tensor& t, int d, int out_width, int out_height);

/// Sequential application of every layer. Throws WeightMismatchError when
/// the bundle does not match `spec`.
Tensor forward(const NetworkSpec& spec, const WeightBundle& weights, const Tensor& input);

/// A spec with the weights checked against it once, at construction.
class Network {
 public:
  Network() = default;
  Network(NetworkSpec spec, WeightBundle weights);

  const NetworkSpec& spec() const { return spec_; }
  const WeightBundle& weights() const { return weights_; }
  Tensor operator()(const Tensor& input) const;

 private:
  NetworkSpec spec_;
  WeightBundle weights_;
};

// Weight file I/O ("LHDRW001").
std::vector<std::uint8_t> serialize_weights(const WeightBundle& bundle);
WeightBundle parse_weights(std::span<const std::uint8_t> bytes);
void save_weights(const WeightBundle& bundle, const std::filesystem::path& path);
WeightBundle load_weights(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes,
                      std::uint64_t hash = 0xcbf29ce484222325ULL);

// Tensor file I/O ("LHDRT001"), used for conformance vectors.
void save_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor load_tensor(const std::filesystem::path& path);

}  // namespace lhdr::nn
