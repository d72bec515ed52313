#include <cmath>
#include <random>

#include "doctest.h"
#include "lhdr/errors.hpp"
#include "lhdr/tinycnn.hpp"
#include "support/oracles.hpp"

using namespace lhdr;
using namespace lhdr::nn;

namespace {

struct ConvCase {
  int w, h, cin, cout, k;
};

void check_conv_bitwise(const ConvCase& cc, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  const Tensor in = test::random_raster(cc.w, cc.h, cc.cin, seed, -2.0f, 2.0f);
  std::vector<float> kernel(static_cast<std::size_t>(cc.k) * cc.k * cc.cin * cc.cout);
  std::vector<float> bias(cc.cout);
  for (float& v : kernel) v = u(rng);
  for (float& v : bias) v = u(rng);
  const Tensor expect = test::naive_conv(in, kernel, bias, cc.k, cc.cout);
  const Tensor got = conv2d(in, kernel, bias, cc.k, cc.cout);
  CAPTURE(cc.w);
  CAPTURE(cc.h);
  CAPTURE(cc.cin);
  CAPTURE(cc.cout);
  CAPTURE(cc.k);
  REQUIRE(got.same_shape(expect));
  CHECK(got == expect);
}

}  // namespace

TEST_CASE("conv2d matches the naive oracle bit for bit on every kernel path") {
  // Output widths cover the 8-lane, narrow, padded and scalar paths.
  const ConvCase cases[] = {
      {17, 9, 12, 24, 3}, {33, 5, 24, 2, 3}, {40, 7, 16, 16, 3}, {9, 13, 8, 16, 5},
      {31, 4, 16, 1, 3},  {5, 5, 3, 5, 3},   {12, 3, 4, 7, 1},   {1, 1, 6, 8, 3},
      {2, 40, 3, 32, 3},  {70, 2, 2, 3, 5},  {8, 8, 16, 4, 3},   {3, 19, 5, 9, 3},
      // Wide rows: interior and edge blocks of the 16-channel path for each
      // specialized input depth, plus a ragged tail.
      {53, 3, 8, 16, 3},  {53, 3, 12, 16, 3}, {53, 3, 16, 16, 3}, {53, 3, 24, 16, 3},
      {41, 3, 12, 32, 3}, {37, 4, 10, 16, 3}, {45, 3, 12, 16, 5}, {67, 2, 16, 2, 3},
  };
  std::uint64_t seed = 1;
  for (const auto& cc : cases) check_conv_bitwise(cc, seed++);
}

TEST_CASE("conv2d with a centered delta kernel is the identity") {
  const Tensor in = test::random_raster(6, 5, 2, 3);
  std::vector<float> kernel(9 * 2 * 2, 0.0f);
  kernel[(4 * 2 + 0) * 2 + 0] = 1.0f;
  kernel[(4 * 2 + 1) * 2 + 1] = 1.0f;
  CHECK(conv2d(in, kernel, std::vector<float>{0.0f, 0.0f}, 3, 2) == in);
}

TEST_CASE("conv2d of a constant image with replicate padding stays constant") {
  const Tensor in(7, 4, 1, 0.5f);
  std::vector<float> kernel(9, 1.0f);
  const Tensor out = conv2d(in, kernel, std::vector<float>{0.25f}, 3, 1);
  for (float v : out.values()) CHECK(v == doctest::Approx(4.75f));
}

TEST_CASE("conv2d rejects malformed kernels") {
  const Tensor in(4, 4, 2);
  std::vector<float> bias(3);
  CHECK_THROWS_AS(conv2d(in, std::vector<float>(9 * 2 * 3 - 1), bias, 3, 3), ParameterError);
  CHECK_THROWS_AS(conv2d(in, std::vector<float>(4 * 2 * 3), bias, 2, 3), ParameterError);
}

TEST_CASE("activations") {
  Tensor t(3, 1, 1, std::vector<float>{-1.0f, 0.0f, 2.0f});
  Tensor r = t;
  apply_activation(r, Activation::relu);
  CHECK(r.values() == std::vector<float>{0.0f, 0.0f, 2.0f});
  Tensor th = t;
  apply_activation(th, Activation::tanh);
  CHECK(th.values()[2] == doctest::Approx(std::tanh(2.0)));
  Tensor n = t;
  apply_activation(n, Activation::none);
  CHECK(n == t);
}

TEST_CASE("softmax over channels sums to one and survives large logits") {
  Tensor t(2, 1, 2, std::vector<float>{1000.0f, 999.0f, -3.0f, 5.0f});
  const Tensor s = softmax_channels(t);
  CHECK(s.values()[0] + s.values()[1] == doctest::Approx(1.0));
  CHECK(s.values()[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
  CHECK(s.values()[3] == doctest::Approx(1.0 / (1.0 + std::exp(-8.0))));
}

TEST_CASE("avg_downsample averages blocks and replicates the ragged edge") {
  Tensor t(3, 2, 1, std::vector<float>{1, 2, 3, 4, 5, 6});
  const Tensor d = avg_downsample(t, 2);
  REQUIRE(d.width() == 2);
  REQUIRE(d.height() == 1);
  CHECK(d.at(0, 0) == doctest::Approx(3.0));
  CHECK(d.at(1, 0) == doctest::Approx(4.5));  // (3 + 3 + 6 + 6) / 4
}

TEST_CASE("bilinear_upsample keeps constants and interpolates half-pixel centers") {
  Tensor t(2, 1, 1, std::vector<float>{0.0f, 1.0f});
  const Tensor u = bilinear_upsample(t, 2);
  REQUIRE(u.width() == 4);
  REQUIRE(u.height() == 2);
  for (int y = 0; y < 2; ++y) {
    CHECK(u.at(0, y) == 0.0f);
    CHECK(u.at(1, y) == 0.25f);
    CHECK(u.at(2, y) == 0.75f);
    CHECK(u.at(3, y) == 1.0f);
  }
  const Tensor c = bilinear_upsample(Tensor(3, 2, 2, 0.7f), 4, 10, 7);
  CHECK(c.width() == 10);
  CHECK(c.height() == 7);
  for (float v : c.values()) CHECK(v == doctest::Approx(0.7f));
}

TEST_CASE("default specs stay within the parameter budget") {
  const std::size_t total = NetworkSpec::coarse_align().param_count() +
                            NetworkSpec::fine_align().param_count() +
                            NetworkSpec::merge().param_count();
  CHECK(total <= kParamBudget);
  CHECK(NetworkSpec::coarse_align().input_channels() == 12);
  CHECK(NetworkSpec::fine_align().output_channels() == 2);
  CHECK(NetworkSpec::merge().input_channels() == 8);
}

TEST_CASE("architecture hash separates geometry and activation") {
  NetworkSpec a = NetworkSpec::merge();
  NetworkSpec b = a;
  CHECK(a.architecture_hash() == b.architecture_hash());
  b.layers.back().activation = Activation::tanh;
  CHECK(a.architecture_hash() != b.architecture_hash());
  NetworkSpec c = a;
  c.layers[1].out_channels = 17;
  c.layers[2].in_channels = 17;
  CHECK(a.architecture_hash() != c.architecture_hash());
}

TEST_CASE("spec validation catches broken chains") {
  NetworkSpec s = NetworkSpec::fine_align();
  s.layers[1].in_channels = 5;
  CHECK_THROWS_AS(s.validate(), ParameterError);
  NetworkSpec even = NetworkSpec::fine_align();
  even.layers[0].kernel = 2;
  CHECK_THROWS_AS(even.validate(), ParameterError);
}

TEST_CASE("forward applies layers in sequence and checks the bundle") {
  const NetworkSpec spec = NetworkSpec::merge();
  const WeightBundle w = WeightBundle::random(spec, 11, 0.3f);
  const Tensor in = test::random_raster(9, 7, 8, 5);
  Tensor expect = in;
  for (const auto& l : w.layers) {
    expect = test::naive_conv(expect, l.kernel, l.bias, l.spec.kernel, l.spec.out_channels);
    apply_activation(expect, l.spec.activation);
  }
  CHECK(forward(spec, w, in) == expect);
  CHECK(Network(spec, w)(in) == expect);

  CHECK_THROWS_AS(forward(NetworkSpec::fine_align(), w, in), WeightMismatchError);
  CHECK_THROWS_AS(Network(NetworkSpec::fine_align(), w), WeightMismatchError);
  CHECK_THROWS_AS(forward(spec, w, test::random_raster(9, 7, 3, 5)), ParameterError);
}

TEST_CASE("random bundles are seeded and bounded") {
  const NetworkSpec spec = NetworkSpec::fine_align();
  const WeightBundle a = WeightBundle::random(spec, 3, 0.25f);
  CHECK(a == WeightBundle::random(spec, 3, 0.25f));
  CHECK_FALSE(a == WeightBundle::random(spec, 4, 0.25f));
  for (const auto& l : a.layers) {
    for (float v : l.kernel) CHECK(std::fabs(v) <= 0.25f);
  }
  const WeightBundle z = WeightBundle::zeros(spec);
  CHECK(z.param_count() == spec.param_count());
}
