#include <cmath>
#include <limits>

#include "doctest.h"
#include "lhdr/errors.hpp"
#include "lhdr/image.hpp"

using namespace lhdr;

TEST_CASE("raster indexing is row-major and channel-interleaved") {
  Raster r(3, 2, 2);
  r.at(2, 1, 1) = 7.0f;
  CHECK(r.values()[(1 * 3 + 2) * 2 + 1] == 7.0f);
  CHECK(r.pixel(2, 1)[1] == 7.0f);
  CHECK(r.pixel_count() == 6);
  CHECK(r.size() == 12);
  const Raster c1 = r.channel(1);
  CHECK(c1.channels() == 1);
  CHECK(c1.at(2, 1) == 7.0f);
  CHECK_THROWS_AS(r.channel(2), ParameterError);
}

TEST_CASE("raster construction validates its arguments") {
  CHECK_THROWS_AS(Raster(-1, 2, 1), ParameterError);
  CHECK_THROWS_AS(Raster(2, 2, 1, std::vector<float>(3)), ParameterError);
  CHECK(Raster(0, 0, 3).empty());
}

TEST_CASE("exposure scale must be positive and finite") {
  LinearImage img(2, 2, 3);
  CHECK(img.exposure_scale() == 1.0);
  CHECK_THROWS_AS(img.set_exposure_scale(0.0), ParameterError);
  CHECK_THROWS_AS(img.set_exposure_scale(-2.0), ParameterError);
  CHECK_THROWS_AS(img.set_exposure_scale(std::numeric_limits<double>::infinity()), ParameterError);
  CHECK_THROWS_AS(LinearImage(2, 2, 3, 0.0f, std::nan("")), ParameterError);
  img.set_exposure_scale(4.0);
  CHECK(img.exposure_scale() == 4.0);
}

TEST_CASE("validity mask is single channel with a coverage mean") {
  ValidityMask m(4, 1, 0.0f);
  m(0, 0) = 1.0f;
  m(1, 0) = 0.5f;
  CHECK(m.coverage() == doctest::Approx(0.375));
  CHECK_THROWS_AS(ValidityMask(Raster(2, 2, 3)), ParameterError);
}

TEST_CASE("shift fields add componentwise and report the largest component") {
  ShiftField a(2, 1, {1.0f, -2.0f});
  ShiftField b(2, 1, {0.5f, -4.0f});
  const ShiftField s = a + b;
  CHECK(s.at(1, 0) == Shift{1.5f, -6.0f});
  CHECK(s.max_abs_component() == 6.0f);
  CHECK_THROWS_AS(a + ShiftField(3, 1), ParameterError);
}

TEST_CASE("noise model") {
  NoiseModel n{1e-3, 1e-5};
  CHECK(n.variance(0.5) == doctest::Approx(5.1e-4));
  CHECK(n.sigma(0.5) == doctest::Approx(std::sqrt(5.1e-4)));
  CHECK_NOTHROW(n.validate(true));
  CHECK_NOTHROW(NoiseModel{}.validate());
  CHECK_THROWS_AS(NoiseModel{}.validate(true), ParameterError);
  CHECK_THROWS_AS((NoiseModel{-1e-3, 0.0}).validate(), ParameterError);
  CHECK_THROWS_AS((NoiseModel{std::nan(""), 0.0}).validate(), ParameterError);
}
