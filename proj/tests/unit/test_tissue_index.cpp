#include <catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "spectrasep/error.hpp"
#include "spectrasep/rng.hpp"
#include "spectrasep/tissue_index.hpp"

using namespace spectrasep;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SpectralCube hsi_cube(std::size_t w, std::size_t h, CalibrationState state = CalibrationState::reflectance) {
  return SpectralCube(w, h, kHsiChannels, {kHsiStartNm, kHsiStepNm}, state);
}

double absorb(float r) { return -std::log10(static_cast<double>(r) + 1e-6); }

BandRatioSpec spec(double nlo, double nhi, double dlo, double dhi, double smin, double smax) {
  BandRatioSpec s;
  s.name = "test";
  s.numerator = {nlo, nhi};
  s.denominator = {dlo, dhi};
  s.scale_min = smin;
  s.scale_max = smax;
  return s;
}

}  // namespace

TEST_CASE("band channels select centers inside the closed band", "[index]") {
  const SpectralAxis axis{kHsiStartNm, kHsiStepNm};
  const auto c = band_channels(axis, kHsiChannels, {570, 600});
  REQUIRE(c.size() == 7);
  CHECK(c.front() == 14);
  CHECK(c.back() == 20);
  CHECK(band_channels(axis, kHsiChannels, {571, 574}).empty());
}

TEST_CASE("absorbance is -log10(R + 1e-6)", "[index]") {
  auto cube = hsi_cube(2, 1);
  cube.values()[0] = 0.1f;
  cube.values()[1] = 0.0f;
  const auto a = absorbance(cube);
  CHECK(a.state() == CalibrationState::absorbance);
  CHECK_THAT(a.values()[0], WithinRel(absorb(0.1f), 1e-6));
  CHECK_THAT(a.values()[1], WithinRel(6.0, 1e-6));
  CHECK_THROWS_AS(absorbance(hsi_cube(1, 1, CalibrationState::raw_counts)), ValidationError);
}

TEST_CASE("compute_index follows the mean-absorbance ratio", "[index]") {
  Rng rng(17);
  auto cube = hsi_cube(3, 2);
  for (float& x : cube.values()) x = static_cast<float>(rng.uniform(0.05, 0.9));
  const auto s = spec(570, 600, 740, 780, 0.5, 2.0);
  Mask mask(3, 2, true);
  mask.set(2, 1, false);
  const auto map = compute_index(cube, s, mask);
  for (std::size_t y = 0; y < 2; ++y) {
    for (std::size_t x = 0; x < 3; ++x) {
      if (!mask(x, y)) {
        CHECK(std::isnan(map.at(x, y)));
        continue;
      }
      double num = 0.0, den = 0.0;
      for (std::size_t c = 14; c <= 20; ++c) num += absorb(cube.at(c, y, x));
      for (std::size_t c = 48; c <= 56; ++c) den += absorb(cube.at(c, y, x));
      const double ratio = (num / 7.0) / (den / 9.0);
      const double expected = std::clamp((ratio - 0.5) / 1.5, 0.0, 1.0);
      CHECK_THAT(map.at(x, y), WithinAbs(expected, 1e-12));
    }
  }
}

TEST_CASE("index values clamp to [0, 1]", "[index]") {
  auto cube = hsi_cube(2, 1);
  for (std::size_t c = 0; c < kHsiChannels; ++c) {
    cube.at(c, 0, 0) = c < 50 ? 0.01f : 0.5f;  // high numerator absorbance
    cube.at(c, 0, 1) = c < 50 ? 0.5f : 0.01f;  // low numerator absorbance
  }
  const auto map = compute_index(cube, spec(520, 560, 800, 820, 0.9, 1.1), Mask(2, 1, true));
  CHECK(map.at(0, 0) == 1.0);
  CHECK(map.at(1, 0) == 0.0);
}

TEST_CASE("second stage is averaged with the first", "[index]") {
  Rng rng(5);
  auto cube = hsi_cube(1, 1);
  for (float& x : cube.values()) x = static_cast<float>(rng.uniform(0.1, 0.6));
  auto first = spec(520, 560, 785, 820, 0.2, 3.0);
  auto second = spec(880, 900, 955, 980, 0.1, 4.0);
  auto two = first;
  two.second_stage = std::make_shared<const BandRatioSpec>(second);
  const Mask mask(1, 1, true);
  const double a = compute_index(cube, first, mask).values[0];
  const double b = compute_index(cube, second, mask).values[0];
  CHECK_THAT(compute_index(cube, two, mask).values[0], WithinAbs((a + b) / 2.0, 1e-12));
}

TEST_CASE("index definition validation and JSON round trip", "[index]") {
  CHECK_THROWS_AS(validate_spec(spec(600, 570, 740, 780, 0, 1)), ConfigError);
  CHECK_THROWS_AS(validate_spec(spec(450, 570, 740, 780, 0, 1)), ConfigError);
  CHECK_THROWS_AS(validate_spec(spec(570, 600, 740, 1200, 0, 1)), ConfigError);
  CHECK_THROWS_AS(validate_spec(spec(570, 600, 740, 780, 1, 1)), ConfigError);
  auto nested = spec(570, 600, 740, 780, 0, 1);
  nested.second_stage = std::make_shared<const BandRatioSpec>(spec(600, 570, 740, 780, 0, 1));
  CHECK_THROWS_AS(validate_spec(nested), ConfigError);

  const auto defaults = default_index_specs();
  REQUIRE(defaults.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(defaults[i].name == kStandardIndexNames[i]);
    const auto back = band_ratio_from_json(band_ratio_to_json(defaults[i]));
    CHECK(back.numerator == defaults[i].numerator);
    CHECK(back.denominator == defaults[i].denominator);
    CHECK(back.scale_min == defaults[i].scale_min);
    CHECK(back.scale_max == defaults[i].scale_max);
  }
  CHECK_THROWS_AS(band_ratio_from_json(nlohmann::json{{"name", "x"}}), ConfigError);
}

TEST_CASE("ROI statistics ignore NaN and pixels outside the mask", "[index]") {
  IndexMap map{"x", 3, 1, {0.2, std::nan(""), 0.8}};
  Mask mask(3, 1, true);
  CHECK(roi_statistic(map, mask, RoiStatistic::median) == Catch::Approx(0.5));
  mask.set(2, 0, false);
  CHECK(roi_statistic(map, mask, RoiStatistic::mean) == 0.2);
  mask.set(0, 0, false);
  CHECK_THROWS_AS(roi_statistic(map, mask), ComputationError);
  CHECK(parse_roi_statistic("mean") == RoiStatistic::mean);
}

TEST_CASE("feature vector holds indices then the median l1 spectrum", "[index]") {
  auto cube = hsi_cube(24, 24);
  for (std::size_t c = 0; c < kHsiChannels; ++c)
    for (std::size_t y = 0; y < 24; ++y)
      for (std::size_t x = 0; x < 24; ++x) cube.at(c, y, x) = 0.2f + 0.004f * c;
  const auto fv = extract_feature_vector(cube, {"img", Site::finger, 12, 12, 8});
  REQUIRE(fv.values.size() == 4 + kHsiChannels);
  CHECK(fv.names[0] == "StO2");
  CHECK(fv.names[4] == "spectrum_500nm");
  CHECK(fv.names.back() == "spectrum_995nm");
  double total = 0.0;
  for (std::size_t c = 0; c < kHsiChannels; ++c) total += 0.2 + 0.004 * c;
  CHECK_THAT(fv.values[4], WithinRel(0.2 / total, 1e-5));
  CHECK(feature_dictionary(fv.names)["3"] == "TWI");

  FeatureConfig no_spectrum;
  no_spectrum.include_spectrum = false;
  CHECK(extract_feature_vector(cube, {"img", Site::finger, 12, 12, 8}, no_spectrum).values.size() == 4);
}
