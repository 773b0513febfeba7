#include <catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "spectrasep/cube.hpp"
#include "spectrasep/error.hpp"
#include "spectrasep/rng.hpp"

using namespace spectrasep;
using Catch::Matchers::WithinAbs;

namespace {

SpectralCube constant_cube(std::size_t w, std::size_t h, std::size_t c, float v,
                           CalibrationState s = CalibrationState::reflectance) {
  SpectralCube cube(w, h, c, {}, s);
  for (float& x : cube.values()) x = v;
  return cube;
}

}  // namespace

TEST_CASE("cube layout is band sequential", "[cube]") {
  SpectralCube cube(3, 2, 4);
  cube.at(2, 1, 0) = 7.0f;
  CHECK(cube.values()[(2 * 2 + 1) * 3 + 0] == 7.0f);
  CHECK(cube.band(2)[3] == 7.0f);
  std::vector<float> s(4);
  cube.spectrum(0, 1, s);
  CHECK(s == std::vector<float>{0, 0, 7, 0});
  CHECK_THROWS_AS(SpectralCube(2, 2, 2, {}, CalibrationState::raw_counts, std::vector<float>(7)), GeometryError);
}

TEST_CASE("calibration state names round-trip", "[cube]") {
  for (auto s : {CalibrationState::raw_counts, CalibrationState::reflectance, CalibrationState::l1_normalized,
                 CalibrationState::absorbance}) {
    CHECK(parse_calibration_state(to_string(s)) == s);
  }
  CHECK_THROWS_AS(parse_calibration_state("bogus"), ValidationError);
}

TEST_CASE("calibrate applies the reference formula and clamps", "[cube][calibration]") {
  SpectralCube raw(2, 1, 1), white(2, 1, 1), dark(2, 1, 1);
  dark.values()[0] = 100;
  white.values()[0] = 1100;
  raw.values()[0] = 350;
  dark.values()[1] = 100;
  white.values()[1] = 200;
  raw.values()[1] = 900;  // (900-100)/100 = 8 -> clamped to 2
  const auto r = calibrate(raw, white, dark);
  CHECK(r.state() == CalibrationState::reflectance);
  CHECK_THAT(r.values()[0], WithinAbs(0.25, 1e-7));
  CHECK(r.values()[1] == 2.0f);

  raw.values()[0] = 50;  // below dark
  CHECK(calibrate(raw, white, dark).values()[0] == 0.0f);
}

TEST_CASE("calibrate rejects mismatched or degenerate references", "[cube][calibration]") {
  SpectralCube raw(4, 4, 2), white(4, 4, 2), dark(4, 3, 2);
  CHECK_THROWS_AS(calibrate(raw, white, dark), GeometryError);
  SpectralCube dark_ok(4, 4, 2);
  // white == dark everywhere: degenerate
  CHECK_THROWS_AS(calibrate(raw, white, dark_ok), CalibrationError);
  SpectralCube refl(4, 4, 2, {}, CalibrationState::reflectance);
  for (float& x : white.values()) x = 1000;
  CHECK_THROWS_AS(calibrate(refl, white, dark_ok), ValidationError);
}

TEST_CASE("l1 normalization yields unit-sum spectra and keeps zeros", "[cube][l1]") {
  Rng rng(3);
  SpectralCube cube(5, 4, 17, {}, CalibrationState::reflectance);
  for (float& x : cube.values()) x = static_cast<float>(rng.uniform(0.0, 1.5));
  for (std::size_t c = 0; c < 17; ++c) cube.at(c, 2, 3) = 0.0f;
  const auto n = l1_normalize(cube);
  CHECK(n.state() == CalibrationState::l1_normalized);
  for (std::size_t y = 0; y < 4; ++y) {
    for (std::size_t x = 0; x < 5; ++x) {
      double s = 0.0;
      for (std::size_t c = 0; c < 17; ++c) s += n.at(c, y, x);
      if (x == 3 && y == 2) CHECK(s == 0.0);
      else CHECK_THAT(s, WithinAbs(1.0, 1e-6));
    }
  }
  CHECK_THROWS_AS(l1_normalize(SpectralCube(2, 2, 2)), ValidationError);
}

TEST_CASE("validate_values catches domain violations", "[cube]") {
  auto cube = constant_cube(2, 2, 2, 0.5f);
  CHECK_NOTHROW(validate_values(cube));
  cube.values()[3] = -0.1f;
  CHECK_THROWS_AS(validate_values(cube), FormatError);
  cube.values()[3] = NAN;
  CHECK_THROWS_AS(validate_values(cube), FormatError);
  auto l1 = constant_cube(2, 2, 2, 0.5f, CalibrationState::l1_normalized);
  CHECK_NOTHROW(validate_values(l1));
  l1.values()[0] = 0.9f;
  CHECK_THROWS_AS(validate_values(l1), FormatError);
}

TEST_CASE("disk mask matches the lattice count", "[cube][roi]") {
  for (std::int64_t r : {1, 2, 3, 5, 8, 13, 20, 50, 100}) {
    CHECK(disk_mask(static_cast<std::size_t>(2 * r)).count() == oracle::disk_area(r));
  }
}

TEST_CASE("annotation validation", "[cube][roi]") {
  CHECK_NOTHROW(validate_annotation({"a", Site::palm, 10, 10, 5}, 20, 20));
  CHECK_THROWS_AS(validate_annotation({"a", Site::palm, 10, 10, 0}, 20, 20), AnnotationError);
  CHECK_THROWS_AS(validate_annotation({"a", Site::palm, 10, 10, 2.25}, 20, 20), AnnotationError);
  CHECK_THROWS_AS(validate_annotation({"a", Site::palm, 20, 10, 5}, 20, 20), AnnotationError);
  CHECK_THROWS_AS(validate_annotation({"a", Site::palm, -0.5, 10, 5}, 20, 20), AnnotationError);
  CHECK(default_radius(Site::palm) == 100.0);
  CHECK(default_radius(Site::finger) == 20.0);
  CHECK(parse_site(to_string(Site::finger)) == Site::finger);
}

TEST_CASE("apply_roi zero-pads outside the image", "[cube][roi]") {
  auto cube = constant_cube(10, 10, 2, 1.0f);
  const auto crop = apply_roi(cube, {"a", Site::finger, 1.0, 1.0, 4.0});
  REQUIRE(crop.cube.width() == 8);
  // Only pixels with center inside both the disk and the image survive.
  std::size_t expected = 0;
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      const double dx = x + 0.5 - 4.0, dy = y + 0.5 - 4.0;
      const bool in_img = x - 3 >= 0 && y - 3 >= 0;
      if (in_img && dx * dx + dy * dy <= 16.0) ++expected;
    }
  }
  CHECK(crop.mask.count() == expected);
  std::size_t nonzero = 0;
  for (float v : crop.cube.band(1)) nonzero += v != 0.0f;
  CHECK(nonzero == expected);
}

TEST_CASE("apply_roi maps crop pixels to source pixels", "[cube][roi]") {
  SpectralCube cube(12, 12, 1, {}, CalibrationState::reflectance);
  for (std::size_t y = 0; y < 12; ++y)
    for (std::size_t x = 0; x < 12; ++x) cube.at(0, y, x) = static_cast<float>(1 + y * 12 + x);
  const auto crop = apply_roi(cube, {"a", Site::finger, 6.0, 5.0, 3.0});
  // Crop origin is (3, 2); crop pixel (3, 3) is source pixel (6, 5).
  CHECK(crop.cube.at(0, 3, 3) == cube.at(0, 5, 6));
  CHECK(crop.cube.at(0, 0, 0) == 0.0f);
}

TEST_CASE("rescale keeps values inside the mask and zero outside", "[cube][rescale]") {
  auto cube = constant_cube(40, 40, 3, 0.2f);
  for (std::size_t y = 0; y < 40; ++y)
    for (std::size_t x = 0; x < 40; ++x) cube.at(1, y, x) = 0.6f;
  const auto sample = preprocess(cube, {"a", Site::finger, 20, 20, 10}, 64);
  REQUIRE(sample.tensor.width() == 64);
  REQUIRE(sample.mask.width() == 64);
  CHECK(sample.mask.count() > 0);
  for (std::size_t i = 0; i < 64 * 64; ++i) {
    if (!sample.mask.at_index(i)) {
      for (std::size_t c = 0; c < 3; ++c) CHECK(sample.tensor.band(c)[i] == 0.0f);
    } else {
      // Constant l1 spectrum (0.2, 0.6, 0.2) / 1.0 survives resampling.
      CHECK_THAT(sample.tensor.band(0)[i], WithinAbs(0.2, 1e-6));
      CHECK_THAT(sample.tensor.band(1)[i], WithinAbs(0.6, 1e-6));
    }
  }
  // Mask fraction close to pi/4.
  CHECK_THAT(static_cast<double>(sample.mask.count()) / (64.0 * 64.0), WithinAbs(M_PI / 4.0, 0.03));
}

TEST_CASE("rescale does not bleed masked-out zeros into the edge", "[cube][rescale]") {
  auto cube = constant_cube(30, 30, 2, 0.5f);
  const auto sample = preprocess(cube, {"a", Site::finger, 15, 15, 10}, 224);
  double lo = 1.0;
  for (std::size_t i = 0; i < 224 * 224; ++i) {
    if (sample.mask.at_index(i)) lo = std::min(lo, static_cast<double>(sample.tensor.band(0)[i]));
  }
  CHECK_THAT(lo, WithinAbs(0.5, 1e-6));
}
