#include "spectrasep/cube.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spectrasep/error.hpp"

namespace spectrasep {

std::string_view to_string(CalibrationState state) {
  switch (state) {
    case CalibrationState::raw_counts: return "raw_counts";
    case CalibrationState::reflectance: return "reflectance";
    case CalibrationState::l1_normalized: return "l1_normalized";
    case CalibrationState::absorbance: return "absorbance";
  }
  return "raw_counts";
}

CalibrationState parse_calibration_state(std::string_view text) {
  if (text == "raw_counts") return CalibrationState::raw_counts;
  if (text == "reflectance") return CalibrationState::reflectance;
  if (text == "l1_normalized") return CalibrationState::l1_normalized;
  if (text == "absorbance") return CalibrationState::absorbance;
  throw FormatError("unknown calibration_state '" + std::string(text) + "'");
}

SpectralCube::SpectralCube(std::size_t width, std::size_t height, std::size_t channels,
                           SpectralAxis axis, CalibrationState state)
    : width_(width),
      height_(height),
      channels_(channels),
      axis_(axis),
      state_(state),
      values_(width * height * channels, 0.0f) {}

SpectralCube::SpectralCube(std::size_t width, std::size_t height, std::size_t channels,
                           SpectralAxis axis, CalibrationState state, std::vector<float> values)
    : width_(width),
      height_(height),
      channels_(channels),
      axis_(axis),
      state_(state),
      values_(std::move(values)) {
  if (values_.size() != width * height * channels) {
    throw GeometryError("cube holds " + std::to_string(values_.size()) + " values, expected " +
                        std::to_string(width) + "x" + std::to_string(height) + "x" +
                        std::to_string(channels));
  }
}

void SpectralCube::spectrum(std::size_t x, std::size_t y, std::span<float> out) const {
  const std::size_t plane = pixel_count();
  const std::size_t offset = y * width_ + x;
  for (std::size_t c = 0; c < channels_; ++c) out[c] = values_[c * plane + offset];
}

void validate_values(const SpectralCube& cube) {
  const auto values = cube.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw FormatError("non-finite value at element " + std::to_string(i));
    }
    if (cube.state() == CalibrationState::reflectance && values[i] < 0.0f) {
      throw FormatError("negative reflectance at element " + std::to_string(i));
    }
  }
  if (cube.state() == CalibrationState::l1_normalized) {
    const std::size_t plane = cube.pixel_count();
    for (std::size_t p = 0; p < plane; ++p) {
      double sum = 0.0;
      for (std::size_t c = 0; c < cube.channels(); ++c) sum += std::abs(values[c * plane + p]);
      if (sum != 0.0 && std::abs(sum - 1.0) > 1e-6) {
        throw FormatError("l1-normalized spectrum of pixel " + std::to_string(p) + " sums to " +
                          std::to_string(sum));
      }
    }
  }
}

bool is_hsi_axis(const SpectralCube& cube) {
  return cube.channels() == kHsiChannels && cube.axis().start_nm == kHsiStartNm &&
         std::abs(cube.axis().step_nm - kHsiStepNm) < 0.1;
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::string_view to_string(Site site) { return site == Site::palm ? "palm" : "finger"; }

Site parse_site(std::string_view text) {
  if (text == "palm") return Site::palm;
  if (text == "finger") return Site::finger;
  throw AnnotationError("unknown site '" + std::string(text) + "'");
}

double default_radius(Site site) { return site == Site::palm ? kPalmRadiusPx : kFingerRadiusPx; }

void validate_annotation(const RegionAnnotation& roi, std::size_t width, std::size_t height) {
  if (!(roi.radius > 0.0) || !std::isfinite(roi.radius)) {
    throw AnnotationError("annotation '" + roi.image_id + "': radius must be positive");
  }
  const double side = 2.0 * roi.radius;
  if (std::abs(side - std::round(side)) > 1e-9) {
    throw AnnotationError("annotation '" + roi.image_id + "': 2*radius must be a whole number of pixels");
  }
  if (!(roi.center_x >= 0.0 && roi.center_x < static_cast<double>(width) && roi.center_y >= 0.0 &&
        roi.center_y < static_cast<double>(height))) {
    throw AnnotationError("annotation '" + roi.image_id + "': center (" + std::to_string(roi.center_x) +
                          ", " + std::to_string(roi.center_y) + ") outside the " +
                          std::to_string(width) + "x" + std::to_string(height) + " image");
  }
}

SpectralCube calibrate(const SpectralCube& raw, const SpectralCube& white, const SpectralCube& dark) {
  if (!raw.same_geometry(white) || !raw.same_geometry(dark)) {
    throw GeometryError("calibrate: raw, white and dark cubes must share width, height and channels");
  }
  if (raw.state() != CalibrationState::raw_counts) {
    throw ValidationError("calibrate: expected a raw cube, got " + std::string(to_string(raw.state())));
  }
  const auto r = raw.values();
  const auto w = white.values();
  const auto d = dark.values();

  std::size_t degenerate = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(w[i] > d[i])) ++degenerate;
  }
  if (!r.empty() && static_cast<double>(degenerate) >
                        kMaxDegenerateReferenceFraction * static_cast<double>(r.size())) {
    throw CalibrationError("calibrate: white <= dark on " + std::to_string(degenerate) + " of " +
                           std::to_string(r.size()) + " elements");
  }

  std::vector<float> out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double denom = std::max(static_cast<double>(w[i]) - d[i], kCalibrationFloor);
    const double refl = (static_cast<double>(r[i]) - d[i]) / denom;
    out[i] = static_cast<float>(std::clamp(refl, 0.0, kCalibrationClampMax));
  }
  return SpectralCube(raw.width(), raw.height(), raw.channels(), raw.axis(),
                      CalibrationState::reflectance, std::move(out));
}

SpectralCube l1_normalize(const SpectralCube& cube) {
  if (cube.state() != CalibrationState::reflectance && cube.state() != CalibrationState::l1_normalized) {
    throw ValidationError("l1_normalize: expected a reflectance cube, got " +
                          std::string(to_string(cube.state())));
  }
  const std::size_t plane = cube.pixel_count();
  std::vector<double> norms(plane, 0.0);
  for (std::size_t c = 0; c < cube.channels(); ++c) {
    const auto band = cube.band(c);
    for (std::size_t p = 0; p < plane; ++p) norms[p] += std::abs(static_cast<double>(band[p]));
  }
  SpectralCube out(cube.width(), cube.height(), cube.channels(), cube.axis(),
                   CalibrationState::l1_normalized);
  for (std::size_t c = 0; c < cube.channels(); ++c) {
    const auto src = cube.band(c);
    auto dst = out.band(c);
    for (std::size_t p = 0; p < plane; ++p) {
      dst[p] = norms[p] > 0.0 ? static_cast<float>(src[p] / norms[p]) : 0.0f;
    }
  }
  return out;
}

namespace {

bool inside_disk(double px, double py, double cx, double cy, double r) {
  const double dx = px - cx;
  const double dy = py - cy;
  return dx * dx + dy * dy <= r * r;
}

}  // namespace

Mask disk_mask(std::size_t side) {
  Mask mask(side, side);
  const double r = static_cast<double>(side) / 2.0;
  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      mask.set(x, y, inside_disk(x + 0.5, y + 0.5, r, r, r));
    }
  }
  return mask;
}

RoiCrop apply_roi(const SpectralCube& cube, const RegionAnnotation& roi) {
  validate_annotation(roi, cube.width(), cube.height());
  const auto side = static_cast<std::size_t>(std::llround(2.0 * roi.radius));
  const long long x0 = std::llround(roi.center_x - roi.radius);
  const long long y0 = std::llround(roi.center_y - roi.radius);

  RoiCrop crop{SpectralCube(side, side, cube.channels(), cube.axis(), cube.state()), Mask(side, side), roi};
  for (std::size_t j = 0; j < side; ++j) {
    const long long y = y0 + static_cast<long long>(j);
    if (y < 0 || y >= static_cast<long long>(cube.height())) continue;
    for (std::size_t i = 0; i < side; ++i) {
      const long long x = x0 + static_cast<long long>(i);
      if (x < 0 || x >= static_cast<long long>(cube.width())) continue;
      if (!inside_disk(x + 0.5, y + 0.5, roi.center_x, roi.center_y, roi.radius)) continue;
      crop.mask.set(i, j, true);
      for (std::size_t c = 0; c < cube.channels(); ++c) {
        crop.cube.at(c, j, i) = cube.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
      }
    }
  }
  return crop;
}

namespace {

struct AxisSample {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double w_lo = 1.0;
  double w_hi = 0.0;
  std::size_t nearest = 0;
};

std::vector<AxisSample> axis_samples(std::size_t in, std::size_t out) {
  std::vector<AxisSample> samples(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  const auto last = static_cast<long long>(in) - 1;
  for (std::size_t d = 0; d < out; ++d) {
    const double src = (static_cast<double>(d) + 0.5) * scale - 0.5;
    const double fl = std::floor(src);
    const double frac = src - fl;
    const auto i0 = static_cast<long long>(fl);
    AxisSample s;
    s.lo = static_cast<std::size_t>(std::clamp(i0, 0LL, last));
    s.hi = static_cast<std::size_t>(std::clamp(i0 + 1, 0LL, last));
    s.w_lo = 1.0 - frac;
    s.w_hi = frac;
    const auto nearest = static_cast<long long>(std::floor((static_cast<double>(d) + 0.5) * scale));
    s.nearest = static_cast<std::size_t>(std::clamp(nearest, 0LL, last));
    samples[d] = s;
  }
  return samples;
}

}  // namespace

PreprocessedSample rescale(const RoiCrop& cropped, std::size_t target) {
  const SpectralCube& in = cropped.cube;
  if (in.width() != in.height()) {
    throw GeometryError("rescale: expected a square crop, got " + std::to_string(in.width()) + "x" +
                        std::to_string(in.height()));
  }
  if (target == 0 || in.width() == 0) throw GeometryError("rescale: empty input or target");
  if (cropped.mask.width() != in.width() || cropped.mask.height() != in.height()) {
    throw GeometryError("rescale: mask does not match the crop");
  }

  const auto xs = axis_samples(in.width(), target);
  const auto& ys = xs;
  PreprocessedSample out{SpectralCube(target, target, in.channels(), in.axis(), in.state()),
                         Mask(target, target), cropped.annotation};

  const Mask& m = cropped.mask;
  for (std::size_t y = 0; y < target; ++y) {
    const AxisSample& sy = ys[y];
    for (std::size_t x = 0; x < target; ++x) {
      const AxisSample& sx = xs[x];
      if (!m(sx.nearest, sy.nearest)) continue;
      out.mask.set(x, y, true);

      // Bilinear taps restricted to in-mask source pixels, renormalized.
      const std::size_t tx[2] = {sx.lo, sx.hi};
      const std::size_t ty[2] = {sy.lo, sy.hi};
      const double wx[2] = {sx.w_lo, sx.w_hi};
      const double wy[2] = {sy.w_lo, sy.w_hi};
      double weights[4];
      double total = 0.0;
      for (int b = 0; b < 2; ++b) {
        for (int a = 0; a < 2; ++a) {
          const double w = m(tx[a], ty[b]) ? wx[a] * wy[b] : 0.0;
          weights[b * 2 + a] = w;
          total += w;
        }
      }
      for (std::size_t c = 0; c < in.channels(); ++c) {
        double acc = 0.0;
        for (int b = 0; b < 2; ++b) {
          for (int a = 0; a < 2; ++a) {
            const double w = weights[b * 2 + a];
            if (w != 0.0) acc += w * in.at(c, ty[b], tx[a]);
          }
        }
        out.tensor.at(c, y, x) = static_cast<float>(acc / total);
      }
    }
  }
  return out;
}

PreprocessedSample preprocess(const SpectralCube& cube, const RegionAnnotation& roi, std::size_t target) {
  switch (cube.state()) {
    case CalibrationState::reflectance:
      return rescale(apply_roi(l1_normalize(cube), roi), target);
    case CalibrationState::l1_normalized:
      return rescale(apply_roi(cube, roi), target);
    case CalibrationState::raw_counts:
      if (cube.channels() == kRgbChannels) return rescale(apply_roi(cube, roi), target);
      throw ValidationError("preprocess: HSI cube must be calibrated before preprocessing");
    case CalibrationState::absorbance:
      break;
  }
  throw ValidationError("preprocess: absorbance cubes are not model inputs");
}

}  // namespace spectrasep
