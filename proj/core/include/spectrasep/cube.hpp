#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spectrasep {

enum class CalibrationState { raw_counts, reflectance, l1_normalized, absorbance };

std::string_view to_string(CalibrationState state);
CalibrationState parse_calibration_state(std::string_view text);

struct SpectralAxis {
  double start_nm = 500.0;
  double step_nm = 5.0;

  double wavelength(std::size_t channel) const {
    return start_nm + step_nm * static_cast<double>(channel);
  }
  bool operator==(const SpectralAxis&) const = default;
};

// Tivita-style HSI axis: 100 channels from 500 nm in ~5 nm steps.
inline constexpr std::size_t kHsiChannels = 100;
inline constexpr double kHsiStartNm = 500.0;
inline constexpr double kHsiStepNm = 5.0;
inline constexpr std::size_t kRgbChannels = 3;

// Band-sequential (channel-major) 32-bit cube:
//   values[c * height * width + y * width + x]
class SpectralCube {
 public:
  SpectralCube() = default;

  // Zero-filled cube.
  SpectralCube(std::size_t width, std::size_t height, std::size_t channels,
               SpectralAxis axis = {}, CalibrationState state = CalibrationState::raw_counts);

  // Takes ownership of `values`; throws GeometryError on a size mismatch.
  SpectralCube(std::size_t width, std::size_t height, std::size_t channels, SpectralAxis axis,
               CalibrationState state, std::vector<float> values);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t channels() const { return channels_; }
  std::size_t pixel_count() const { return width_ * height_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  const SpectralAxis& axis() const { return axis_; }
  double wavelength(std::size_t channel) const { return axis_.wavelength(channel); }
  CalibrationState state() const { return state_; }
  void set_state(CalibrationState state) { state_ = state; }

  float at(std::size_t c, std::size_t y, std::size_t x) const {
    return values_[(c * height_ + y) * width_ + x];
  }
  float& at(std::size_t c, std::size_t y, std::size_t x) {
    return values_[(c * height_ + y) * width_ + x];
  }

  std::span<const float> band(std::size_t c) const {
    return {values_.data() + c * pixel_count(), pixel_count()};
  }
  std::span<float> band(std::size_t c) { return {values_.data() + c * pixel_count(), pixel_count()}; }

  std::span<const float> values() const { return values_; }
  std::span<float> values() { return values_; }

  // Copies the spectrum of pixel (x, y) into `out` (size == channels()).
  void spectrum(std::size_t x, std::size_t y, std::span<float> out) const;

  bool same_geometry(const SpectralCube& other) const {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  bool operator==(const SpectralCube& other) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t channels_ = 0;
  SpectralAxis axis_{};
  CalibrationState state_ = CalibrationState::raw_counts;
  std::vector<float> values_;
};

// Checks the value-domain invariants for the cube's calibration state
// (finite values, nonnegative reflectance, unit-sum l1 spectra). Throws
// FormatError naming the first offending element.
void validate_values(const SpectralCube& cube);

// True when the axis is the 100-channel 500-1000 nm HSI layout.
bool is_hsi_axis(const SpectralCube& cube);

class Mask {
 public:
  Mask() = default;
  Mask(std::size_t width, std::size_t height, bool fill = false)
      : width_(width), height_(height), bits_(width * height, fill ? 1 : 0) {}

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  bool operator()(std::size_t x, std::size_t y) const { return bits_[y * width_ + x] != 0; }
  void set(std::size_t x, std::size_t y, bool v) { bits_[y * width_ + x] = v ? 1 : 0; }
  bool at_index(std::size_t i) const { return bits_[i] != 0; }
  std::size_t count() const;
  std::span<const std::uint8_t> bits() const { return bits_; }

  bool operator==(const Mask&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> bits_;
};

enum class Site { palm, finger };

std::string_view to_string(Site site);
Site parse_site(std::string_view text);

inline constexpr double kPalmRadiusPx = 100.0;
inline constexpr double kFingerRadiusPx = 20.0;

double default_radius(Site site);

// Circular skin region. Coordinates are continuous pixel coordinates:
// pixel (x, y) covers [x, x+1) x [y, y+1) and its center is (x+0.5, y+0.5).
struct RegionAnnotation {
  std::string image_id;
  Site site = Site::palm;
  double center_x = 0.0;
  double center_y = 0.0;
  double radius = kPalmRadiusPx;

  bool operator==(const RegionAnnotation&) const = default;
};

// Throws AnnotationError when radius <= 0, when 2r is not a whole number of
// pixels, or when the center lies outside [0, width) x [0, height).
void validate_annotation(const RegionAnnotation& roi, std::size_t width, std::size_t height);

struct RoiCrop {
  SpectralCube cube;          // 2r x 2r, zero outside the disk and outside the image
  Mask mask;                  // inside the disk and inside the source image
  RegionAnnotation annotation;
};

inline constexpr std::size_t kModelInputSize = 224;

struct PreprocessedSample {
  SpectralCube tensor;  // 224 x 224 x C
  Mask mask;            // 224 x 224
  RegionAnnotation source_annotation;
};

// Reflectance R = (raw - dark) / max(white - dark, 1e-6), clamped to [0, 2].
// Throws GeometryError when shapes differ and CalibrationError when
// white <= dark on more than 1% of the elements.
SpectralCube calibrate(const SpectralCube& raw, const SpectralCube& white, const SpectralCube& dark);

inline constexpr double kCalibrationFloor = 1e-6;
inline constexpr double kCalibrationClampMax = 2.0;
inline constexpr double kMaxDegenerateReferenceFraction = 0.01;

// Divides every pixel spectrum by its l1 norm. All-zero spectra stay zero.
// Accepts reflectance or already-normalized cubes.
SpectralCube l1_normalize(const SpectralCube& cube);

// Crops the 2r x 2r square around the annotation center, zeroing pixels whose
// center lies farther than r from the annotation center. Parts of the square
// outside the image are zero-padded.
RoiCrop apply_roi(const SpectralCube& cube, const RegionAnnotation& roi);

// Disk mask of a 2r x 2r crop in crop coordinates (ignores image bounds).
Mask disk_mask(std::size_t side);

// Mask-aware bilinear resampling of a square crop to target x target.
// Only in-mask source pixels contribute; the mask is resampled with nearest
// neighbour and values outside the output mask are exactly zero.
PreprocessedSample rescale(const RoiCrop& cropped, std::size_t target = kModelInputSize);

// calibrate-free convenience: l1_normalize -> apply_roi -> rescale.
PreprocessedSample preprocess(const SpectralCube& reflectance, const RegionAnnotation& roi,
                              std::size_t target = kModelInputSize);

}  // namespace spectrasep
