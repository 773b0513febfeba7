#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectrasep/cube.hpp"

namespace spectrasep {

struct WavelengthBand {
  double lo_nm = 0.0;
  double hi_nm = 0.0;
  bool operator==(const WavelengthBand&) const = default;
};

// Band-ratio operator over absorbance: the mean absorbance in the
// numerator band divided by the mean in the denominator band, mapped
// affinely from [scale_min, scale_max] onto [0, 1] and clamped. An optional
// second stage is evaluated the same way and averaged with the first.
struct BandRatioSpec {
  std::string name;
  WavelengthBand numerator;
  WavelengthBand denominator;
  double scale_min = 0.0;
  double scale_max = 1.0;
  std::shared_ptr<const BandRatioSpec> second_stage;
};

// Names of the four standard functional parameters, in feature order.
inline const std::array<std::string, 4> kStandardIndexNames = {"StO2", "NPI", "THI", "TWI"};

// Throws ConfigError on lo >= hi, bands outside [500, 1000] nm or
// scale_min >= scale_max (checked recursively).
void validate_spec(const BandRatioSpec& spec);

BandRatioSpec band_ratio_from_json(const nlohmann::json& j);
nlohmann::json band_ratio_to_json(const BandRatioSpec& spec);
std::vector<BandRatioSpec> load_index_specs(const nlohmann::json& array);
std::vector<BandRatioSpec> default_index_specs();

struct IndexMap {
  std::string index_name;
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;  // NaN outside the mask

  double at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
};

// A = -log10(R + 1e-6). Rejects raw counts.
SpectralCube absorbance(const SpectralCube& cube);

inline constexpr double kAbsorbanceOffset = 1e-6;

// Channels whose center wavelength lies in [lo, hi].
std::vector<std::size_t> band_channels(const SpectralAxis& axis, std::size_t channels,
                                       const WavelengthBand& band);

// Unclamped affine-scaled ratio of a single stage for one absorbance spectrum.
double band_ratio(std::span<const double> absorbance_spectrum, const std::vector<std::size_t>& num,
                  const std::vector<std::size_t>& den);

// Evaluates `spec` per in-mask pixel of a reflectance (or l1-normalized) cube.
IndexMap compute_index(const SpectralCube& cube, const BandRatioSpec& spec, const Mask& mask);

enum class RoiStatistic { median, mean };

RoiStatistic parse_roi_statistic(std::string_view text);

double roi_statistic(const IndexMap& map, const Mask& mask, RoiStatistic stat = RoiStatistic::median);

struct FeatureConfig {
  std::vector<BandRatioSpec> indices = default_index_specs();
  bool include_spectrum = true;
  RoiStatistic statistic = RoiStatistic::median;
};

struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;
};

// Feature names in output order: index names, then "spectrum_<nm>nm" per
// channel when the spectrum is included.
std::vector<std::string> feature_names(const FeatureConfig& config, const SpectralCube& cube);

// Feature dictionary JSON: {"0": "StO2", ...}.
nlohmann::json feature_dictionary(const std::vector<std::string>& names);

// reflectance cube -> l1 normalization -> ROI -> index ROI statistics and
// per-channel median l1 spectrum over the ROI.
FeatureVector extract_feature_vector(const SpectralCube& cube, const RegionAnnotation& roi,
                                     const FeatureConfig& config = {});

}  // namespace spectrasep
