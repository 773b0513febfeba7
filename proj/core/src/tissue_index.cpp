#include "spectrasep/tissue_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spectrasep/csv.hpp"
#include "spectrasep/defaults.hpp"
#include "spectrasep/error.hpp"

namespace spectrasep {

namespace {

constexpr double kAxisMinNm = 500.0;
constexpr double kAxisMaxNm = 1000.0;
constexpr double kMinDenominator = 1e-12;

void validate_band(const WavelengthBand& band, const std::string& what) {
  if (!(band.lo_nm < band.hi_nm)) {
    throw ConfigError(what + ": band lower limit must be below the upper limit");
  }
  if (band.lo_nm < kAxisMinNm || band.hi_nm > kAxisMaxNm) {
    throw ConfigError(what + ": band must lie within [500, 1000] nm");
  }
}

WavelengthBand band_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(what + ": expected [lo, hi] in nm");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

double absorbance_of(float reflectance) {
  return -std::log10(static_cast<double>(reflectance) + kAbsorbanceOffset);
}

double median_in_place(std::vector<double>& v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), mid);
  return lower + (upper - lower) / 2.0;
}

struct StagePlan {
  std::vector<std::size_t> num;
  std::vector<std::size_t> den;
  double scale_min;
  double scale_max;
};

std::vector<StagePlan> plan_stages(const BandRatioSpec& spec, const SpectralCube& cube) {
  std::vector<StagePlan> stages;
  for (const BandRatioSpec* s = &spec; s != nullptr; s = s->second_stage.get()) {
    StagePlan plan{band_channels(cube.axis(), cube.channels(), s->numerator),
                   band_channels(cube.axis(), cube.channels(), s->denominator), s->scale_min,
                   s->scale_max};
    if (plan.num.empty() || plan.den.empty()) {
      throw ConfigError("index '" + spec.name + "': a band contains no channel centers");
    }
    stages.push_back(std::move(plan));
  }
  return stages;
}

}  // namespace

void validate_spec(const BandRatioSpec& spec) {
  const std::string what = "index '" + spec.name + "'";
  validate_band(spec.numerator, what + " numerator_band");
  validate_band(spec.denominator, what + " denominator_band");
  if (!(spec.scale_min < spec.scale_max)) throw ConfigError(what + ": scale_min must be below scale_max");
  if (spec.second_stage) validate_spec(*spec.second_stage);
}

BandRatioSpec band_ratio_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("index definition must be a JSON object");
  BandRatioSpec spec;
  try {
    spec.name = j.at("name").get<std::string>();
    spec.numerator = band_from_json(j.at("numerator_band"), spec.name + " numerator_band");
    spec.denominator = band_from_json(j.at("denominator_band"), spec.name + " denominator_band");
    spec.scale_min = j.at("scale_min").get<double>();
    spec.scale_max = j.at("scale_max").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("index definition: " + std::string(e.what()));
  }
  if (j.contains("second_stage") && !j["second_stage"].is_null()) {
    nlohmann::json nested = j["second_stage"];
    if (!nested.contains("name")) nested["name"] = spec.name + ".second_stage";
    spec.second_stage = std::make_shared<const BandRatioSpec>(band_ratio_from_json(nested));
  }
  validate_spec(spec);
  return spec;
}

nlohmann::json band_ratio_to_json(const BandRatioSpec& spec) {
  nlohmann::json j = {{"name", spec.name},
                      {"numerator_band", {spec.numerator.lo_nm, spec.numerator.hi_nm}},
                      {"denominator_band", {spec.denominator.lo_nm, spec.denominator.hi_nm}},
                      {"scale_min", spec.scale_min},
                      {"scale_max", spec.scale_max}};
  if (spec.second_stage) j["second_stage"] = band_ratio_to_json(*spec.second_stage);
  return j;
}

std::vector<BandRatioSpec> load_index_specs(const nlohmann::json& array) {
  if (!array.is_array()) throw ConfigError("index configuration must be a JSON array");
  std::vector<BandRatioSpec> specs;
  for (const auto& item : array) specs.push_back(band_ratio_from_json(item));
  return specs;
}

std::vector<BandRatioSpec> default_index_specs() {
  return load_index_specs(embedded_json("indices.default.json"));
}

SpectralCube absorbance(const SpectralCube& cube) {
  if (cube.state() != CalibrationState::reflectance && cube.state() != CalibrationState::l1_normalized) {
    throw ValidationError("absorbance: expected reflectance or l1-normalized input, got " +
                          std::string(to_string(cube.state())));
  }
  SpectralCube out(cube.width(), cube.height(), cube.channels(), cube.axis(), CalibrationState::absorbance);
  const auto src = cube.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<float>(absorbance_of(src[i]));
  return out;
}

std::vector<std::size_t> band_channels(const SpectralAxis& axis, std::size_t channels,
                                       const WavelengthBand& band) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < channels; ++c) {
    const double wl = axis.wavelength(c);
    if (wl >= band.lo_nm && wl <= band.hi_nm) out.push_back(c);
  }
  return out;
}

double band_ratio(std::span<const double> a, const std::vector<std::size_t>& num,
                  const std::vector<std::size_t>& den) {
  double num_sum = 0.0;
  for (auto c : num) num_sum += a[c];
  double den_sum = 0.0;
  for (auto c : den) den_sum += a[c];
  const double num_mean = num_sum / static_cast<double>(num.size());
  double den_mean = den_sum / static_cast<double>(den.size());
  if (std::abs(den_mean) < kMinDenominator) den_mean = std::copysign(kMinDenominator, den_mean);
  return num_mean / den_mean;
}

IndexMap compute_index(const SpectralCube& cube, const BandRatioSpec& spec, const Mask& mask) {
  const bool already_absorbance = cube.state() == CalibrationState::absorbance;
  if (!already_absorbance && cube.state() != CalibrationState::reflectance &&
      cube.state() != CalibrationState::l1_normalized) {
    throw ValidationError("compute_index: raw counts must be calibrated first");
  }
  if (mask.width() != cube.width() || mask.height() != cube.height()) {
    throw GeometryError("compute_index: mask does not match the cube");
  }
  if (mask.count() == 0) throw ComputationError("compute_index: empty mask");

  const auto stages = plan_stages(spec, cube);
  IndexMap map{spec.name, cube.width(), cube.height(),
               std::vector<double>(cube.pixel_count(), std::numeric_limits<double>::quiet_NaN())};

  std::vector<double> a(cube.channels(), 0.0);
  const std::size_t plane = cube.pixel_count();
  const auto values = cube.values();
  for (std::size_t p = 0; p < plane; ++p) {
    if (!mask.at_index(p)) continue;
    for (const auto& stage : stages) {
      for (auto c : stage.num) a[c] = already_absorbance ? values[c * plane + p] : absorbance_of(values[c * plane + p]);
      for (auto c : stage.den) a[c] = already_absorbance ? values[c * plane + p] : absorbance_of(values[c * plane + p]);
    }
    double total = 0.0;
    for (const auto& stage : stages) {
      const double ratio = band_ratio(a, stage.num, stage.den);
      const double scaled = (ratio - stage.scale_min) / (stage.scale_max - stage.scale_min);
      total += std::clamp(scaled, 0.0, 1.0);
    }
    map.values[p] = total / static_cast<double>(stages.size());
  }
  return map;
}

RoiStatistic parse_roi_statistic(std::string_view text) {
  if (text == "median") return RoiStatistic::median;
  if (text == "mean") return RoiStatistic::mean;
  throw ValidationError("unknown ROI statistic '" + std::string(text) + "' (median|mean)");
}

double roi_statistic(const IndexMap& map, const Mask& mask, RoiStatistic stat) {
  if (mask.width() != map.width || mask.height() != map.height) {
    throw GeometryError("roi_statistic: mask does not match the index map");
  }
  std::vector<double> v;
  v.reserve(mask.count());
  for (std::size_t p = 0; p < map.values.size(); ++p) {
    if (mask.at_index(p) && !std::isnan(map.values[p])) v.push_back(map.values[p]);
  }
  if (v.empty()) throw ComputationError("roi_statistic: no in-mask values");
  if (stat == RoiStatistic::mean) {
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
  }
  return median_in_place(v);
}

std::vector<std::string> feature_names(const FeatureConfig& config, const SpectralCube& cube) {
  std::vector<std::string> names;
  for (const auto& spec : config.indices) names.push_back(spec.name);
  if (config.include_spectrum) {
    for (std::size_t c = 0; c < cube.channels(); ++c) {
      names.push_back("spectrum_" + csv::format_number(cube.wavelength(c)) + "nm");
    }
  }
  return names;
}

nlohmann::json feature_dictionary(const std::vector<std::string>& names) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < names.size(); ++i) j[std::to_string(i)] = names[i];
  return j;
}

FeatureVector extract_feature_vector(const SpectralCube& cube, const RegionAnnotation& roi,
                                     const FeatureConfig& config) {
  if (cube.state() != CalibrationState::reflectance && cube.state() != CalibrationState::l1_normalized) {
    throw ValidationError("extract_feature_vector: expected a calibrated cube, got " +
                          std::string(to_string(cube.state())));
  }
  // Cropping before normalizing yields the same in-disk values because the
  // normalization is per pixel; it avoids normalizing the whole image.
  RoiCrop crop = apply_roi(cube, roi);
  const SpectralCube normalized =
      cube.state() == CalibrationState::reflectance ? l1_normalize(crop.cube) : crop.cube;
  if (crop.mask.count() == 0) throw ComputationError("extract_feature_vector: ROI covers no image pixels");

  FeatureVector fv;
  fv.names = feature_names(config, normalized);
  for (const auto& spec : config.indices) {
    fv.values.push_back(roi_statistic(compute_index(normalized, spec, crop.mask), crop.mask, config.statistic));
  }
  if (config.include_spectrum) {
    const std::size_t plane = normalized.pixel_count();
    std::vector<double> v;
    v.reserve(crop.mask.count());
    for (std::size_t c = 0; c < normalized.channels(); ++c) {
      const auto band = normalized.band(c);
      v.clear();
      for (std::size_t p = 0; p < plane; ++p) {
        if (crop.mask.at_index(p)) v.push_back(band[p]);
      }
      fv.values.push_back(median_in_place(v));
    }
  }
  return fv;
}

}  // namespace spectrasep
