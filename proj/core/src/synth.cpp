#include "spectrasep/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "spectrasep/cube_io.hpp"
#include "spectrasep/error.hpp"
#include "spectrasep/parallel.hpp"
#include "spectrasep/rng.hpp"

namespace spectrasep {

namespace {

constexpr std::uint64_t kLabelStream = 1;
constexpr std::uint64_t kPatientStream = 2;
constexpr std::uint64_t kClinicalStream = 3;
constexpr std::uint64_t kImageStream = 4;
constexpr std::uint64_t kSensorStream = 5;
constexpr double kSensorNoiseCounts = 1.5;
constexpr std::size_t kMinClassSize = 5;

struct Bump {
  double center_nm;
  double width_nm;
  double amplitude;
};

// Haemoglobin pair, deoxyhaemoglobin shoulder and water band.
constexpr Bump kBumps[] = {{545.0, 12.0, 0.20}, {575.0, 12.0, 0.20}, {760.0, 18.0, 0.06}, {970.0, 25.0, 0.12}};

struct Typical {
  const char* name;
  double mean;
  double sd;
  int decimals;
};

constexpr Typical kTypical[] = {
    {"age", 65, 15, 0},          {"height", 172, 10, 0},      {"weight", 80, 18, 1},
    {"heart_rate", 90, 18, 0},   {"systolic_bp", 120, 20, 0}, {"diastolic_bp", 65, 12, 0},
    {"map", 83, 13, 0},          {"respiratory_rate", 18, 5, 0}, {"temperature", 37.2, 0.8, 1},
    {"spo2", 95, 3, 0},          {"gcs", 13, 3, 0},           {"crt", 2.5, 1, 1},
    {"sms", 1.5, 1.2, 0},        {"ph", 7.38, 0.06, 2},       {"pco2", 40, 7, 0},
    {"po2", 95, 25, 0},          {"so2", 95, 3, 0},           {"lactate", 1.8, 1.0, 1},
    {"hb_bga", 11, 2, 1},        {"fio2", 0.35, 0.12, 2},     {"peep", 6, 3, 0},
    {"ppeak", 20, 6, 0},         {"noradrenaline", 0.05, 0.08, 3}, {"adrenaline", 0.01, 0.02, 3},
    {"dopamine", 0.5, 1.5, 1},   {"dobutamine", 0.5, 1.5, 1}, {"milrinone", 0.02, 0.05, 3},
    {"vasopressin", 0.0002, 0.0004, 5}, {"creatinine", 1.2, 0.6, 2}, {"gfr", 70, 25, 0},
    {"urea", 45, 20, 0},         {"bilirubin", 0.9, 0.6, 1},  {"ldh", 280, 90, 0},
    {"crp", 60, 50, 0},          {"pct", 1.0, 1.5, 2},        {"wbc", 10, 4, 1},
    {"platelets", 220, 80, 0},   {"hb", 11, 2, 1},            {"inr", 1.2, 0.3, 2},
    {"sodium", 139, 4, 0},
};

constexpr std::pair<const char*, double> kBooleanRates[] = {
    {"ecmo", 0.03}, {"renal_replacement", 0.08}, {"mechanical_ventilation", 0.4}};

Typical typical_for(const ParameterDescriptor& d) {
  for (const auto& t : kTypical) {
    if (d.name == t.name) return t;
  }
  const double lo = d.plausible_min.value_or(0.0);
  const double hi = d.plausible_max.value_or(lo + 1.0);
  return {d.name.c_str(), (lo + hi) / 2.0, (hi - lo) / 8.0, 3};
}

double round_to(double v, int decimals) {
  const double f = std::pow(10.0, decimals);
  return std::round(v * f) / f;
}

std::string patient_id(std::size_t i) {
  std::string digits = std::to_string(i + 1);
  if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
  return "P" + digits;
}

const BandRatioSpec& find_index(const std::vector<BandRatioSpec>& indices, const std::string& name) {
  for (const auto& spec : indices) {
    if (spec.name == name) return spec;
  }
  throw ValidationError("synth: effect for unknown index '" + name + "'");
}

void validate(const SynthConfig& c) {
  if (c.n_patients == 0) throw ValidationError("synth: n_patients must be positive");
  if (!(c.sepsis_prevalence > 0.0 && c.sepsis_prevalence < 1.0)) {
    throw ValidationError("synth: sepsis_prevalence must lie in (0, 1)");
  }
  if (!(c.mortality_prevalence > 0.0 && c.mortality_prevalence < 1.0)) {
    throw ValidationError("synth: mortality_prevalence must lie in (0, 1)");
  }
  if (!(c.unsure_fraction >= 0.0 && c.unsure_fraction < 1.0) || !(c.lost_fraction >= 0.0 && c.lost_fraction < 1.0)) {
    throw ValidationError("synth: unsure_fraction and lost_fraction must lie in [0, 1)");
  }
  if (c.width == 0 || c.height == 0 || c.channels == 0) throw ValidationError("synth: image size must be positive");
  if (!(c.axis.step_nm > 0.0)) throw ValidationError("synth: wavelength_step_nm must be positive");
  if (!(c.missingness >= 0.0 && c.missingness < 1.0)) throw ValidationError("synth: missingness must lie in [0, 1)");
  if (!(c.pixel_noise >= 0.0) || !(c.patient_variability >= 0.0)) {
    throw ValidationError("synth: noise and variability must be nonnegative");
  }
  for (const auto& [name, delta] : c.index_effects) {
    if (!(delta >= 0.0)) throw ValidationError("synth: index effect for '" + name + "' must be >= 0");
  }
  if (c.sites.empty()) throw ValidationError("synth: at least one site is required");
}

std::size_t class_count(double prevalence, std::size_t eligible) {
  return static_cast<std::size_t>(std::llround(prevalence * static_cast<double>(eligible)));
}

void require_classes(std::size_t positive, std::size_t eligible, const char* task) {
  if (positive < kMinClassSize || eligible - positive < kMinClassSize) {
    throw ValidationError(std::string("synth: ") + task + " classes of " + std::to_string(positive) + " and " +
                          std::to_string(eligible - positive) + " patients; each needs at least " +
                          std::to_string(kMinClassSize));
  }
}

float white_level(std::size_t c, std::size_t x, std::size_t width) {
  const double spectral = 2800.0 + 600.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(c) / 60.0);
  const double vignette = 1.0 - 0.05 * std::abs(static_cast<double>(x) / static_cast<double>(width) - 0.5);
  return static_cast<float>(spectral * vignette);
}

float dark_level(std::size_t y, std::size_t height) {
  return static_cast<float>(90.0 + 10.0 * static_cast<double>(y) / static_cast<double>(height));
}

}  // namespace

int index_effect_direction(std::string_view index_name) {
  return index_name == "StO2" || index_name == "NPI" ? -1 : 1;
}

SynthConfig SynthConfig::defaults() {
  SynthConfig c;
  c.index_effects = {{"StO2", 0.003}, {"NPI", 0.0}, {"THI", 0.003}, {"TWI", 0.003}};
  c.clinical_effects = {{"noradrenaline", 0.6}, {"lactate", 0.8}, {"crp", 0.8}, {"pct", 0.6}};
  return c;
}

SynthConfig SynthConfig::scaled_effects(double scale) const {
  SynthConfig c = *this;
  for (auto& [name, v] : c.index_effects) v *= scale;
  for (auto& [name, v] : c.clinical_effects) v *= scale;
  return c;
}

nlohmann::json SynthConfig::to_json() const {
  nlohmann::json site_names = nlohmann::json::array();
  for (Site s : sites) site_names.push_back(to_string(s));
  return {{"n_patients", n_patients},
          {"sepsis_prevalence", sepsis_prevalence},
          {"mortality_prevalence", mortality_prevalence},
          {"unsure_fraction", unsure_fraction},
          {"lost_fraction", lost_fraction},
          {"width", width},
          {"height", height},
          {"channels", channels},
          {"wavelength_start_nm", axis.start_nm},
          {"wavelength_step_nm", axis.step_nm},
          {"index_effects", index_effects},
          {"clinical_effects", clinical_effects},
          {"effect_task", to_string(effect_task)},
          {"missingness", missingness},
          {"pixel_noise", pixel_noise},
          {"patient_variability", patient_variability},
          {"sites", site_names},
          {"seed", seed}};
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("synth config must be a JSON object");
  SynthConfig c = defaults();
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "n_patients") c.n_patients = v.get<std::size_t>();
      else if (key == "sepsis_prevalence") c.sepsis_prevalence = v.get<double>();
      else if (key == "mortality_prevalence") c.mortality_prevalence = v.get<double>();
      else if (key == "unsure_fraction") c.unsure_fraction = v.get<double>();
      else if (key == "lost_fraction") c.lost_fraction = v.get<double>();
      else if (key == "width") c.width = v.get<std::size_t>();
      else if (key == "height") c.height = v.get<std::size_t>();
      else if (key == "channels") c.channels = v.get<std::size_t>();
      else if (key == "wavelength_start_nm") c.axis.start_nm = v.get<double>();
      else if (key == "wavelength_step_nm") c.axis.step_nm = v.get<double>();
      else if (key == "index_effects") c.index_effects = v.get<std::map<std::string, double>>();
      else if (key == "clinical_effects") c.clinical_effects = v.get<std::map<std::string, double>>();
      else if (key == "effect_task") c.effect_task = parse_task(v.get<std::string>());
      else if (key == "missingness") c.missingness = v.get<double>();
      else if (key == "pixel_noise") c.pixel_noise = v.get<double>();
      else if (key == "patient_variability") c.patient_variability = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "sites") {
        c.sites.clear();
        for (const auto& s : v) c.sites.push_back(parse_site(s.get<std::string>()));
      } else {
        throw ValidationError("synth config: unknown field '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("synth config: " + std::string(e.what()));
  }
  validate(c);
  return c;
}

std::vector<double> SynthCohort::expected_absorbance(std::size_t patient) const {
  const SynthPatient& p = patients.at(patient);
  std::vector<double> a(config.channels);
  for (std::size_t c = 0; c < config.channels; ++c) {
    const double wl = config.axis.wavelength(c);
    double v = p.baseline + p.slope * (wl - 500.0) / 500.0;
    for (std::size_t b = 0; b < std::size(kBumps); ++b) {
      const double z = (wl - kBumps[b].center_nm) / kBumps[b].width_nm;
      v += p.bump_amplitudes[b] * std::exp(-0.5 * z * z);
    }
    a[c] = v;
  }
  if (p.effect_positive) {
    for (const auto& [name, delta] : config.index_effects) {
      if (delta == 0.0) continue;
      const BandRatioSpec& spec = find_index(indices, name);
      const WavelengthBand& band = index_effect_direction(name) < 0 ? spec.denominator : spec.numerator;
      for (auto c : band_channels(config.axis, config.channels, band)) a[c] += delta;
    }
  }
  return a;
}

SpectralCube SynthCohort::render_reflectance(const SynthImage& image) const {
  const std::vector<double> a = expected_absorbance(image.patient);
  SpectralCube cube(config.width, config.height, config.channels, config.axis, CalibrationState::reflectance);
  Rng rng(image.seed);
  const std::size_t plane = cube.pixel_count();
  auto values = cube.values();
  for (std::size_t c = 0; c < config.channels; ++c) {
    for (std::size_t p = 0; p < plane; ++p) {
      const double noisy = a[c] + config.pixel_noise * rng.normal();
      values[c * plane + p] = static_cast<float>(std::clamp(std::pow(10.0, -noisy), 0.0, kCalibrationClampMax));
    }
  }
  return cube;
}

SpectralCube SynthCohort::render_raw(const SynthImage& image) const {
  SpectralCube cube = render_reflectance(image);
  Rng rng(derive_seed(image.seed, kSensorStream));
  auto values = cube.values();
  const auto wv = white.values();
  const auto dv = dark.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double raw = dv[i] + static_cast<double>(values[i]) * (wv[i] - dv[i]) + kSensorNoiseCounts * rng.normal();
    values[i] = static_cast<float>(std::max(raw, 0.0));
  }
  cube.set_state(CalibrationState::raw_counts);
  return cube;
}

nlohmann::json SynthCohort::manifest() const {
  nlohmann::json planted = nlohmann::json::object();
  for (const auto& [name, delta] : config.index_effects) {
    const BandRatioSpec& spec = find_index(indices, name);
    const int dir = index_effect_direction(name);
    const WavelengthBand& band = dir < 0 ? spec.denominator : spec.numerator;
    planted[name] = {{"absorbance_shift", delta},
                     {"direction", delta == 0.0 ? "none" : (dir < 0 ? "lower" : "higher")},
                     {"shifted_band_nm", {band.lo_nm, band.hi_nm}}};
  }
  std::map<std::string, std::size_t> sepsis_counts;
  std::map<std::string, std::size_t> survival_counts;
  nlohmann::json patient_rows = nlohmann::json::array();
  for (const auto& p : patients) {
    ++sepsis_counts[std::string(to_string(p.sepsis_label))];
    ++survival_counts[std::string(to_string(p.survival_label))];
    patient_rows.push_back({{"patient_id", p.patient_id}, {"effect_positive", p.effect_positive}});
  }
  nlohmann::json index_specs = nlohmann::json::array();
  for (const auto& spec : indices) index_specs.push_back(band_ratio_to_json(spec));
  return {{"generator", "spectrasep.synth"},
          {"config", config.to_json()},
          {"indices", std::move(index_specs)},
          {"planted_index_effects", std::move(planted)},
          {"planted_clinical_effects_sd", config.clinical_effects},
          {"effect_task", to_string(config.effect_task)},
          {"sepsis_counts", sepsis_counts},
          {"survival_counts", survival_counts},
          {"n_images", images.size()},
          {"patients", std::move(patient_rows)}};
}

SynthCohort generate(const SynthConfig& config, const std::vector<BandRatioSpec>& indices,
                     const ParameterDictionary& dict) {
  validate(config);
  for (const auto& [name, delta] : config.index_effects) find_index(indices, name);
  for (const auto& [name, shift] : config.clinical_effects) {
    if (!dict.find(name)) throw ValidationError("synth: clinical effect for unknown parameter '" + name + "'");
  }

  const std::size_t n = config.n_patients;
  const auto n_unsure = class_count(config.unsure_fraction, n);
  const auto n_lost = class_count(config.lost_fraction, n);
  const auto n_sepsis = class_count(config.sepsis_prevalence, n - n_unsure);
  const auto n_died = class_count(config.mortality_prevalence, n - n_lost);
  require_classes(n_sepsis, n - n_unsure, "sepsis");
  require_classes(n_died, n - n_lost, "mortality");

  SynthCohort cohort;
  cohort.config = config;
  cohort.indices = indices;

  Rng label_rng(derive_seed(config.seed, kLabelStream));
  std::vector<SepsisLabel> sepsis(n, SepsisLabel::no_sepsis);
  std::fill_n(sepsis.begin(), n_sepsis, SepsisLabel::sepsis);
  std::fill_n(sepsis.begin() + static_cast<std::ptrdiff_t>(n_sepsis), n_unsure, SepsisLabel::unsure);
  label_rng.shuffle(std::span<SepsisLabel>(sepsis));
  std::vector<SurvivalLabel> survival(n, SurvivalLabel::survived);
  std::fill_n(survival.begin(), n_died, SurvivalLabel::died);
  std::fill_n(survival.begin() + static_cast<std::ptrdiff_t>(n_died), n_lost, SurvivalLabel::lost_to_followup);
  label_rng.shuffle(std::span<SurvivalLabel>(survival));

  const double var = config.patient_variability;
  cohort.clinical.dictionary = dict;
  for (std::size_t i = 0; i < n; ++i) {
    SynthPatient p;
    p.patient_id = patient_id(i);
    p.sepsis_label = sepsis[i];
    p.survival_label = survival[i];
    p.effect_positive = config.effect_task == Task::sepsis ? sepsis[i] == SepsisLabel::sepsis
                                                           : survival[i] == SurvivalLabel::died;
    Rng rng(derive_seed(config.seed, kPatientStream, i));
    p.baseline = 0.25 + 0.03 * var * rng.normal();
    p.slope = -0.10 + 0.02 * var * rng.normal();
    for (const auto& bump : kBumps) p.bump_amplitudes.push_back(bump.amplitude * (1.0 + 0.10 * var * rng.normal()));

    PatientRecord rec;
    rec.patient_id = p.patient_id;
    rec.sepsis_label = p.sepsis_label;
    rec.survival_label = p.survival_label;
    Rng clin(derive_seed(config.seed, kClinicalStream, i));
    for (std::size_t k = 0; k < dict.size(); ++k) {
      const ParameterDescriptor& d = dict[k];
      double value = 0.0;
      const double u = clin.uniform();
      const double z = clin.normal();
      if (d.kind == ParameterKind::categorical) {
        value = static_cast<double>(std::min(d.categories.size() - 1,
                                             static_cast<std::size_t>(u * static_cast<double>(d.categories.size()))));
      } else if (d.kind == ParameterKind::boolean) {
        double rate = 0.1;
        for (const auto& [name, r] : kBooleanRates) {
          if (d.name == name) rate = r;
        }
        value = u < rate ? 1.0 : 0.0;
      } else {
        const Typical t = typical_for(d);
        double shift = 0.0;
        if (p.effect_positive) {
          auto it = config.clinical_effects.find(d.name);
          if (it != config.clinical_effects.end()) shift = it->second;
        }
        value = t.mean + t.sd * (z + shift);
        if (d.plausible_min) value = std::max(value, *d.plausible_min);
        if (d.plausible_max) value = std::min(value, *d.plausible_max);
        value = round_to(value, t.decimals);
      }
      const bool missing = clin.bernoulli(config.missingness);
      rec.values.push_back(missing ? ClinicalValue{} : ClinicalValue{value});
    }
    cohort.clinical.records.push_back(std::move(rec));
    cohort.patients.push_back(std::move(p));
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (Site site : config.sites) {
      SynthImage image;
      image.patient = i;
      image.image_id = cohort.patients[i].patient_id + "_" + std::string(to_string(site));
      image.annotation = {image.image_id, site, static_cast<double>(config.width) / 2.0,
                          static_cast<double>(config.height) / 2.0, default_radius(site)};
      image.seed = derive_seed(config.seed, kImageStream, cohort.images.size());
      cohort.images.push_back(std::move(image));
    }
  }

  cohort.white = SpectralCube(config.width, config.height, config.channels, config.axis, CalibrationState::raw_counts);
  cohort.dark = cohort.white;
  for (std::size_t c = 0; c < config.channels; ++c) {
    for (std::size_t y = 0; y < config.height; ++y) {
      for (std::size_t x = 0; x < config.width; ++x) {
        cohort.white.at(c, y, x) = white_level(c, x, config.width);
        cohort.dark.at(c, y, x) = dark_level(y, config.height);
      }
    }
  }
  return cohort;
}

void write_cohort(const SynthCohort& cohort, const std::filesystem::path& dir, int jobs) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "cubes");
  fs::create_directories(dir / "references");
  save_cube(cohort.white, dir / "references" / "white.speccube");
  save_cube(cohort.dark, dir / "references" / "dark.speccube");

  nlohmann::json entries = nlohmann::json::array();
  std::vector<RegionAnnotation> annotations;
  for (const auto& image : cohort.images) {
    entries.push_back({{"image_id", image.image_id},
                       {"patient_id", cohort.patients[image.patient].patient_id},
                       {"site", to_string(image.annotation.site)},
                       {"cube", "cubes/" + image.image_id + ".speccube"},
                       {"white", "references/white.speccube"},
                       {"dark", "references/dark.speccube"}});
    annotations.push_back(image.annotation);
  }
  write_json_file(dir / "images.json", entries);
  save_annotations(annotations, dir / "annotations.json");

  parallel_for(cohort.images.size(), jobs, [&](std::size_t i) {
    const auto& image = cohort.images[i];
    save_cube(cohort.render_raw(image), dir / "cubes" / (image.image_id + ".speccube"));
  });

  {
    std::ofstream out(dir / "clinical.csv", std::ios::binary);
    write_clinical_csv(cohort.clinical, out);
    if (!out) throw Error("write failed: " + (dir / "clinical.csv").string());
  }
  {
    std::ofstream out(dir / "labels.csv", std::ios::binary);
    write_labels_csv(cohort.clinical, out);
    if (!out) throw Error("write failed: " + (dir / "labels.csv").string());
  }
  write_json_file(dir / "synth_manifest.json", cohort.manifest());
}

}  // namespace spectrasep
