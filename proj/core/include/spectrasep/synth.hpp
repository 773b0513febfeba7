#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectrasep/clinical.hpp"
#include "spectrasep/cube.hpp"
#include "spectrasep/tissue_index.hpp"

namespace spectrasep {

struct SynthConfig {
  std::size_t n_patients = 160;
  double sepsis_prevalence = 0.30;
  double mortality_prevalence = 0.14;
  double unsure_fraction = 0.0;
  double lost_fraction = 0.0;
  std::size_t width = 64;
  std::size_t height = 64;
  std::size_t channels = kHsiChannels;
  SpectralAxis axis{kHsiStartNm, kHsiStepNm};
  // Absorbance shift (>= 0) per index for the positive class. The shift is
  // added to the index's denominator band for StO2 and NPI (lowering them)
  // and to the numerator band otherwise (raising them).
  std::map<std::string, double> index_effects;
  // Positive-class shift of clinical parameters in units of their spread.
  std::map<std::string, double> clinical_effects;
  Task effect_task = Task::sepsis;
  double missingness = 0.016;
  double pixel_noise = 0.004;
  double patient_variability = 1.0;
  std::vector<Site> sites{Site::palm};
  std::uint64_t seed = 0;

  // 30% sepsis and 14% mortality prevalence with moderate planted effects.
  static SynthConfig defaults();
  // Copy with every index and clinical effect multiplied by `scale`.
  SynthConfig scaled_effects(double scale) const;

  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j);
};

// -1 when the planted shift lowers the index, +1 when it raises it.
int index_effect_direction(std::string_view index_name);

struct SynthImage {
  std::string image_id;
  std::size_t patient = 0;
  RegionAnnotation annotation;
  std::uint64_t seed = 0;
};

struct SynthPatient {
  std::string patient_id;
  SepsisLabel sepsis_label = SepsisLabel::no_sepsis;
  SurvivalLabel survival_label = SurvivalLabel::survived;
  bool effect_positive = false;
  // Patient-level chromophore amplitudes of the base absorbance model.
  std::vector<double> bump_amplitudes;
  double baseline = 0.0;
  double slope = 0.0;
};

class SynthCohort {
 public:
  SynthConfig config;
  std::vector<BandRatioSpec> indices;
  SpectralCube white;
  SpectralCube dark;
  std::vector<SynthPatient> patients;
  std::vector<SynthImage> images;
  Cohort clinical;  // pre-imputation, labels merged

  // Noise-free expected absorbance spectrum of a patient.
  std::vector<double> expected_absorbance(std::size_t patient) const;
  SpectralCube render_reflectance(const SynthImage& image) const;
  // Raw counts: dark + R * (white - dark), with sensor noise.
  SpectralCube render_raw(const SynthImage& image) const;

  nlohmann::json manifest() const;
};

// Throws ValidationError for impossible configs (prevalence outside (0, 1),
// fewer than 5 patients in a class, negative effects, empty images).
SynthCohort generate(const SynthConfig& config, const std::vector<BandRatioSpec>& indices,
                     const ParameterDictionary& dict);

// Writes the cohort directory layout read by CohortDirectory.
void write_cohort(const SynthCohort& cohort, const std::filesystem::path& dir, int jobs = 1);

}  // namespace spectrasep
