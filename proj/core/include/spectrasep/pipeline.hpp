#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectrasep/biostats.hpp"
#include "spectrasep/clinical.hpp"
#include "spectrasep/cube.hpp"
#include "spectrasep/evaluation.hpp"
#include "spectrasep/feature_table.hpp"
#include "spectrasep/forest.hpp"
#include "spectrasep/scores.hpp"
#include "spectrasep/synth.hpp"
#include "spectrasep/tissue_index.hpp"

namespace spectrasep {

// Resolved run configuration. Every table defaults to the embedded copy and
// can be overridden from a JSON config file:
//   {"indices": path|array, "dictionary": path|array, "vis_weights": path|object,
//    "scores_dir": path, "include_spectrum": bool, "statistic": "median"|"mean",
//    "n_bootstrap": int, "n_trees": int, "site": "palm"|"finger"}
struct PipelineConfig {
  std::vector<BandRatioSpec> indices = default_index_specs();
  ParameterDictionary dictionary = ParameterDictionary::standard();
  VisWeights vis_weights = default_vis_weights();
  std::optional<std::filesystem::path> scores_dir;
  bool include_spectrum = true;
  RoiStatistic statistic = RoiStatistic::median;
  std::size_t n_bootstrap = kBootstrapSamples;
  int n_trees = 100;
  Site site = Site::palm;

  static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static PipelineConfig load(const std::filesystem::path& path);

  FeatureConfig feature_config() const;
  ForestParams forest_params(int jobs) const;
  ScoreTable score_table(std::string_view name) const;
  nlohmann::json to_json() const;
};

struct CohortImageEntry {
  std::string image_id;
  std::string patient_id;
  Site site = Site::palm;
  std::filesystem::path cube;
  std::optional<std::filesystem::path> white;
  std::optional<std::filesystem::path> dark;
};

// Cohort directory layout (as written by `spectrasep synth`):
//   images.json, annotations.json, clinical.csv, labels.csv,
//   cubes/<image_id>.speccube, references/{white,dark}.speccube
struct CohortDirectory {
  std::filesystem::path root;
  std::vector<CohortImageEntry> images;
  std::vector<RegionAnnotation> annotations;

  static CohortDirectory open(const std::filesystem::path& root);
  std::filesystem::path clinical_csv() const { return root / "clinical.csv"; }
  std::filesystem::path labels_csv() const { return root / "labels.csv"; }
  const RegionAnnotation& annotation_for(std::string_view image_id) const;
  Cohort load_cohort(const ParameterDictionary& dict) const;
};

// Loads a cube and brings it to reflectance: raw counts are calibrated with
// the given references (required then), reflectance passes through.
SpectralCube load_reflectance(const std::filesystem::path& cube,
                              const std::optional<std::filesystem::path>& white,
                              const std::optional<std::filesystem::path>& dark);

// One row per patient with an image of `site` (ordered by patient id).
FeatureTable hsi_features(const CohortDirectory& dir, Site site, const FeatureConfig& config,
                          int jobs = 1);
FeatureTable hsi_features(const SynthCohort& cohort, Site site, const FeatureConfig& config,
                          int jobs = 1);

// Imputed clinical values of the given dictionary parameters.
FeatureTable clinical_features(const Cohort& imputed, const std::vector<std::size_t>& params);
FeatureTable clinical_features(const Cohort& imputed, Tier tier);

enum class ModelKind { hsi, clinical, hsi_clinical };
ModelKind parse_model_kind(std::string_view text);
std::string_view to_string(ModelKind kind);

// Patients of `cohort` usable for `task` (and imaged, when the model uses
// HSI) with their binary labels and the model's feature table, rows in
// cohort order. Clinical features are imputed.
struct TaskDataset {
  std::vector<std::string> patient_ids;
  std::vector<int> labels;
  FeatureTable features;
};
TaskDataset task_dataset(const FeatureTable& hsi, const Cohort& cohort, Task task, ModelKind model, Tier tier);

// Records of the given patients, in that order.
Cohort cohort_subset(const Cohort& cohort, const std::vector<std::string>& patient_ids);

struct EvaluationRequest {
  Task task = Task::sepsis;
  ModelKind model = ModelKind::hsi;
  Tier tier = Tier::ten_hours;
  std::uint64_t seed = 0;
  ForestParams forest{};
  std::size_t n_bootstrap = kBootstrapSamples;
};

struct EvaluationRun {
  SplitPlan plan;
  FeatureTable features;
  ForestEvaluation evaluation;
};

// Task filter -> nested split plan -> forest evaluation on the requested
// feature set. `hsi` may be empty for clinical-only models.
EvaluationRun run_evaluation(const FeatureTable& hsi, const Cohort& cohort,
                             const EvaluationRequest& request);

// Evaluates externally produced predictions.csv rows (e.g. deep models):
// ensembled per patient, then reported like forest predictions.
EvaluationReport evaluate_predictions(const std::vector<PredictionRow>& rows, Task task,
                                      std::string model_name, const SplitPlan* plan,
                                      std::size_t n_bootstrap, std::uint64_t seed, int jobs = 1);

// Welch tests of ROI index values grouped by a task label.
GroupTestReport index_group_tests(const FeatureTable& hsi, const Cohort& cohort, Task grouping,
                                  const std::vector<std::string>& index_names);

// FNV-1a 64 of the canonical JSON dump.
std::uint64_t config_hash(const nlohmann::json& j);

}  // namespace spectrasep
