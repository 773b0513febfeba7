#include "spectrasep/pipeline.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "spectrasep/cube_io.hpp"
#include "spectrasep/error.hpp"
#include "spectrasep/parallel.hpp"

namespace spectrasep {

namespace {

nlohmann::json inline_or_file(const nlohmann::json& v, const std::filesystem::path& base_dir) {
  if (v.is_string()) {
    std::filesystem::path p = v.get<std::string>();
    return read_json_file(p.is_absolute() ? p : base_dir / p);
  }
  return v;
}

FeatureTable features_from_vectors(std::vector<std::string> ids, std::vector<FeatureVector> vectors) {
  if (vectors.empty()) throw ComputationError("hsi features: no images for the requested site");
  std::vector<double> values;
  for (const auto& fv : vectors) {
    if (fv.names != vectors.front().names) throw ComputationError("hsi features: images disagree on feature layout");
    values.insert(values.end(), fv.values.begin(), fv.values.end());
  }
  return FeatureTable(std::move(ids), vectors.front().names, std::move(values));
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  PipelineConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "indices") {
        c.indices = load_index_specs(inline_or_file(v, base_dir));
      } else if (key == "dictionary") {
        c.dictionary = ParameterDictionary::from_json(inline_or_file(v, base_dir));
      } else if (key == "vis_weights") {
        c.vis_weights = vis_weights_from_json(inline_or_file(v, base_dir));
      } else if (key == "scores_dir") {
        std::filesystem::path p = v.get<std::string>();
        c.scores_dir = p.is_absolute() ? p : base_dir / p;
      } else if (key == "include_spectrum") {
        c.include_spectrum = v.get<bool>();
      } else if (key == "statistic") {
        c.statistic = parse_roi_statistic(v.get<std::string>());
      } else if (key == "n_bootstrap") {
        c.n_bootstrap = v.get<std::size_t>();
        if (c.n_bootstrap == 0) throw ConfigError("config field 'n_bootstrap' must be positive");
      } else if (key == "n_trees") {
        c.n_trees = v.get<int>();
        if (c.n_trees < 1) throw ConfigError("config field 'n_trees' must be positive");
      } else if (key == "site") {
        c.site = parse_site(v.get<std::string>());
      } else {
        throw ConfigError("config: unknown field '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path), path.parent_path());
}

FeatureConfig PipelineConfig::feature_config() const {
  FeatureConfig f;
  f.indices = indices;
  f.include_spectrum = include_spectrum;
  f.statistic = statistic;
  return f;
}

ForestParams PipelineConfig::forest_params(int jobs) const {
  ForestParams p;
  p.n_trees = n_trees;
  p.jobs = jobs;
  return p;
}

ScoreTable PipelineConfig::score_table(std::string_view name) const {
  if (scores_dir) {
    return ScoreTable::from_json(read_json_file(*scores_dir / (std::string(name) + ".table.json")), dictionary);
  }
  return standard_score_table(name, dictionary);
}

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json idx = nlohmann::json::array();
  for (const auto& spec : indices) idx.push_back(band_ratio_to_json(spec));
  return {{"indices", std::move(idx)},
          {"dictionary", dictionary.to_json()},
          {"vis_weights", vis_weights},
          {"scores_dir", scores_dir ? nlohmann::json(scores_dir->generic_string()) : nlohmann::json()},
          {"include_spectrum", include_spectrum},
          {"statistic", statistic == RoiStatistic::median ? "median" : "mean"},
          {"n_bootstrap", n_bootstrap},
          {"n_trees", n_trees},
          {"site", to_string(site)}};
}

CohortDirectory CohortDirectory::open(const std::filesystem::path& root) {
  CohortDirectory dir;
  dir.root = root;
  const nlohmann::json images = read_json_file(root / "images.json");
  if (!images.is_array()) throw IngestionError((root / "images.json").string() + ": expected a JSON array");
  std::set<std::string> seen;
  for (const auto& item : images) {
    CohortImageEntry e;
    try {
      e.image_id = item.at("image_id").get<std::string>();
      e.patient_id = item.at("patient_id").get<std::string>();
      e.site = parse_site(item.at("site").get<std::string>());
      e.cube = root / item.at("cube").get<std::string>();
      if (item.contains("white")) e.white = root / item["white"].get<std::string>();
      if (item.contains("dark")) e.dark = root / item["dark"].get<std::string>();
    } catch (const nlohmann::json::exception& ex) {
      throw IngestionError((root / "images.json").string() + ": " + ex.what());
    }
    if (!seen.insert(e.image_id).second) {
      throw IngestionError((root / "images.json").string() + ": duplicate image_id '" + e.image_id + "'");
    }
    dir.images.push_back(std::move(e));
  }
  dir.annotations = load_annotations(root / "annotations.json");
  return dir;
}

const RegionAnnotation& CohortDirectory::annotation_for(std::string_view image_id) const {
  for (const auto& a : annotations) {
    if (a.image_id == image_id) return a;
  }
  throw AnnotationError("no annotation for image '" + std::string(image_id) + "'");
}

Cohort CohortDirectory::load_cohort(const ParameterDictionary& dict) const {
  Cohort cohort = ingest_csv(clinical_csv(), dict);
  merge_labels(cohort, labels_csv());
  return cohort;
}

SpectralCube load_reflectance(const std::filesystem::path& cube, const std::optional<std::filesystem::path>& white,
                              const std::optional<std::filesystem::path>& dark) {
  SpectralCube c = load_cube(cube);
  switch (c.state()) {
    case CalibrationState::raw_counts:
      if (!white || !dark) throw ValidationError(cube.string() + ": raw counts need white and dark references");
      return calibrate(c, load_cube(*white), load_cube(*dark));
    case CalibrationState::reflectance:
    case CalibrationState::l1_normalized:
      return c;
    case CalibrationState::absorbance:
      break;
  }
  throw ValidationError(cube.string() + ": expected raw counts or reflectance, got " +
                        std::string(to_string(c.state())));
}

FeatureTable hsi_features(const CohortDirectory& dir, Site site, const FeatureConfig& config, int jobs) {
  std::map<std::string, const CohortImageEntry*> by_patient;
  for (const auto& e : dir.images) {
    if (e.site != site) continue;
    if (!by_patient.emplace(e.patient_id, &e).second) {
      throw IngestionError("patient '" + e.patient_id + "' has more than one " + std::string(to_string(site)) +
                           " image");
    }
  }
  std::vector<std::string> ids;
  std::vector<const CohortImageEntry*> entries;
  for (const auto& [id, e] : by_patient) {
    ids.push_back(id);
    entries.push_back(e);
  }
  std::vector<FeatureVector> vectors(entries.size());
  parallel_for(entries.size(), jobs, [&](std::size_t i) {
    const auto& e = *entries[i];
    const SpectralCube reflectance = load_reflectance(e.cube, e.white, e.dark);
    vectors[i] = extract_feature_vector(reflectance, dir.annotation_for(e.image_id), config);
  });
  return features_from_vectors(std::move(ids), std::move(vectors));
}

FeatureTable hsi_features(const SynthCohort& cohort, Site site, const FeatureConfig& config, int jobs) {
  std::map<std::string, const SynthImage*> by_patient;
  for (const auto& image : cohort.images) {
    if (image.annotation.site == site) by_patient.emplace(cohort.patients[image.patient].patient_id, &image);
  }
  std::vector<std::string> ids;
  std::vector<const SynthImage*> images;
  for (const auto& [id, image] : by_patient) {
    ids.push_back(id);
    images.push_back(image);
  }
  std::vector<FeatureVector> vectors(images.size());
  parallel_for(images.size(), jobs, [&](std::size_t i) {
    const SpectralCube reflectance = calibrate(cohort.render_raw(*images[i]), cohort.white, cohort.dark);
    vectors[i] = extract_feature_vector(reflectance, images[i]->annotation, config);
  });
  return features_from_vectors(std::move(ids), std::move(vectors));
}

FeatureTable clinical_features(const Cohort& imputed, const std::vector<std::size_t>& params) {
  std::vector<std::string> ids;
  std::vector<std::string> names;
  for (auto p : params) names.push_back(imputed.dictionary[p].name);
  std::vector<double> values;
  for (const auto& rec : imputed.records) {
    ids.push_back(rec.patient_id);
    for (auto p : params) {
      const auto& v = rec.values.at(p);
      if (!v) {
        throw ComputationError("clinical features: missing '" + imputed.dictionary[p].name + "' for patient '" +
                               rec.patient_id + "'; impute first");
      }
      values.push_back(*v);
    }
  }
  return FeatureTable(std::move(ids), std::move(names), std::move(values));
}

FeatureTable clinical_features(const Cohort& imputed, Tier tier) {
  return clinical_features(imputed, imputed.dictionary.available_at(tier));
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "hsi") return ModelKind::hsi;
  if (text == "clinical") return ModelKind::clinical;
  if (text == "hsi_clinical" || text == "hsi+clinical") return ModelKind::hsi_clinical;
  throw ValidationError("unknown model '" + std::string(text) + "' (hsi|clinical|hsi_clinical)");
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::hsi: return "hsi";
    case ModelKind::clinical: return "clinical";
    case ModelKind::hsi_clinical: return "hsi_clinical";
  }
  return "hsi";
}

Cohort cohort_subset(const Cohort& cohort, const std::vector<std::string>& patient_ids) {
  std::map<std::string_view, const PatientRecord*> index;
  for (const auto& rec : cohort.records) index.emplace(rec.patient_id, &rec);
  Cohort out;
  out.dictionary = cohort.dictionary;
  for (const auto& id : patient_ids) {
    auto it = index.find(id);
    if (it == index.end()) throw ComputationError("no clinical record for patient '" + id + "'");
    out.records.push_back(*it->second);
  }
  return out;
}

TaskDataset task_dataset(const FeatureTable& hsi, const Cohort& cohort, Task task, ModelKind model, Tier tier) {
  const bool use_hsi = model != ModelKind::clinical;
  const bool use_clinical = model != ModelKind::hsi;
  const Cohort filtered = cohort_filter(cohort, task);
  const std::set<std::string> imaged(hsi.row_ids().begin(), hsi.row_ids().end());

  TaskDataset data;
  for (const auto& rec : filtered.records) {
    if (use_hsi && !imaged.count(rec.patient_id)) continue;
    data.patient_ids.push_back(rec.patient_id);
    data.labels.push_back(binary_label(rec, task));
  }
  if (data.patient_ids.empty()) throw ComputationError("no patients with the required data for this task");
  std::optional<FeatureTable> features;
  if (use_hsi) features = hsi.reorder_rows(data.patient_ids);
  if (use_clinical) {
    FeatureTable clin = clinical_features(impute(cohort_subset(filtered, data.patient_ids)), tier);
    features = features ? FeatureTable::hstack(*features, clin) : std::move(clin);
  }
  data.features = std::move(*features);
  return data;
}

EvaluationRun run_evaluation(const FeatureTable& hsi, const Cohort& cohort, const EvaluationRequest& request) {
  TaskDataset data = task_dataset(hsi, cohort, request.task, request.model, request.tier);
  EvaluationRun run;
  run.plan = make_nested_splits(data.patient_ids, data.labels, request.task, request.seed);
  run.features = std::move(data.features);
  std::string name(to_string(request.model));
  if (request.model != ModelKind::hsi) name += "_" + std::string(to_string(request.tier));
  run.evaluation = evaluate_forest(run.features, run.plan, name, request.seed, request.forest, request.n_bootstrap);
  return run;
}

EvaluationReport evaluate_predictions(const std::vector<PredictionRow>& rows, Task task, std::string model_name,
                                      const SplitPlan* plan, std::size_t n_bootstrap, std::uint64_t seed,
                                      int jobs) {
  return make_report(std::string(to_string(task)), std::move(model_name), ensemble(rows, EnsembleScope::test), plan,
                     n_bootstrap, seed, jobs);
}

GroupTestReport index_group_tests(const FeatureTable& hsi, const Cohort& cohort, Task grouping,
                                  const std::vector<std::string>& index_names) {
  const Cohort filtered = cohort_filter(cohort, grouping);
  std::vector<std::size_t> rows;
  std::vector<int> labels;
  for (const auto& rec : filtered.records) {
    for (std::size_t r = 0; r < hsi.rows(); ++r) {
      if (hsi.row_ids()[r] == rec.patient_id) {
        rows.push_back(r);
        labels.push_back(binary_label(rec, grouping));
        break;
      }
    }
  }
  std::vector<std::vector<double>> values;
  for (const auto& name : index_names) {
    const std::size_t col = hsi.column_index(name);
    std::vector<double> v;
    for (auto r : rows) v.push_back(hsi.at(r, col));
    values.push_back(std::move(v));
  }
  return group_tests(index_names, values, labels, std::string(to_string(grouping)));
}

std::uint64_t config_hash(const nlohmann::json& j) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace spectrasep
