#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <set>

#include "spectrasep/cube_io.hpp"
#include "spectrasep/error.hpp"
#include "spectrasep/pipeline.hpp"
#include "spectrasep/synth.hpp"

using namespace spectrasep;
namespace fs = std::filesystem;

namespace {

SynthConfig small_config(std::uint64_t seed = 3) {
  SynthConfig c = SynthConfig::defaults();
  c.n_patients = 50;
  c.width = 32;
  c.height = 32;
  c.seed = seed;
  return c;
}

SynthCohort small_cohort(std::uint64_t seed = 3) {
  return generate(small_config(seed), default_index_specs(), ParameterDictionary::standard());
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "spectrasep_unit_pipeline" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("synthetic cohort has the configured composition", "[synth]") {
  const auto cohort = small_cohort();
  REQUIRE(cohort.patients.size() == 50);
  CHECK(cohort.patients[0].patient_id == "P0001");
  CHECK(cohort.images.size() == 50);
  CHECK(cohort.images[0].image_id == "P0001_palm");
  std::size_t sepsis = 0, died = 0;
  for (const auto& p : cohort.patients) {
    sepsis += p.sepsis_label == SepsisLabel::sepsis;
    died += p.survival_label == SurvivalLabel::died;
  }
  CHECK(sepsis == 15);
  CHECK(died == 7);
  CHECK(cohort.clinical.size() == 50);
  CHECK(cohort.clinical.records[0].sepsis_label == cohort.patients[0].sepsis_label);
  CHECK(cohort.white.width() == 32);
  CHECK(cohort.dark.channels() == kHsiChannels);
}

TEST_CASE("synthetic cohorts are seed-deterministic", "[synth]") {
  const auto a = small_cohort(3), b = small_cohort(3), c = small_cohort(4);
  CHECK(a.manifest() == b.manifest());
  CHECK(a.render_raw(a.images[5]) == b.render_raw(b.images[5]));
  CHECK(a.clinical.records == b.clinical.records);
  CHECK_FALSE(a.render_raw(a.images[5]) == c.render_raw(c.images[5]));
}

TEST_CASE("raw rendering calibrates back to the reflectance", "[synth]") {
  const auto cohort = small_cohort();
  const auto& image = cohort.images[2];
  const auto refl = cohort.render_reflectance(image);
  const auto back = calibrate(cohort.render_raw(image), cohort.white, cohort.dark);
  double err = 0.0;
  for (std::size_t i = 0; i < refl.size(); ++i) err += std::fabs(back.values()[i] - refl.values()[i]);
  CHECK(err / static_cast<double>(refl.size()) < 0.01);
}

TEST_CASE("planted effects move indices in their fixed direction", "[synth]") {
  CHECK(index_effect_direction("StO2") == -1);
  CHECK(index_effect_direction("NPI") == -1);
  CHECK(index_effect_direction("THI") == 1);
  CHECK(index_effect_direction("TWI") == 1);
  auto cfg = small_config();
  cfg.index_effects = {{"StO2", 0.1}, {"NPI", 0.1}, {"THI", 0.1}, {"TWI", 0.1}};
  cfg.pixel_noise = 0.0;
  cfg.patient_variability = 0.0;
  const auto cohort = generate(cfg, default_index_specs(), ParameterDictionary::standard());
  FeatureConfig features;
  features.include_spectrum = false;
  const auto hsi = hsi_features(cohort, Site::palm, features);
  std::size_t pos = 0, neg = 0;
  for (std::size_t i = 0; i < cohort.patients.size(); ++i) {
    (cohort.patients[i].effect_positive ? pos : neg) = i;
  }
  for (std::size_t k = 0; k < 4; ++k) {
    const double delta = hsi.at(pos, k) - hsi.at(neg, k);
    INFO(hsi.feature_names()[k]);
    CHECK(delta * index_effect_direction(hsi.feature_names()[k]) > 0.0);
  }
}

TEST_CASE("synth config validation and JSON", "[synth]") {
  const auto dict = ParameterDictionary::standard();
  auto cfg = small_config();
  const auto back = SynthConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
  CHECK_THROWS_AS(SynthConfig::from_json(nlohmann::json{{"bogus", 1}}), ValidationError);

  auto bad = cfg;
  bad.sepsis_prevalence = 0.0;
  CHECK_THROWS_AS(generate(bad, default_index_specs(), dict), ValidationError);
  bad = cfg;
  bad.n_patients = 12;
  CHECK_THROWS_AS(generate(bad, default_index_specs(), dict), ValidationError);
  bad = cfg;
  bad.index_effects["THI"] = -0.1;
  CHECK_THROWS_AS(generate(bad, default_index_specs(), dict), ValidationError);
  bad = cfg;
  bad.index_effects["XYZ"] = 0.1;
  CHECK_THROWS_AS(generate(bad, default_index_specs(), dict), ValidationError);
  const auto scaled = cfg.scaled_effects(2.0);
  CHECK(scaled.index_effects.at("THI") == 2.0 * cfg.index_effects.at("THI"));
  CHECK(scaled.clinical_effects.at("lactate") == 2.0 * cfg.clinical_effects.at("lactate"));
}

TEST_CASE("cohort directory round-trip gives identical features", "[synth][pipeline]") {
  const auto cohort = small_cohort();
  const auto dir = scratch("cohort");
  write_cohort(cohort, dir, 2);
  for (const char* f : {"images.json", "annotations.json", "clinical.csv", "labels.csv", "synth_manifest.json",
                        "references/white.speccube", "references/dark.speccube", "cubes/P0001_palm.speccube"}) {
    CHECK(fs::exists(dir / f));
  }
  const auto opened = CohortDirectory::open(dir);
  CHECK(opened.images.size() == 50);
  CHECK(opened.annotation_for("P0002_palm").radius == kPalmRadiusPx);
  CHECK_THROWS_AS(opened.annotation_for("nope"), ValidationError);
  const FeatureConfig features;
  const auto from_dir = hsi_features(opened, Site::palm, features, 2);
  const auto from_memory = hsi_features(cohort, Site::palm, features, 1);
  CHECK(from_dir == from_memory);
  CHECK(from_dir.cols() == 4 + kHsiChannels);

  const auto loaded = opened.load_cohort(ParameterDictionary::standard());
  CHECK(loaded.records == cohort.clinical.records);
}

TEST_CASE("load_reflectance needs references for raw cubes", "[pipeline]") {
  const auto cohort = small_cohort();
  const auto dir = scratch("reflectance");
  save_cube(cohort.render_raw(cohort.images[0]), dir / "raw.speccube");
  save_cube(cohort.white, dir / "white.speccube");
  save_cube(cohort.dark, dir / "dark.speccube");
  CHECK_THROWS_AS(load_reflectance(dir / "raw.speccube", std::nullopt, std::nullopt), ValidationError);
  const auto r = load_reflectance(dir / "raw.speccube", dir / "white.speccube", dir / "dark.speccube");
  CHECK(r.state() == CalibrationState::reflectance);
  save_cube(r, dir / "refl.speccube");
  CHECK(load_reflectance(dir / "refl.speccube", std::nullopt, std::nullopt) == r);
}

TEST_CASE("pipeline config parsing", "[pipeline]") {
  const auto c = PipelineConfig::from_json(
      {{"n_trees", 12}, {"statistic", "mean"}, {"include_spectrum", false}, {"site", "finger"}}, ".");
  CHECK(c.n_trees == 12);
  CHECK(c.statistic == RoiStatistic::mean);
  CHECK_FALSE(c.feature_config().include_spectrum);
  CHECK(c.forest_params(3).jobs == 3);
  CHECK(c.site == Site::finger);
  CHECK_THROWS_AS(PipelineConfig::from_json({{"n_tree", 12}}, "."), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json({{"n_trees", 0}}, "."), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json({{"n_trees", "many"}}, "."), ConfigError);

  const auto dir = scratch("config");
  write_json_file(dir / "indices.json", nlohmann::json::array({band_ratio_to_json(default_index_specs()[0])}));
  write_json_file(dir / "config.json", {{"indices", "indices.json"}});
  CHECK(PipelineConfig::load(dir / "config.json").indices.size() == 1);

  CHECK(config_hash(c.to_json()) == config_hash(c.to_json()));
  CHECK(config_hash(c.to_json()) != config_hash(PipelineConfig{}.to_json()));
  CHECK(parse_model_kind("hsi+clinical") == ModelKind::hsi_clinical);
  CHECK_THROWS_AS(parse_model_kind("cnn"), ValidationError);
}

TEST_CASE("task datasets join HSI and clinical features", "[pipeline]") {
  const auto cohort = small_cohort();
  FeatureConfig features;
  features.include_spectrum = false;
  const auto hsi = hsi_features(cohort, Site::palm, features);
  const auto imputed = impute(cohort.clinical);
  CHECK(clinical_features(imputed, Tier::one_hour).cols() == 33);
  CHECK(clinical_features(imputed, Tier::ten_hours).cols() == 45);

  const auto h = task_dataset(hsi, cohort.clinical, Task::sepsis, ModelKind::hsi, Tier::one_hour);
  CHECK(h.features.cols() == 4);
  CHECK(h.labels.size() == 50);
  const auto hc = task_dataset(hsi, cohort.clinical, Task::mortality, ModelKind::hsi_clinical, Tier::ten_hours);
  CHECK(hc.features.cols() == 4 + 45);
  CHECK(std::count(hc.labels.begin(), hc.labels.end(), 1) == 7);
  const auto cl = task_dataset(FeatureTable(), cohort.clinical, Task::sepsis, ModelKind::clinical, Tier::one_hour);
  CHECK(cl.features.cols() == 33);

  const auto subset = cohort_subset(cohort.clinical, {"P0003", "P0001"});
  REQUIRE(subset.size() == 2);
  CHECK(subset.records[0].patient_id == "P0003");
}

TEST_CASE("external predictions are reported like forest output", "[pipeline]") {
  std::vector<PredictionRow> rows;
  for (int i = 0; i < 20; ++i) {
    for (int f = 0; f < 2; ++f) {
      const int y = i % 2;
      rows.push_back({"P" + std::to_string(i), f, 0, {1.0 - 0.05 * i * y, 0.05 * i * y}, y});
    }
  }
  const auto r = evaluate_predictions(rows, Task::sepsis, "cnn", nullptr, 100, 1);
  CHECK(r.model == "cnn");
  CHECK(r.n_patients == 20);
  CHECK(r.auroc == 1.0);
  CHECK(r.per_fold_auroc.empty());
}

TEST_CASE("index group tests on a synthetic cohort", "[pipeline]") {
  auto cfg = small_config();
  cfg.index_effects = {{"StO2", 0.08}, {"NPI", 0.0}, {"THI", 0.08}, {"TWI", 0.08}};
  const auto cohort = generate(cfg, default_index_specs(), ParameterDictionary::standard());
  FeatureConfig features;
  features.include_spectrum = false;
  const auto hsi = hsi_features(cohort, Site::palm, features);
  const auto report = index_group_tests(hsi, cohort.clinical, Task::sepsis, {"StO2", "NPI", "THI", "TWI"});
  REQUIRE(report.tests.size() == 4);
  CHECK(report.alpha_per_test == 0.0125);
  CHECK(report.tests[0].significant);
  CHECK(report.tests[0].mean_positive < report.tests[0].mean_negative);
  CHECK(report.tests[2].mean_positive > report.tests[2].mean_negative);
}
