#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "spectrasep/error.hpp"
#include "spectrasep/evaluation.hpp"
#include "spectrasep/rng.hpp"

using namespace spectrasep;
using Catch::Matchers::WithinAbs;
namespace fs = std::filesystem;

namespace {

struct Cohort2 {
  std::vector<std::string> ids;
  std::vector<int> labels;
};

Cohort2 cohort(std::size_t n, std::size_t positives) {
  Cohort2 c;
  for (std::size_t i = 0; i < n; ++i) {
    c.ids.push_back("P" + std::to_string(1000 + i));
    c.labels.push_back(i < positives ? 1 : 0);
  }
  return c;
}

FeatureTable signal_table(const Cohort2& c, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> values;
  for (int y : c.labels) {
    values.push_back(rng.normal(1.5 * y, 1.0));
    values.push_back(rng.normal(0.0, 1.0));
    values.push_back(rng.normal(0.0, 1.0));
  }
  return FeatureTable(c.ids, {"a", "b", "c"}, values);
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "spectrasep_unit_eval";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("nested splits are stratified and leak-free", "[evaluation][splits]") {
  const auto c = cohort(103, 31);
  const auto plan = make_nested_splits(c.ids, c.labels, Task::mortality, 7);
  CHECK_NOTHROW(check_no_leakage(plan));
  for (int o = 0; o < 5; ++o) {
    const auto test = plan.outer_test_rows(o);
    int pos = 0;
    for (auto r : test) pos += c.labels[r];
    CHECK(std::abs(pos - 31.0 * test.size() / 103.0) <= 1.0);
    for (int i = 0; i < 5; ++i) {
      const auto val = plan.inner_validation_rows(o, i);
      const auto train = plan.inner_train_rows(o, i);
      CHECK(val.size() + train.size() == plan.outer_train_rows(o).size());
    }
  }
  CHECK(plan.to_json() == make_nested_splits(c.ids, c.labels, Task::mortality, 7).to_json());
  CHECK_FALSE(plan.to_json() == make_nested_splits(c.ids, c.labels, Task::mortality, 8).to_json());
}

TEST_CASE("inner folds are stratified within the outer training set", "[evaluation][splits]") {
  const auto c = cohort(250, 50);
  const auto plan = make_nested_splits(c.ids, c.labels, Task::sepsis, 3);
  for (int o = 0; o < 5; ++o) {
    const auto outer_train = plan.outer_train_rows(o);
    double pos_total = 0;
    for (auto r : outer_train) pos_total += c.labels[r];
    for (int i = 0; i < 5; ++i) {
      const auto val = plan.inner_validation_rows(o, i);
      double pos = 0;
      for (auto r : val) pos += c.labels[r];
      CHECK(std::abs(pos - pos_total * val.size() / outer_train.size()) <= 1.0);
    }
  }
}

TEST_CASE("split plans round-trip and are checked", "[evaluation][splits]") {
  const auto c = cohort(40, 10);
  const auto plan = make_nested_splits(c.ids, c.labels, Task::sepsis, 1);
  const auto j = plan.to_json();
  CHECK(j["format"] == "spectrasep.split_plan");
  const auto back = SplitPlan::from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.to_json() == j);
  CHECK(back.inner_fold == plan.inner_fold);

  auto leaky = plan;
  // Place a test patient inside an inner fold of its own outer fold.
  leaky.inner_fold[0][static_cast<std::size_t>(leaky.outer_fold[0])] = 0;
  CHECK_THROWS_AS(check_no_leakage(leaky), ComputationError);

  std::vector<int> few(c.labels.size(), 0);
  few[0] = few[1] = few[2] = 1;
  CHECK_THROWS_AS(make_nested_splits(c.ids, few, Task::sepsis, 1), ComputationError);
}

TEST_CASE("ROC curve sweeps grouped thresholds", "[evaluation][roc]") {
  const std::vector<double> v{0.9, 0.8, 0.8, 0.3, 0.1};
  const std::vector<int> y{1, 1, 0, 0, 1};
  const auto roc = roc_auroc(v, y);
  REQUIRE(roc.points.size() == 5);
  CHECK(roc.points.front().fpr == 0.0);
  CHECK(roc.points.front().tpr == 0.0);
  CHECK(std::isinf(roc.points.front().threshold));
  CHECK(roc.points[2].threshold == 0.8);
  CHECK(roc.points[2].fpr == 0.5);
  CHECK(roc.points.back().fpr == 1.0);
  CHECK(roc.points.back().tpr == 1.0);
  CHECK_THAT(roc.auroc, WithinAbs(oracle::pair_count_auroc(v, y), 1e-15));
  const std::vector<int> one{1, 1, 1, 1, 1};
  CHECK_THROWS_AS(auroc(v, one), ComputationError);
}

TEST_CASE("ensembling averages members independent of row order", "[evaluation][ensemble]") {
  std::vector<PredictionRow> rows{
      {"A", 0, 0, {0.2, 0.8}, 1}, {"B", 0, 0, {0.6, 0.4}, 0}, {"A", 1, 0, {0.4, 0.6}, 1},
      {"A", 1, 1, {0.3, 0.7}, 1}, {"B", 1, 0, {0.9, 0.1}, 0},
  };
  const auto e = ensemble(rows);
  REQUIRE(e.size() == 2);
  CHECK(e[0].patient_id == "A");
  CHECK(e[0].members == 3);
  CHECK_THAT(e[0].values[1], WithinAbs(0.7, 1e-15));
  CHECK_THAT(e[0].decision(), WithinAbs(0.4, 1e-15));
  auto reversed = rows;
  std::reverse(reversed.begin(), reversed.end());
  const auto r = ensemble(reversed);
  CHECK(r[1].patient_id == "A");
  CHECK(r[1].values == e[0].values);

  const auto val = ensemble(rows, EnsembleScope::validation);
  CHECK(val.size() == 4);
  CHECK(val[2].fold == 1);
  CHECK(val[2].members == 2);

  rows.push_back({"A", 2, 0, {0.5, 0.5}, 0});
  CHECK_THROWS_AS(ensemble(rows), ComputationError);
  rows.back() = {"A", 2, 0, {1.0}, 1};
  CHECK_THROWS_AS(ensemble(rows), ComputationError);
}

TEST_CASE("predictions.csv round-trips and rejects malformed rows", "[evaluation][io]") {
  const std::vector<PredictionRow> rows{{"P1", 0, 0, {0.25, 0.75}, 1}, {"P2", 3, 1, {1.0 / 3.0, 2.0 / 3.0}, 0}};
  const auto path = scratch("predictions.csv");
  {
    std::ofstream out(path);
    write_predictions_csv(rows, out);
  }
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "patient_id,fold,repetition,value_class0,value_class1,label");
  const auto back = read_predictions_csv(path);
  REQUIRE(back.size() == 2);
  CHECK(back[1].values == rows[1].values);
  CHECK(back[1].fold == 3);

  const auto bad = scratch("bad.csv");
  std::ofstream(bad) << "patient_id,fold,repetition,value_class0,value_class1,label\nP1,0,0,0.1,x,1\n";
  CHECK_THROWS_AS(read_predictions_csv(bad), FormatError);
  std::ofstream(bad) << "patient_id,fold,repetition,value_class0,label\nP1,0,0,0.1,2\n";
  CHECK_THROWS_AS(read_predictions_csv(bad), FormatError);
  std::ofstream(bad) << "patient_id,fold,value_class0,label\nP1,0,0.1,1\n";
  CHECK_THROWS_AS(read_predictions_csv(bad), FormatError);
}

TEST_CASE("reports carry per-fold AUROCs and serialize", "[evaluation][report]") {
  const auto c = cohort(60, 20);
  const auto plan = make_nested_splits(c.ids, c.labels, Task::sepsis, 4);
  Rng rng(4);
  std::vector<EnsembledPrediction> preds;
  for (std::size_t i = 0; i < c.ids.size(); ++i) {
    preds.push_back({c.ids[i], -1, {0.0, rng.normal(c.labels[i], 1.0)}, c.labels[i], 1});
  }
  const auto report = make_report("sepsis", "m", preds, &plan, 200, 5);
  CHECK(report.n_patients == 60);
  CHECK(report.n_positive == 20);
  REQUIRE(report.per_fold_auroc.size() == 5);
  for (double a : report.per_fold_auroc) CHECK((a >= 0.0 && a <= 1.0));
  const auto j = report.to_json();
  CHECK(j["auroc"] == report.auroc);
  CHECK(j["auroc_mean"] == report.bootstrap.mean);
  CHECK(j["n_bootstrap"] == 200);
  CHECK_FALSE(j.contains("bootstrap_aurocs"));
  CHECK(report.to_json(true).dump().size() > j.dump().size());

  std::ostringstream roc, box;
  write_roc_csv({report}, roc);
  write_auroc_boxplot_csv({report}, box);
  CHECK(roc.str().rfind("model,fpr,tpr,threshold\n", 0) == 0);
  CHECK(box.str().rfind("model,auroc,q1,median,q3,whisker_low,whisker_high,mean,sd,ci_low,ci_high,n_bootstrap\n", 0) == 0);
}

TEST_CASE("forest evaluation predicts every patient once per inner fold", "[evaluation][forest]") {
  const auto c = cohort(80, 25);
  const auto table = signal_table(c, 6);
  const auto plan = make_nested_splits(c.ids, c.labels, Task::sepsis, 6);
  ForestParams params;
  params.n_trees = 20;
  const auto ev = evaluate_forest(table, plan, "hsi", 6, params, 100);
  CHECK(ev.predictions.size() == 80 * 5);
  std::map<std::string, std::set<int>> folds;
  for (const auto& p : ev.predictions) folds[p.patient_id].insert(p.fold);
  CHECK(folds.size() == 80);
  for (const auto& [id, f] : folds) CHECK(f == std::set<int>{0, 1, 2, 3, 4});
  CHECK(ev.report.n_patients == 80);
  CHECK(ev.report.auroc > 0.75);

  params.jobs = 3;
  const auto again = evaluate_forest(table, plan, "hsi", 6, params, 100);
  CHECK(again.report.to_json().dump() == ev.report.to_json().dump());
}

TEST_CASE("sequential experiment adds top-ranked clinical features", "[evaluation][forest]") {
  const auto c = cohort(60, 20);
  const auto hsi = signal_table(c, 8);
  const auto plan = make_nested_splits(c.ids, c.labels, Task::sepsis, 8);
  Rng rng(9);
  std::vector<double> clin;
  for (int y : c.labels) {
    clin.push_back(rng.normal(0.0, 1.0));
    clin.push_back(rng.normal(2.0 * y, 1.0));
  }
  ClinicalTierSet tier{"one_hour", FeatureTable(c.ids, {"x", "lactate"}, clin), {}};
  ForestParams params;
  params.n_trees = 15;
  tier.rankings = rfe_per_outer_fold(tier.clinical, plan, 1, params);
  REQUIRE(tier.rankings.size() == 5);
  const auto top1 = top_k_fold_tables(hsi, tier, 1);
  REQUIRE(top1.size() == 5);
  CHECK(top1[0].cols() == 4);
  CHECK(top1[0].feature_names().back() == "lactate");
  CHECK(top_k_fold_tables(hsi, tier, 0)[0] == hsi);

  const auto exp = sequential_feature_experiment(hsi, {tier}, plan, 2, params, 50);
  CHECK(exp.hsi_only.model == "hsi");
  const auto& steps = exp.by_tier.at("one_hour");
  REQUIRE(steps.size() == 2);
  CHECK(steps[0].model == "hsi+one_hour_top1");
  CHECK(steps[1].model == "hsi+one_hour_all");
}
