#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectrasep/clinical.hpp"
#include "spectrasep/feature_table.hpp"
#include "spectrasep/forest.hpp"
#include "spectrasep/rfe.hpp"

namespace spectrasep {

inline constexpr int kOuterFolds = 5;
inline constexpr int kInnerFolds = 5;
inline constexpr std::size_t kBootstrapSamples = 1000;

// Patient-level stratified nested K x K cross-validation plan.
struct SplitPlan {
  Task task = Task::sepsis;
  std::uint64_t seed = 0;
  int outer_folds = kOuterFolds;
  int inner_folds = kInnerFolds;
  std::vector<std::string> patient_ids;
  std::vector<int> labels;
  std::vector<int> outer_fold;
  // inner_fold[p][o]: inner fold of patient p inside outer fold o's training
  // set, -1 when o == outer_fold[p].
  std::vector<std::vector<int>> inner_fold;

  std::size_t size() const { return patient_ids.size(); }
  std::vector<std::size_t> outer_test_rows(int outer) const;
  std::vector<std::size_t> outer_train_rows(int outer) const;
  std::vector<std::size_t> inner_validation_rows(int outer, int inner) const;
  std::vector<std::size_t> inner_train_rows(int outer, int inner) const;

  nlohmann::json to_json() const;
  static SplitPlan from_json(const nlohmann::json& j);
};

// Deterministic given the seed. Throws ComputationError when a class has
// fewer patients than outer folds.
SplitPlan make_nested_splits(const std::vector<std::string>& patient_ids, const std::vector<int>& labels,
                             Task task, std::uint64_t seed, int outer_folds = kOuterFolds,
                             int inner_folds = kInnerFolds);

// Throws ComputationError if any training set shares a patient with the
// corresponding test/validation set, or a patient is tested twice.
void check_no_leakage(const SplitPlan& plan);

struct PredictionRow {
  std::string patient_id;
  int fold = 0;
  int repetition = 0;
  std::vector<double> values;  // one decision value per class
  int label = 0;
};

// predictions.csv: patient_id,fold,repetition,value_class0,value_class1,label
void write_predictions_csv(const std::vector<PredictionRow>& rows, std::ostream& out);
std::vector<PredictionRow> read_predictions_csv(const std::filesystem::path& path);

struct EnsembledPrediction {
  std::string patient_id;
  int fold = -1;  // -1 for test-set ensembles spanning folds
  std::vector<double> values;
  int label = 0;
  std::size_t members = 0;

  // Binary decision value: values[1] - values[0].
  double decision() const { return values.size() > 1 ? values[1] - values[0] : values[0]; }
};

enum class EnsembleScope {
  test,        // one value per patient, averaged over every member
  validation,  // one value per (patient, fold), averaged over repetitions
};

// Arithmetic mean of member decision values. Members are summed in a
// canonical (fold, repetition) order so results do not depend on row order.
// Output is ordered by first appearance. Throws ComputationError on
// inconsistent class arity or conflicting labels.
std::vector<EnsembledPrediction> ensemble(const std::vector<PredictionRow>& rows,
                                          EnsembleScope scope = EnsembleScope::test);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // +inf for the (0, 0) point
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auroc = 0.5;
};

// Threshold sweep with tied values grouped; AUROC by the trapezoid rule over
// the sweep, which equals P(pos > neg) + P(tie)/2. Labels are 0/1.
// Throws ComputationError when a class is absent.
RocCurve roc_auroc(std::span<const double> values, std::span<const int> labels);
double auroc(std::span<const double> values, std::span<const int> labels);

struct BootstrapResult {
  double mean = 0.0;
  double sd = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_bootstrap = 0;
  std::size_t redraws = 0;  // single-class resamples discarded and redrawn
  std::vector<double> aurocs;
};

// Resamples |T| patients with replacement n times. Resample b draws from an
// RNG seeded with derive_seed(seed, b); single-class resamples are redrawn
// from the same stream so exactly n valid resamples are kept. Percentiles
// use linear interpolation (2.5 / 97.5).
BootstrapResult bootstrap_ci(std::span<const double> values, std::span<const int> labels,
                             std::size_t n = kBootstrapSamples, std::uint64_t seed = 0, int jobs = 1);

struct EvaluationReport {
  std::string task;
  std::string model;
  std::size_t n_patients = 0;
  std::size_t n_positive = 0;
  double auroc = 0.5;  // full-sample
  RocCurve roc;
  BootstrapResult bootstrap;
  std::vector<double> per_fold_auroc;
  std::string resampling_unit = "patient";
  std::uint64_t seed = 0;

  nlohmann::json to_json(bool include_bootstrap_samples = false) const;
};

// Builds a report from ensembled test predictions; per-fold AUROCs use the
// outer fold of each patient from `plan` when given.
EvaluationReport make_report(std::string task, std::string model,
                             const std::vector<EnsembledPrediction>& predictions,
                             const SplitPlan* plan, std::size_t n_bootstrap, std::uint64_t seed,
                             int jobs = 1);

// roc.csv rows: model,fpr,tpr,threshold
void write_roc_csv(const std::vector<EvaluationReport>& reports, std::ostream& out);
// boxplot.csv rows for the bootstrap AUROC distributions.
void write_auroc_boxplot_csv(const std::vector<EvaluationReport>& reports, std::ostream& out);

struct ForestEvaluation {
  std::vector<PredictionRow> predictions;
  EvaluationReport report;
};

// Nested-CV forest evaluation: in every outer fold one forest is fit per
// inner fold on that fold's training rows and all of them predict the outer
// test rows (fold = inner fold, repetition 0); test predictions are then
// ensembled per patient. `fold_tables[o]` holds the features used in outer
// fold o (rows aligned with plan.patient_ids); pass one table to reuse it.
ForestEvaluation evaluate_forest(std::span<const FeatureTable* const> fold_tables,
                                 const SplitPlan& plan, std::string model_name,
                                 std::uint64_t seed, const ForestParams& params = {},
                                 std::size_t n_bootstrap = kBootstrapSamples);
ForestEvaluation evaluate_forest(const FeatureTable& table, const SplitPlan& plan,
                                 std::string model_name, std::uint64_t seed,
                                 const ForestParams& params = {},
                                 std::size_t n_bootstrap = kBootstrapSamples);

// RFE on every outer fold's training set using its inner folds.
std::vector<RfeRanking> rfe_per_outer_fold(const FeatureTable& table, const SplitPlan& plan,
                                           std::uint64_t seed, const ForestParams& params = {});

struct ClinicalTierSet {
  std::string tier;                  // "one_hour" / "ten_hours"
  FeatureTable clinical;             // rows aligned with the plan
  std::vector<RfeRanking> rankings;  // per outer fold, column indices of `clinical`
};

struct SequentialExperiment {
  EvaluationReport hsi_only;
  // Per tier: HSI + top-1, top-2, top-3, all clinical features.
  std::map<std::string, std::vector<EvaluationReport>> by_tier;
};

// HSI features alone, then with the k most important clinical features of
// each outer fold's ranking added (k = 1, 2, 3, all), per availability tier.
SequentialExperiment sequential_feature_experiment(const FeatureTable& hsi,
                                                   const std::vector<ClinicalTierSet>& tiers,
                                                   const SplitPlan& plan, std::uint64_t seed,
                                                   const ForestParams& params = {},
                                                   std::size_t n_bootstrap = kBootstrapSamples);

// HSI plus the top-k clinical columns of each outer fold's ranking; k = 0
// returns the HSI table for every fold.
std::vector<FeatureTable> top_k_fold_tables(const FeatureTable& hsi, const ClinicalTierSet& tier,
                                            std::size_t k);

}  // namespace spectrasep
