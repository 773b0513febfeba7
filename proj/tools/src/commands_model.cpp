#include <memory>
#include <sstream>

#include "commands.hpp"
#include "spectrasep/cube_io.hpp"
#include "spectrasep/error.hpp"
#include "spectrasep/rng.hpp"

namespace spectrasep::cli {

namespace {

constexpr std::uint64_t kRfeStream = 0x726665ull;  // "rfe"

struct ModelOptions {
  std::string cohort, task = "sepsis", model = "hsi", tier = "ten_hours", features;
};

void add_model_options(CLI::App* sub, ModelOptions& o) {
  sub->add_option("--cohort", o.cohort, "Cohort directory")->check(CLI::ExistingDirectory);
  sub->add_option("--task", o.task, "sepsis or mortality")->capture_default_str();
  sub->add_option("--model", o.model, "hsi, clinical or hsi_clinical")->capture_default_str();
  sub->add_option("--tier", o.tier, "Clinical availability tier: one_hour or ten_hours")->capture_default_str();
  sub->add_option("--features", o.features, "Precomputed features.csv (default: computed from the cohort)")
      ->check(CLI::ExistingFile);
}

struct LoadedData {
  Cohort cohort;
  FeatureTable hsi;
};

LoadedData load_data(RunContext& ctx, const ModelOptions& o, bool need_hsi) {
  if (o.cohort.empty()) throw ValidationError("--cohort is required");
  ctx.input("cohort", o.cohort);
  const CohortDirectory dir = CohortDirectory::open(o.cohort);
  LoadedData data;
  data.cohort = dir.load_cohort(ctx.config().dictionary);
  if (need_hsi) data.hsi = load_or_compute_hsi(ctx, dir, o.features);
  return data;
}

std::string plan_json(const SplitPlan& plan) { return plan.to_json().dump(2) + "\n"; }

void add_train_rf(CLI::App& app, std::vector<Command>& commands) {
  auto o = std::make_shared<ModelOptions>();
  auto* sub = app.add_subcommand("train-rf", "Fit a random forest on every labelled patient");
  add_model_options(sub, *o);
  commands.push_back({sub, [o](RunContext& ctx) {
                        const Task task = task_option(o->task);
                        const ModelKind kind = parse_model_kind(o->model);
                        const Tier tier = tier_option(o->tier);
                        const LoadedData data = load_data(ctx, *o, kind != ModelKind::clinical);
                        const TaskDataset ds = task_dataset(data.hsi, data.cohort, task, kind, tier);
                        ctx.begin_step("fit");
                        const RandomForest forest =
                            RandomForest::fit(ds.features, ds.labels, ctx.seed(), ctx.config().forest_params(ctx.jobs()));
                        nlohmann::json model = forest.to_json();
                        model["feature_names"] = ds.features.feature_names();
                        model["task"] = to_string(task);
                        ctx.write_json("model.json", model);
                        const auto importance = forest.feature_importance();
                        std::ostringstream out;
                        csv::write_row(out, {"feature", "importance"});
                        for (std::size_t f = 0; f < importance.size(); ++f) {
                          csv::write_row(out, {ds.features.feature_names()[f], csv::format_number(importance[f])});
                        }
                        ctx.write_text("importance.csv", out.str());
                      }});
}

void add_rfe(CLI::App& app, std::vector<Command>& commands) {
  auto o = std::make_shared<ModelOptions>();
  o->model = "clinical";
  auto* sub = app.add_subcommand("rfe", "Cross-validated recursive feature elimination per outer fold");
  add_model_options(sub, *o);
  commands.push_back({sub, [o](RunContext& ctx) {
                        const Task task = task_option(o->task);
                        const ModelKind kind = parse_model_kind(o->model);
                        const Tier tier = tier_option(o->tier);
                        const LoadedData data = load_data(ctx, *o, kind != ModelKind::clinical);
                        const TaskDataset ds = task_dataset(data.hsi, data.cohort, task, kind, tier);
                        const SplitPlan plan = make_nested_splits(ds.patient_ids, ds.labels, task, ctx.seed());
                        ctx.write_text("split_plan.json", plan_json(plan));
                        ctx.begin_step("rfe");
                        const auto rankings = rfe_per_outer_fold(ds.features, plan, derive_seed(ctx.seed(), kRfeStream),
                                                                 ctx.config().forest_params(ctx.jobs()));
                        std::ostringstream out;
                        csv::write_row(out, {"outer_fold", "rank", "feature", "importance_at_elimination"});
                        for (std::size_t fold = 0; fold < rankings.size(); ++fold) {
                          const auto& r = rankings[fold];
                          const std::size_t n = r.elimination_order.size();
                          for (std::size_t k = 0; k < n; ++k) {
                            const std::size_t step = n - 1 - k;
                            csv::write_row(out, {std::to_string(fold), std::to_string(k + 1),
                                                 ds.features.feature_names()[r.elimination_order[step]],
                                                 csv::format_number(r.importance_at_elimination[step])});
                          }
                        }
                        ctx.write_text("rfe.csv", out.str());
                      }});
}

struct EvaluateOptions : ModelOptions {
  std::string predictions, split_plan, model_name = "external";
  bool bootstrap_samples = false;
};

void write_reports(RunContext& ctx, const std::vector<EvaluationReport>& reports) {
  ctx.write_text("roc.csv", to_csv([&](std::ostream& out) { write_roc_csv(reports, out); }));
  ctx.write_text("boxplot.csv", to_csv([&](std::ostream& out) { write_auroc_boxplot_csv(reports, out); }));
}

void add_evaluate(CLI::App& app, std::vector<Command>& commands) {
  auto o = std::make_shared<EvaluateOptions>();
  auto* sub = app.add_subcommand("evaluate", "Nested cross-validated evaluation with bootstrap AUROC");
  add_model_options(sub, *o);
  sub->add_option("--predictions", o->predictions, "Evaluate an external predictions.csv instead")
      ->check(CLI::ExistingFile);
  sub->add_option("--split-plan", o->split_plan, "Split plan for per-fold AUROCs of --predictions")
      ->check(CLI::ExistingFile);
  sub->add_option("--model-name", o->model_name, "Model name for --predictions")->capture_default_str();
  sub->add_flag("--bootstrap-samples", o->bootstrap_samples, "Include every bootstrap AUROC in report.json");
  commands.push_back({sub, [o](RunContext& ctx) {
                        const Task task = task_option(o->task);
                        const std::size_t n_boot = ctx.config().n_bootstrap;
                        if (!o->predictions.empty()) {
                          ctx.input("predictions", o->predictions);
                          const auto rows = read_predictions_csv(o->predictions);
                          std::optional<SplitPlan> plan;
                          if (!o->split_plan.empty()) {
                            ctx.input("split_plan", o->split_plan);
                            plan = SplitPlan::from_json(read_json_file(o->split_plan));
                          }
                          ctx.begin_step("evaluate");
                          const EvaluationReport report = evaluate_predictions(
                              rows, task, o->model_name, plan ? &*plan : nullptr, n_boot, ctx.seed(), ctx.jobs());
                          ctx.write_json("report.json", report.to_json(o->bootstrap_samples));
                          write_reports(ctx, {report});
                          return;
                        }
                        const ModelKind kind = parse_model_kind(o->model);
                        const LoadedData data = load_data(ctx, *o, kind != ModelKind::clinical);
                        EvaluationRequest request;
                        request.task = task;
                        request.model = kind;
                        request.tier = tier_option(o->tier);
                        request.seed = ctx.seed();
                        request.forest = ctx.config().forest_params(ctx.jobs());
                        request.n_bootstrap = n_boot;
                        ctx.begin_step("evaluate");
                        const EvaluationRun run = run_evaluation(data.hsi, data.cohort, request);
                        ctx.write_json("report.json", run.evaluation.report.to_json(o->bootstrap_samples));
                        ctx.write_text("predictions.csv", to_csv([&](std::ostream& out) {
                                         write_predictions_csv(run.evaluation.predictions, out);
                                       }));
                        ctx.write_text("split_plan.json", plan_json(run.plan));
                        write_reports(ctx, {run.evaluation.report});
                      }});
}

EvaluationReport direct_report(const std::string& task, const std::string& name,
                               const std::vector<ScoredSample>& samples, std::size_t n_boot, std::uint64_t seed,
                               int jobs) {
  std::vector<EnsembledPrediction> preds;
  for (const auto& s : samples) preds.push_back({s.patient_id, -1, {0.0, s.value}, s.label, 1});
  return make_report(task, name, preds, nullptr, n_boot, seed, jobs);
}

struct ReportOptions : ModelOptions {
  std::vector<std::string> biomarkers{"lactate", "crp", "pct"};
};

void add_report(CLI::App& app, std::vector<Command>& commands) {
  auto o = std::make_shared<ReportOptions>();
  auto* sub = app.add_subcommand(
      "report", "HSI alone and with top-ranked clinical features per tier, plus score and biomarker baselines");
  sub->add_option("--cohort", o->cohort, "Cohort directory")->required()->check(CLI::ExistingDirectory);
  sub->add_option("--task", o->task, "sepsis or mortality")->capture_default_str();
  sub->add_option("--features", o->features, "Precomputed features.csv")->check(CLI::ExistingFile);
  sub->add_option("--biomarkers", o->biomarkers, "Raw clinical parameters used as classifiers")->delimiter(',');
  commands.push_back({sub, [o](RunContext& ctx) {
                        const Task task = task_option(o->task);
                        const std::string task_name(to_string(task));
                        const LoadedData data = load_data(ctx, *o, true);
                        const TaskDataset ds = task_dataset(data.hsi, data.cohort, task, ModelKind::hsi, Tier::ten_hours);
                        const SplitPlan plan = make_nested_splits(ds.patient_ids, ds.labels, task, ctx.seed());
                        ctx.write_text("split_plan.json", plan_json(plan));
                        const ForestParams params = ctx.config().forest_params(ctx.jobs());
                        const std::size_t n_boot = ctx.config().n_bootstrap;

                        const Cohort subset = cohort_subset(data.cohort, ds.patient_ids);
                        const Cohort imputed = impute(subset);
                        std::vector<ClinicalTierSet> tiers;
                        nlohmann::json rankings_json = nlohmann::json::object();
                        for (Tier tier : {Tier::one_hour, Tier::ten_hours}) {
                          ctx.begin_step(std::string("rfe_") + std::string(to_string(tier)));
                          ClinicalTierSet set;
                          set.tier = std::string(to_string(tier));
                          set.clinical = clinical_features(imputed, tier);
                          set.rankings = rfe_per_outer_fold(
                              set.clinical, plan, derive_seed(ctx.seed(), kRfeStream, static_cast<std::uint64_t>(tier)),
                              params);
                          nlohmann::json folds = nlohmann::json::array();
                          for (const auto& r : set.rankings) {
                            nlohmann::json names = nlohmann::json::array();
                            for (auto c : r.most_important_first()) names.push_back(set.clinical.feature_names()[c]);
                            folds.push_back(std::move(names));
                          }
                          rankings_json[set.tier] = std::move(folds);
                          tiers.push_back(std::move(set));
                        }

                        ctx.begin_step("sequential");
                        const SequentialExperiment exp =
                            sequential_feature_experiment(ds.features, tiers, plan, ctx.seed(), params, n_boot);

                        ctx.begin_step("baselines");
                        std::map<std::string, int> labels;
                        for (std::size_t i = 0; i < ds.patient_ids.size(); ++i) labels[ds.patient_ids[i]] = ds.labels[i];
                        std::vector<EvaluationReport> baselines;
                        for (const auto& name : standard_score_names()) {
                          const ScoreTable table = ctx.config().score_table(name);
                          std::vector<ScoreResult> results;
                          for (const auto& rec : subset.records) results.push_back(evaluate_score(rec, table));
                          baselines.push_back(direct_report(task_name, name, score_as_classifier(results, labels),
                                                            n_boot, ctx.seed(), ctx.jobs()));
                        }
                        {
                          std::vector<ScoredSample> vis;
                          for (const auto& rec : subset.records) {
                            vis.push_back({rec.patient_id,
                                           vasoactive_inotropic_score(rec, subset.dictionary, ctx.config().vis_weights, true),
                                           labels.at(rec.patient_id)});
                          }
                          baselines.push_back(direct_report(task_name, "vis", vis, n_boot, ctx.seed(), ctx.jobs()));
                        }
                        for (const auto& marker : o->biomarkers) {
                          baselines.push_back(direct_report(task_name, marker,
                                                            biomarker_as_classifier(subset, marker, labels), n_boot,
                                                            ctx.seed(), ctx.jobs()));
                        }

                        std::vector<EvaluationReport> all{exp.hsi_only};
                        nlohmann::json sequential = nlohmann::json::object();
                        for (const auto& [tier, reports] : exp.by_tier) {
                          nlohmann::json list = nlohmann::json::array();
                          for (const auto& r : reports) {
                            list.push_back(r.to_json());
                            all.push_back(r);
                          }
                          sequential[tier] = std::move(list);
                        }
                        nlohmann::json baseline_json = nlohmann::json::array();
                        for (const auto& r : baselines) {
                          baseline_json.push_back(r.to_json());
                          all.push_back(r);
                        }
                        ctx.write_json("summary.json", {{"task", task_name},
                                                        {"hsi", exp.hsi_only.to_json()},
                                                        {"hsi_plus_clinical", std::move(sequential)},
                                                        {"clinical_rankings", std::move(rankings_json)},
                                                        {"baselines", std::move(baseline_json)}});
                        write_reports(ctx, all);
                      }});
}

}  // namespace

void add_model_commands(CLI::App& app, std::vector<Command>& commands) {
  add_train_rf(app, commands);
  add_rfe(app, commands);
  add_evaluate(app, commands);
  add_report(app, commands);
}

}  // namespace spectrasep::cli
