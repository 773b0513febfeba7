#include "spectrasep/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include "spectrasep/biostats.hpp"
#include "spectrasep/csv.hpp"
#include "spectrasep/error.hpp"
#include "spectrasep/parallel.hpp"
#include "spectrasep/rng.hpp"

namespace spectrasep {

namespace {

constexpr std::uint64_t kOuterStream = 0x6f75746572ull;  // "outer"
constexpr std::uint64_t kInnerStream = 0x696e6e6572ull;  // "inner"

// Stratified assignment: patients are grouped by class (positive first),
// shuffled within class and dealt to folds in turn, the counter carrying
// over from one class to the next.
std::vector<int> deal_folds(const std::vector<std::size_t>& members, const std::vector<int>& labels, int folds,
                            Rng& rng) {
  std::vector<int> assignment(members.size(), -1);
  std::size_t counter = 0;
  for (int cls : {1, 0}) {
    std::vector<std::size_t> slots;
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (labels[members[i]] == cls) slots.push_back(i);
    }
    rng.shuffle(std::span<std::size_t>(slots));
    for (auto slot : slots) {
      assignment[slot] = static_cast<int>(counter % static_cast<std::size_t>(folds));
      ++counter;
    }
  }
  return assignment;
}

void require_class_sizes(const std::vector<std::size_t>& members, const std::vector<int>& labels, int folds,
                         const std::string& what) {
  std::size_t pos = 0;
  for (auto m : members) pos += labels[m] == 1 ? 1 : 0;
  const std::size_t neg = members.size() - pos;
  const auto k = static_cast<std::size_t>(folds);
  if (pos < k || neg < k) {
    throw ComputationError(what + ": " + std::to_string(pos) + " positive and " + std::to_string(neg) +
                           " negative patients cannot be stratified into " + std::to_string(folds) + " folds");
  }
}

}  // namespace

std::vector<std::size_t> SplitPlan::outer_test_rows(int outer) const {
  std::vector<std::size_t> rows;
  for (std::size_t p = 0; p < size(); ++p) {
    if (outer_fold[p] == outer) rows.push_back(p);
  }
  return rows;
}

std::vector<std::size_t> SplitPlan::outer_train_rows(int outer) const {
  std::vector<std::size_t> rows;
  for (std::size_t p = 0; p < size(); ++p) {
    if (outer_fold[p] != outer) rows.push_back(p);
  }
  return rows;
}

std::vector<std::size_t> SplitPlan::inner_validation_rows(int outer, int inner) const {
  std::vector<std::size_t> rows;
  for (std::size_t p = 0; p < size(); ++p) {
    if (outer_fold[p] != outer && inner_fold[p][static_cast<std::size_t>(outer)] == inner) rows.push_back(p);
  }
  return rows;
}

std::vector<std::size_t> SplitPlan::inner_train_rows(int outer, int inner) const {
  std::vector<std::size_t> rows;
  for (std::size_t p = 0; p < size(); ++p) {
    if (outer_fold[p] != outer && inner_fold[p][static_cast<std::size_t>(outer)] != inner) rows.push_back(p);
  }
  return rows;
}

nlohmann::json SplitPlan::to_json() const {
  nlohmann::json patients = nlohmann::json::array();
  for (std::size_t p = 0; p < size(); ++p) {
    patients.push_back({{"patient_id", patient_ids[p]},
                        {"label", labels[p]},
                        {"outer_fold", outer_fold[p]},
                        {"inner_fold", inner_fold[p]}});
  }
  return {{"format", "spectrasep.split_plan"},
          {"version", 1},
          {"task", to_string(task)},
          {"seed", seed},
          {"outer_folds", outer_folds},
          {"inner_folds", inner_folds},
          {"patients", std::move(patients)}};
}

SplitPlan SplitPlan::from_json(const nlohmann::json& j) {
  SplitPlan plan;
  try {
    if (j.at("format") != "spectrasep.split_plan") throw ValidationError("split plan: unknown format");
    plan.task = parse_task(j.at("task").get<std::string>());
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.outer_folds = j.at("outer_folds").get<int>();
    plan.inner_folds = j.at("inner_folds").get<int>();
    for (const auto& p : j.at("patients")) {
      plan.patient_ids.push_back(p.at("patient_id").get<std::string>());
      plan.labels.push_back(p.at("label").get<int>());
      plan.outer_fold.push_back(p.at("outer_fold").get<int>());
      plan.inner_fold.push_back(p.at("inner_fold").get<std::vector<int>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("split plan: " + std::string(e.what()));
  }
  check_no_leakage(plan);
  return plan;
}

SplitPlan make_nested_splits(const std::vector<std::string>& patient_ids, const std::vector<int>& labels,
                             Task task, std::uint64_t seed, int outer_folds, int inner_folds) {
  if (patient_ids.size() != labels.size()) throw ComputationError("splits: ids and labels differ in length");
  if (outer_folds < 2 || inner_folds < 2) throw ComputationError("splits: at least 2 folds are required");
  for (int y : labels) {
    if (y != 0 && y != 1) throw ComputationError("splits: labels must be 0 or 1");
  }
  const std::set<std::string> unique(patient_ids.begin(), patient_ids.end());
  if (unique.size() != patient_ids.size()) throw ComputationError("splits: duplicate patient ids");

  SplitPlan plan;
  plan.task = task;
  plan.seed = seed;
  plan.outer_folds = outer_folds;
  plan.inner_folds = inner_folds;
  plan.patient_ids = patient_ids;
  plan.labels = labels;

  std::vector<std::size_t> all(patient_ids.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  require_class_sizes(all, labels, outer_folds, "outer splits");
  Rng outer_rng(derive_seed(seed, kOuterStream));
  plan.outer_fold = deal_folds(all, labels, outer_folds, outer_rng);

  plan.inner_fold.assign(patient_ids.size(), std::vector<int>(static_cast<std::size_t>(outer_folds), -1));
  for (int o = 0; o < outer_folds; ++o) {
    const auto train = plan.outer_train_rows(o);
    require_class_sizes(train, labels, inner_folds, "inner splits of outer fold " + std::to_string(o));
    Rng inner_rng(derive_seed(seed, kInnerStream, static_cast<std::uint64_t>(o)));
    const auto assignment = deal_folds(train, labels, inner_folds, inner_rng);
    for (std::size_t i = 0; i < train.size(); ++i) {
      plan.inner_fold[train[i]][static_cast<std::size_t>(o)] = assignment[i];
    }
  }
  check_no_leakage(plan);
  return plan;
}

void check_no_leakage(const SplitPlan& plan) {
  const std::size_t n = plan.size();
  if (plan.labels.size() != n || plan.outer_fold.size() != n || plan.inner_fold.size() != n) {
    throw ComputationError("split plan: inconsistent array lengths");
  }
  const std::set<std::string> unique(plan.patient_ids.begin(), plan.patient_ids.end());
  if (unique.size() != n) throw ComputationError("split plan: a patient appears more than once");
  for (std::size_t p = 0; p < n; ++p) {
    const int of = plan.outer_fold[p];
    if (of < 0 || of >= plan.outer_folds) {
      throw ComputationError("split plan: patient '" + plan.patient_ids[p] + "' has no valid outer fold");
    }
    if (plan.inner_fold[p].size() != static_cast<std::size_t>(plan.outer_folds)) {
      throw ComputationError("split plan: inner fold row has the wrong length");
    }
    for (int o = 0; o < plan.outer_folds; ++o) {
      const int inf = plan.inner_fold[p][static_cast<std::size_t>(o)];
      if (o == of && inf != -1) {
        throw ComputationError("split plan: test patient '" + plan.patient_ids[p] + "' is used in outer fold " +
                               std::to_string(o) + " training");
      }
      if (o != of && (inf < 0 || inf >= plan.inner_folds)) {
        throw ComputationError("split plan: patient '" + plan.patient_ids[p] + "' lacks an inner fold");
      }
    }
  }
}

void write_predictions_csv(const std::vector<PredictionRow>& rows, std::ostream& out) {
  const std::size_t k = rows.empty() ? 2 : rows.front().values.size();
  std::vector<std::string> header{"patient_id", "fold", "repetition"};
  for (std::size_t c = 0; c < k; ++c) header.push_back("value_class" + std::to_string(c));
  header.emplace_back("label");
  csv::write_row(out, header);
  for (const auto& r : rows) {
    if (r.values.size() != k) throw ComputationError("predictions: inconsistent class arity");
    std::vector<std::string> fields{r.patient_id, std::to_string(r.fold), std::to_string(r.repetition)};
    for (double v : r.values) fields.push_back(csv::format_number(v));
    fields.push_back(std::to_string(r.label));
    csv::write_row(out, fields);
  }
}

namespace {

int parse_int_field(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw FormatError(where + ": expected an integer, got '" + text + "'");
}

double parse_double_field(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw FormatError(where + ": expected a finite number, got '" + text + "'");
}

}  // namespace

std::vector<PredictionRow> read_predictions_csv(const std::filesystem::path& path) {
  const csv::Table t = csv::read_file(path);
  const auto id_col = t.column("patient_id");
  const auto fold_col = t.column("fold");
  const auto rep_col = t.column("repetition");
  const auto label_col = t.column("label");
  if (id_col == csv::Table::npos || fold_col == csv::Table::npos || rep_col == csv::Table::npos ||
      label_col == csv::Table::npos) {
    throw FormatError(path.string() + ": predictions need patient_id, fold, repetition and label columns");
  }
  std::vector<std::size_t> value_cols;
  for (std::size_t c = 0;; ++c) {
    const auto col = t.column("value_class" + std::to_string(c));
    if (col == csv::Table::npos) break;
    value_cols.push_back(col);
  }
  if (value_cols.empty()) throw FormatError(path.string() + ": no value_class0.. columns");

  std::vector<PredictionRow> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    const std::string where = path.string() + ": line " + std::to_string(t.lines[r]);
    PredictionRow row;
    row.patient_id = f[id_col];
    if (row.patient_id.empty()) throw FormatError(where + ": empty patient_id");
    row.fold = parse_int_field(f[fold_col], where);
    row.repetition = parse_int_field(f[rep_col], where);
    row.label = parse_int_field(f[label_col], where);
    if (row.label != 0 && row.label != 1) throw FormatError(where + ": label must be 0 or 1");
    for (auto c : value_cols) row.values.push_back(parse_double_field(f[c], where));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<EnsembledPrediction> ensemble(const std::vector<PredictionRow>& rows, EnsembleScope scope) {
  struct Group {
    std::vector<std::size_t> members;
  };
  std::map<std::pair<std::string, int>, std::size_t> index;
  std::vector<Group> groups;
  std::vector<EnsembledPrediction> out;
  const std::size_t k = rows.empty() ? 0 : rows.front().values.size();

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.values.size() != k || k == 0) {
      throw ComputationError("ensemble: patient '" + r.patient_id + "' has inconsistent class arity");
    }
    const int fold_key = scope == EnsembleScope::validation ? r.fold : -1;
    auto [it, inserted] = index.try_emplace({r.patient_id, fold_key}, groups.size());
    if (inserted) {
      groups.emplace_back();
      out.push_back({r.patient_id, fold_key, std::vector<double>(k, 0.0), r.label, 0});
    }
    const std::size_t g = it->second;
    if (out[g].label != r.label) {
      throw ComputationError("ensemble: patient '" + r.patient_id + "' has conflicting labels");
    }
    groups[g].members.push_back(i);
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& members = groups[g].members;
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      if (rows[a].fold != rows[b].fold) return rows[a].fold < rows[b].fold;
      if (rows[a].repetition != rows[b].repetition) return rows[a].repetition < rows[b].repetition;
      return rows[a].values < rows[b].values;
    });
    for (auto m : members) {
      for (std::size_t c = 0; c < k; ++c) out[g].values[c] += rows[m].values[c];
    }
    for (double& v : out[g].values) v /= static_cast<double>(members.size());
    out[g].members = members.size();
  }
  return out;
}

RocCurve roc_auroc(std::span<const double> values, std::span<const int> labels) {
  if (values.size() != labels.size()) throw ComputationError("ROC: values and labels differ in length");
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw ComputationError("ROC: labels must be 0 or 1");
    if (std::isnan(values[i])) throw ComputationError("ROC: NaN decision value");
    pos += labels[i] == 1 ? 1 : 0;
  }
  const std::uint64_t neg = values.size() - pos;
  if (pos == 0 || neg == 0) throw ComputationError("ROC: both classes must be present");

  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  // Twice the area in units of 1 / (pos * neg); exact for integer counts.
  std::uint64_t area2 = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double v = values[order[i]];
    std::uint64_t gtp = 0;
    std::uint64_t gfp = 0;
    for (; i < order.size() && values[order[i]] == v; ++i) (labels[order[i]] == 1 ? gtp : gfp) += 1;
    area2 += gfp * (2 * tp + gtp);
    tp += gtp;
    fp += gfp;
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos), v});
  }
  curve.auroc = static_cast<double>(area2) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
  return curve;
}

double auroc(std::span<const double> values, std::span<const int> labels) {
  return roc_auroc(values, labels).auroc;
}

BootstrapResult bootstrap_ci(std::span<const double> values, std::span<const int> labels, std::size_t n,
                             std::uint64_t seed, int jobs) {
  if (n == 0) throw ComputationError("bootstrap: number of resamples must be positive");
  const double full = auroc(values, labels);  // validates both classes are present
  (void)full;
  const std::size_t m = values.size();
  BootstrapResult result;
  result.n_bootstrap = n;
  result.aurocs.assign(n, 0.0);
  std::vector<std::size_t> redraws(n, 0);
  parallel_for(n, jobs, [&](std::size_t b) {
    Rng rng(derive_seed(seed, b));
    std::vector<double> v(m);
    std::vector<int> y(m);
    for (;;) {
      std::size_t pos = 0;
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = rng.index(m);
        v[i] = values[j];
        y[i] = labels[j];
        pos += y[i] == 1 ? 1 : 0;
      }
      if (pos > 0 && pos < m) break;
      ++redraws[b];
    }
    result.aurocs[b] = auroc(v, y);
  });
  result.redraws = std::accumulate(redraws.begin(), redraws.end(), std::size_t{0});
  result.mean = mean(result.aurocs);
  result.sd = n > 1 ? sample_sd(result.aurocs) : 0.0;
  std::vector<double> sorted = result.aurocs;
  std::sort(sorted.begin(), sorted.end());
  result.ci_low = quantile_sorted(sorted, 0.025);
  result.ci_high = quantile_sorted(sorted, 0.975);
  return result;
}

nlohmann::json EvaluationReport::to_json(bool include_bootstrap_samples) const {
  nlohmann::json folds = nlohmann::json::array();
  for (double a : per_fold_auroc) folds.push_back(std::isfinite(a) ? nlohmann::json(a) : nlohmann::json());
  nlohmann::json j = {{"task", task},
                      {"model", model},
                      {"n_patients", n_patients},
                      {"n_positive", n_positive},
                      {"auroc", auroc},
                      {"auroc_mean", bootstrap.mean},
                      {"auroc_sd", bootstrap.sd},
                      {"auroc_ci95", {bootstrap.ci_low, bootstrap.ci_high}},
                      {"n_bootstrap", bootstrap.n_bootstrap},
                      {"bootstrap_redraws", bootstrap.redraws},
                      {"per_fold_auroc", std::move(folds)},
                      {"resampling_unit", resampling_unit},
                      {"seed", seed}};
  if (include_bootstrap_samples) j["bootstrap_aurocs"] = bootstrap.aurocs;
  return j;
}

EvaluationReport make_report(std::string task, std::string model,
                             const std::vector<EnsembledPrediction>& predictions, const SplitPlan* plan,
                             std::size_t n_bootstrap, std::uint64_t seed, int jobs) {
  EvaluationReport report;
  report.task = std::move(task);
  report.model = std::move(model);
  report.seed = seed;
  std::vector<double> values;
  std::vector<int> labels;
  for (const auto& p : predictions) {
    values.push_back(p.decision());
    labels.push_back(p.label);
  }
  report.n_patients = values.size();
  report.n_positive = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  report.roc = roc_auroc(values, labels);
  report.auroc = report.roc.auroc;
  report.bootstrap = bootstrap_ci(values, labels, n_bootstrap, seed, jobs);

  if (plan != nullptr) {
    std::map<std::string, int> fold_of;
    for (std::size_t p = 0; p < plan->size(); ++p) fold_of[plan->patient_ids[p]] = plan->outer_fold[p];
    for (int o = 0; o < plan->outer_folds; ++o) {
      std::vector<double> v;
      std::vector<int> y;
      for (std::size_t i = 0; i < predictions.size(); ++i) {
        auto it = fold_of.find(predictions[i].patient_id);
        if (it != fold_of.end() && it->second == o) {
          v.push_back(values[i]);
          y.push_back(labels[i]);
        }
      }
      const auto npos = std::count(y.begin(), y.end(), 1);
      const bool both = npos > 0 && npos < static_cast<std::ptrdiff_t>(y.size());
      report.per_fold_auroc.push_back(both ? auroc(v, y) : std::numeric_limits<double>::quiet_NaN());
    }
  }
  return report;
}

void write_roc_csv(const std::vector<EvaluationReport>& reports, std::ostream& out) {
  csv::write_row(out, {"model", "fpr", "tpr", "threshold"});
  for (const auto& r : reports) {
    for (const auto& p : r.roc.points) {
      csv::write_row(out, {r.model, csv::format_number(p.fpr), csv::format_number(p.tpr),
                           csv::format_number(p.threshold)});
    }
  }
}

void write_auroc_boxplot_csv(const std::vector<EvaluationReport>& reports, std::ostream& out) {
  csv::write_row(out, {"model", "auroc", "q1", "median", "q3", "whisker_low", "whisker_high", "mean", "sd",
                       "ci_low", "ci_high", "n_bootstrap"});
  for (const auto& r : reports) {
    const BoxplotStats b = boxplot_stats(r.bootstrap.aurocs);
    csv::write_row(out, {r.model, csv::format_number(r.auroc), csv::format_number(b.q1),
                         csv::format_number(b.median), csv::format_number(b.q3), csv::format_number(b.whisker_low),
                         csv::format_number(b.whisker_high), csv::format_number(r.bootstrap.mean),
                         csv::format_number(r.bootstrap.sd), csv::format_number(r.bootstrap.ci_low),
                         csv::format_number(r.bootstrap.ci_high), std::to_string(r.bootstrap.n_bootstrap)});
  }
}

ForestEvaluation evaluate_forest(std::span<const FeatureTable* const> fold_tables, const SplitPlan& plan,
                                 std::string model_name, std::uint64_t seed, const ForestParams& params,
                                 std::size_t n_bootstrap) {
  const auto outer = static_cast<std::size_t>(plan.outer_folds);
  const auto inner = static_cast<std::size_t>(plan.inner_folds);
  if (fold_tables.size() != 1 && fold_tables.size() != outer) {
    throw ComputationError("evaluate_forest: need one feature table or one per outer fold");
  }
  for (const FeatureTable* t : fold_tables) {
    if (t == nullptr || t->row_ids() != plan.patient_ids) {
      throw ComputationError("evaluate_forest: feature rows are not aligned with the split plan");
    }
  }
  ForestParams fit_params = params;
  fit_params.jobs = 1;

  std::vector<std::vector<PredictionRow>> task_rows(outer * inner);
  parallel_for(outer * inner, params.jobs, [&](std::size_t task) {
    const int o = static_cast<int>(task / inner);
    const int i = static_cast<int>(task % inner);
    const FeatureTable& table = *fold_tables[fold_tables.size() == 1 ? 0 : task / inner];
    const auto train = plan.inner_train_rows(o, i);
    std::vector<int> y;
    for (auto r : train) y.push_back(plan.labels[r]);
    const RandomForest forest = RandomForest::fit(table.select_rows(train), y,
                                                  derive_seed(seed, static_cast<std::uint64_t>(o),
                                                              static_cast<std::uint64_t>(i)),
                                                  fit_params);
    for (auto r : plan.outer_test_rows(o)) {
      task_rows[task].push_back({plan.patient_ids[r], i, 0, forest.predict_proba(table.row(r)), plan.labels[r]});
    }
  });

  ForestEvaluation result;
  for (auto& rows : task_rows) {
    for (auto& row : rows) result.predictions.push_back(std::move(row));
  }
  result.report = make_report(std::string(to_string(plan.task)), std::move(model_name),
                              ensemble(result.predictions, EnsembleScope::test), &plan, n_bootstrap, seed,
                              params.jobs);
  return result;
}

ForestEvaluation evaluate_forest(const FeatureTable& table, const SplitPlan& plan, std::string model_name,
                                 std::uint64_t seed, const ForestParams& params, std::size_t n_bootstrap) {
  const FeatureTable* tables[] = {&table};
  return evaluate_forest(tables, plan, std::move(model_name), seed, params, n_bootstrap);
}

std::vector<RfeRanking> rfe_per_outer_fold(const FeatureTable& table, const SplitPlan& plan, std::uint64_t seed,
                                           const ForestParams& params) {
  if (table.row_ids() != plan.patient_ids) {
    throw ComputationError("rfe: feature rows are not aligned with the split plan");
  }
  std::vector<RfeRanking> rankings;
  for (int o = 0; o < plan.outer_folds; ++o) {
    std::vector<std::vector<std::size_t>> folds;
    for (int i = 0; i < plan.inner_folds; ++i) folds.push_back(plan.inner_train_rows(o, i));
    rankings.push_back(rfe_rank(table, plan.labels, folds, derive_seed(seed, static_cast<std::uint64_t>(o)), params));
  }
  return rankings;
}

std::vector<FeatureTable> top_k_fold_tables(const FeatureTable& hsi, const ClinicalTierSet& tier, std::size_t k) {
  std::vector<FeatureTable> tables;
  for (const auto& ranking : tier.rankings) {
    if (k == 0) {
      tables.push_back(hsi);
      continue;
    }
    auto cols = ranking.top(k);
    tables.push_back(FeatureTable::hstack(hsi, tier.clinical.select_columns(cols)));
  }
  return tables;
}

SequentialExperiment sequential_feature_experiment(const FeatureTable& hsi, const std::vector<ClinicalTierSet>& tiers,
                                                   const SplitPlan& plan, std::uint64_t seed,
                                                   const ForestParams& params, std::size_t n_bootstrap) {
  SequentialExperiment exp;
  exp.hsi_only = evaluate_forest(hsi, plan, "hsi", seed, params, n_bootstrap).report;
  for (const auto& tier : tiers) {
    if (tier.rankings.size() != static_cast<std::size_t>(plan.outer_folds)) {
      throw ComputationError("sequential experiment: tier '" + tier.tier + "' needs one ranking per outer fold");
    }
    const std::size_t all = tier.clinical.cols();
    std::vector<std::size_t> steps;
    for (std::size_t k : {std::size_t{1}, std::size_t{2}, std::size_t{3}}) {
      if (k < all) steps.push_back(k);
    }
    steps.push_back(all);
    for (std::size_t k : steps) {
      const auto tables = top_k_fold_tables(hsi, tier, k);
      std::vector<const FeatureTable*> ptrs;
      for (const auto& t : tables) ptrs.push_back(&t);
      const std::string name = "hsi+" + tier.tier + (k == all ? std::string("_all") : "_top" + std::to_string(k));
      exp.by_tier[tier.tier].push_back(evaluate_forest(ptrs, plan, name, seed, params, n_bootstrap).report);
    }
  }
  return exp;
}

}  // namespace spectrasep
