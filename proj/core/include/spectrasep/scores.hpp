#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectrasep/clinical.hpp"

namespace spectrasep {

enum class Comparator { less, less_equal, greater, greater_equal, equal, in_range };

std::string_view to_string(Comparator cmp);
Comparator parse_comparator(std::string_view text);

enum class MissingPolicy { skip_rule, score_invalid };

// A rule operand is either a dictionary parameter or the quotient of two
// ("po2/fio2").
struct RuleOperand {
  std::string text;
  std::size_t numerator = 0;
  std::optional<std::size_t> denominator;
};

struct ScoreRule {
  RuleOperand operand;
  Comparator comparator = Comparator::greater;
  double threshold = 0.0;
  double threshold_high = 0.0;  // in_range upper bound (inclusive)
  double points = 0.0;
  // Rules sharing a group contribute the maximum of their satisfied points;
  // groups are summed. An empty group makes the rule its own group.
  std::string group;
};

struct ScoreTable {
  std::string score_name;
  MissingPolicy missing_policy = MissingPolicy::skip_rule;
  std::vector<ScoreRule> rules;

  // Throws ConfigError for unknown parameters, negative points or a
  // malformed comparator.
  static ScoreTable from_json(const nlohmann::json& j, const ParameterDictionary& dict);
};

struct ScoreResult {
  std::string patient_id;
  std::string score_name;
  double value = 0.0;
  bool valid = true;
  std::vector<std::size_t> contributing_rules;
};

ScoreResult evaluate_score(const PatientRecord& record, const ScoreTable& table);

// Shipped tables by short name: qsofa, sirs, news, sofa, apache2.
std::vector<std::string> standard_score_names();
ScoreTable standard_score_table(std::string_view name, const ParameterDictionary& dict);

using VisWeights = std::map<std::string, double>;

VisWeights default_vis_weights();
VisWeights vis_weights_from_json(const nlohmann::json& j);

// Weighted dose sum. Missing doses count as zero when `missing_as_zero`,
// otherwise they raise ComputationError; negative doses always do.
double vasoactive_inotropic_score(const PatientRecord& record, const ParameterDictionary& dict,
                                  const VisWeights& weights = default_vis_weights(),
                                  bool missing_as_zero = true);

struct ScoredSample {
  std::string patient_id;
  double value = 0.0;
  int label = 0;
};

// Pairs valid score values with binary task labels for ROC analysis.
// Throws ComputationError when either class has no valid result.
std::vector<ScoredSample> score_as_classifier(const std::vector<ScoreResult>& results,
                                              const std::map<std::string, int>& labels);

// Raw recorded biomarker (CRP, PCT, lactate, CRT, SMS, ...) as a decision
// value; missing values are skipped and observed values pass unchanged.
std::vector<ScoredSample> biomarker_as_classifier(const Cohort& cohort, std::string_view parameter,
                                                  const std::map<std::string, int>& labels);

}  // namespace spectrasep
