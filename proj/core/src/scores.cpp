#include "spectrasep/scores.hpp"

#include <algorithm>
#include <cmath>

#include "spectrasep/defaults.hpp"
#include "spectrasep/error.hpp"

namespace spectrasep {

std::string_view to_string(Comparator cmp) {
  switch (cmp) {
    case Comparator::less: return "<";
    case Comparator::less_equal: return "<=";
    case Comparator::greater: return ">";
    case Comparator::greater_equal: return ">=";
    case Comparator::equal: return "=";
    case Comparator::in_range: return "in_range";
  }
  return "=";
}

Comparator parse_comparator(std::string_view text) {
  if (text == "<") return Comparator::less;
  if (text == "<=" || text == "≤") return Comparator::less_equal;
  if (text == ">") return Comparator::greater;
  if (text == ">=" || text == "≥") return Comparator::greater_equal;
  if (text == "=" || text == "==") return Comparator::equal;
  if (text == "in_range") return Comparator::in_range;
  throw ConfigError("unknown comparator '" + std::string(text) + "'");
}

namespace {

RuleOperand parse_operand(const std::string& text, const ParameterDictionary& dict, const std::string& score) {
  RuleOperand op;
  op.text = text;
  const auto slash = text.find('/');
  auto lookup = [&](const std::string& name) {
    auto idx = dict.find(name);
    if (!idx) throw ConfigError("score '" + score + "': rule references unknown parameter '" + name + "'");
    return *idx;
  };
  if (slash == std::string::npos) {
    op.numerator = lookup(text);
  } else {
    op.numerator = lookup(text.substr(0, slash));
    op.denominator = lookup(text.substr(slash + 1));
  }
  return op;
}

std::optional<double> operand_value(const PatientRecord& record, const RuleOperand& op) {
  const auto& num = record.values.at(op.numerator);
  if (!num) return std::nullopt;
  if (!op.denominator) return *num;
  const auto& den = record.values.at(*op.denominator);
  if (!den || *den == 0.0) return std::nullopt;
  return *num / *den;
}

bool satisfied(const ScoreRule& rule, double v) {
  switch (rule.comparator) {
    case Comparator::less: return v < rule.threshold;
    case Comparator::less_equal: return v <= rule.threshold;
    case Comparator::greater: return v > rule.threshold;
    case Comparator::greater_equal: return v >= rule.threshold;
    case Comparator::equal: return v == rule.threshold;
    case Comparator::in_range: return v >= rule.threshold && v <= rule.threshold_high;
  }
  return false;
}

}  // namespace

ScoreTable ScoreTable::from_json(const nlohmann::json& j, const ParameterDictionary& dict) {
  ScoreTable table;
  try {
    table.score_name = j.at("score_name").get<std::string>();
    if (j.contains("aggregation") && j["aggregation"] != "sum") {
      throw ConfigError("score '" + table.score_name + "': only sum aggregation is supported");
    }
    const std::string policy = j.value("missing_policy", "skip_rule");
    if (policy == "skip_rule") table.missing_policy = MissingPolicy::skip_rule;
    else if (policy == "score_invalid") table.missing_policy = MissingPolicy::score_invalid;
    else throw ConfigError("score '" + table.score_name + "': unknown missing_policy '" + policy + "'");

    for (const auto& r : j.at("rules")) {
      ScoreRule rule;
      rule.operand = parse_operand(r.at("parameter").get<std::string>(), dict, table.score_name);
      rule.comparator = parse_comparator(r.at("comparator").get<std::string>());
      if (rule.comparator == Comparator::in_range) {
        const auto& t = r.at("thresholds");
        rule.threshold = t.at(0).get<double>();
        rule.threshold_high = t.at(1).get<double>();
        if (rule.threshold > rule.threshold_high) {
          throw ConfigError("score '" + table.score_name + "': in_range bounds reversed");
        }
      } else {
        rule.threshold = r.at("threshold").get<double>();
      }
      rule.points = r.at("points").get<double>();
      if (!(rule.points >= 0.0)) throw ConfigError("score '" + table.score_name + "': points must be >= 0");
      rule.group = r.value("group", "");
      table.rules.push_back(std::move(rule));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("score table: " + std::string(e.what()));
  }
  return table;
}

ScoreResult evaluate_score(const PatientRecord& record, const ScoreTable& table) {
  ScoreResult result;
  result.patient_id = record.patient_id;
  result.score_name = table.score_name;

  // group key -> (points, rule index)
  std::map<std::string, std::pair<double, std::size_t>> best;
  for (std::size_t i = 0; i < table.rules.size(); ++i) {
    const auto& rule = table.rules[i];
    const auto v = operand_value(record, rule.operand);
    if (!v) {
      if (table.missing_policy == MissingPolicy::score_invalid) result.valid = false;
      continue;
    }
    if (!satisfied(rule, *v)) continue;
    const std::string key = rule.group.empty() ? "rule#" + std::to_string(i) : "group:" + rule.group;
    auto it = best.find(key);
    if (it == best.end() || rule.points > it->second.first) best[key] = {rule.points, i};
  }
  for (const auto& [key, entry] : best) {
    result.value += entry.first;
    if (entry.first > 0.0) result.contributing_rules.push_back(entry.second);
  }
  std::sort(result.contributing_rules.begin(), result.contributing_rules.end());
  return result;
}

std::vector<std::string> standard_score_names() { return {"qsofa", "sirs", "news", "sofa", "apache2"}; }

ScoreTable standard_score_table(std::string_view name, const ParameterDictionary& dict) {
  return ScoreTable::from_json(embedded_json("scores/" + std::string(name) + ".table.json"), dict);
}

VisWeights default_vis_weights() { return vis_weights_from_json(embedded_json("vis.weights.json")); }

VisWeights vis_weights_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("VIS weights must be a JSON object of agent -> weight");
  VisWeights w;
  for (const auto& [agent, weight] : j.items()) {
    if (!weight.is_number() || weight.get<double>() < 0.0) {
      throw ConfigError("VIS weight for '" + agent + "' must be a nonnegative number");
    }
    w[agent] = weight.get<double>();
  }
  return w;
}

double vasoactive_inotropic_score(const PatientRecord& record, const ParameterDictionary& dict,
                                  const VisWeights& weights, bool missing_as_zero) {
  double total = 0.0;
  for (const auto& [agent, weight] : weights) {
    const auto idx = dict.find(agent);
    if (!idx) throw ConfigError("VIS agent '" + agent + "' is not a dictionary parameter");
    const auto& dose = record.values.at(*idx);
    if (!dose) {
      if (missing_as_zero) continue;
      throw ComputationError("VIS: missing dose '" + agent + "' for patient '" + record.patient_id + "'");
    }
    if (*dose < 0.0) {
      throw ComputationError("VIS: negative dose '" + agent + "' for patient '" + record.patient_id + "'");
    }
    total += weight * *dose;
  }
  return total;
}

namespace {

void require_both_classes(const std::vector<ScoredSample>& samples, const std::string& what) {
  std::size_t pos = 0;
  for (const auto& s : samples) pos += s.label == 1 ? 1 : 0;
  if (pos == 0 || pos == samples.size()) {
    throw ComputationError(what + ": both classes need at least one valid value");
  }
}

}  // namespace

std::vector<ScoredSample> score_as_classifier(const std::vector<ScoreResult>& results,
                                              const std::map<std::string, int>& labels) {
  std::vector<ScoredSample> out;
  for (const auto& r : results) {
    if (!r.valid) continue;
    auto it = labels.find(r.patient_id);
    if (it == labels.end()) continue;
    out.push_back({r.patient_id, r.value, it->second});
  }
  require_both_classes(out, results.empty() ? std::string("score") : results.front().score_name);
  return out;
}

std::vector<ScoredSample> biomarker_as_classifier(const Cohort& cohort, std::string_view parameter,
                                                  const std::map<std::string, int>& labels) {
  const std::size_t p = cohort.dictionary.index_of(parameter);
  std::vector<ScoredSample> out;
  for (const auto& rec : cohort.records) {
    const auto& v = rec.values[p];
    if (!v) continue;
    auto it = labels.find(rec.patient_id);
    if (it == labels.end()) continue;
    out.push_back({rec.patient_id, *v, it->second});
  }
  require_both_classes(out, std::string(parameter));
  return out;
}

}  // namespace spectrasep
