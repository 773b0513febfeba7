#include <catch_amalgamated.hpp>

#include "spectrasep/error.hpp"
#include "spectrasep/scores.hpp"

using namespace spectrasep;

namespace {

const ParameterDictionary& dict() {
  static const auto d = ParameterDictionary::standard();
  return d;
}

PatientRecord patient(const std::map<std::string, double>& set, std::string id = "P") {
  PatientRecord r;
  r.patient_id = std::move(id);
  r.values.assign(dict().size(), std::nullopt);
  for (const auto& [k, v] : set) r.values[dict().index_of(k)] = v;
  return r;
}

}  // namespace

TEST_CASE("every shipped score table loads", "[scores]") {
  for (const auto& name : standard_score_names()) {
    const auto t = standard_score_table(name, dict());
    CHECK_FALSE(t.rules.empty());
    CHECK_FALSE(t.score_name.empty());
  }
  CHECK(standard_score_names().size() == 5);
}

TEST_CASE("qSOFA thresholds are inclusive where defined", "[scores]") {
  const auto q = standard_score_table("qsofa", dict());
  CHECK(evaluate_score(patient({{"respiratory_rate", 21.9}, {"systolic_bp", 100.1}, {"gcs", 15}}), q).value == 0);
  CHECK(evaluate_score(patient({{"respiratory_rate", 22}, {"systolic_bp", 120}, {"gcs", 15}}), q).value == 1);
  CHECK(evaluate_score(patient({{"respiratory_rate", 30}, {"systolic_bp", 80}, {"gcs", 15}}), q).value == 2);
  const auto partial = evaluate_score(patient({{"gcs", 9}}), q);
  CHECK(partial.value == 1);
  CHECK(partial.valid);
  CHECK(partial.contributing_rules == std::vector<std::size_t>{2});
}

TEST_CASE("SOFA groups take the maximum satisfied rule", "[scores]") {
  const auto sofa = standard_score_table("sofa", dict());
  // po2/fio2 = 75 / 0.5 = 150 -> respiration 3; platelets 120 -> 1.
  const auto r = evaluate_score(patient({{"po2", 75}, {"fio2", 0.5}, {"platelets", 120}}), sofa);
  CHECK(r.value == 4);
  // Zero fio2 makes the ratio undefined, so the group is skipped.
  CHECK(evaluate_score(patient({{"po2", 75}, {"fio2", 0.0}}), sofa).value == 0);
}

TEST_CASE("score tables reject bad definitions", "[scores]") {
  auto base = nlohmann::json{{"score_name", "x"},
                             {"rules", {{{"parameter", "age"}, {"comparator", ">"}, {"threshold", 1}, {"points", 1}}}}};
  CHECK_NOTHROW(ScoreTable::from_json(base, dict()));
  auto unknown = base;
  unknown["rules"][0]["parameter"] = "shoe_size";
  CHECK_THROWS_AS(ScoreTable::from_json(unknown, dict()), ConfigError);
  auto negative = base;
  negative["rules"][0]["points"] = -1;
  CHECK_THROWS_AS(ScoreTable::from_json(negative, dict()), ConfigError);
  auto cmp = base;
  cmp["rules"][0]["comparator"] = "~";
  CHECK_THROWS_AS(ScoreTable::from_json(cmp, dict()), ConfigError);
  auto agg = base;
  agg["aggregation"] = "max";
  CHECK_THROWS_AS(ScoreTable::from_json(agg, dict()), ConfigError);
  auto range = base;
  range["rules"][0] = {{"parameter", "age"}, {"comparator", "in_range"}, {"thresholds", {5, 1}}, {"points", 1}};
  CHECK_THROWS_AS(ScoreTable::from_json(range, dict()), ConfigError);
  CHECK(parse_comparator("≥") == Comparator::greater_equal);
}

TEST_CASE("vasoactive-inotropic score", "[scores]") {
  CHECK(vasoactive_inotropic_score(patient({}), dict()) == 0.0);
  CHECK(vasoactive_inotropic_score(patient({{"dopamine", 5}, {"adrenaline", 0.05}, {"milrinone", 0.5}}), dict()) ==
        Catch::Approx(5 + 5 + 5));
  CHECK_THROWS_AS(vasoactive_inotropic_score(patient({}), dict(), default_vis_weights(), false), ComputationError);
  CHECK_THROWS_AS(vasoactive_inotropic_score(patient({{"dopamine", -1}}), dict()), ComputationError);
  VisWeights custom{{"dopamine", 2.0}};
  CHECK(vasoactive_inotropic_score(patient({{"dopamine", 3}, {"noradrenaline", 1}}), dict(), custom) == 6.0);
  CHECK_THROWS_AS(vis_weights_from_json(nlohmann::json::array()), ConfigError);
}

TEST_CASE("scores and biomarkers become classifier inputs", "[scores]") {
  const std::map<std::string, int> labels{{"A", 1}, {"B", 0}, {"C", 1}};
  std::vector<ScoreResult> results{{"A", "s", 3, true, {}}, {"B", "s", 1, true, {}}, {"C", "s", 2, false, {}}};
  const auto samples = score_as_classifier(results, labels);
  REQUIRE(samples.size() == 2);
  CHECK(samples[0].patient_id == "A");
  CHECK(samples[1].label == 0);
  results[1].valid = false;
  CHECK_THROWS_AS(score_as_classifier(results, labels), ComputationError);

  Cohort cohort;
  cohort.dictionary = dict();
  cohort.records = {patient({{"lactate", 1.7}}, "A"), patient({}, "B"), patient({{"lactate", 0.9}}, "C"),
                    patient({{"lactate", 3.0}}, "D")};
  // D has no label for the task and is skipped.
  const std::map<std::string, int> task{{"A", 1}, {"B", 0}, {"C", 0}};
  const auto lac = biomarker_as_classifier(cohort, "lactate", task);
  REQUIRE(lac.size() == 2);
  CHECK(lac[0].value == 1.7);
  CHECK(lac[1].value == 0.9);
}
