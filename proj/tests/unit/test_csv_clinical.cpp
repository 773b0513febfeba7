#include <catch_amalgamated.hpp>

#include <sstream>

#include "spectrasep/clinical.hpp"
#include "spectrasep/csv.hpp"
#include "spectrasep/error.hpp"

using namespace spectrasep;

namespace {

// Header plus one row, every cell empty except those given.
std::string clinical_text(const ParameterDictionary& dict, const std::vector<std::map<std::string, std::string>>& rows) {
  std::ostringstream out;
  out << "patient_id";
  for (const auto& d : dict.entries()) out << ',' << d.name;
  out << '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out << rows[r].at("patient_id");
    for (const auto& d : dict.entries()) {
      out << ',';
      auto it = rows[r].find(d.name);
      if (it != rows[r].end()) out << it->second;
    }
    out << '\n';
  }
  return out.str();
}

PatientRecord record(const ParameterDictionary& dict, std::string id, SepsisLabel s, SurvivalLabel v) {
  PatientRecord r;
  r.patient_id = std::move(id);
  r.sepsis_label = s;
  r.survival_label = v;
  r.values.assign(dict.size(), std::nullopt);
  return r;
}

}  // namespace

TEST_CASE("csv parser handles quoting, CRLF and BOM", "[csv]") {
  const auto t = csv::parse("\xEF\xBB\xBF" "a,b,c\r\n1,\"x, \"\"y\"\"\",3\r\n\r\n4,\"multi\nline\",6\n");
  REQUIRE(t.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "x, \"y\"");
  CHECK(t.rows[1][1] == "multi\nline");
  CHECK(t.lines[0] == 2);
  CHECK(t.lines[1] == 4);
  CHECK(t.column("c") == 2);
  CHECK(t.column("zz") == csv::Table::npos);
}

TEST_CASE("csv parser rejects ragged rows and open quotes", "[csv]") {
  CHECK_THROWS_AS(csv::parse("a,b\n1,2,3\n"), FormatError);
  CHECK_THROWS_AS(csv::parse("a,b\n1,\"2\n"), FormatError);
}

TEST_CASE("csv escaping and number formatting round-trip", "[csv]") {
  CHECK(csv::escape("plain") == "plain");
  CHECK(csv::escape("a,b") == "\"a,b\"");
  CHECK(csv::escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5, 123456789.0}) {
    CHECK(std::stod(csv::format_number(v)) == v);
  }
  CHECK(csv::format_number(0.5) == "0.5");
}

TEST_CASE("standard dictionary has the 33 + 12 layout", "[clinical]") {
  const auto dict = ParameterDictionary::standard();
  CHECK(dict.size() == kOneHourParameterCount + kTenHourParameterCount);
  CHECK(dict.tier_count(Tier::one_hour) == 33);
  CHECK(dict.tier_count(Tier::ten_hours) == 12);
  CHECK(dict.available_at(Tier::one_hour).size() == 33);
  CHECK(dict.available_at(Tier::ten_hours).size() == 45);
  CHECK(dict.has_standard_layout());
  CHECK(dict.encode_category(dict.index_of("sex"), "male") == 1.0);
  CHECK_FALSE(dict.encode_category(dict.index_of("sex"), "other").has_value());
  CHECK_THROWS_AS(dict.index_of("nonexistent"), ConfigError);
  CHECK(ParameterDictionary::from_json(dict.to_json()).entries().size() == dict.size());
}

TEST_CASE("clinical ingestion encodes kinds and keeps missing values", "[clinical]") {
  const auto dict = ParameterDictionary::standard();
  const auto text = clinical_text(dict, {{{"patient_id", "P1"}, {"age", "64"}, {"sex", "female"}, {"ecmo", "true"},
                                          {"ventilation_mode", "aprv"}, {"lactate", "2.25"}},
                                         {{"patient_id", "P2"}, {"age", "130"}}});
  const auto cohort = ingest_clinical(csv::parse(text), dict);
  REQUIRE(cohort.size() == 2);
  const auto& p1 = cohort.records[0];
  CHECK(p1.value(dict, "age") == 64.0);
  CHECK(p1.value(dict, "sex") == 0.0);
  CHECK(p1.value(dict, "ecmo") == 1.0);
  CHECK(p1.value(dict, "ventilation_mode") == 3.0);
  CHECK(p1.value(dict, "lactate") == 2.25);
  CHECK_FALSE(p1.value(dict, "crp").has_value());
  // age 130 is outside the plausible range: kept, with a warning.
  CHECK(cohort.records[1].value(dict, "age") == 130.0);
  REQUIRE(cohort.warnings.size() == 1);
  CHECK(cohort.warnings[0].line == 3);
  CHECK(cohort.warnings[0].parameter == "age");
}

TEST_CASE("clinical ingestion reports the offending cell", "[clinical]") {
  const auto dict = ParameterDictionary::standard();
  const auto bad = clinical_text(dict, {{{"patient_id", "P1"}, {"age", "sixty"}}});
  try {
    ingest_clinical(csv::parse(bad), dict);
    FAIL("expected IngestionError");
  } catch (const IngestionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("age") != std::string::npos);
  }
  CHECK_THROWS_AS(ingest_clinical(csv::parse("patient_id,age\nP1,5\n"), dict), IngestionError);
  const auto dup = clinical_text(dict, {{{"patient_id", "P1"}}, {{"patient_id", "P1"}}});
  CHECK_THROWS_AS(ingest_clinical(csv::parse(dup), dict), IngestionError);
}

TEST_CASE("labels merge and task filtering", "[clinical]") {
  const auto dict = ParameterDictionary::standard();
  auto cohort = ingest_clinical(
      csv::parse(clinical_text(dict, {{{"patient_id", "A"}}, {{"patient_id", "B"}}, {{"patient_id", "C"}}})), dict);
  merge_labels(cohort, csv::parse("patient_id,sepsis_label,survival_label\n"
                                  "A,sepsis,died\nB,no_sepsis,survived\nC,unsure,lost_to_followup\n"));
  CHECK(cohort.records[0].sepsis_label == SepsisLabel::sepsis);
  CHECK(cohort.records[2].survival_label == SurvivalLabel::lost_to_followup);
  const auto sepsis = cohort_filter(cohort, Task::sepsis);
  CHECK(sepsis.size() == 2);
  CHECK(binary_labels(sepsis, Task::sepsis) == std::vector<int>{1, 0});
  CHECK(binary_labels(cohort_filter(cohort, Task::mortality), Task::mortality) == std::vector<int>{1, 0});
  CHECK_THROWS_AS(binary_label(cohort.records[2], Task::sepsis), Error);

  auto copy = cohort;
  CHECK_THROWS_AS(merge_labels(copy, csv::parse("patient_id,sepsis_label,survival_label\nZ,sepsis,died\n")),
                  IngestionError);
  CHECK_THROWS_AS(merge_labels(copy, csv::parse("patient_id,sepsis_label,survival_label\nA,maybe,died\n")),
                  IngestionError);
}

TEST_CASE("clinical csv writer round-trips", "[clinical]") {
  const auto dict = ParameterDictionary::standard();
  Cohort cohort;
  cohort.dictionary = dict;
  auto r = record(dict, "P7", SepsisLabel::sepsis, SurvivalLabel::survived);
  r.values[dict.index_of("age")] = 71.5;
  r.values[dict.index_of("sex")] = 1.0;
  r.values[dict.index_of("renal_replacement")] = 0.0;
  r.values[dict.index_of("pct")] = 0.1 + 0.2;
  cohort.records.push_back(r);
  std::ostringstream clinical, labels;
  write_clinical_csv(cohort, clinical);
  write_labels_csv(cohort, labels);
  auto back = ingest_clinical(csv::parse(clinical.str()), dict);
  merge_labels(back, csv::parse(labels.str()));
  CHECK(back.records == cohort.records);
}

TEST_CASE("imputation and missingness", "[clinical]") {
  const auto dict = ParameterDictionary::standard();
  Cohort cohort;
  cohort.dictionary = dict;
  auto r = record(dict, "A", SepsisLabel::sepsis, SurvivalLabel::died);
  r.values[0] = 50.0;
  cohort.records.push_back(r);
  CHECK(missingness_fraction(cohort) == Catch::Approx(44.0 / 45.0));
  const auto imputed = impute(cohort);
  CHECK(imputed.records[0].values[0] == 50.0);
  CHECK(imputed.records[0].values[1] == kImputedValue);
  CHECK(missingness_fraction(imputed) == 0.0);
}

TEST_CASE("descriptive statistics group by task label", "[clinical]") {
  const auto dict = ParameterDictionary::standard();
  Cohort cohort;
  cohort.dictionary = dict;
  const double ages[] = {60, 70, 40, 50, 45};
  const SepsisLabel labels[] = {SepsisLabel::sepsis, SepsisLabel::sepsis, SepsisLabel::no_sepsis,
                                SepsisLabel::no_sepsis, SepsisLabel::unsure};
  for (int i = 0; i < 5; ++i) {
    auto r = record(dict, "P" + std::to_string(i), labels[i], SurvivalLabel::survived);
    r.values[dict.index_of("age")] = ages[i];
    r.values[dict.index_of("ecmo")] = i == 0 ? 1.0 : 0.0;
    if (i != 3) r.values[dict.index_of("sex")] = i % 2;
    cohort.records.push_back(r);
  }
  const auto stats = descriptive_stats(cohort, Task::sepsis);
  const auto& age = stats.parameters[dict.index_of("age")];
  CHECK(age.groups.at("sepsis").n == 2);
  CHECK(age.groups.at("sepsis").mean == 65.0);
  CHECK(age.groups.at("sepsis").sd == Catch::Approx(std::sqrt(50.0)));
  CHECK(age.groups.at("no_sepsis").mean == 45.0);
  const auto& ecmo = stats.parameters[dict.index_of("ecmo")];
  CHECK(ecmo.groups.at("sepsis").percent_true == 50.0);
  const auto& sex = stats.parameters[dict.index_of("sex")];
  CHECK(sex.missing_percent == 25.0);
  CHECK(sex.groups.at("no_sepsis").category_counts == std::vector<std::size_t>{1, 0});
  CHECK(stats.to_json(dict).is_object());
}
