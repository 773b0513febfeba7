#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectrasep/csv.hpp"

namespace spectrasep {

enum class Tier { one_hour, ten_hours };
enum class ParameterKind { real, boolean, categorical };

std::string_view to_string(Tier tier);
std::string_view to_string(ParameterKind kind);

struct ParameterDescriptor {
  std::string name;
  Tier tier = Tier::one_hour;
  ParameterKind kind = ParameterKind::real;
  std::string unit;
  std::optional<double> plausible_min;
  std::optional<double> plausible_max;
  // Ordinal encoding order for categorical parameters.
  std::vector<std::string> categories;
};

inline constexpr std::size_t kOneHourParameterCount = 33;
inline constexpr std::size_t kTenHourParameterCount = 12;

class ParameterDictionary {
 public:
  ParameterDictionary() = default;
  explicit ParameterDictionary(std::vector<ParameterDescriptor> entries);

  static ParameterDictionary from_json(const nlohmann::json& j);
  static ParameterDictionary standard();
  nlohmann::json to_json() const;

  std::size_t size() const { return entries_.size(); }
  const ParameterDescriptor& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<ParameterDescriptor>& entries() const { return entries_; }

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;  // throws ConfigError

  std::size_t tier_count(Tier tier) const;
  // Parameter indices available at a tier; ten_hours includes one_hour.
  std::vector<std::size_t> available_at(Tier tier) const;
  // True for the 33 + 12 layout of the shipped dictionary.
  bool has_standard_layout() const;

  // Ordinal code of a categorical level, or nullopt.
  std::optional<double> encode_category(std::size_t param, std::string_view level) const;

 private:
  std::vector<ParameterDescriptor> entries_;
  std::map<std::string, std::size_t, std::less<>> by_name_;
};

enum class SepsisLabel { sepsis, no_sepsis, unsure };
enum class SurvivalLabel { survived, died, lost_to_followup };
enum class Task { sepsis, mortality };

std::string_view to_string(SepsisLabel label);
std::string_view to_string(SurvivalLabel label);
std::string_view to_string(Task task);
SepsisLabel parse_sepsis_label(std::string_view text);
SurvivalLabel parse_survival_label(std::string_view text);
Task parse_task(std::string_view text);

// Encoded clinical values are stored per dictionary entry: reals as-is,
// booleans as 0/1, categoricals as their ordinal code.
using ClinicalValue = std::optional<double>;

struct PatientRecord {
  std::string patient_id;
  SepsisLabel sepsis_label = SepsisLabel::unsure;
  SurvivalLabel survival_label = SurvivalLabel::lost_to_followup;
  std::vector<ClinicalValue> values;

  const ClinicalValue& value(const ParameterDictionary& dict, std::string_view name) const {
    return values[dict.index_of(name)];
  }

  bool operator==(const PatientRecord&) const = default;
};

struct IngestWarning {
  std::size_t line = 0;
  std::string patient_id;
  std::string parameter;
  std::string message;
};

struct Cohort {
  ParameterDictionary dictionary;
  std::vector<PatientRecord> records;
  std::vector<IngestWarning> warnings;

  std::size_t size() const { return records.size(); }
  const PatientRecord* find(std::string_view patient_id) const;
};

// Parses clinical.csv (patient_id + one column per dictionary entry; empty
// cell = missing). Labels default to unsure / lost_to_followup until merged.
Cohort ingest_clinical(const csv::Table& table, const ParameterDictionary& dict);
Cohort ingest_csv(const std::filesystem::path& path, const ParameterDictionary& dict);

// Merges labels.csv (patient_id, sepsis_label, survival_label). Every record
// must receive labels; unknown ids are errors.
void merge_labels(Cohort& cohort, const csv::Table& labels);
void merge_labels(Cohort& cohort, const std::filesystem::path& path);

// Writes the CSV layouts read above, in dictionary order.
void write_clinical_csv(const Cohort& cohort, std::ostream& out);
void write_labels_csv(const Cohort& cohort, std::ostream& out);

inline constexpr double kImputedValue = -1.0;

// Replaces every missing value (any kind) with -1.
Cohort impute(const Cohort& cohort);

double missingness_fraction(const Cohort& cohort);

// Drops patients whose label for `task` is unsure / lost_to_followup.
// Throws ComputationError when nothing remains.
Cohort cohort_filter(const Cohort& cohort, Task task);

// 1 for the positive class (sepsis, died), 0 otherwise; throws for
// excluded labels.
int binary_label(const PatientRecord& record, Task task);
std::vector<int> binary_labels(const Cohort& cohort, Task task);
std::string_view positive_class_name(Task task);
std::string_view negative_class_name(Task task);

struct GroupStatistics {
  std::size_t n = 0;         // patients in the group
  std::size_t observed = 0;  // non-missing values
  double mean = 0.0;         // real parameters
  double sd = 0.0;           // sample SD (n - 1); 0 with fewer than 2 values
  double percent_true = 0.0; // boolean parameters
  std::vector<std::size_t> category_counts;  // categorical parameters
};

struct ParameterStatistics {
  std::string name;
  ParameterKind kind = ParameterKind::real;
  double missing_percent = 0.0;
  std::map<std::string, GroupStatistics> groups;
};

struct DescriptiveStatistics {
  Task task = Task::sepsis;
  std::vector<ParameterStatistics> parameters;
  double overall_missing_percent = 0.0;

  nlohmann::json to_json(const ParameterDictionary& dict) const;
};

// Per-parameter statistics on pre-imputation values, grouped by the task's
// binary label. Patients excluded from the task are skipped.
DescriptiveStatistics descriptive_stats(const Cohort& cohort, Task task);

}  // namespace spectrasep
