#include "spectrasep/clinical.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <set>

#include "spectrasep/defaults.hpp"
#include "spectrasep/error.hpp"

namespace spectrasep {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<double> parse_real(std::string_view s) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<double> parse_boolean(std::string_view s) {
  const std::string v = lower(s);
  if (v == "true" || v == "1" || v == "yes") return 1.0;
  if (v == "false" || v == "0" || v == "no") return 0.0;
  return std::nullopt;
}

Tier parse_tier(std::string_view text) {
  if (text == "one_hour") return Tier::one_hour;
  if (text == "ten_hours") return Tier::ten_hours;
  throw ConfigError("unknown tier '" + std::string(text) + "'");
}

ParameterKind parse_kind(std::string_view text) {
  if (text == "real") return ParameterKind::real;
  if (text == "boolean") return ParameterKind::boolean;
  if (text == "categorical") return ParameterKind::categorical;
  throw ConfigError("unknown parameter kind '" + std::string(text) + "'");
}

std::string format_value(const ParameterDescriptor& d, double v) {
  switch (d.kind) {
    case ParameterKind::boolean: return v != 0.0 ? "true" : "false";
    case ParameterKind::categorical: return d.categories.at(static_cast<std::size_t>(v));
    case ParameterKind::real: break;
  }
  return csv::format_number(v);
}

}  // namespace

std::string_view to_string(Tier tier) { return tier == Tier::one_hour ? "one_hour" : "ten_hours"; }

std::string_view to_string(ParameterKind kind) {
  switch (kind) {
    case ParameterKind::real: return "real";
    case ParameterKind::boolean: return "boolean";
    case ParameterKind::categorical: return "categorical";
  }
  return "real";
}

ParameterDictionary::ParameterDictionary(std::vector<ParameterDescriptor> entries)
    : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.name.empty() || e.name == "patient_id") {
      throw ConfigError("parameter dictionary: invalid parameter name '" + e.name + "'");
    }
    if (!by_name_.emplace(e.name, i).second) {
      throw ConfigError("parameter dictionary: duplicate parameter '" + e.name + "'");
    }
    if (e.kind == ParameterKind::categorical && e.categories.empty()) {
      throw ConfigError("parameter dictionary: categorical '" + e.name + "' has no categories");
    }
  }
}

ParameterDictionary ParameterDictionary::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ConfigError("parameter dictionary must be a JSON array");
  std::vector<ParameterDescriptor> entries;
  for (const auto& item : j) {
    ParameterDescriptor d;
    try {
      d.name = item.at("name").get<std::string>();
      d.tier = parse_tier(item.at("tier").get<std::string>());
      d.kind = parse_kind(item.at("kind").get<std::string>());
      d.unit = item.value("unit", "");
      if (item.contains("plausible_range")) {
        const auto& r = item["plausible_range"];
        d.plausible_min = r.at(0).get<double>();
        d.plausible_max = r.at(1).get<double>();
      }
      if (item.contains("categories")) d.categories = item["categories"].get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("parameter dictionary: " + std::string(e.what()));
    }
    entries.push_back(std::move(d));
  }
  return ParameterDictionary(std::move(entries));
}

ParameterDictionary ParameterDictionary::standard() {
  static const ParameterDictionary dict = from_json(embedded_json("params.dictionary.json"));
  return dict;
}

nlohmann::json ParameterDictionary::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : entries_) {
    nlohmann::json item = {{"name", e.name}, {"tier", to_string(e.tier)}, {"kind", to_string(e.kind)},
                           {"unit", e.unit}};
    if (e.plausible_min && e.plausible_max) item["plausible_range"] = {*e.plausible_min, *e.plausible_max};
    if (!e.categories.empty()) item["categories"] = e.categories;
    j.push_back(std::move(item));
  }
  return j;
}

std::optional<std::size_t> ParameterDictionary::find(std::string_view name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

std::size_t ParameterDictionary::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw ConfigError("unknown clinical parameter '" + std::string(name) + "'");
}

std::size_t ParameterDictionary::tier_count(Tier tier) const {
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.tier == tier; }));
}

std::vector<std::size_t> ParameterDictionary::available_at(Tier tier) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (tier == Tier::ten_hours || entries_[i].tier == Tier::one_hour) out.push_back(i);
  }
  return out;
}

bool ParameterDictionary::has_standard_layout() const {
  return tier_count(Tier::one_hour) == kOneHourParameterCount &&
         tier_count(Tier::ten_hours) == kTenHourParameterCount;
}

std::optional<double> ParameterDictionary::encode_category(std::size_t param, std::string_view level) const {
  const auto& cats = entries_.at(param).categories;
  for (std::size_t i = 0; i < cats.size(); ++i) {
    if (cats[i] == level) return static_cast<double>(i);
  }
  return std::nullopt;
}

std::string_view to_string(SepsisLabel label) {
  switch (label) {
    case SepsisLabel::sepsis: return "sepsis";
    case SepsisLabel::no_sepsis: return "no_sepsis";
    case SepsisLabel::unsure: return "unsure";
  }
  return "unsure";
}

std::string_view to_string(SurvivalLabel label) {
  switch (label) {
    case SurvivalLabel::survived: return "survived";
    case SurvivalLabel::died: return "died";
    case SurvivalLabel::lost_to_followup: return "lost_to_followup";
  }
  return "lost_to_followup";
}

std::string_view to_string(Task task) { return task == Task::sepsis ? "sepsis" : "mortality"; }

SepsisLabel parse_sepsis_label(std::string_view text) {
  if (text == "sepsis") return SepsisLabel::sepsis;
  if (text == "no_sepsis") return SepsisLabel::no_sepsis;
  if (text == "unsure") return SepsisLabel::unsure;
  throw IngestionError("invalid sepsis_label '" + std::string(text) + "'");
}

SurvivalLabel parse_survival_label(std::string_view text) {
  if (text == "survived") return SurvivalLabel::survived;
  if (text == "died") return SurvivalLabel::died;
  if (text == "lost_to_followup") return SurvivalLabel::lost_to_followup;
  throw IngestionError("invalid survival_label '" + std::string(text) + "'");
}

Task parse_task(std::string_view text) {
  if (text == "sepsis") return Task::sepsis;
  if (text == "mortality") return Task::mortality;
  throw ValidationError("unknown task '" + std::string(text) + "' (sepsis|mortality)");
}

const PatientRecord* Cohort::find(std::string_view patient_id) const {
  for (const auto& r : records) {
    if (r.patient_id == patient_id) return &r;
  }
  return nullptr;
}

Cohort ingest_clinical(const csv::Table& table, const ParameterDictionary& dict) {
  const std::size_t id_col = table.column("patient_id");
  if (id_col == csv::Table::npos) throw IngestionError("clinical csv: missing 'patient_id' column");

  std::vector<std::size_t> column_param(table.header.size(), 0);
  std::vector<bool> seen(dict.size(), false);
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == id_col) continue;
    auto idx = dict.find(table.header[c]);
    if (!idx) throw IngestionError("clinical csv: unknown column '" + table.header[c] + "' (column " + std::to_string(c + 1) + ")");
    if (seen[*idx]) throw IngestionError("clinical csv: duplicate column '" + table.header[c] + "'");
    seen[*idx] = true;
    column_param[c] = *idx;
  }
  for (std::size_t i = 0; i < dict.size(); ++i) {
    if (!seen[i]) throw IngestionError("clinical csv: missing column '" + dict[i].name + "'");
  }

  Cohort cohort;
  cohort.dictionary = dict;
  std::set<std::string, std::less<>> ids;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.lines[r];
    PatientRecord rec;
    rec.patient_id = std::string(trim(row[id_col]));
    if (rec.patient_id.empty()) throw IngestionError("clinical csv: empty patient_id on line " + std::to_string(line));
    if (!ids.insert(rec.patient_id).second) {
      throw IngestionError("clinical csv: duplicate patient_id '" + rec.patient_id + "' on line " + std::to_string(line));
    }
    rec.values.assign(dict.size(), std::nullopt);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == id_col) continue;
      const std::string_view cell = trim(row[c]);
      if (cell.empty()) continue;
      const std::size_t p = column_param[c];
      const auto& d = dict[p];
      std::optional<double> v;
      switch (d.kind) {
        case ParameterKind::real: v = parse_real(cell); break;
        case ParameterKind::boolean: v = parse_boolean(cell); break;
        case ParameterKind::categorical: v = dict.encode_category(p, cell); break;
      }
      if (!v) {
        throw IngestionError("clinical csv: cannot parse '" + std::string(cell) + "' for '" + d.name +
                             "' on line " + std::to_string(line) + ", column " + std::to_string(c + 1));
      }
      if (d.kind == ParameterKind::real && d.plausible_min && d.plausible_max &&
          (*v < *d.plausible_min || *v > *d.plausible_max)) {
        cohort.warnings.push_back({line, rec.patient_id, d.name,
                                   "value " + csv::format_number(*v) + " outside plausible range [" +
                                       csv::format_number(*d.plausible_min) + ", " +
                                       csv::format_number(*d.plausible_max) + "]"});
      }
      rec.values[p] = v;
    }
    cohort.records.push_back(std::move(rec));
  }
  return cohort;
}

Cohort ingest_csv(const std::filesystem::path& path, const ParameterDictionary& dict) {
  try {
    return ingest_clinical(csv::read_file(path), dict);
  } catch (const IngestionError& e) {
    throw IngestionError(path.string() + ": " + e.what());
  }
}

void merge_labels(Cohort& cohort, const csv::Table& labels) {
  const std::size_t id_col = labels.column("patient_id");
  const std::size_t sepsis_col = labels.column("sepsis_label");
  const std::size_t survival_col = labels.column("survival_label");
  if (id_col == csv::Table::npos || sepsis_col == csv::Table::npos || survival_col == csv::Table::npos) {
    throw IngestionError("labels csv: expected columns patient_id, sepsis_label, survival_label");
  }
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < cohort.records.size(); ++i) index.emplace(cohort.records[i].patient_id, i);
  std::vector<bool> labeled(cohort.records.size(), false);
  for (std::size_t r = 0; r < labels.rows.size(); ++r) {
    const auto& row = labels.rows[r];
    const std::string id(trim(row[id_col]));
    auto it = index.find(id);
    if (it == index.end()) {
      throw IngestionError("labels csv: unknown patient_id '" + id + "' on line " + std::to_string(labels.lines[r]));
    }
    if (labeled[it->second]) throw IngestionError("labels csv: duplicate patient_id '" + id + "'");
    auto& rec = cohort.records[it->second];
    try {
      rec.sepsis_label = parse_sepsis_label(trim(row[sepsis_col]));
      rec.survival_label = parse_survival_label(trim(row[survival_col]));
    } catch (const IngestionError& e) {
      throw IngestionError("labels csv line " + std::to_string(labels.lines[r]) + ": " + e.what());
    }
    labeled[it->second] = true;
  }
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    if (!labeled[i]) throw IngestionError("labels csv: no labels for patient_id '" + cohort.records[i].patient_id + "'");
  }
}

void merge_labels(Cohort& cohort, const std::filesystem::path& path) {
  merge_labels(cohort, csv::read_file(path));
}

void write_clinical_csv(const Cohort& cohort, std::ostream& out) {
  const auto& dict = cohort.dictionary;
  std::vector<std::string> header{"patient_id"};
  for (const auto& d : dict.entries()) header.push_back(d.name);
  csv::write_row(out, header);
  for (const auto& rec : cohort.records) {
    std::vector<std::string> row{rec.patient_id};
    for (std::size_t p = 0; p < dict.size(); ++p) {
      row.push_back(rec.values[p] ? format_value(dict[p], *rec.values[p]) : std::string());
    }
    csv::write_row(out, row);
  }
}

void write_labels_csv(const Cohort& cohort, std::ostream& out) {
  csv::write_row(out, {"patient_id", "sepsis_label", "survival_label"});
  for (const auto& rec : cohort.records) {
    csv::write_row(out, {rec.patient_id, std::string(to_string(rec.sepsis_label)),
                         std::string(to_string(rec.survival_label))});
  }
}

Cohort impute(const Cohort& cohort) {
  Cohort out = cohort;
  for (auto& rec : out.records) {
    for (auto& v : rec.values) {
      if (!v) v = kImputedValue;
    }
  }
  return out;
}

double missingness_fraction(const Cohort& cohort) {
  std::size_t missing = 0, total = 0;
  for (const auto& rec : cohort.records) {
    for (const auto& v : rec.values) {
      ++total;
      if (!v) ++missing;
    }
  }
  return total ? static_cast<double>(missing) / static_cast<double>(total) : 0.0;
}

namespace {

bool excluded(const PatientRecord& r, Task task) {
  return task == Task::sepsis ? r.sepsis_label == SepsisLabel::unsure
                              : r.survival_label == SurvivalLabel::lost_to_followup;
}

}  // namespace

Cohort cohort_filter(const Cohort& cohort, Task task) {
  Cohort out;
  out.dictionary = cohort.dictionary;
  out.warnings = cohort.warnings;
  for (const auto& rec : cohort.records) {
    if (!excluded(rec, task)) out.records.push_back(rec);
  }
  if (out.records.empty()) {
    throw ComputationError("cohort_filter: no labeled patients remain for the " + std::string(to_string(task)) + " task");
  }
  return out;
}

int binary_label(const PatientRecord& record, Task task) {
  if (excluded(record, task)) {
    throw ComputationError("patient '" + record.patient_id + "' has no usable " + std::string(to_string(task)) + " label");
  }
  return task == Task::sepsis ? (record.sepsis_label == SepsisLabel::sepsis ? 1 : 0)
                              : (record.survival_label == SurvivalLabel::died ? 1 : 0);
}

std::vector<int> binary_labels(const Cohort& cohort, Task task) {
  std::vector<int> labels;
  labels.reserve(cohort.records.size());
  for (const auto& r : cohort.records) labels.push_back(binary_label(r, task));
  return labels;
}

std::string_view positive_class_name(Task task) { return task == Task::sepsis ? "sepsis" : "died"; }
std::string_view negative_class_name(Task task) { return task == Task::sepsis ? "no_sepsis" : "survived"; }

DescriptiveStatistics descriptive_stats(const Cohort& cohort, Task task) {
  const auto& dict = cohort.dictionary;
  std::vector<const PatientRecord*> groups[2];
  for (const auto& r : cohort.records) {
    if (!excluded(r, task)) groups[binary_label(r, task)].push_back(&r);
  }
  const std::string names[2] = {std::string(negative_class_name(task)), std::string(positive_class_name(task))};

  DescriptiveStatistics stats;
  stats.task = task;
  std::size_t missing_cells = 0, total_cells = 0;
  for (std::size_t p = 0; p < dict.size(); ++p) {
    const auto& d = dict[p];
    ParameterStatistics ps;
    ps.name = d.name;
    ps.kind = d.kind;
    std::size_t missing = 0, total = 0;
    for (int g = 0; g < 2; ++g) {
      GroupStatistics gs;
      gs.n = groups[g].size();
      std::vector<double> values;
      for (const auto* r : groups[g]) {
        ++total;
        if (r->values[p]) values.push_back(*r->values[p]);
        else ++missing;
      }
      gs.observed = values.size();
      if (d.kind == ParameterKind::real && !values.empty()) {
        double sum = 0.0;
        for (double v : values) sum += v;
        gs.mean = sum / static_cast<double>(values.size());
        if (values.size() > 1) {
          double ss = 0.0;
          for (double v : values) ss += (v - gs.mean) * (v - gs.mean);
          gs.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
        }
      } else if (d.kind == ParameterKind::boolean && !values.empty()) {
        const auto yes = std::count(values.begin(), values.end(), 1.0);
        gs.percent_true = 100.0 * static_cast<double>(yes) / static_cast<double>(values.size());
      } else if (d.kind == ParameterKind::categorical) {
        gs.category_counts.assign(d.categories.size(), 0);
        for (double v : values) ++gs.category_counts.at(static_cast<std::size_t>(v));
      }
      ps.groups.emplace(names[g], std::move(gs));
    }
    ps.missing_percent = total ? 100.0 * static_cast<double>(missing) / static_cast<double>(total) : 0.0;
    missing_cells += missing;
    total_cells += total;
    stats.parameters.push_back(std::move(ps));
  }
  stats.overall_missing_percent =
      total_cells ? 100.0 * static_cast<double>(missing_cells) / static_cast<double>(total_cells) : 0.0;
  return stats;
}

nlohmann::json DescriptiveStatistics::to_json(const ParameterDictionary& dict) const {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& ps : parameters) {
    const auto& d = dict[dict.index_of(ps.name)];
    nlohmann::json groups = nlohmann::json::object();
    for (const auto& [name, gs] : ps.groups) {
      nlohmann::json g = {{"n", gs.n}, {"observed", gs.observed}};
      switch (ps.kind) {
        case ParameterKind::real:
          g["mean"] = gs.mean;
          g["sd"] = gs.sd;
          break;
        case ParameterKind::boolean:
          g["percent_true"] = gs.percent_true;
          break;
        case ParameterKind::categorical: {
          nlohmann::json counts = nlohmann::json::object();
          for (std::size_t i = 0; i < d.categories.size(); ++i) counts[d.categories[i]] = gs.category_counts[i];
          g["counts"] = counts;
          break;
        }
      }
      groups[name] = std::move(g);
    }
    params.push_back({{"name", ps.name},
                      {"kind", to_string(ps.kind)},
                      {"tier", to_string(d.tier)},
                      {"unit", d.unit},
                      {"missing_percent", ps.missing_percent},
                      {"groups", std::move(groups)}});
  }
  return {{"task", to_string(task)},
          {"overall_missing_percent", overall_missing_percent},
          {"parameters", std::move(params)}};
}

}  // namespace spectrasep
