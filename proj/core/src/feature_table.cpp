#include "spectrasep/feature_table.hpp"

#include <cmath>
#include <map>
#include <ostream>

#include "spectrasep/csv.hpp"
#include "spectrasep/error.hpp"

namespace spectrasep {

FeatureTable::FeatureTable(std::vector<std::string> row_ids, std::vector<std::string> feature_names)
    : row_ids_(std::move(row_ids)),
      names_(std::move(feature_names)),
      values_(row_ids_.size() * names_.size(), 0.0) {}

FeatureTable::FeatureTable(std::vector<std::string> row_ids, std::vector<std::string> feature_names,
                           std::vector<double> values)
    : row_ids_(std::move(row_ids)), names_(std::move(feature_names)), values_(std::move(values)) {
  if (values_.size() != row_ids_.size() * names_.size()) {
    throw ValidationError("feature table: " + std::to_string(values_.size()) + " values for " +
                          std::to_string(row_ids_.size()) + " rows x " + std::to_string(names_.size()) +
                          " columns");
  }
}

std::size_t FeatureTable::column_index(std::string_view name) const {
  for (std::size_t c = 0; c < names_.size(); ++c) {
    if (names_[c] == name) return c;
  }
  throw ValidationError("feature table: no column '" + std::string(name) + "'");
}

std::size_t FeatureTable::row_index(std::string_view id) const {
  for (std::size_t r = 0; r < row_ids_.size(); ++r) {
    if (row_ids_[r] == id) return r;
  }
  throw ValidationError("feature table: no row '" + std::string(id) + "'");
}

FeatureTable FeatureTable::select_rows(std::span<const std::size_t> rows) const {
  std::vector<std::string> ids;
  std::vector<double> values;
  ids.reserve(rows.size());
  values.reserve(rows.size() * cols());
  for (auto r : rows) {
    ids.push_back(row_ids_.at(r));
    const auto src = row(r);
    values.insert(values.end(), src.begin(), src.end());
  }
  return FeatureTable(std::move(ids), names_, std::move(values));
}

FeatureTable FeatureTable::select_columns(std::span<const std::size_t> cols) const {
  std::vector<std::string> names;
  for (auto c : cols) names.push_back(names_.at(c));
  std::vector<double> values;
  values.reserve(rows() * cols.size());
  for (std::size_t r = 0; r < rows(); ++r) {
    for (auto c : cols) values.push_back(at(r, c));
  }
  return FeatureTable(row_ids_, std::move(names), std::move(values));
}

FeatureTable FeatureTable::reorder_rows(const std::vector<std::string>& ids) const {
  std::map<std::string_view, std::size_t> index;
  for (std::size_t r = 0; r < row_ids_.size(); ++r) index.emplace(row_ids_[r], r);
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw ValidationError("feature table: no row for patient '" + id + "'");
    rows.push_back(it->second);
  }
  return select_rows(rows);
}

FeatureTable FeatureTable::hstack(const FeatureTable& left, const FeatureTable& right) {
  if (left.row_ids_ != right.row_ids_) throw ValidationError("feature table hstack: row ids differ");
  std::vector<std::string> names = left.names_;
  names.insert(names.end(), right.names_.begin(), right.names_.end());
  std::vector<double> values;
  values.reserve(left.rows() * names.size());
  for (std::size_t r = 0; r < left.rows(); ++r) {
    const auto a = left.row(r);
    const auto b = right.row(r);
    values.insert(values.end(), a.begin(), a.end());
    values.insert(values.end(), b.begin(), b.end());
  }
  return FeatureTable(left.row_ids_, std::move(names), std::move(values));
}

void FeatureTable::require_finite() const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw ValidationError("feature table: non-finite value for row '" + row_ids_[i / cols()] +
                            "', column '" + names_[i % cols()] + "'");
    }
  }
}

void write_feature_csv(const FeatureTable& table, std::ostream& out) {
  std::vector<std::string> header{"patient_id"};
  header.insert(header.end(), table.feature_names().begin(), table.feature_names().end());
  csv::write_row(out, header);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    std::vector<std::string> row{table.row_ids()[r]};
    for (double v : table.row(r)) row.push_back(csv::format_number(v));
    csv::write_row(out, row);
  }
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
  const csv::Table t = csv::read_file(path);
  if (t.header.empty() || t.header[0] != "patient_id") {
    throw FormatError(path.string() + ": first column must be patient_id");
  }
  std::vector<std::string> names(t.header.begin() + 1, t.header.end());
  std::vector<std::string> ids;
  std::vector<double> values;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ids.push_back(t.rows[r][0]);
    for (std::size_t c = 1; c < t.header.size(); ++c) {
      const std::string& cell = t.rows[r][c];
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        values.push_back(v);
      } catch (const std::exception&) {
        throw FormatError(path.string() + ": line " + std::to_string(t.lines[r]) + ", column '" +
                          t.header[c] + "': not a number");
      }
    }
  }
  return FeatureTable(std::move(ids), std::move(names), std::move(values));
}

}  // namespace spectrasep
