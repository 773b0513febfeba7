#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spectrasep {

// Row-major numeric table: one row per patient, one column per feature.
class FeatureTable {
 public:
  FeatureTable() = default;
  FeatureTable(std::vector<std::string> row_ids, std::vector<std::string> feature_names);
  FeatureTable(std::vector<std::string> row_ids, std::vector<std::string> feature_names,
               std::vector<double> values);

  std::size_t rows() const { return row_ids_.size(); }
  std::size_t cols() const { return names_.size(); }

  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols(), cols()}; }
  std::span<double> row(std::size_t r) { return {values_.data() + r * cols(), cols()}; }

  const std::vector<std::string>& row_ids() const { return row_ids_; }
  const std::vector<std::string>& feature_names() const { return names_; }
  std::span<const double> values() const { return values_; }

  std::size_t column_index(std::string_view name) const;  // throws ValidationError
  std::size_t row_index(std::string_view id) const;       // throws ValidationError

  FeatureTable select_rows(std::span<const std::size_t> rows) const;
  FeatureTable select_columns(std::span<const std::size_t> cols) const;
  // Rows reordered to match `ids`; every id must be present.
  FeatureTable reorder_rows(const std::vector<std::string>& ids) const;

  // Column-wise concatenation; row ids must match in order.
  static FeatureTable hstack(const FeatureTable& left, const FeatureTable& right);

  // Throws ValidationError on NaN/inf.
  void require_finite() const;

  bool operator==(const FeatureTable&) const = default;

 private:
  std::vector<std::string> row_ids_;
  std::vector<std::string> names_;
  std::vector<double> values_;
};

// features.csv: header "patient_id,<name>...", one row per patient.
void write_feature_csv(const FeatureTable& table, std::ostream& out);
FeatureTable read_feature_csv(const std::filesystem::path& path);

}  // namespace spectrasep
