#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace spectrasep::csv {

// Minimal RFC 4180 reader/writer: comma separator, double-quote quoting,
// CRLF or LF line endings. A leading UTF-8 BOM is skipped.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based line number in the source file for each row, for diagnostics.
  std::vector<std::size_t> lines;

  // Index of a header column, or npos.
  std::size_t column(std::string_view name) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

Table parse(std::string_view text);
Table read_file(const std::filesystem::path& path);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest round-trip decimal representation of a double ("nan" / "inf"
// for non-finite values).
std::string format_number(double value);

}  // namespace spectrasep::csv
