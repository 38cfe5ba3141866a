/**
 * @file csv.hpp
 * @brief Minimal RFC-4180 style CSV reading and number formatting shared by the I/O modules.
 */
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace faft {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column, or nullopt.
  std::optional<std::size_t> find(std::string_view name) const;
};

/// Parses a comma-separated table with a header row. Quoted fields may contain
/// commas, doubled quotes and newlines. Throws DataError on ragged rows, naming
/// `source` and the 1-based line.
CsvTable read_csv(std::istream& in, const std::string& source);
CsvTable read_csv_file(const std::string& path);

/// Quotes a field when it contains a comma, quote or newline.
std::string csv_field(std::string_view text);

/// 17 significant digits, enough to round-trip any double.
std::string format_double(double value);

/// Strict parse of a full field; throws DataError mentioning `context`.
double parse_double(std::string_view text, const std::string& context);

}  // namespace faft
