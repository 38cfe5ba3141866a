/**
 * @file config.hpp
 * @brief Sectioned key/value configuration files.
 *
 * Grammar, one item per line:
 *
 *     # comment            (also "; comment"; blank lines ignored)
 *     [section]            (letters, digits, '_', '-', '.')
 *     key = value          (key: letters, digits, '_', '-'; value runs to end of line)
 *
 * Leading and trailing whitespace is trimmed everywhere. Every key must appear
 * inside a section and at most once per section. Sections may not repeat.
 * Lists are comma-separated values.
 */
#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace faft {

class Config {
 public:
  static Config parse(std::istream& in, const std::string& source);
  static Config load(const std::string& path);

  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& key) const;
  std::optional<std::string> get(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long long get_int(const std::string& section, const std::string& key, long long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& section, const std::string& key) const;

  /// Overwrites or adds an entry (creates the section when needed).
  void set(const std::string& section, const std::string& key, const std::string& value);

  /// Section names in sorted order; names with a prefix when given.
  std::vector<std::string> sections(const std::string& prefix = "") const;

  /// Throws ConfigError naming the first key of `section` not in `allowed`.
  void require_known(const std::string& section, const std::vector<std::string>& allowed) const;

  /// Writes the configuration back in the same grammar, sections and keys sorted.
  void write(std::ostream& out) const;

 private:
  std::map<std::string, std::map<std::string, std::string>> entries_;
};

}  // namespace faft
