#include "faft/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "faft/csv.hpp"
#include "faft/error.hpp"

namespace faft {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

bool valid_name(std::string_view name, bool allow_dot) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [&](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || (allow_dot && c == '.');
  });
}

}  // namespace

Config Config::parse(std::istream& in, const std::string& source) {
  Config config;
  std::string line;
  std::string section;
  bool in_section = false;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#' || text[0] == ';') continue;
    auto fail = [&](const std::string& message) {
      throw ConfigError(fmt::format("{}:{}: {}", source, number, message));
    };
    if (text.front() == '[') {
      if (text.back() != ']') fail("section header must end with ']'");
      section = trim(std::string_view(text).substr(1, text.size() - 2));
      if (!valid_name(section, true)) fail(fmt::format("invalid section name '{}'", section));
      if (config.entries_.count(section)) fail(fmt::format("section [{}] appears twice", section));
      config.entries_[section];
      in_section = true;
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    if (!in_section) fail("key outside of any section");
    const std::string key = trim(std::string_view(text).substr(0, eq));
    if (!valid_name(key, false)) fail(fmt::format("invalid key '{}'", key));
    auto& entries = config.entries_[section];
    if (entries.count(key)) fail(fmt::format("key '{}' repeated in [{}]", key, section));
    entries[key] = trim(std::string_view(text).substr(eq + 1));
  }
  return config;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  return parse(in, path);
}

bool Config::has_section(const std::string& section) const { return entries_.count(section) > 0; }

bool Config::has(const std::string& section, const std::string& key) const { return get(section, key).has_value(); }

std::optional<std::string> Config::get(const std::string& section, const std::string& key) const {
  const auto s = entries_.find(section);
  if (s == entries_.end()) return std::nullopt;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

std::string Config::get_string(const std::string& section, const std::string& key, const std::string& fallback) const {
  return get(section, key).value_or(fallback);
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) const {
  const auto v = get(section, key);
  if (!v) return fallback;
  try {
    return parse_double(*v, fmt::format("[{}] {}", section, key));
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
}

long long Config::get_int(const std::string& section, const std::string& key, long long fallback) const {
  const auto v = get(section, key);
  if (!v) return fallback;
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), value);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    throw ConfigError(fmt::format("[{}] {}: '{}' is not an integer", section, key, *v));
  }
  return value;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  const auto v = get(section, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "yes" || *v == "on" || *v == "1") return true;
  if (*v == "false" || *v == "no" || *v == "off" || *v == "0") return false;
  throw ConfigError(fmt::format("[{}] {}: '{}' is not a boolean", section, key, *v));
}

std::vector<std::string> Config::get_list(const std::string& section, const std::string& key) const {
  std::vector<std::string> out;
  const auto v = get(section, key);
  if (!v || trim(*v).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = v->find(',', start);
    const std::string item = trim(std::string_view(*v).substr(start, comma - start));
    if (item.empty()) throw ConfigError(fmt::format("[{}] {}: empty list item", section, key));
    out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  entries_[section][key] = value;
}

std::vector<std::string> Config::sections(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [name, _] : entries_) {
    if (name.compare(0, prefix.size(), prefix) == 0) out.push_back(name);
  }
  return out;
}

void Config::require_known(const std::string& section, const std::vector<std::string>& allowed) const {
  const auto s = entries_.find(section);
  if (s == entries_.end()) return;
  for (const auto& [key, _] : s->second) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(fmt::format("unknown key '{}' in [{}]", key, section));
    }
  }
}

void Config::write(std::ostream& out) const {
  bool first = true;
  for (const auto& [name, entries] : entries_) {
    if (!first) out << '\n';
    first = false;
    out << '[' << name << "]\n";
    for (const auto& [key, value] : entries) out << key << " = " << value << '\n';
  }
}

}  // namespace faft
