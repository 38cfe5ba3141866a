#include "faft/ingestion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <fmt/format.h>

#include "faft/error.hpp"

namespace faft {

std::string to_string(TimeTransform t) {
  switch (t) {
    case TimeTransform::log_since_window_end: return "log-since-window-end";
    case TimeTransform::log: return "log";
    case TimeTransform::identity: return "identity";
  }
  return "unknown";
}

TimeTransform time_transform_from_string(const std::string& name) {
  if (name == "log-since-window-end") return TimeTransform::log_since_window_end;
  if (name == "log") return TimeTransform::log;
  if (name == "identity") return TimeTransform::identity;
  throw ConfigError(fmt::format("unknown time transform '{}'", name));
}

IngestionSchema IngestionSchema::from_config(const Config& config, const std::string& section) {
  config.require_known(section, {"id", "scalars", "binary", "trajectory", "time", "status", "transform",
                                 "window_end", "center"});
  IngestionSchema s;
  s.id_column = config.get_string(section, "id", s.id_column);
  s.scalar_columns = config.get_list(section, "scalars");
  for (const auto& item : config.get_list(section, "binary")) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      s.binary_columns[item] = "";
    } else {
      s.binary_columns[item.substr(0, colon)] = item.substr(colon + 1);
    }
  }
  s.trajectory_columns = config.get_list(section, "trajectory");
  s.time_column = config.get_string(section, "time", s.time_column);
  s.status_column = config.get_string(section, "status", s.status_column);
  s.transform = time_transform_from_string(config.get_string(section, "transform", to_string(s.transform)));
  s.window_end = config.get_double(section, "window_end", s.window_end);
  s.center = config.get_bool(section, "center", s.center);
  s.validate();
  return s;
}

void IngestionSchema::validate() const {
  if (trajectory_columns.size() < 2) throw ConfigError("the trajectory needs at least two columns");
  for (const auto& [column, _] : binary_columns) {
    if (std::find(scalar_columns.begin(), scalar_columns.end(), column) == scalar_columns.end()) {
      throw ConfigError(fmt::format("binary column '{}' is not listed among the scalars", column));
    }
  }
  if (!std::isfinite(window_end)) throw ConfigError("window_end must be finite");
}

double transform_time(TimeTransform transform, double day, double window_end, const std::string& subject) {
  switch (transform) {
    case TimeTransform::identity:
      return day;
    case TimeTransform::log:
      if (!(day > 0.0)) {
        throw DataError(fmt::format("subject {}: time {} is not positive, its log is undefined", subject, day));
      }
      return std::log(day);
    case TimeTransform::log_since_window_end:
      if (!(day - window_end > 0.0)) {
        throw DataError(fmt::format(
            "subject {}: time-to-event {} - {} = {} is not positive, its log is undefined (supply a transform "
            "with an explicit offset)",
            subject, day, window_end, day - window_end));
      }
      return std::log(day - window_end);
  }
  throw ConfigError("unknown time transform");
}

std::size_t fill_missing(std::vector<double>& values, const std::vector<double>& points, const std::string& subject) {
  std::vector<std::size_t> observed;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isnan(values[k])) observed.push_back(k);
  }
  if (observed.empty()) throw DataError(fmt::format("subject {}: every trajectory value is missing", subject));
  std::size_t filled = 0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isnan(values[k])) continue;
    ++filled;
    const auto next = std::lower_bound(observed.begin(), observed.end(), k);
    if (next == observed.begin()) {
      values[k] = values[observed.front()];
    } else if (next == observed.end()) {
      values[k] = values[observed.back()];
    } else {
      const std::size_t hi = *next;
      const std::size_t lo = *(next - 1);
      const double w = (points[k] - points[lo]) / (points[hi] - points[lo]);
      values[k] = (1.0 - w) * values[lo] + w * values[hi];
    }
  }
  return filled;
}

namespace {

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "na" || cell == "NaN" || cell == "nan" || cell == ".";
}

}  // namespace

LoadedData load_long_table(const CsvTable& table, const IngestionSchema& schema, const std::string& source) {
  schema.validate();
  std::vector<std::string> missing;
  auto column = [&](const std::string& name) -> std::size_t {
    const auto idx = table.find(name);
    if (!idx) {
      missing.push_back(name);
      return 0;
    }
    return *idx;
  };
  const std::size_t id_col = column(schema.id_column);
  std::vector<std::size_t> scalar_cols;
  for (const auto& name : schema.scalar_columns) scalar_cols.push_back(column(name));
  std::vector<std::size_t> traj_cols;
  for (const auto& name : schema.trajectory_columns) traj_cols.push_back(column(name));
  const std::size_t time_col = column(schema.time_column);
  const std::size_t status_col = column(schema.status_column);
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw DataError(fmt::format("{}: missing columns: {}", source, list));
  }
  if (table.rows.empty()) throw DataError(fmt::format("{}: no data rows", source));

  const std::size_t m = traj_cols.size();
  std::vector<double> points(m);
  for (std::size_t k = 0; k < m; ++k) points[k] = static_cast<double>(k) / static_cast<double>(m - 1);

  LoadedData out;
  out.scalar_names = schema.scalar_columns;
  std::set<std::string> seen;
  std::map<std::string, std::string> other_level;  // the level coded -1, per labelled binary column
  std::vector<SurvivalRecord> records;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string& id = row[id_col];
    const std::size_t line = r + 2;
    auto cell_context = [&](std::size_t col) {
      return fmt::format("{}: row {}, column '{}'", source, line, table.header[col]);
    };
    if (!seen.insert(id).second) throw DataError(fmt::format("{}: row {}: duplicate subject id '{}'", source, line, id));

    std::vector<double> x;
    for (std::size_t j = 0; j < scalar_cols.size(); ++j) {
      const std::string& name = schema.scalar_columns[j];
      const std::string& cell = row[scalar_cols[j]];
      const auto binary = schema.binary_columns.find(name);
      if (binary == schema.binary_columns.end()) {
        x.push_back(parse_double(cell, cell_context(scalar_cols[j])));
        continue;
      }
      if (!binary->second.empty()) {
        if (cell != binary->second) {
          const auto [it, inserted] = other_level.emplace(name, cell);
          if (!inserted && it->second != cell) {
            throw DataError(fmt::format("{}: binary column has a third level '{}' besides '{}' and '{}'",
                                        cell_context(scalar_cols[j]), cell, binary->second, it->second));
          }
        }
        x.push_back(cell == binary->second ? 1.0 : -1.0);
        continue;
      }
      const double v = parse_double(cell, cell_context(scalar_cols[j]));
      if (v != 0.0 && v != 1.0) {
        throw DataError(fmt::format("{}: binary value must be 0 or 1, found '{}'", cell_context(scalar_cols[j]), cell));
      }
      x.push_back(v == 1.0 ? 1.0 : -1.0);
    }

    std::vector<double> values(m);
    for (std::size_t k = 0; k < m; ++k) {
      const std::string& cell = row[traj_cols[k]];
      values[k] = is_missing(cell) ? std::numeric_limits<double>::quiet_NaN()
                                   : parse_double(cell, cell_context(traj_cols[k]));
    }
    const std::size_t filled = fill_missing(values, points, id);
    if (filled > 0) {
      out.imputed_cells += filled;
      out.imputed_ids.push_back(id);
    }
    const double day = parse_double(row[time_col], cell_context(time_col));
    const double time = transform_time(schema.transform, day, schema.window_end, id);
    const double status = parse_double(row[status_col], cell_context(status_col));
    if (status != 0.0 && status != 1.0) {
      throw DataError(fmt::format("{}: status must be 0 or 1, found '{}'", cell_context(status_col), row[status_col]));
    }
    records.push_back({time, status == 1.0, std::move(x), FunctionalCovariate::grid(points, std::move(values))});
    out.ids.push_back(id);
  }
  SurvivalDataset data(std::move(records));
  out.data = schema.center ? data.centered() : std::move(data);
  return out;
}

LoadedData load_long_csv(const std::string& path, const IngestionSchema& schema) {
  return load_long_table(read_csv_file(path), schema, path);
}

}  // namespace faft
