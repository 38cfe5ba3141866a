/**
 * @file ingestion.hpp
 * @brief Wide-format longitudinal CSV to a centered SurvivalDataset.
 *
 * One row per subject: an id, scalar covariates, one column per repeated
 * measurement in chronological order, the event or censoring day and a status
 * flag. The measurement columns are placed at equally spaced points of [0, 1]
 * and linearly interpolated between them.
 */
#pragma once

#include <map>
#include <string>
#include <vector>

#include "faft/config.hpp"
#include "faft/csv.hpp"
#include "faft/dataset.hpp"

namespace faft {

enum class TimeTransform {
  log_since_window_end,  ///< log(day - window_end)
  log,                   ///< log(day)
  identity               ///< day
};

std::string to_string(TimeTransform t);
TimeTransform time_transform_from_string(const std::string& name);

struct IngestionSchema {
  std::string id_column = "id";
  std::vector<std::string> scalar_columns;
  /// Binary scalar columns coded +1 / -1. The mapped value is the level coded +1;
  /// empty means the column holds 0/1 and 1 is coded +1.
  std::map<std::string, std::string> binary_columns;
  std::vector<std::string> trajectory_columns;
  std::string time_column = "time";
  std::string status_column = "status";
  TimeTransform transform = TimeTransform::log_since_window_end;
  double window_end = 5.0;
  bool center = true;

  /// Reads [section] keys: id, scalars, binary (list of col or col:level),
  /// trajectory, time, status, transform, window_end, center.
  static IngestionSchema from_config(const Config& config, const std::string& section = "data");
  void validate() const;
};

struct LoadedData {
  SurvivalDataset data;
  std::vector<std::string> ids;
  std::vector<std::string> scalar_names;
  std::vector<std::string> imputed_ids;  ///< subjects with at least one filled-in trajectory cell
  std::size_t imputed_cells = 0;
};

/// Applies the transform; throws DataError naming the subject when it is undefined.
double transform_time(TimeTransform transform, double day, double window_end, const std::string& subject);

/// Fills missing (NaN) cells: interior gaps by linear interpolation between the
/// nearest observed neighbours, leading and trailing gaps by the nearest
/// observed value. Returns the number of filled cells. Throws DataError when
/// nothing is observed.
std::size_t fill_missing(std::vector<double>& values, const std::vector<double>& points, const std::string& subject);

LoadedData load_long_table(const CsvTable& table, const IngestionSchema& schema, const std::string& source);
LoadedData load_long_csv(const std::string& path, const IngestionSchema& schema);

}  // namespace faft
