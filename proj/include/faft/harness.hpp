/**
 * @file harness.hpp
 * @brief Monte Carlo replication of simulation cells and their summary statistics.
 *
 * Replicate r of a cell uses seed base_seed + r. Replicates may run on any
 * number of threads; aggregation always folds outcomes in replicate order, so
 * the summary does not depend on the thread count.
 */
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "faft/estimation.hpp"
#include "faft/simulation.hpp"

namespace faft {

struct CellSpec {
  ScenarioConfig scenario;  ///< scenario.seed is the base seed
  std::size_t replicates = 200;
  int spline_order = 2;
  std::optional<int> basis_dimension;  ///< overrides q_n_rule(n) for both bases
  OptimizerConfig optimizer;

  void validate() const;
  SieveSettings sieve_settings() const;
  /// e.g. "exponential_n400_c25"
  std::string label() const;
};

/// Everything the summary needs from one replicate.
struct ReplicateOutcome {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string failure;  ///< reason when !ok
  std::vector<double> alpha;
  std::vector<double> alpha_se;
  double mse_beta = 0.0;
  double mse_g = 0.0;
  bool mse_g_truncated = false;
  double achieved_censoring = 0.0;
  int widenings = 0;
  std::string termination;
  std::vector<double> beta_curve;  ///< on CellSummary::beta_grid
  std::vector<double> g_curve;     ///< on CellSummary::g_grid; NaN outside the fitted support
  std::vector<double> g_truth;     ///< true log-hazard on the centered scale of this replicate
};

struct AlphaSummary {
  double truth = 0.0;
  double bias = 0.0;
  std::optional<double> sse;  ///< absent with fewer than two usable replicates
  double ese = 0.0;
  double cp = 0.0;
  double median_abs_error = 0.0;
};

struct CellSummary {
  CellSpec spec;
  std::size_t used = 0;
  std::size_t failures = 0;
  std::vector<AlphaSummary> alpha;
  double mean_mse_beta = 0.0;
  double median_mse_beta = 0.0;
  double mean_mse_g = 0.0;
  double mean_censoring = 0.0;
  std::vector<double> beta_grid;   ///< 201 points on [0, 1]
  std::vector<double> beta_mean;
  std::vector<double> beta_truth;
  std::vector<double> g_grid;      ///< 201 points on [-1.5, 1.5]
  std::vector<double> g_mean;      ///< NaN where no replicate's support covers the point
  std::vector<double> g_truth;
};

inline constexpr std::size_t kCurvePoints = 201;
inline constexpr double kMaxFailureFraction = 0.2;

/// Generates, fits and scores replicate `index` of the cell. Fit failures are
/// recorded in the outcome, never thrown.
ReplicateOutcome run_replicate(const CellSpec& spec, std::size_t index);

/// Folds outcomes (in the given order) into a summary. Throws ConvergenceError
/// when more than 20% of the replicates failed.
CellSummary summarize_cell(const CellSpec& spec, const std::vector<ReplicateOutcome>& outcomes);

/// Runs every replicate of the cell; outcome r sits at index r. threads = 0
/// means one per hardware thread.
std::vector<ReplicateOutcome> run_replicates(const CellSpec& spec, unsigned threads = 1);

/// run_replicates followed by summarize_cell. Outcomes are optionally returned.
CellSummary run_cell(const CellSpec& spec, unsigned threads = 1, std::vector<ReplicateOutcome>* outcomes = nullptr);

struct RateReport {
  std::vector<std::size_t> n;
  std::vector<std::vector<double>> median_abs_alpha_error;  ///< [coordinate][n index]
  std::vector<double> median_mse_beta;
  std::vector<double> alpha_slope;  ///< least-squares slope of log error on log n, per coordinate
  double mse_beta_slope = 0.0;
};

/// Needs at least two distinct n with the same law and censoring rate.
RateReport convergence_diagnostic(const std::vector<CellSummary>& cells);

/// One row per cell and statistic: cell,law,n,censoring_rate,replicates,statistic,coordinate,value.
void write_summary_csv(std::ostream& out, const std::vector<CellSummary>& cells);
/// Long format: cell,curve,grid,mean,truth.
void write_curves_csv(std::ostream& out, const std::vector<CellSummary>& cells);
void write_rate_csv(std::ostream& out, const RateReport& report);

}  // namespace faft
