/**
 * @file estimation.hpp
 * @brief End-to-end sieve fit: bases, initial values, support selection, BFGS, inference.
 */
#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "faft/dataset.hpp"
#include "faft/inference.hpp"
#include "faft/likelihood.hpp"
#include "faft/optimizer.hpp"

namespace faft {

/// floor(n^{1/4}); throws ConfigError for n < 16.
int q_n_rule(std::size_t n);

struct SieveSettings {
  int beta_dimension = 4;
  int beta_order = 2;
  int loghaz_dimension = 4;
  int loghaz_order = 2;
  double support_margin = 0.5;  ///< in units of the initial residual IQR
  int max_widenings = 3;
  double coefficient_bound = 1e3;
  OptimizerConfig optimizer;
  std::optional<std::pair<double, double>> fixed_support;  ///< skips support selection

  /// Both bases of dimension q_n_rule(n) with the given order.
  static SieveSettings for_sample_size(std::size_t n, int order = 2);
  void validate() const;
};

SplineBasis make_beta_basis(const SieveSettings& settings);
SplineBasis make_loghaz_basis(const SieveSettings& settings, double lower, double upper);

struct InitialFit {
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> residuals;  ///< Y - alpha'X - int beta Z (intercept kept in the residuals)
};

/// Least squares of Y on (1, X, int B^beta Z) using every record, censored or not.
InitialFit least_squares_start(const LikelihoodModel& model);

/// [min r - m IQR(r), max r + m IQR(r)].
std::pair<double, double> select_support(std::span<const double> residuals, double margin);

/// Constant log-hazard at the exponential MLE log(sum Delta / sum exposure).
double exponential_log_rate(const SurvivalDataset& data, std::span<const double> residuals, double lower,
                            double upper);

/**
 * Fits the model. Support violations that stop the optimizer trigger up to
 * max_widenings refits on a support widened by one more margin on each side;
 * after that the SupportViolation propagates. A warm start fixes the support
 * to the warm start's g interval and starts from its coefficients.
 */
FitResult fit_faft(const SurvivalDataset& data, const SieveSettings& settings,
                   const SieveParameters* warm_start = nullptr);

}  // namespace faft
