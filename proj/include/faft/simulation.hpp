/**
 * @file simulation.hpp
 * @brief Synthetic functional AFT data: eigen-expansion covariates, error laws, censoring calibration.
 *
 * Z(s) = sum_k xi_k U_k phi_k(s) with U_k ~ Uniform[-1, 1], xi_k = (-1)^{k+1} k^{-1/2},
 * phi_1 = 1, phi_{k+1}(s) = sqrt(2) cos(k pi s). True beta_0 = sum_k (-1)^k k^{-3/2} phi_k,
 * alpha_0 = (1, 1), T = X_1 + X_2 + int beta_0 Z + eps, C = log(Uniform[0, tau]).
 */
#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "faft/covariate.hpp"
#include "faft/dataset.hpp"

namespace faft {

enum class ErrorLaw {
  exponential,       ///< exp(eps) ~ Exponential(1); g_0(t) = t
  gaussian_mixture,  ///< 0.5 N(0, 1) + 0.5 N(0, 9)
  extreme_value,     ///< standard Gumbel (maximum) law, CDF exp(-e^{-t})
  extreme_value_min  ///< minimum form, CDF 1 - exp(-e^t)
};

std::string to_string(ErrorLaw law);
/// Accepts "exponential", "gaussian-mixture", "extreme-value", "extreme-value-min" and the
/// short forms a, b, c. Throws ConfigError otherwise.
ErrorLaw error_law_from_string(const std::string& name);

using Rng = std::mt19937_64;

struct ScenarioConfig {
  std::size_t n = 400;
  ErrorLaw law = ErrorLaw::exponential;
  double censoring_rate = 0.25;
  int expansion_terms = 50;
  std::uint64_t seed = 1;
  double x2_variance = 0.5;  ///< N(0, 0.5) read as variance 0.5
  void validate() const;
};

/// phi_k(s) for k >= 1.
double eigen_function(int k, double s);
double true_beta(double s, int terms = 50);
/// int beta_0(s) Z(s) ds for coefficients U, exact by orthonormality: -sum U_k / k^2.
double true_functional_effect(const std::vector<double>& u);

/// Analytic covariate sum_k c_k phi_k(s) evaluated with a cosine recurrence.
FunctionalCovariate expansion_covariate(std::vector<double> coefficients);

struct CovariateDraw {
  std::vector<double> u;  ///< U_1..U_K
  FunctionalCovariate z;
};

CovariateDraw draw_functional_covariate(Rng& rng, int terms = 50);
/// X_1 ~ Bernoulli(0.5); X_2 ~ N(0, variance) truncated to [-2, 2] by rejection.
std::pair<double, double> draw_scalars(Rng& rng, double x2_variance = 0.5);
double draw_error(ErrorLaw law, Rng& rng);
/// log(f(t) / S(t)) of the error law.
double true_loghazard(ErrorLaw law, double t);
std::function<double(double)> true_loghazard(ErrorLaw law);

struct CensoringCalibration {
  double tau = 0.0;
  double achieved_rate = 0.0;
};

/**
 * Bisection on tau over a fixed pilot sample of `pilot_size` subjects until the
 * empirical censoring rate is within 0.005 of target. Results are cached per
 * (law, rate, terms, x2 variance, pilot seed, pilot size).
 */
CensoringCalibration calibrate_censoring(ErrorLaw law, double target_rate, std::uint64_t pilot_seed = 20240607,
                                         std::size_t pilot_size = 100000, int terms = 50, double x2_variance = 0.5);

/// Censoring fraction of a fresh sample generated with the given tau.
double censoring_rate_for_tau(ErrorLaw law, double tau, std::uint64_t seed, std::size_t size, int terms = 50,
                              double x2_variance = 0.5);

struct TrueModel {
  std::vector<double> alpha{1.0, 1.0};
  ErrorLaw law = ErrorLaw::exponential;
  int terms = 50;
  /// Constant absorbed into the error by centering: alpha_0' mean(X) + int beta_0 mean(Z).
  double centering_shift = 0.0;

  double beta(double s) const { return true_beta(s, terms); }
  /// Log-hazard of the error on the centered scale: g_0(t - centering_shift).
  double loghazard(double t) const { return true_loghazard(law, t - centering_shift); }
};

struct SimulatedData {
  SurvivalDataset data;  ///< centered
  SurvivalDataset raw;   ///< before centering
  TrueModel truth;
  double tau = 0.0;
  double achieved_censoring = 0.0;
  std::vector<std::vector<double>> expansion_u;  ///< raw U draws per subject
};

/// Hooks for degenerate checks; both default to the stated laws.
struct GenerationOverrides {
  bool zero_error = false;
  bool no_censoring = false;
};

/// Deterministic per seed. tau < 0 means "calibrate".
SimulatedData generate_dataset(const ScenarioConfig& config, double tau = -1.0, GenerationOverrides overrides = {});

}  // namespace faft
