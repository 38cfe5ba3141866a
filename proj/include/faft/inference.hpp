/**
 * @file inference.hpp
 * @brief Observed Hessian, standard errors, pointwise bands and error metrics.
 *
 * The Hessian is taken of the averaged log-likelihood l_n, so the covariance of
 * the packed estimate is (-H)^{-1} / n.
 */
#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "faft/dataset.hpp"
#include "faft/likelihood.hpp"
#include "faft/optimizer.hpp"

namespace faft {

inline constexpr double kNormalQuantile975 = 1.959964;

struct FitResult {
  SieveParameters params;
  double loglik = 0.0;
  Eigen::MatrixXd hessian;     ///< of the averaged log-likelihood, symmetrized
  Eigen::MatrixXd covariance;  ///< (-H)^{-1}/n; empty when inference failed
  std::vector<double> alpha_se;
  OptimizerTrace trace;
  std::size_t n = 0;
  int widenings = 0;
  bool converged = false;
  bool coefficient_bound_active = false;
  std::string inference_error;  ///< non-empty when the information was singular

  double support_lower() const noexcept { return params.support_lower(); }
  double support_upper() const noexcept { return params.support_upper(); }
  bool has_inference() const noexcept { return inference_error.empty() && covariance.size() > 0; }
};

/**
 * Central differences of the analytic gradient with h_j = 1e-5 max(1, |x_j|),
 * symmetrized. A column falls back to the closed-form second derivatives when
 * the two one-sided differences disagree (a residual crossed a knot of a
 * low-order g inside the stencil) or when a stencil point leaves the support.
 */
Eigen::MatrixXd observed_hessian(const LikelihoodModel& model, const SieveParameters& params);
Eigen::MatrixXd observed_hessian(const SurvivalDataset& data, const SieveParameters& params);

/// Closed-form second derivatives, exact away from the knots of g.
Eigen::MatrixXd analytic_hessian(const LikelihoodModel& model, const SieveParameters& params);

/// (-H)^{-1}/n. Throws SingularInformation (with the smallest eigenvalue of -H)
/// when -H is not positive definite.
Eigen::MatrixXd covariance_from_hessian(const Eigen::MatrixXd& hessian, std::size_t n);

/// sqrt of the first p diagonal entries of the covariance.
std::vector<double> alpha_standard_errors(const FitResult& fit);
std::vector<double> standard_errors(const Eigen::MatrixXd& covariance, std::size_t first, std::size_t count);

struct PointwiseBand {
  std::vector<double> grid;
  std::vector<double> estimate;
  std::vector<double> lower;
  std::vector<double> upper;
};

/// Delta-method band for beta-hat from the beta block of the covariance.
PointwiseBand beta_pointwise_band(const FitResult& fit, const std::vector<double>& grid);
PointwiseBand beta_pointwise_band(const SplineFunction& beta, const Eigen::MatrixXd& beta_covariance,
                                  const std::vector<double>& grid);

std::vector<double> uniform_grid(double lo, double hi, std::size_t points);

/// Plug-in ||beta||_C^2 with C(s,t) = mean Z_i(s) Z_i(t) on a 101-point grid, trapezoid rule.
double beta_c_norm(const std::function<double(double)>& beta, const SurvivalDataset& data);

/// Integral over [0, 1] of (fitted - truth)^2, 2001-point trapezoid.
double mse_beta(const SplineFunction& fitted, const std::function<double(double)>& truth);

struct MseG {
  double value = 0.0;
  bool truncated = false;  ///< [-1.5, 1.5] not inside the fitted support
};

/// Integral over [-1.5, 1.5] (intersected with the support) of (fitted - truth)^2.
MseG mse_g(const SplineFunction& fitted, const std::function<double(double)>& truth);

}  // namespace faft
