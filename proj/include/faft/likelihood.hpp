/**
 * @file likelihood.hpp
 * @brief Sieve log-likelihood of the functional AFT model and its analytic gradient.
 *
 * With residual r_i = Y_i - alpha'X_i - int beta(s) Z_i(s) ds and log-hazard g on
 * [a, b], each record contributes Delta_i g(r_i) - int_a^{min(r_i, b)} exp(g(t)) dt,
 * averaged over records.
 */
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "faft/dataset.hpp"
#include "faft/error.hpp"
#include "faft/spline.hpp"

namespace faft {

/// Packed layout: [alpha (p) | beta coefficients | log-hazard coefficients].
struct SieveParameters {
  std::vector<double> alpha;
  SplineFunction beta;    ///< functional coefficient on [0, 1]
  SplineFunction loghaz;  ///< log-hazard g on [a, b]

  double support_lower() const noexcept { return loghaz.basis().lower(); }
  double support_upper() const noexcept { return loghaz.basis().upper(); }

  std::size_t packed_size() const noexcept {
    return alpha.size() + beta.coefficients().size() + loghaz.coefficients().size();
  }
  std::vector<double> pack() const;
  /// Same bases, coefficients replaced. Throws StructureError on size mismatch.
  SieveParameters unpacked(std::span<const double> packed) const;
};

struct ResidualReport {
  std::vector<double> residuals;
  std::size_t below = 0;  ///< count of r_i < a
  std::size_t above = 0;  ///< count of r_i > b
  std::size_t events_outside = 0;
};

/// A residual left [a, b] where the likelihood cannot be evaluated.
class SupportViolation : public Error {
 public:
  SupportViolation(const std::string& what, ResidualReport report)
      : Error(what), report_(std::move(report)) {}
  const ResidualReport& report() const noexcept { return report_; }

 private:
  ResidualReport report_;
};

/// Which packed blocks to differentiate. The alpha and beta blocks need g of order >= 2
/// unless g is a single constant piece.
struct GradientBlocks {
  bool alpha = true;
  bool beta = true;
  bool loghaz = true;
};

/**
 * Binds a dataset to a functional-coefficient basis.
 *
 * The inner products int B_k(s) Z_i(s) ds do not depend on the parameters, so they
 * are computed once here; mu is then linear in (alpha, beta coefficients).
 *
 * Support rules: an event with r_i outside [a, b] raises SupportViolation. A
 * censored record with r_i > b contributes exposure up to b; one with r_i < a
 * contributes nothing.
 */
class LikelihoodModel {
 public:
  LikelihoodModel(const SurvivalDataset& data, SplineBasis beta_basis);

  const SurvivalDataset& data() const noexcept { return *data_; }
  const SplineBasis& beta_basis() const noexcept { return beta_basis_; }
  /// n x dim(beta basis) matrix of inner products.
  const Eigen::MatrixXd& functional_design() const noexcept { return design_; }
  /// n x p scalar covariates.
  const Eigen::MatrixXd& scalar_design() const noexcept { return x_; }

  double mu(std::size_t i, const SieveParameters& params) const;
  std::vector<double> residuals(const SieveParameters& params) const;
  ResidualReport residual_report(const SieveParameters& params) const;

  double log_likelihood(const SieveParameters& params) const;
  std::vector<double> gradient(const SieveParameters& params, GradientBlocks blocks = {}) const;

 private:
  void check_shapes(const SieveParameters& params) const;
  void throw_if_violated(const SieveParameters& params, const std::vector<double>& r) const;

  const SurvivalDataset* data_;
  SplineBasis beta_basis_;
  Eigen::MatrixXd design_;
  Eigen::MatrixXd x_;
};

/// mu(U, theta) for one record, integrating beta * Z directly.
double mu(const SurvivalRecord& record, const SieveParameters& params);
double log_likelihood(const SurvivalDataset& data, const SieveParameters& params);
std::vector<double> gradient(const SurvivalDataset& data, const SieveParameters& params);
ResidualReport residual_report(const SurvivalDataset& data, const SieveParameters& params);

}  // namespace faft
