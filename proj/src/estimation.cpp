#include "faft/estimation.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "faft/error.hpp"

namespace faft {

int q_n_rule(std::size_t n) {
  if (n < 16) throw ConfigError(fmt::format("q_n rule needs n >= 16, got {}", n));
  auto q = static_cast<int>(std::floor(std::pow(static_cast<double>(n), 0.25)));
  // guard against pow rounding just below an exact fourth power
  while (static_cast<std::size_t>(q + 1) * (q + 1) * (q + 1) * (q + 1) <= n) ++q;
  while (static_cast<std::size_t>(q) * q * q * q > n) --q;
  return q;
}

SieveSettings SieveSettings::for_sample_size(std::size_t n, int order) {
  SieveSettings s;
  const int q = q_n_rule(n);
  s.beta_dimension = q;
  s.loghaz_dimension = q;
  s.beta_order = order;
  s.loghaz_order = order;
  return s;
}

void SieveSettings::validate() const {
  if (beta_order < 1 || loghaz_order < 2) {
    throw ConfigError(fmt::format("spline orders must be >= 1 (beta) and >= 2 (log-hazard), got {} and {}", beta_order,
                                  loghaz_order));
  }
  if (beta_dimension < beta_order) {
    throw ConfigError(fmt::format("beta basis dimension {} is below its order {}", beta_dimension, beta_order));
  }
  if (loghaz_dimension < loghaz_order) {
    throw ConfigError(fmt::format("log-hazard basis dimension {} is below its order {}", loghaz_dimension, loghaz_order));
  }
  if (!(support_margin >= 0.0)) throw ConfigError("support margin must be non-negative");
  if (max_widenings < 0) throw ConfigError("max widenings must be non-negative");
  if (!(coefficient_bound > 0.0)) throw ConfigError("coefficient bound must be positive");
  if (fixed_support && !(fixed_support->first < fixed_support->second)) {
    throw ConfigError("fixed support must satisfy lower < upper");
  }
  optimizer.validate();
}

SplineBasis make_beta_basis(const SieveSettings& settings) {
  return SplineBasis(KnotSequence::uniform(0.0, 1.0, settings.beta_dimension - settings.beta_order, settings.beta_order));
}

SplineBasis make_loghaz_basis(const SieveSettings& settings, double lower, double upper) {
  return SplineBasis(
      KnotSequence::uniform(lower, upper, settings.loghaz_dimension - settings.loghaz_order, settings.loghaz_order));
}

InitialFit least_squares_start(const LikelihoodModel& model) {
  const auto& x = model.scalar_design();
  const auto& w = model.functional_design();
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const Eigen::Index q = w.cols();
  Eigen::MatrixXd design(n, 1 + p + q);
  design.col(0).setOnes();
  design.middleCols(1, p) = x;
  design.rightCols(q) = w;
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = model.data()[static_cast<std::size_t>(i)].time;
  const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(y);

  InitialFit out;
  out.alpha.assign(coef.data() + 1, coef.data() + 1 + p);
  out.beta.assign(coef.data() + 1 + p, coef.data() + 1 + p + q);
  const Eigen::VectorXd r = y - design.rightCols(p + q) * coef.tail(p + q);
  out.residuals.assign(r.data(), r.data() + n);
  return out;
}

std::pair<double, double> select_support(std::span<const double> residuals, double margin) {
  if (residuals.empty()) throw DataError("no residuals for support selection");
  std::vector<double> sorted(residuals.begin(), residuals.end());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double prob) {
    const double pos = prob * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  double iqr = quantile(0.75) - quantile(0.25);
  if (!(iqr > 0.0)) iqr = 1.0;
  return {sorted.front() - margin * iqr, sorted.back() + margin * iqr};
}

double exponential_log_rate(const SurvivalDataset& data, std::span<const double> residuals, double lower,
                            double upper) {
  double events = 0.0;
  double exposure = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    events += data[i].event ? 1.0 : 0.0;
    if (residuals[i] >= lower) exposure += std::min(residuals[i], upper) - lower;
  }
  if (!(events > 0.0)) throw DataError("no events: the log-hazard cannot be initialized");
  if (!(exposure > 0.0)) throw DataError("zero exposure inside the support");
  return std::log(events / exposure);
}

namespace {

FitResult run_fit(const LikelihoodModel& model, const SieveSettings& settings, const SieveParameters& start) {
  const auto objective = [&](std::span<const double> x) { return model.log_likelihood(start.unpacked(x)); };
  const auto grad = [&](std::span<const double> x) { return model.gradient(start.unpacked(x)); };
  OptimizerResult opt = maximize(objective, grad, start.pack(), settings.optimizer);

  FitResult fit{.params = start.unpacked(opt.x), .loglik = opt.value, .hessian = {}, .covariance = {},
                .alpha_se = {}, .trace = opt.trace, .inference_error = {}};
  fit.n = model.data().size();
  fit.converged = opt.trace.reason == Termination::gradient || opt.trace.reason == Termination::step;
  for (double v : opt.x) {
    if (std::abs(v) > settings.coefficient_bound) fit.coefficient_bound_active = true;
  }
  return fit;
}

void attach_inference(const LikelihoodModel& model, FitResult& fit) {
  fit.hessian = observed_hessian(model, fit.params);
  try {
    fit.covariance = covariance_from_hessian(fit.hessian, fit.n);
    fit.alpha_se = standard_errors(fit.covariance, 0, fit.params.alpha.size());
  } catch (const SingularInformation& e) {
    fit.inference_error = e.what();
    fit.covariance.resize(0, 0);
    fit.alpha_se.clear();
  }
}

}  // namespace

FitResult fit_faft(const SurvivalDataset& data, const SieveSettings& settings, const SieveParameters* warm_start) {
  settings.validate();
  const LikelihoodModel model(data, warm_start ? warm_start->beta.basis() : make_beta_basis(settings));

  if (warm_start) {
    FitResult fit = run_fit(model, settings, *warm_start);
    if (fit.trace.reason == Termination::support_violation) {
      throw SupportViolation("optimizer stopped at the support boundary of the archived model",
                             model.residual_report(fit.params));
    }
    attach_inference(model, fit);
    return fit;
  }

  const InitialFit init = least_squares_start(model);
  double lower = 0.0;
  double upper = 0.0;
  double iqr_step = 0.0;
  if (settings.fixed_support) {
    std::tie(lower, upper) = *settings.fixed_support;
  } else {
    std::tie(lower, upper) = select_support(init.residuals, settings.support_margin);
    // each widening adds one margin per side, at least half an IQR
    const auto bare = select_support(init.residuals, 0.0);
    const auto half_iqr = select_support(init.residuals, 0.5);
    iqr_step = std::max(bare.first - lower, bare.first - half_iqr.first);
  }

  for (int widening = 0;; ++widening) {
    const SplineBasis gbasis = make_loghaz_basis(settings, lower, upper);
    const double c = exponential_log_rate(data, init.residuals, lower, upper);
    SieveParameters start{init.alpha, SplineFunction(model.beta_basis(), init.beta),
                          SplineFunction(gbasis, std::vector<double>(gbasis.dimension(), c))};
    std::optional<FitResult> fit;
    try {
      fit = run_fit(model, settings, start);
    } catch (const SupportViolation&) {
      // the start point itself violates a caller-fixed or too narrow support
      if (settings.fixed_support || widening >= settings.max_widenings) throw;
    }
    const bool violated = !fit || fit->trace.reason == Termination::support_violation;
    if (!violated) {
      fit->widenings = widening;
      attach_inference(model, *fit);
      return *fit;
    }
    if (settings.fixed_support || widening >= settings.max_widenings) {
      throw SupportViolation(fmt::format("support [{}, {}] still violated after {} widenings", lower, upper, widening),
                             model.residual_report(fit ? fit->params : start));
    }
    lower -= iqr_step;
    upper += iqr_step;
  }
}

}  // namespace faft
