#include "faft/likelihood.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include <fmt/format.h>

namespace faft {

std::vector<double> SieveParameters::pack() const {
  std::vector<double> out;
  out.reserve(packed_size());
  out.insert(out.end(), alpha.begin(), alpha.end());
  out.insert(out.end(), beta.coefficients().begin(), beta.coefficients().end());
  out.insert(out.end(), loghaz.coefficients().begin(), loghaz.coefficients().end());
  return out;
}

SieveParameters SieveParameters::unpacked(std::span<const double> packed) const {
  if (packed.size() != packed_size()) {
    throw StructureError(fmt::format("packed vector has {} entries, expected {}", packed.size(), packed_size()));
  }
  const std::size_t p = alpha.size();
  const std::size_t qb = beta.coefficients().size();
  SieveParameters out = *this;
  std::copy_n(packed.begin(), p, out.alpha.begin());
  std::copy_n(packed.begin() + static_cast<std::ptrdiff_t>(p), qb, out.beta.coefficients().begin());
  std::copy(packed.begin() + static_cast<std::ptrdiff_t>(p + qb), packed.end(), out.loghaz.coefficients().begin());
  return out;
}

LikelihoodModel::LikelihoodModel(const SurvivalDataset& data, SplineBasis beta_basis)
    : data_(&data), beta_basis_(std::move(beta_basis)) {
  const std::size_t n = data.size();
  const std::size_t p = data.num_scalar();
  design_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(beta_basis_.dimension()));
  x_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i) {
    const auto w = data[i].z.inner_products(beta_basis_);
    for (std::size_t k = 0; k < w.size(); ++k) design_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = w[k];
    for (std::size_t j = 0; j < p; ++j) x_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data[i].x[j];
  }
}

void LikelihoodModel::check_shapes(const SieveParameters& params) const {
  if (params.alpha.size() != data_->num_scalar()) {
    throw StructureError(fmt::format("alpha has {} entries but the data have {} scalar covariates",
                                     params.alpha.size(), data_->num_scalar()));
  }
  if (params.beta.coefficients().size() != beta_basis_.dimension()) {
    throw StructureError(fmt::format("beta has {} coefficients but the model basis has dimension {}",
                                     params.beta.coefficients().size(), beta_basis_.dimension()));
  }
}

double LikelihoodModel::mu(std::size_t i, const SieveParameters& params) const {
  check_shapes(params);
  const auto row = static_cast<Eigen::Index>(i);
  double value = 0.0;
  for (std::size_t j = 0; j < params.alpha.size(); ++j) value += params.alpha[j] * x_(row, static_cast<Eigen::Index>(j));
  const auto& c = params.beta.coefficients();
  for (std::size_t k = 0; k < c.size(); ++k) value += c[k] * design_(row, static_cast<Eigen::Index>(k));
  return value;
}

std::vector<double> LikelihoodModel::residuals(const SieveParameters& params) const {
  check_shapes(params);
  std::vector<double> r(data_->size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = (*data_)[i].time - mu(i, params);
  return r;
}

ResidualReport LikelihoodModel::residual_report(const SieveParameters& params) const {
  ResidualReport report;
  report.residuals = residuals(params);
  const double a = params.support_lower();
  const double b = params.support_upper();
  for (std::size_t i = 0; i < report.residuals.size(); ++i) {
    const double r = report.residuals[i];
    const bool outside = r < a || r > b;
    report.below += r < a ? 1 : 0;
    report.above += r > b ? 1 : 0;
    report.events_outside += (outside && (*data_)[i].event) ? 1 : 0;
  }
  return report;
}

void LikelihoodModel::throw_if_violated(const SieveParameters& params, const std::vector<double>& r) const {
  const double a = params.support_lower();
  const double b = params.support_upper();
  for (std::size_t i = 0; i < r.size(); ++i) {
    if ((*data_)[i].event && (r[i] < a || r[i] > b)) {
      auto report = residual_report(params);
      throw SupportViolation(fmt::format("event residual {} of record {} outside support [{}, {}] "
                                         "({} below, {} above)",
                                         r[i], i, a, b, report.below, report.above),
                             std::move(report));
    }
  }
}

double LikelihoodModel::log_likelihood(const SieveParameters& params) const {
  const auto r = residuals(params);
  throw_if_violated(params, r);
  const double a = params.support_lower();
  const double b = params.support_upper();
  const HazardIntegrator integrator(params.loghaz);
  double total = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if ((*data_)[i].event) {
      total += params.loghaz(r[i]) - integrator.cumulative(r[i]);
    } else if (r[i] >= a) {
      total -= integrator.cumulative(std::min(r[i], b));
    }
  }
  return total / static_cast<double>(r.size());
}

std::vector<double> LikelihoodModel::gradient(const SieveParameters& params, GradientBlocks blocks) const {
  const auto r = residuals(params);
  throw_if_violated(params, r);
  const double a = params.support_lower();
  const double b = params.support_upper();
  const std::size_t n = r.size();
  const std::size_t p = params.alpha.size();
  const std::size_t qb = params.beta.coefficients().size();
  const std::size_t qg = params.loghaz.coefficients().size();
  std::vector<double> grad(p + qb + qg, 0.0);

  const bool need_slope = blocks.alpha || blocks.beta;
  // A single-span piecewise-constant g has zero slope; other order-1 bases throw here.
  const bool constant_g = params.loghaz.basis().order() == 1 && params.loghaz.basis().num_spans() == 1;
  std::optional<SplineFunction> dg;
  if (need_slope && !constant_g) dg = params.loghaz.derivative();

  const HazardIntegrator integrator(params.loghaz);
  std::span<double> g_block(grad.data() + p + qb, qg);
  std::vector<double> exposure(qg, 0.0);
  std::array<double, 32> local{};
  const auto& gbasis = params.loghaz.basis();

  for (std::size_t i = 0; i < n; ++i) {
    const bool event = (*data_)[i].event;
    const bool inside = r[i] >= a && r[i] <= b;
    if (need_slope) {
      double factor = 0.0;
      if (inside) {
        factor = std::exp(params.loghaz(r[i]));
        if (event && dg) factor -= (*dg)(r[i]);
      }
      if (factor != 0.0) {
        const auto row = static_cast<Eigen::Index>(i);
        if (blocks.alpha) {
          for (std::size_t j = 0; j < p; ++j) grad[j] += factor * x_(row, static_cast<Eigen::Index>(j));
        }
        if (blocks.beta) {
          for (std::size_t k = 0; k < qb; ++k) grad[p + k] += factor * design_(row, static_cast<Eigen::Index>(k));
        }
      }
    }
    if (blocks.loghaz) {
      if (event) {
        const std::size_t first = gbasis.evaluate_nonzero(r[i], local);
        for (int k = 0; k < gbasis.order(); ++k) g_block[first + static_cast<std::size_t>(k)] += local[k];
      }
      if (r[i] >= a) integrator.add_cumulative_weighted(std::min(r[i], b), exposure);
    }
  }
  for (std::size_t k = 0; k < qg; ++k) g_block[k] -= exposure[k];
  const double inv_n = 1.0 / static_cast<double>(n);
  for (double& v : grad) v *= inv_n;
  return grad;
}

double mu(const SurvivalRecord& record, const SieveParameters& params) {
  if (record.x.size() != params.alpha.size()) {
    throw StructureError(fmt::format("record has {} scalar covariates but alpha has {}", record.x.size(),
                                     params.alpha.size()));
  }
  double value = 0.0;
  for (std::size_t j = 0; j < record.x.size(); ++j) value += params.alpha[j] * record.x[j];
  const auto w = record.z.inner_products(params.beta.basis());
  const auto& c = params.beta.coefficients();
  for (std::size_t k = 0; k < c.size(); ++k) value += c[k] * w[k];
  return value;
}

double log_likelihood(const SurvivalDataset& data, const SieveParameters& params) {
  return LikelihoodModel(data, params.beta.basis()).log_likelihood(params);
}

std::vector<double> gradient(const SurvivalDataset& data, const SieveParameters& params) {
  return LikelihoodModel(data, params.beta.basis()).gradient(params);
}

ResidualReport residual_report(const SurvivalDataset& data, const SieveParameters& params) {
  return LikelihoodModel(data, params.beta.basis()).residual_report(params);
}

}  // namespace faft
