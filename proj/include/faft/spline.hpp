/**
 * @file spline.hpp
 * @brief Clamped B-spline bases, spline functions and exp-spline quadrature.
 *
 * A basis of order l on [lower, upper] with m interior knots has dimension
 * m + l. Endpoint knots are repeated l times so every basis function vanishes
 * outside the interval and the basis sums to one on it.
 */
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace faft {

class KnotSequence {
 public:
  /// Throws StructureError unless lower < interior[0] < ... < upper and order >= 1.
  KnotSequence(double lower, double upper, std::vector<double> interior, int order);

  /// Equally spaced interior knots.
  static KnotSequence uniform(double lower, double upper, int num_interior, int order);

  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }
  const std::vector<double>& interior() const noexcept { return interior_; }
  int order() const noexcept { return order_; }
  std::size_t dimension() const noexcept { return interior_.size() + static_cast<std::size_t>(order_); }

 private:
  double lower_;
  double upper_;
  std::vector<double> interior_;
  int order_;
};

class SplineBasis {
 public:
  explicit SplineBasis(KnotSequence knots);

  const KnotSequence& knots() const noexcept { return knots_; }
  std::size_t dimension() const noexcept { return knots_.dimension(); }
  int order() const noexcept { return knots_.order(); }
  double lower() const noexcept { return knots_.lower(); }
  double upper() const noexcept { return knots_.upper(); }

  /// lower, interior..., upper
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  /// Clamped knot vector of length dimension() + order().
  const std::vector<double>& extended_knots() const noexcept { return extended_; }
  std::size_t num_spans() const noexcept { return breakpoints_.size() - 1; }

  /// Index of the knot span containing t; the upper endpoint belongs to the last span.
  std::size_t span_of(double t) const;

  /// All basis values at t. Throws DomainError outside [lower, upper].
  std::vector<double> evaluate(double t) const;

  /// Writes the order() possibly-nonzero values into out and returns the index of
  /// the first of them. out.size() must be >= order().
  std::size_t evaluate_nonzero(double t, std::span<double> out) const;

  /// Same as evaluate_nonzero but without the domain check; t is clamped to the interval.
  std::size_t evaluate_nonzero_clamped(double t, std::span<double> out) const;

  /// Greville abscissae (knot averages); interpolating at them reproduces linear functions.
  std::vector<double> greville() const;

 private:
  std::size_t nonzero_in_span(std::size_t span, double t, std::span<double> out) const;

  KnotSequence knots_;
  std::vector<double> breakpoints_;
  std::vector<double> extended_;
};

class SplineFunction {
 public:
  /// Throws StructureError when coefficients.size() != basis.dimension().
  SplineFunction(SplineBasis basis, std::vector<double> coefficients);

  const SplineBasis& basis() const noexcept { return basis_; }
  const std::vector<double>& coefficients() const noexcept { return coef_; }
  std::vector<double>& coefficients() noexcept { return coef_; }

  /// Throws DomainError outside the basis interval.
  double operator()(double t) const;
  /// Clamps t into the interval instead of throwing.
  double value_clamped(double t) const;

  /// Exact derivative, a spline of order - 1 on the same breakpoints.
  /// Throws UnsupportedOperation for order 1.
  SplineFunction derivative() const;

 private:
  SplineBasis basis_;
  std::vector<double> coef_;
};

double evaluate_spline(const SplineFunction& f, double t);
std::vector<double> evaluate_basis(const SplineBasis& basis, double t);
SplineFunction derivative_spline(const SplineFunction& f);

/// Gauss-Legendre panels (7 nodes each) per knot span, or per partial span, in the
/// exp-spline integrals. One panel leaves errors near 1e-6 for strongly curved cubics.
inline constexpr int kQuadraturePanels = 4;

/// Integral of exp(g(t)) over [a, u], split at knots, composite 7-point Gauss-Legendre per piece.
/// Returns 0 when u < a. Throws DomainError if [a, u] leaves the basis interval.
double quad_exp_spline(const SplineFunction& g, double a, double u);

/// Integral of exp(g(t)) * B_k(t) over [a, u] for every basis index k.
std::vector<double> quad_weighted_basis(const SplineFunction& g, double a, double u);

/**
 * Cumulative integrals of exp(g) from the lower end of g's interval.
 *
 * Whole-span integrals are computed once so each query costs one partial-span
 * rule. Used by the likelihood, where all records share the same g.
 */
class HazardIntegrator {
 public:
  explicit HazardIntegrator(const SplineFunction& loghaz);

  /// Integral of exp(g) over [lower, u]; u is clamped into the interval.
  double cumulative(double u) const;

  /// Adds the integral of exp(g) * B_k over [lower, u] into out (length dimension()).
  void add_cumulative_weighted(double u, std::span<double> out) const;

 private:
  SplineFunction g_;
  std::vector<double> span_start_total_;                  // cumulative at breakpoints
  std::vector<std::vector<double>> span_start_weighted_;  // same, per basis index
};

}  // namespace faft
