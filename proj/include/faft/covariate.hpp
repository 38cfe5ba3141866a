#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "faft/spline.hpp"

namespace faft {

/**
 * One subject's functional covariate Z(s) on [0, 1].
 *
 * Either an analytic callable (simulation) or a sorted grid of samples that is
 * linearly interpolated and clamped to its end values outside the grid range.
 * Copies share the underlying representation.
 */
class FunctionalCovariate {
 public:
  using Function = std::function<double(double)>;

  /// panels_per_span: Gauss-Legendre sub-panels per knot span used for inner products.
  static FunctionalCovariate analytic(Function fn, int panels_per_span = 32);

  /// Throws DataError unless points are sorted, inside [0, 1], at least 2, and sizes match.
  static FunctionalCovariate grid(std::vector<double> points, std::vector<double> values);

  bool is_grid() const noexcept;
  double value(double s) const;

  /// Grid samples; empty for analytic covariates.
  const std::vector<double>& grid_points() const;
  const std::vector<double>& grid_values() const;

  /// Integrals of B_k(s) Z(s) over [0, 1] for every function of a basis on [0, 1].
  /// Grid covariates are integrated exactly piece by piece (basis breakpoints merged
  /// with grid points); analytic ones by composite Gauss-Legendre per knot span.
  std::vector<double> inner_products(const SplineBasis& basis) const;

 private:
  struct Impl;
  explicit FunctionalCovariate(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
};

}  // namespace faft
