#include "faft/covariate.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "faft/error.hpp"
#include "faft/quadrature.hpp"

namespace faft {

struct FunctionalCovariate::Impl {
  Function fn;
  int panels = 0;
  std::vector<double> points;
  std::vector<double> values;

  double interpolate(double s) const {
    if (s <= points.front()) return values.front();
    if (s >= points.back()) return values.back();
    auto it = std::upper_bound(points.begin(), points.end(), s);
    const auto j = static_cast<std::size_t>(it - points.begin());
    const double w = (s - points[j - 1]) / (points[j] - points[j - 1]);
    return values[j - 1] + w * (values[j] - values[j - 1]);
  }
};

FunctionalCovariate::FunctionalCovariate(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

FunctionalCovariate FunctionalCovariate::analytic(Function fn, int panels_per_span) {
  if (!fn) throw StructureError("analytic covariate needs a callable");
  if (panels_per_span < 1) throw StructureError("panels_per_span must be positive");
  auto impl = std::make_shared<Impl>();
  impl->fn = std::move(fn);
  impl->panels = panels_per_span;
  return FunctionalCovariate(std::move(impl));
}

FunctionalCovariate FunctionalCovariate::grid(std::vector<double> points, std::vector<double> values) {
  if (points.size() != values.size()) {
    throw DataError(fmt::format("grid covariate has {} points but {} values", points.size(), values.size()));
  }
  if (points.size() < 2) throw DataError("grid covariate needs at least 2 points");
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (!(points[j] >= 0.0 && points[j] <= 1.0)) {
      throw DataError(fmt::format("grid point {} outside [0, 1]", points[j]));
    }
    if (j > 0 && !(points[j] > points[j - 1])) throw DataError("grid points must be strictly increasing");
    if (!std::isfinite(values[j])) throw DataError("grid covariate value is not finite");
  }
  auto impl = std::make_shared<Impl>();
  impl->points = std::move(points);
  impl->values = std::move(values);
  return FunctionalCovariate(std::move(impl));
}

bool FunctionalCovariate::is_grid() const noexcept { return !impl_->fn; }

double FunctionalCovariate::value(double s) const { return is_grid() ? impl_->interpolate(s) : impl_->fn(s); }

const std::vector<double>& FunctionalCovariate::grid_points() const { return impl_->points; }
const std::vector<double>& FunctionalCovariate::grid_values() const { return impl_->values; }

std::vector<double> FunctionalCovariate::inner_products(const SplineBasis& basis) const {
  if (basis.lower() != 0.0 || basis.upper() != 1.0) {
    throw StructureError("functional coefficient basis must live on [0, 1]");
  }
  std::vector<double> out(basis.dimension(), 0.0);
  std::vector<double> local(static_cast<std::size_t>(basis.order()));
  const auto& rule = gauss_legendre7();

  auto accumulate = [&](double lo, double hi) {
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    for (std::size_t q = 0; q < 7; ++q) {
      const double s = mid + half * rule.nodes[q];
      const double w = half * rule.weights[q] * value(s);
      const std::size_t first = basis.evaluate_nonzero_clamped(s, local);
      for (std::size_t k = 0; k < local.size(); ++k) out[first + k] += w * local[k];
    }
  };

  if (is_grid()) {
    // Integrand is polynomial between consecutive merged breakpoints.
    std::vector<double> cuts = basis.breakpoints();
    cuts.insert(cuts.end(), impl_->points.begin(), impl_->points.end());
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (std::size_t j = 0; j + 1 < cuts.size(); ++j) accumulate(cuts[j], cuts[j + 1]);
  } else {
    const auto& bp = basis.breakpoints();
    for (std::size_t j = 0; j + 1 < bp.size(); ++j) {
      const double width = (bp[j + 1] - bp[j]) / impl_->panels;
      for (int p = 0; p < impl_->panels; ++p) {
        accumulate(bp[j] + p * width, p + 1 == impl_->panels ? bp[j + 1] : bp[j] + (p + 1) * width);
      }
    }
  }
  return out;
}

}  // namespace faft
