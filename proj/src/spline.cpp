#include "faft/spline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "faft/error.hpp"
#include "faft/quadrature.hpp"

namespace faft {

namespace {

constexpr int kMaxOrder = 20;

void check_in_range(const SplineBasis& basis, double t) {
  if (!(t >= basis.lower() && t <= basis.upper())) {
    throw DomainError(fmt::format("spline argument {} outside [{}, {}]", t, basis.lower(), basis.upper()));
  }
}

}  // namespace

KnotSequence::KnotSequence(double lower, double upper, std::vector<double> interior, int order)
    : lower_(lower), upper_(upper), interior_(std::move(interior)), order_(order) {
  if (order_ < 1 || order_ > kMaxOrder) {
    throw StructureError(fmt::format("spline order must be in [1, {}], got {}", kMaxOrder, order_));
  }
  if (!std::isfinite(lower_) || !std::isfinite(upper_) || !(lower_ < upper_)) {
    throw StructureError(fmt::format("invalid knot interval [{}, {}]", lower_, upper_));
  }
  double prev = lower_;
  for (double k : interior_) {
    if (!(k > prev)) {
      throw StructureError(fmt::format("knots not strictly increasing at {}", k));
    }
    prev = k;
  }
  if (!(upper_ > prev)) {
    throw StructureError(fmt::format("interior knot {} not below upper endpoint {}", prev, upper_));
  }
}

KnotSequence KnotSequence::uniform(double lower, double upper, int num_interior, int order) {
  if (num_interior < 0) {
    throw StructureError("negative interior knot count");
  }
  std::vector<double> interior(static_cast<std::size_t>(num_interior));
  const double width = (upper - lower) / (num_interior + 1);
  for (int i = 0; i < num_interior; ++i) {
    interior[static_cast<std::size_t>(i)] = lower + width * (i + 1);
  }
  return KnotSequence(lower, upper, std::move(interior), order);
}

SplineBasis::SplineBasis(KnotSequence knots) : knots_(std::move(knots)) {
  breakpoints_.reserve(knots_.interior().size() + 2);
  breakpoints_.push_back(knots_.lower());
  breakpoints_.insert(breakpoints_.end(), knots_.interior().begin(), knots_.interior().end());
  breakpoints_.push_back(knots_.upper());

  const auto order = static_cast<std::size_t>(knots_.order());
  extended_.reserve(dimension() + order);
  extended_.insert(extended_.end(), order, knots_.lower());
  extended_.insert(extended_.end(), knots_.interior().begin(), knots_.interior().end());
  extended_.insert(extended_.end(), order, knots_.upper());
}

std::size_t SplineBasis::span_of(double t) const {
  // upper_bound over interior breakpoints; t == upper maps to the last span.
  auto it = std::upper_bound(breakpoints_.begin() + 1, breakpoints_.end() - 1, t);
  return static_cast<std::size_t>(it - (breakpoints_.begin() + 1));
}

std::size_t SplineBasis::nonzero_in_span(std::size_t span, double t, std::span<double> out) const {
  const int p = order() - 1;
  const std::size_t i = span + static_cast<std::size_t>(p);
  std::array<double, kMaxOrder> left{};
  std::array<double, kMaxOrder> right{};
  out[0] = 1.0;
  for (int r = 1; r <= p; ++r) {
    left[r] = t - extended_[i + 1 - r];
    right[r] = extended_[i + r] - t;
    double saved = 0.0;
    for (int s = 0; s < r; ++s) {
      const double temp = out[s] / (right[s + 1] + left[r - s]);
      out[s] = saved + right[s + 1] * temp;
      saved = left[r - s] * temp;
    }
    out[r] = saved;
  }
  return span;
}

std::size_t SplineBasis::evaluate_nonzero(double t, std::span<double> out) const {
  check_in_range(*this, t);
  return nonzero_in_span(span_of(t), t, out);
}

std::size_t SplineBasis::evaluate_nonzero_clamped(double t, std::span<double> out) const {
  t = std::clamp(t, lower(), upper());
  return nonzero_in_span(span_of(t), t, out);
}

std::vector<double> SplineBasis::evaluate(double t) const {
  std::array<double, kMaxOrder> local{};
  const std::size_t first = evaluate_nonzero(t, local);
  std::vector<double> values(dimension(), 0.0);
  for (int k = 0; k < order(); ++k) values[first + static_cast<std::size_t>(k)] = local[k];
  return values;
}

std::vector<double> SplineBasis::greville() const {
  const auto order = static_cast<std::size_t>(knots_.order());
  std::vector<double> points(dimension());
  if (order == 1) {
    for (std::size_t k = 0; k < points.size(); ++k) {
      points[k] = 0.5 * (breakpoints_[k] + breakpoints_[k + 1]);
    }
    return points;
  }
  for (std::size_t k = 0; k < points.size(); ++k) {
    double sum = 0.0;
    for (std::size_t j = 1; j < order; ++j) sum += extended_[k + j];
    points[k] = sum / static_cast<double>(order - 1);
  }
  return points;
}

SplineFunction::SplineFunction(SplineBasis basis, std::vector<double> coefficients)
    : basis_(std::move(basis)), coef_(std::move(coefficients)) {
  if (coef_.size() != basis_.dimension()) {
    throw StructureError(fmt::format("spline has {} coefficients for a basis of dimension {}",
                                     coef_.size(), basis_.dimension()));
  }
}

double SplineFunction::operator()(double t) const {
  std::array<double, kMaxOrder> local{};
  const std::size_t first = basis_.evaluate_nonzero(t, local);
  double value = 0.0;
  for (int k = 0; k < basis_.order(); ++k) value += coef_[first + static_cast<std::size_t>(k)] * local[k];
  return value;
}

double SplineFunction::value_clamped(double t) const {
  std::array<double, kMaxOrder> local{};
  const std::size_t first = basis_.evaluate_nonzero_clamped(t, local);
  double value = 0.0;
  for (int k = 0; k < basis_.order(); ++k) value += coef_[first + static_cast<std::size_t>(k)] * local[k];
  return value;
}

SplineFunction SplineFunction::derivative() const {
  const int order = basis_.order();
  if (order < 2) {
    throw UnsupportedOperation("derivative of an order-1 spline is not a spline");
  }
  const auto& t = basis_.extended_knots();
  const auto l = static_cast<std::size_t>(order);
  std::vector<double> d(coef_.size() - 1);
  for (std::size_t i = 0; i + 1 < coef_.size(); ++i) {
    d[i] = static_cast<double>(order - 1) * (coef_[i + 1] - coef_[i]) / (t[i + l] - t[i + 1]);
  }
  const auto& k = basis_.knots();
  return SplineFunction(SplineBasis(KnotSequence(k.lower(), k.upper(), k.interior(), order - 1)), std::move(d));
}

double evaluate_spline(const SplineFunction& f, double t) { return f(t); }

std::vector<double> evaluate_basis(const SplineBasis& basis, double t) { return basis.evaluate(t); }

SplineFunction derivative_spline(const SplineFunction& f) { return f.derivative(); }

namespace {

void check_quadrature_range(const SplineFunction& g, double a, double u) {
  const auto& b = g.basis();
  if (!(a >= b.lower() && a <= b.upper())) {
    throw DomainError(fmt::format("integration start {} outside [{}, {}]", a, b.lower(), b.upper()));
  }
  if (u > b.upper()) {
    throw DomainError(fmt::format("integration end {} beyond upper knot {}", u, b.upper()));
  }
}

// Calls piece(lo, hi) for each knot-span piece of [a, u].
template <class F>
void for_each_piece(const SplineBasis& basis, double a, double u, F&& piece) {
  const auto& bp = basis.breakpoints();
  std::size_t span = basis.span_of(a);
  double lo = a;
  while (lo < u) {
    const double hi = std::min(u, bp[span + 1]);
    if (hi > lo) piece(lo, hi);
    lo = hi;
    ++span;
    if (span >= basis.num_spans()) break;
  }
}

double integrate_exp_piece(const SplineFunction& g, double lo, double hi) {
  const auto& basis = g.basis();
  const auto& coef = g.coefficients();
  const int order = basis.order();
  std::array<double, kMaxOrder> local{};
  double total = 0.0;
  for_each_gl7_node(lo, hi, kQuadraturePanels, [&](double t, double w) {
    const std::size_t first = basis.evaluate_nonzero_clamped(t, local);
    double v = 0.0;
    for (int k = 0; k < order; ++k) v += coef[first + static_cast<std::size_t>(k)] * local[k];
    total += w * std::exp(v);
  });
  return total;
}

void integrate_weighted_piece(const SplineFunction& g, double lo, double hi, std::span<double> out) {
  const auto& basis = g.basis();
  const auto& coef = g.coefficients();
  const int order = basis.order();
  std::array<double, kMaxOrder> local{};
  for_each_gl7_node(lo, hi, kQuadraturePanels, [&](double t, double w) {
    const std::size_t first = basis.evaluate_nonzero_clamped(t, local);
    double v = 0.0;
    for (int k = 0; k < order; ++k) v += coef[first + static_cast<std::size_t>(k)] * local[k];
    const double we = w * std::exp(v);
    for (int k = 0; k < order; ++k) out[first + static_cast<std::size_t>(k)] += we * local[k];
  });
}

}  // namespace

double quad_exp_spline(const SplineFunction& g, double a, double u) {
  if (u < a) return 0.0;
  check_quadrature_range(g, a, u);
  double total = 0.0;
  for_each_piece(g.basis(), a, u, [&](double lo, double hi) { total += integrate_exp_piece(g, lo, hi); });
  return total;
}

std::vector<double> quad_weighted_basis(const SplineFunction& g, double a, double u) {
  std::vector<double> out(g.basis().dimension(), 0.0);
  if (u < a) return out;
  check_quadrature_range(g, a, u);
  for_each_piece(g.basis(), a, u,
                 [&](double lo, double hi) { integrate_weighted_piece(g, lo, hi, out); });
  return out;
}

HazardIntegrator::HazardIntegrator(const SplineFunction& loghaz) : g_(loghaz) {
  const auto& basis = g_.basis();
  const auto& bp = basis.breakpoints();
  const std::size_t dim = basis.dimension();
  span_start_total_.assign(bp.size(), 0.0);
  span_start_weighted_.assign(bp.size(), std::vector<double>(dim, 0.0));
  for (std::size_t s = 0; s + 1 < bp.size(); ++s) {
    span_start_total_[s + 1] = span_start_total_[s] + integrate_exp_piece(g_, bp[s], bp[s + 1]);
    span_start_weighted_[s + 1] = span_start_weighted_[s];
    integrate_weighted_piece(g_, bp[s], bp[s + 1], span_start_weighted_[s + 1]);
  }
}

double HazardIntegrator::cumulative(double u) const {
  const auto& basis = g_.basis();
  if (u <= basis.lower()) return 0.0;
  u = std::min(u, basis.upper());
  const std::size_t span = basis.span_of(u);
  const double start = basis.breakpoints()[span];
  double total = span_start_total_[span];
  if (u > start) total += integrate_exp_piece(g_, start, u);
  return total;
}

void HazardIntegrator::add_cumulative_weighted(double u, std::span<double> out) const {
  const auto& basis = g_.basis();
  if (u <= basis.lower()) return;
  u = std::min(u, basis.upper());
  const std::size_t span = basis.span_of(u);
  const double start = basis.breakpoints()[span];
  const auto& base = span_start_weighted_[span];
  for (std::size_t k = 0; k < base.size(); ++k) out[k] += base[k];
  if (u > start) integrate_weighted_piece(g_, start, u, out);
}

}  // namespace faft
