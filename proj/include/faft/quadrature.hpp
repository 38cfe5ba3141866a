#pragma once

#include <array>
#include <cstddef>

namespace faft {

/// Gauss-Legendre rule on [-1, 1].
template <std::size_t N>
struct GaussLegendreRule {
  std::array<double, N> nodes;
  std::array<double, N> weights;
};

/// Nodes and weights computed once by Newton iteration on the Legendre recurrence.
const GaussLegendreRule<7>& gauss_legendre7();

/// Integrate f over [lo, hi] with the 7-point rule.
template <class F>
double integrate_gl7(F&& f, double lo, double hi) {
  const auto& rule = gauss_legendre7();
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  double sum = 0.0;
  for (std::size_t k = 0; k < 7; ++k) {
    sum += rule.weights[k] * f(mid + half * rule.nodes[k]);
  }
  return half * sum;
}

/// Composite 7-point rule: splits [lo, hi] into `panels` equal pieces and calls
/// visit(node, weight) for every node.
template <class F>
void for_each_gl7_node(double lo, double hi, int panels, F&& visit) {
  const auto& rule = gauss_legendre7();
  const double width = (hi - lo) / static_cast<double>(panels);
  const double half = 0.5 * width;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + width * (static_cast<double>(p) + 0.5);
    for (std::size_t k = 0; k < 7; ++k) visit(mid + half * rule.nodes[k], half * rule.weights[k]);
  }
}

}  // namespace faft
