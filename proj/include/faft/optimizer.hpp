#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace faft {

struct OptimizerConfig {
  double gradient_tolerance = 1e-6;  ///< sup-norm
  double step_tolerance = 1e-9;      ///< sup-norm of the accepted step
  int max_iterations = 500;
  double sufficient_increase = 1e-4;
  double curvature = 0.9;
  int max_restarts = 3;

  /// Throws ConfigError when the invariants do not hold.
  void validate() const;
};

enum class Termination { gradient, step, max_iterations, support_violation };

std::string to_string(Termination t);
Termination termination_from_string(const std::string& s);

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double gradient_norm = 0.0;
  double step_length = 0.0;
};

struct OptimizerTrace {
  std::vector<IterationRecord> iterations;  ///< entry 0 is the starting point
  Termination reason = Termination::max_iterations;
  int restarts = 0;
  int rejected_trials = 0;  ///< trial points refused by the objective (support violations)
};

struct OptimizerResult {
  std::vector<double> x;
  double value = 0.0;
  std::vector<double> gradient;
  OptimizerTrace trace;
};

using ObjectiveFn = std::function<double(std::span<const double>)>;
using GradientFn = std::function<std::vector<double>(std::span<const double>)>;

/**
 * BFGS maximization with a dense inverse-Hessian approximation and a strong-Wolfe
 * line search.
 *
 * A trial point where the objective throws SupportViolation is treated as
 * infeasible and the step is shortened. If no feasible ascent step exists the
 * inverse Hessian is reset (up to max_restarts) and the run then ends with
 * Termination::support_violation when rejections were the cause.
 *
 * Throws ConvergenceError when the objective or gradient is not finite at init;
 * SupportViolation at init propagates unchanged.
 */
OptimizerResult maximize(const ObjectiveFn& objective, const GradientFn& gradient, std::vector<double> init,
                         const OptimizerConfig& config = {});

}  // namespace faft
