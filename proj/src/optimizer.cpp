#include "faft/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "faft/error.hpp"
#include "faft/likelihood.hpp"

namespace faft {

void OptimizerConfig::validate() const {
  if (!(gradient_tolerance > 0.0)) throw ConfigError("gradient tolerance must be positive");
  if (!(step_tolerance > 0.0)) throw ConfigError("step tolerance must be positive");
  if (max_iterations < 0) throw ConfigError("max iterations must be non-negative");
  if (max_restarts < 0) throw ConfigError("max restarts must be non-negative");
  if (!(0.0 < sufficient_increase && sufficient_increase < curvature && curvature < 1.0)) {
    throw ConfigError(fmt::format("line search constants need 0 < {} < {} < 1", sufficient_increase, curvature));
  }
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::gradient: return "gradient";
    case Termination::step: return "step";
    case Termination::max_iterations: return "max-iter";
    case Termination::support_violation: return "support-violation";
  }
  return "unknown";
}

Termination termination_from_string(const std::string& s) {
  if (s == "gradient") return Termination::gradient;
  if (s == "step") return Termination::step;
  if (s == "max-iter") return Termination::max_iterations;
  if (s == "support-violation") return Termination::support_violation;
  throw ConfigError(fmt::format("unknown termination reason '{}'", s));
}

namespace {

using Vec = Eigen::VectorXd;

double sup_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Minimization view of the caller's maximization problem.
class Problem {
 public:
  Problem(const ObjectiveFn& f, const GradientFn& g, OptimizerTrace& trace) : f_(f), g_(g), trace_(trace) {}

  // Returns +inf for infeasible points.
  double value(const Vec& x, bool* rejected = nullptr) {
    try {
      const double v = -f_(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
      return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    } catch (const SupportViolation&) {
      ++trace_.rejected_trials;
      if (rejected) *rejected = true;
      return std::numeric_limits<double>::infinity();
    }
  }

  Vec grad(const Vec& x) {
    const auto g = g_(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    Vec out(static_cast<Eigen::Index>(g.size()));
    for (std::size_t i = 0; i < g.size(); ++i) out[static_cast<Eigen::Index>(i)] = -g[i];
    return out;
  }

 private:
  const ObjectiveFn& f_;
  const GradientFn& g_;
  OptimizerTrace& trace_;
};

struct LineSearchResult {
  bool ok = false;
  bool rejected = false;
  double step = 0.0;
  double value = 0.0;
  Vec x;
  Vec grad;
};

class StrongWolfe {
 public:
  StrongWolfe(Problem& problem, const OptimizerConfig& config) : problem_(problem), config_(config) {}

  LineSearchResult search(const Vec& x, double f0, const Vec& g0, const Vec& dir, double initial_step) {
    LineSearchResult res;
    x_ = &x;
    dir_ = &dir;
    f0_ = f0;
    d0_ = g0.dot(dir);
    if (!(d0_ < 0.0)) return res;

    double prev_step = 0.0;
    double prev_value = f0;
    double prev_slope = d0_;
    double step = initial_step;
    constexpr int kMaxBracket = 60;
    for (int i = 0; i < kMaxBracket; ++i) {
      const Vec trial = x + step * dir;
      bool rejected = false;
      const double value = problem_.value(trial, &rejected);
      res.rejected = res.rejected || rejected;
      if (!std::isfinite(value)) {
        // Infeasible: pull back towards the last good point.
        step = prev_step + 0.5 * (step - prev_step);
        if (step - prev_step < 1e-16 * std::max(1.0, prev_step)) break;
        continue;
      }
      if (value > f0 + config_.sufficient_increase * step * d0_ || (i > 0 && value >= prev_value)) {
        return zoom(prev_step, prev_value, prev_slope, step, value, res);
      }
      Vec g = problem_.grad(trial);
      const double slope = g.dot(dir);
      if (std::abs(slope) <= -config_.curvature * d0_) {
        return accept(step, value, trial, std::move(g), res);
      }
      if (slope >= 0.0) {
        return zoom(step, value, slope, prev_step, prev_value, res);
      }
      prev_step = step;
      prev_value = value;
      prev_slope = slope;
      step *= 2.0;
    }
    // Bracketing failed; fall back to the best sufficient-increase point if any.
    if (prev_step > 0.0) {
      const Vec trial = x + prev_step * dir;
      return accept(prev_step, prev_value, trial, problem_.grad(trial), res);
    }
    return res;
  }

 private:
  LineSearchResult accept(double step, double value, Vec x, Vec g, LineSearchResult& res) {
    res.ok = true;
    res.step = step;
    res.value = value;
    res.x = std::move(x);
    res.grad = std::move(g);
    return res;
  }

  LineSearchResult zoom(double lo, double f_lo, double d_lo, double hi, double f_hi, LineSearchResult& res) {
    constexpr int kMaxZoom = 60;
    for (int j = 0; j < kMaxZoom; ++j) {
      const double width = hi - lo;
      double step = lo + 0.5 * width;
      if (std::isfinite(f_hi)) {
        const double denom = 2.0 * (f_hi - f_lo - d_lo * width);
        if (denom > 0.0) {
          const double q = lo - d_lo * width * width / denom;
          const double a = std::min(lo, hi) + 0.1 * std::abs(width);
          const double b = std::max(lo, hi) - 0.1 * std::abs(width);
          if (q > a && q < b) step = q;
        }
      }
      if (std::abs(width) < 1e-16 * std::max(1.0, std::abs(lo))) break;
      const Vec trial = *x_ + step * *dir_;
      bool rejected = false;
      const double value = problem_.value(trial, &rejected);
      res.rejected = res.rejected || rejected;
      if (!std::isfinite(value) || value > f0_ + config_.sufficient_increase * step * d0_ || value >= f_lo) {
        hi = step;
        f_hi = value;
        continue;
      }
      Vec g = problem_.grad(trial);
      const double slope = g.dot(*dir_);
      if (std::abs(slope) <= -config_.curvature * d0_) {
        return accept(step, value, trial, std::move(g), res);
      }
      if (slope * (hi - lo) >= 0.0) {
        hi = lo;
        f_hi = f_lo;
      }
      lo = step;
      f_lo = value;
      d_lo = slope;
    }
    if (lo > 0.0) {
      const Vec trial = *x_ + lo * *dir_;
      return accept(lo, f_lo, trial, problem_.grad(trial), res);
    }
    return res;
  }

  Problem& problem_;
  const OptimizerConfig& config_;
  const Vec* x_ = nullptr;
  const Vec* dir_ = nullptr;
  double f0_ = 0.0;
  double d0_ = 0.0;
};

}  // namespace

OptimizerResult maximize(const ObjectiveFn& objective, const GradientFn& gradient, std::vector<double> init,
                         const OptimizerConfig& config) {
  config.validate();
  OptimizerResult result;
  OptimizerTrace& trace = result.trace;
  Problem problem(objective, gradient, trace);

  const auto n = static_cast<Eigen::Index>(init.size());
  Vec x = Eigen::Map<const Vec>(init.data(), n);

  // Support violations at the start are the caller's problem.
  const double start = objective(std::span<const double>(init));
  if (!std::isfinite(start)) throw ConvergenceError("objective is not finite at the initial point");
  double f = -start;
  Vec g = problem.grad(x);
  if (!g.allFinite()) throw ConvergenceError("gradient is not finite at the initial point");

  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  bool h_is_identity = true;
  trace.iterations.push_back({0, -f, sup_norm(g), 0.0});

  auto finish = [&](Termination reason) {
    trace.reason = reason;
    result.x.assign(x.data(), x.data() + x.size());
    result.value = -f;
    result.gradient.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) result.gradient[static_cast<std::size_t>(i)] = -g[i];
    return result;
  };

  StrongWolfe line_search(problem, config);
  for (int iter = 1;; ++iter) {
    if (sup_norm(g) < config.gradient_tolerance) return finish(Termination::gradient);
    if (iter > config.max_iterations) return finish(Termination::max_iterations);

    Vec dir = -(h * g);
    if (!(dir.dot(g) < 0.0)) {
      h.setIdentity();
      h_is_identity = true;
      dir = -g;
    }
    const double initial_step = h_is_identity ? std::min(1.0, 1.0 / std::max(sup_norm(g), 1e-12)) : 1.0;
    LineSearchResult ls = line_search.search(x, f, g, dir, initial_step);
    if (!ls.ok) {
      if (!h_is_identity && trace.restarts < config.max_restarts) {
        ++trace.restarts;
        h.setIdentity();
        h_is_identity = true;
        continue;
      }
      return finish(ls.rejected ? Termination::support_violation : Termination::step);
    }

    const Vec s = ls.x - x;
    const Vec y = ls.grad - g;
    x = ls.x;
    f = ls.value;
    g = ls.grad;
    trace.iterations.push_back({iter, -f, sup_norm(g), ls.step});

    if (sup_norm(s) < config.step_tolerance) {
      if (sup_norm(g) < config.gradient_tolerance) return finish(Termination::gradient);
      // a vanishing step forced by infeasible trials means the iterate is pinned at the support edge
      return finish(ls.rejected ? Termination::support_violation : Termination::step);
    }

    const double ys = y.dot(s);
    if (ys > 1e-12 * s.norm() * y.norm()) {
      if (h_is_identity) h *= ys / y.squaredNorm();
      const double rho = 1.0 / ys;
      const Vec hy = h * y;
      // H+ = (I - rho s y')H(I - rho y s') + rho s s'
      h += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
      h_is_identity = false;
    }
  }
}

}  // namespace faft
