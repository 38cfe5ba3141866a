#include "faft/inference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include <fmt/format.h>

#include "faft/error.hpp"
#include "faft/quadrature.hpp"

namespace faft {

namespace {

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Eigen::MatrixXd observed_hessian(const LikelihoodModel& model, const SieveParameters& params) {
  const std::vector<double> x = params.pack();
  const auto dim = static_cast<Eigen::Index>(x.size());
  const Eigen::VectorXd g0 = to_eigen(model.gradient(params));
  Eigen::MatrixXd h(dim, dim);
  std::optional<Eigen::MatrixXd> exact;
  auto exact_column = [&](Eigen::Index j) -> Eigen::VectorXd {
    if (!exact) exact = analytic_hessian(model, params);
    return exact->col(j);
  };
  std::vector<double> xp = x;
  for (Eigen::Index j = 0; j < dim; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const double step = 1e-5 * std::max(1.0, std::abs(x[ju]));
    // a stencil point may push an event residual past the support edge
    auto gradient_at = [&](double value) -> std::optional<Eigen::VectorXd> {
      xp[ju] = value;
      std::optional<Eigen::VectorXd> out;
      try {
        out = to_eigen(model.gradient(params.unpacked(xp)));
      } catch (const SupportViolation&) {
      }
      xp[ju] = x[ju];
      return out;
    };
    const auto gp = gradient_at(x[ju] + step);
    const auto gm = gradient_at(x[ju] - step);
    if (!gp || !gm) {
      h.col(j) = exact_column(j);
      continue;
    }
    // The gradient of a low-order g jumps where a residual crosses a knot. A
    // stencil straddling such a jump is replaced by the almost-everywhere
    // second derivative, which both one-sided limits share.
    const Eigen::VectorXd forward = (*gp - g0) / step;
    const Eigen::VectorXd backward = (g0 - *gm) / step;
    const double scale = std::max({forward.cwiseAbs().maxCoeff(), backward.cwiseAbs().maxCoeff(), 1e-300});
    if ((forward - backward).cwiseAbs().maxCoeff() <= 1e-2 * scale + 1e-8) {
      h.col(j) = (*gp - *gm) / (2.0 * step);
    } else {
      h.col(j) = exact_column(j);
    }
  }
  return 0.5 * (h + h.transpose());
}

Eigen::MatrixXd observed_hessian(const SurvivalDataset& data, const SieveParameters& params) {
  return observed_hessian(LikelihoodModel(data, params.beta.basis()), params);
}

Eigen::MatrixXd analytic_hessian(const LikelihoodModel& model, const SieveParameters& params) {
  const auto r = model.residuals(params);
  (void)model.log_likelihood(params);  // raises SupportViolation when needed
  const double a = params.support_lower();
  const double b = params.support_upper();
  const std::size_t p = params.alpha.size();
  const std::size_t qb = params.beta.coefficients().size();
  const std::size_t qg = params.loghaz.coefficients().size();
  const auto lin = static_cast<Eigen::Index>(p + qb);
  const auto dim = static_cast<Eigen::Index>(p + qb + qg);
  const auto& gbasis = params.loghaz.basis();
  const SplineFunction dg = params.loghaz.derivative();
  const bool has_second = gbasis.order() >= 3;
  const SplineFunction d2g = has_second ? dg.derivative() : dg;
  const SplineFunction& g = params.loghaz;

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd u(lin);
  std::vector<double> local(static_cast<std::size_t>(gbasis.order()));
  std::vector<double> dlocal(static_cast<std::size_t>(gbasis.order()));
  const std::size_t order = static_cast<std::size_t>(gbasis.order());
  const auto& t = gbasis.extended_knots();
  const SplineBasis lower_basis(KnotSequence(gbasis.lower(), gbasis.upper(), gbasis.knots().interior(),
                                             static_cast<int>(order) - 1));
  std::vector<double> low(order - 1);

  // g-g block: -int_a^{min(r,b)} exp(g) B_k B_l, integrated span by span.
  auto add_gg = [&](double upper_limit) {
    const auto& bp = gbasis.breakpoints();
    for (std::size_t s = 0; s + 1 < bp.size() && bp[s] < upper_limit; ++s) {
      const double lo = bp[s];
      const double hi = std::min(bp[s + 1], upper_limit);
      for_each_gl7_node(lo, hi, kQuadraturePanels, [&](double node, double weight) {
        const std::size_t first = gbasis.evaluate_nonzero_clamped(node, local);
        const double w = weight * std::exp(g.value_clamped(node));
        for (std::size_t k = 0; k < local.size(); ++k) {
          for (std::size_t l = 0; l < local.size(); ++l) {
            h(lin + static_cast<Eigen::Index>(first + k), lin + static_cast<Eigen::Index>(first + l)) -=
                w * local[k] * local[l];
          }
        }
      });
    }
  };

  const auto& xd = model.scalar_design();
  const auto& wd = model.functional_design();
  for (std::size_t i = 0; i < r.size(); ++i) {
    const bool event = model.data()[i].event;
    if (r[i] < a) continue;
    add_gg(std::min(r[i], b));
    if (r[i] > b) continue;
    const auto row = static_cast<Eigen::Index>(i);
    u.head(static_cast<Eigen::Index>(p)) = xd.row(row).transpose();
    u.tail(static_cast<Eigen::Index>(qb)) = wd.row(row).transpose();
    const double eg = std::exp(g(r[i]));
    double curv = eg * dg(r[i]);
    if (event && has_second) curv -= d2g(r[i]);
    h.topLeftCorner(lin, lin) -= curv * (u * u.transpose());

    // cross block: (exp(g) B_k(r) - Delta B_k'(r)) u, where
    // B_k' = (l-1) [N_{k-1} / (t_{k+l-1} - t_k) - N_k / (t_{k+l} - t_{k+1})] with N of order l-1.
    const std::size_t first = gbasis.evaluate_nonzero(r[i], local);
    std::fill(dlocal.begin(), dlocal.end(), 0.0);
    if (event) {
      const std::size_t lfirst = lower_basis.evaluate_nonzero(r[i], low);
      auto low_value = [&](std::size_t j) {
        return (j >= lfirst && j < lfirst + low.size()) ? low[j - lfirst] : 0.0;
      };
      for (std::size_t k = 0; k < local.size(); ++k) {
        const std::size_t idx = first + k;
        double d = 0.0;
        if (idx >= 1) d += low_value(idx - 1) / (t[idx + order - 1] - t[idx]);
        if (idx + 1 < gbasis.dimension()) d -= low_value(idx) / (t[idx + order] - t[idx + 1]);
        dlocal[k] = static_cast<double>(order - 1) * d;
      }
    }
    for (std::size_t k = 0; k < local.size(); ++k) {
      const double c = eg * local[k] - dlocal[k];
      h.block(0, lin + static_cast<Eigen::Index>(first + k), lin, 1) += c * u;
    }
  }
  // mirror the cross block
  h.bottomLeftCorner(static_cast<Eigen::Index>(qg), lin) = h.topRightCorner(lin, static_cast<Eigen::Index>(qg)).transpose();
  return h / static_cast<double>(r.size());
}

Eigen::MatrixXd covariance_from_hessian(const Eigen::MatrixXd& hessian, std::size_t n) {
  const Eigen::MatrixXd info = -0.5 * (hessian + hessian.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
  if (eig.info() != Eigen::Success) throw SingularInformation("eigen-decomposition of the information failed", 0.0);
  const double smallest = eig.eigenvalues().minCoeff();
  if (!(smallest > 0.0)) {
    throw SingularInformation(fmt::format("negated Hessian is not positive definite (smallest eigenvalue {})", smallest),
                              smallest);
  }
  const Eigen::VectorXd inv = eig.eigenvalues().cwiseInverse();
  Eigen::MatrixXd cov = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  return cov / static_cast<double>(n);
}

std::vector<double> standard_errors(const Eigen::MatrixXd& covariance, std::size_t first, std::size_t count) {
  std::vector<double> se(count);
  for (std::size_t j = 0; j < count; ++j) {
    const auto k = static_cast<Eigen::Index>(first + j);
    se[j] = std::sqrt(std::max(0.0, covariance(k, k)));
  }
  return se;
}

std::vector<double> alpha_standard_errors(const FitResult& fit) {
  const Eigen::MatrixXd cov = fit.covariance.size() > 0 ? fit.covariance : covariance_from_hessian(fit.hessian, fit.n);
  return standard_errors(cov, 0, fit.params.alpha.size());
}

std::vector<double> uniform_grid(double lo, double hi, std::size_t points) {
  std::vector<double> grid(points);
  if (points == 1) {
    grid[0] = lo;
    return grid;
  }
  for (std::size_t k = 0; k < points; ++k) {
    grid[k] = k + 1 == points ? hi : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
  }
  return grid;
}

PointwiseBand beta_pointwise_band(const SplineFunction& beta, const Eigen::MatrixXd& beta_covariance,
                                  const std::vector<double>& grid) {
  const auto q = static_cast<Eigen::Index>(beta.coefficients().size());
  if (beta_covariance.rows() != q || beta_covariance.cols() != q) {
    throw StructureError("beta covariance block does not match the basis dimension");
  }
  PointwiseBand band;
  band.grid = grid;
  for (double s : grid) {
    const auto bvec = beta.basis().evaluate(s);
    const Eigen::VectorXd bv = to_eigen(bvec);
    const double var = std::max(0.0, bv.dot(beta_covariance * bv));
    const double est = beta(s);
    const double half = kNormalQuantile975 * std::sqrt(var);
    band.estimate.push_back(est);
    band.lower.push_back(est - half);
    band.upper.push_back(est + half);
  }
  return band;
}

PointwiseBand beta_pointwise_band(const FitResult& fit, const std::vector<double>& grid) {
  if (!fit.has_inference()) throw SingularInformation("fit carries no covariance: " + fit.inference_error, 0.0);
  const auto p = static_cast<Eigen::Index>(fit.params.alpha.size());
  const auto q = static_cast<Eigen::Index>(fit.params.beta.coefficients().size());
  return beta_pointwise_band(fit.params.beta, fit.covariance.block(p, p, q, q), grid);
}

double beta_c_norm(const std::function<double(double)>& beta, const SurvivalDataset& data) {
  constexpr std::size_t kGrid = 101;
  const auto grid = uniform_grid(0.0, 1.0, kGrid);
  std::vector<double> bvals(kGrid);
  for (std::size_t k = 0; k < kGrid; ++k) bvals[k] = beta(grid[k]);
  std::vector<double> w(kGrid, 1.0 / (kGrid - 1));
  w.front() *= 0.5;
  w.back() *= 0.5;
  // Weighted projection of each Z_i onto beta: sum_i (int beta Z_i)^2 / n
  double total = 0.0;
  for (const auto& rec : data.records()) {
    double proj = 0.0;
    for (std::size_t k = 0; k < kGrid; ++k) proj += w[k] * bvals[k] * rec.z.value(grid[k]);
    total += proj * proj;
  }
  return total / static_cast<double>(data.size());
}

namespace {

double trapezoid_squared_diff(const std::function<double(double)>& f, const std::function<double(double)>& g, double lo,
                              double hi) {
  constexpr std::size_t kPoints = 2001;
  const auto grid = uniform_grid(lo, hi, kPoints);
  const double h = (hi - lo) / (kPoints - 1);
  double sum = 0.0;
  for (std::size_t k = 0; k < kPoints; ++k) {
    const double d = f(grid[k]) - g(grid[k]);
    const double w = (k == 0 || k + 1 == kPoints) ? 0.5 : 1.0;
    sum += w * d * d;
  }
  return sum * h;
}

}  // namespace

double mse_beta(const SplineFunction& fitted, const std::function<double(double)>& truth) {
  return trapezoid_squared_diff([&](double s) { return fitted(s); }, truth, 0.0, 1.0);
}

MseG mse_g(const SplineFunction& fitted, const std::function<double(double)>& truth) {
  MseG out;
  const double lo = std::max(-1.5, fitted.basis().lower());
  const double hi = std::min(1.5, fitted.basis().upper());
  out.truncated = lo > -1.5 || hi < 1.5;
  if (hi > lo) out.value = trapezoid_squared_diff([&](double t) { return fitted(t); }, truth, lo, hi);
  return out;
}

}  // namespace faft
