#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "faft/error.hpp"
#include "faft/estimation.hpp"
#include "faft/inference.hpp"
#include "faft/simulation.hpp"
#include "test_support.hpp"

using namespace faft;
using faft::testing::random_instance;

namespace {

struct ConstantHazardCase {
  SurvivalDataset data;
  SieveParameters params;  // at the exponential MLE
  double events = 0.0;
  double exposure = 0.0;
};

ConstantHazardCase constant_hazard_case(double event_probability) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unif(-0.5, 1.5);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution coin(event_probability);
  const double a = -1.0;
  const double b = 2.0;
  std::vector<SurvivalRecord> recs;
  double events = 0.0;
  double exposure = 0.0;
  for (int i = 0; i < 60; ++i) {
    const double y = unif(rng);
    const bool ev = coin(rng);
    events += ev ? 1.0 : 0.0;
    exposure += y - a;
    recs.push_back({y, ev, {normal(rng)}, FunctionalCovariate::grid({0.0, 1.0}, {normal(rng), normal(rng)})});
  }
  const SplineBasis beta_basis(KnotSequence(0.0, 1.0, {}, 1));
  SieveParameters params{{0.0}, SplineFunction(beta_basis, {0.0}),
                         SplineFunction(SplineBasis(KnotSequence(a, b, {}, 1)), {std::log(events / exposure)})};
  return {SurvivalDataset(recs), params, events, exposure};
}

}  // namespace

TEST_SUITE("inference") {
  TEST_CASE("constant-hazard Hessian has the closed form") {
    const auto c = constant_hazard_case(0.7);
    const auto h = observed_hessian(c.data, c.params);
    const double n = static_cast<double>(c.data.size());
    const double ec = std::exp(c.params.loghaz.coefficients()[0]);
    CHECK(h(2, 2) == doctest::Approx(-c.exposure * ec / n).epsilon(1e-6));
    CHECK((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("constant-hazard standard error is one over root events") {
    const auto c = constant_hazard_case(1.0);
    const auto h = observed_hessian(c.data, c.params);
    const Eigen::MatrixXd hcc = h.block(2, 2, 1, 1);
    const auto cov = covariance_from_hessian(hcc, c.data.size());
    const auto se = standard_errors(cov, 0, 1);
    CHECK(se[0] == doctest::Approx(1.0 / std::sqrt(c.events)).epsilon(1e-6));
  }

  TEST_CASE("observed Hessian matches second differences of the log-likelihood") {
    std::mt19937_64 rng(7);
    const SplineBasis beta_basis(KnotSequence(0.0, 1.0, {}, 4));
    const SplineBasis g_basis(KnotSequence(-2.0, 2.0, {-0.5, 0.5}, 4));
    auto inst = random_instance(rng, 40, beta_basis, g_basis);
    const LikelihoodModel model(inst.data, beta_basis);
    const auto h = observed_hessian(model, inst.params);
    const auto exact = analytic_hessian(model, inst.params);
    const auto x = inst.params.pack();
    const auto dim = x.size();
    auto f = [&](const std::vector<double>& v) { return model.log_likelihood(inst.params.unpacked(v)); };
    const double step = 1e-4;
    const double scale = h.cwiseAbs().maxCoeff();
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = i; j < dim; ++j) {
        auto at = [&](double di, double dj) {
          auto v = x;
          v[i] += di;
          v[j] += dj;
          return f(v);
        };
        const double oracle =
            (at(step, step) - at(step, -step) - at(-step, step) + at(-step, -step)) / (4.0 * step * step);
        const auto ii = static_cast<Eigen::Index>(i);
        const auto jj = static_cast<Eigen::Index>(j);
        CHECK(std::abs(h(ii, jj) - oracle) <= 1e-4 * std::max(std::abs(oracle), 1e-2 * scale));
        CHECK(std::abs(exact(ii, jj) - h(ii, jj)) <= 1e-5 * std::max(std::abs(h(ii, jj)), 1e-2 * scale));
      }
    }
  }

  TEST_CASE("covariance requires negative definite Hessian") {
    Eigen::MatrixXd h(2, 2);
    h << -2.0, 0.0, 0.0, 0.5;
    try {
      (void)covariance_from_hessian(h, 10);
      FAIL("expected SingularInformation");
    } catch (const SingularInformation& e) {
      CHECK(e.eigenvalue() == doctest::Approx(-0.5));
    }
    h << -2.0, 0.0, 0.0, -4.0;
    const auto cov = covariance_from_hessian(h, 10);
    CHECK(cov(0, 0) == doctest::Approx(1.0 / 20.0));
    CHECK(cov(1, 1) == doctest::Approx(1.0 / 40.0));
  }

  TEST_CASE("duplicating every record divides standard errors by root two") {
    ScenarioConfig sc;
    sc.n = 200;
    sc.seed = 5;
    const auto sim = generate_dataset(sc);
    std::vector<SurvivalRecord> twice = sim.data.records();
    twice.insert(twice.end(), sim.data.records().begin(), sim.data.records().end());
    const SurvivalDataset doubled(twice);
    const auto settings = SieveSettings::for_sample_size(200);
    const auto once = fit_faft(sim.data, settings);
    const auto two = fit_faft(doubled, settings);
    REQUIRE(once.has_inference());
    REQUIRE(two.has_inference());
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(two.alpha_se[j] / once.alpha_se[j] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.02));
    }
  }

  TEST_CASE("pointwise band") {
    const SplineBasis basis(KnotSequence(0.0, 1.0, {0.5}, 2));
    const SplineFunction beta(basis, {0.2, -0.4, 1.0});
    const auto grid = uniform_grid(0.0, 1.0, 11);
    const auto flat = beta_pointwise_band(beta, Eigen::MatrixXd::Zero(3, 3), grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      CHECK(flat.lower[k] == flat.estimate[k]);
      CHECK(flat.upper[k] == flat.estimate[k]);
    }
    Eigen::MatrixXd a(3, 3);
    a << 1.0, 0.2, 0.0, 0.3, 0.8, 0.1, 0.0, 0.4, 1.2;
    const Eigen::MatrixXd cov = 0.01 * a * a.transpose();
    const auto band = beta_pointwise_band(beta, cov, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const auto b = basis.evaluate(grid[k]);
      const Eigen::Map<const Eigen::VectorXd> bv(b.data(), 3);
      const double sd = std::sqrt(bv.dot(cov * bv));
      CHECK(band.estimate[k] == doctest::Approx(beta(grid[k])));
      CHECK(band.upper[k] - band.estimate[k] == doctest::Approx(kNormalQuantile975 * sd));
      CHECK(band.lower[k] <= band.estimate[k]);
      CHECK(band.estimate[k] <= band.upper[k]);
    }
  }

  TEST_CASE("C-norm") {
    const SurvivalDataset one({SurvivalRecord{0.0, false, {0.0}, FunctionalCovariate::grid({0.0, 1.0}, {1.0, 1.0})}});
    CHECK(beta_c_norm([](double) { return 0.0; }, one) == 0.0);
    CHECK(beta_c_norm([](double) { return 1.0; }, one) == doctest::Approx(1.0).epsilon(1e-12));

    // plug-in norm of beta_0 against the exact value of the same draws from the eigen-expansion
    Rng rng(2024);
    std::vector<SurvivalRecord> recs;
    double oracle = 0.0;
    const std::size_t n = 5000;
    for (std::size_t i = 0; i < n; ++i) {
      auto draw = draw_functional_covariate(rng);
      const double e = true_functional_effect(draw.u);
      oracle += e * e;
      recs.push_back({0.0, false, {0.0}, draw.z});
    }
    oracle /= static_cast<double>(n);
    const double got = beta_c_norm([](double s) { return true_beta(s); }, SurvivalDataset(recs));
    CHECK(got == doctest::Approx(oracle).epsilon(0.02));
  }

  TEST_CASE("integrated squared errors") {
    const SplineBasis basis(KnotSequence(0.0, 1.0, {0.5}, 3));
    const SplineFunction f(basis, {0.1, 0.5, -0.3, 0.2});
    CHECK(mse_beta(f, [&](double s) { return f(s); }) == 0.0);
    CHECK(mse_beta(f, [&](double s) { return f(s) + 1.0; }) == doctest::Approx(1.0).epsilon(1e-12));

    const SplineFunction g(SplineBasis(KnotSequence(-2.0, 2.0, {0.0}, 3)), {0.1, 0.5, -0.3, 0.2});
    const auto same = mse_g(g, [&](double t) { return g(t); });
    CHECK(same.value == 0.0);
    CHECK_FALSE(same.truncated);
    CHECK(mse_g(g, [&](double t) { return g(t) + 1.0; }).value == doctest::Approx(3.0).epsilon(1e-12));

    const SplineFunction narrow(SplineBasis(KnotSequence(-1.0, 1.0, {}, 2)), {0.0, 0.0});
    const auto cut = mse_g(narrow, [](double) { return 1.0; });
    CHECK(cut.truncated);
    CHECK(cut.value == doctest::Approx(2.0).epsilon(1e-12));
  }
}
