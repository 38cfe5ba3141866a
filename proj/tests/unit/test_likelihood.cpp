#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "faft/error.hpp"
#include "faft/likelihood.hpp"
#include "faft/simulation.hpp"
#include "test_support.hpp"

using namespace faft;
using faft::testing::fd_gradient;
using faft::testing::random_instance;
using faft::testing::simpson_split;

namespace {

FunctionalCovariate constant_z(double c) { return FunctionalCovariate::grid({0.0, 1.0}, {c, c}); }

SieveParameters constant_g_params(std::vector<double> alpha, double c, double a, double b) {
  const SplineBasis beta_basis(KnotSequence(0.0, 1.0, {}, 2));
  const SplineBasis g_basis(KnotSequence(a, b, {0.5 * (a + b)}, 2));
  return {std::move(alpha), SplineFunction(beta_basis, {0.0, 0.0}),
          SplineFunction(g_basis, std::vector<double>(g_basis.dimension(), c))};
}

SurvivalDataset single(double time, bool event) {
  return SurvivalDataset({SurvivalRecord{time, event, {0.0}, constant_z(0.0)}});
}

}  // namespace

TEST_SUITE("likelihood") {
  TEST_CASE("mu examples") {
    const SplineBasis beta_basis(KnotSequence(0.0, 1.0, {0.5}, 2));
    const SplineBasis g_basis(KnotSequence(-1.0, 1.0, {}, 2));
    SieveParameters params{{1.0, 1.0}, SplineFunction(beta_basis, {0.0, 0.0, 0.0}), SplineFunction(g_basis, {0.0, 0.0})};
    const SurvivalRecord rec{0.0, true, {1.0, 0.0}, constant_z(1.0)};
    CHECK(mu(rec, params) == doctest::Approx(1.0).epsilon(1e-15));

    params.alpha = {0.0, 0.0};
    params.beta.coefficients() = {1.0, 1.0, 1.0};
    CHECK(mu(rec, params) == doctest::Approx(1.0).epsilon(1e-14));

    params.alpha = {1.0};
    CHECK_THROWS_AS(mu(rec, params), StructureError);
  }

  TEST_CASE("grid inner products match a dense oracle") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> normal;
    const SplineBasis basis(KnotSequence(0.0, 1.0, {0.3, 0.55, 0.8}, 4));
    std::vector<double> pts{0.0, 0.1, 0.25, 0.4, 0.5, 0.65, 0.7, 0.9, 1.0};
    std::vector<double> vals(pts.size());
    for (double& v : vals) v = normal(rng);
    const auto z = FunctionalCovariate::grid(pts, vals);
    const auto w = z.inner_products(basis);
    std::vector<double> breaks = pts;
    breaks.insert(breaks.end(), basis.breakpoints().begin(), basis.breakpoints().end());
    for (std::size_t k = 0; k < basis.dimension(); ++k) {
      const double want = simpson_split(
          [&](double s) { return basis.evaluate(s)[k] * z.value(s); }, 0.0, 1.0, breaks, 1e-14);
      CHECK(std::abs(w[k] - want) < 1e-12);
    }
  }

  TEST_CASE("log-likelihood closed forms for one record") {
    const double a = -1.0;
    const double b = 2.0;
    const double c = 0.3;
    const auto params = constant_g_params({0.0}, c, a, b);
    const double r1 = 0.8;
    CHECK(log_likelihood(single(r1, true), params) == doctest::Approx(c - std::exp(c) * (r1 - a)).epsilon(1e-13));
    CHECK(log_likelihood(single(r1, false), params) == doctest::Approx(-std::exp(c) * (r1 - a)).epsilon(1e-13));
    // censored beyond b: exposure capped at b
    CHECK(log_likelihood(single(3.5, false), params) == doctest::Approx(-std::exp(c) * (b - a)).epsilon(1e-13));
    // censored below a: no exposure
    CHECK(log_likelihood(single(-4.0, false), params) == 0.0);
    // events outside the support cannot be evaluated
    try {
      (void)log_likelihood(single(3.5, true), params);
      FAIL("expected SupportViolation");
    } catch (const SupportViolation& e) {
      CHECK(e.report().above == 1);
      CHECK(e.report().events_outside == 1);
      REQUIRE(e.report().residuals.size() == 1);
      CHECK(e.report().residuals[0] == doctest::Approx(3.5));
    }
    CHECK_THROWS_AS(log_likelihood(single(-1.5, true), params), SupportViolation);
    // an event exactly at b is accepted
    CHECK_NOTHROW((void)log_likelihood(single(b, true), params));
  }

  TEST_CASE("log-likelihood matches a dense-quadrature oracle") {
    std::mt19937_64 rng(17);
    const SplineBasis beta_basis(KnotSequence(0.0, 1.0, {}, 4));
    const SplineBasis g_basis(KnotSequence(-2.0, 2.0, {-0.7, 0.4, 1.1}, 4));
    auto inst = random_instance(rng, 20, beta_basis, g_basis);
    const auto& p = inst.params;
    double total = 0.0;
    for (std::size_t i = 0; i < inst.data.size(); ++i) {
      const auto& rec = inst.data[i];
      std::vector<double> breaks = rec.z.grid_points();
      const double fz = simpson_split([&](double s) { return p.beta(s) * rec.z.value(s); }, 0.0, 1.0, breaks, 1e-14);
      double r = rec.time - fz;
      for (std::size_t j = 0; j < rec.x.size(); ++j) r -= p.alpha[j] * rec.x[j];
      const double exposure =
          simpson_split([&](double t) { return std::exp(p.loghaz(t)); }, -2.0, std::min(r, 2.0), g_basis.breakpoints());
      total += (rec.event ? p.loghaz(r) : 0.0) - exposure;
    }
    const double oracle = total / static_cast<double>(inst.data.size());
    CHECK(std::abs(log_likelihood(inst.data, p) - oracle) < 1e-8);
  }

  TEST_CASE("analytic gradient matches central differences") {
    std::mt19937_64 rng(23);
    const SplineBasis beta_basis(KnotSequence(0.0, 1.0, {}, 4));
    const SplineBasis g_basis(KnotSequence(-2.0, 2.0, {-0.5, 0.5}, 4));
    for (int trial = 0; trial < 10; ++trial) {
      auto inst = random_instance(rng, 30, beta_basis, g_basis);
      const LikelihoodModel model(inst.data, beta_basis);
      const auto x = inst.params.pack();
      const auto analytic = model.gradient(inst.params);
      const auto fd = fd_gradient([&](const std::vector<double>& v) { return model.log_likelihood(inst.params.unpacked(v)); },
                                  x, 1e-6);
      for (std::size_t j = 0; j < x.size(); ++j) {
        CHECK(std::abs(analytic[j] - fd[j]) <= std::max(1e-5 * std::abs(fd[j]), 1e-8));
      }
    }
  }

  TEST_CASE("gradient examples") {
    const double a = -3.0;
    const double b = 3.0;
    const double c = -0.4;
    std::vector<SurvivalRecord> recs;
    const std::vector<double> xs{0.5, -1.2, 2.0, 0.1};
    const std::vector<double> ys{0.3, -0.9, 1.7, 2.5};
    for (std::size_t i = 0; i < xs.size(); ++i) recs.push_back({ys[i], false, {xs[i]}, constant_z(0.0)});
    const SurvivalDataset data(recs);
    const auto params = constant_g_params({0.2}, c, a, b);
    const auto grad = gradient(data, params);
    double want = 0.0;
    for (double x : xs) want += std::exp(c) * x;
    want /= static_cast<double>(xs.size());
    CHECK(grad[0] == doctest::Approx(want).epsilon(1e-12));

    std::mt19937_64 rng(29);
    const SplineBasis beta_basis(KnotSequence(0.0, 1.0, {}, 4));
    const SplineBasis g_basis(KnotSequence(-2.0, 2.0, {-0.5, 0.5}, 4));
    auto inst = random_instance(rng, 25, beta_basis, g_basis);
    const LikelihoodModel model(inst.data, beta_basis);
    const auto g = model.gradient(inst.params);
    const std::size_t offset = inst.params.alpha.size() + beta_basis.dimension();
    const double block_sum = std::accumulate(g.begin() + static_cast<long>(offset), g.end(), 0.0);
    const auto r = model.residuals(inst.params);
    double expected = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      expected += (inst.data[i].event ? 1.0 : 0.0) - quad_exp_spline(inst.params.loghaz, -2.0, r[i]);
    }
    expected /= static_cast<double>(r.size());
    CHECK(block_sum == doctest::Approx(expected).epsilon(1e-12));

    // restricting to the g block leaves it unchanged
    const auto only_g = model.gradient(inst.params, GradientBlocks{false, false, true});
    for (std::size_t j = offset; j < g.size(); ++j) CHECK(only_g[j] == doctest::Approx(g[j]).epsilon(1e-14));
    for (std::size_t j = 0; j < offset; ++j) CHECK(only_g[j] == 0.0);
  }

  TEST_CASE("order-1 g: slope blocks need a single constant piece") {
    const SplineBasis beta_basis(KnotSequence(0.0, 1.0, {}, 1));
    const SurvivalDataset data({SurvivalRecord{0.5, true, {1.0}, constant_z(1.0)}});
    SieveParameters constant{{0.0}, SplineFunction(beta_basis, {0.0}),
                             SplineFunction(SplineBasis(KnotSequence(-1.0, 1.0, {}, 1)), {0.2})};
    const auto g = gradient(data, constant);
    CHECK(g[0] == doctest::Approx(std::exp(0.2)));
    SieveParameters stepped{{0.0}, SplineFunction(beta_basis, {0.0}),
                            SplineFunction(SplineBasis(KnotSequence(-1.0, 1.0, {0.0}, 1)), {0.2, 0.1})};
    CHECK_THROWS_AS(gradient(data, stepped), UnsupportedOperation);
  }

  TEST_CASE("residual report") {
    std::mt19937_64 rng(31);
    const SplineBasis beta_basis(KnotSequence(0.0, 1.0, {}, 2));
    const SplineBasis g_basis(KnotSequence(-2.0, 2.0, {}, 2));
    auto inst = random_instance(rng, 10, beta_basis, g_basis);
    auto zero = inst.params;
    for (double& v : zero.alpha) v = 0.0;
    for (double& v : zero.beta.coefficients()) v = 0.0;
    const auto rep = residual_report(inst.data, zero);
    for (std::size_t i = 0; i < inst.data.size(); ++i) CHECK(rep.residuals[i] == inst.data[i].time);

    auto shifted = inst.params;
    const std::vector<double> delta{0.3, -0.2};
    for (std::size_t j = 0; j < 2; ++j) shifted.alpha[j] += delta[j];
    const auto base = residual_report(inst.data, inst.params);
    const auto moved = residual_report(inst.data, shifted);
    for (std::size_t i = 0; i < inst.data.size(); ++i) {
      const double expect = base.residuals[i] - (inst.data[i].x[0] * delta[0] + inst.data[i].x[1] * delta[1]);
      CHECK(moved.residuals[i] == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(base.above == 0);
    CHECK(base.below == 0);

    auto far = inst.params;
    far.alpha[0] += 100.0;
    const auto out = residual_report(inst.data, far);
    CHECK(out.above + out.below > 0);
  }

  TEST_CASE("shift equivariance") {
    std::mt19937_64 rng(37);
    const SplineBasis beta_basis(KnotSequence(0.0, 1.0, {}, 3));
    const SplineBasis g_basis(KnotSequence(-2.0, 2.0, {0.0}, 3));
    auto inst = random_instance(rng, 15, beta_basis, g_basis);
    const double delta = 0.37;
    std::vector<SurvivalRecord> moved = inst.data.records();
    for (auto& rec : moved) rec.time += rec.x[0] * delta;
    auto params = inst.params;
    params.alpha[0] += delta;
    CHECK(log_likelihood(SurvivalDataset(moved), params) ==
          doctest::Approx(log_likelihood(inst.data, inst.params)).epsilon(1e-12));
  }

  TEST_CASE("censored monotonicity in every g coefficient") {
    std::mt19937_64 rng(41);
    const SplineBasis beta_basis(KnotSequence(0.0, 1.0, {}, 2));
    const SplineBasis g_basis(KnotSequence(-2.0, 2.0, {-1.0, 0.0, 1.0}, 3));
    auto inst = random_instance(rng, 40, beta_basis, g_basis, 2, 0.0);
    const double base = log_likelihood(inst.data, inst.params);
    const std::size_t offset = inst.params.alpha.size() + beta_basis.dimension();
    auto x = inst.params.pack();
    for (std::size_t j = offset; j < x.size(); ++j) {
      auto y = x;
      y[j] += 0.1;
      CHECK(log_likelihood(inst.data, inst.params.unpacked(y)) < base);
    }
  }

  TEST_CASE("packing round trip and size checks") {
    std::mt19937_64 rng(43);
    const SplineBasis beta_basis(KnotSequence(0.0, 1.0, {0.5}, 2));
    const SplineBasis g_basis(KnotSequence(-1.0, 1.0, {}, 3));
    auto inst = random_instance(rng, 5, beta_basis, g_basis);
    const auto x = inst.params.pack();
    CHECK(x.size() == inst.params.packed_size());
    CHECK(inst.params.unpacked(x).pack() == x);
    std::vector<double> short_x(x.begin(), x.end() - 1);
    CHECK_THROWS_AS(inst.params.unpacked(short_x), StructureError);
  }
}
