#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "faft/error.hpp"
#include "faft/simulation.hpp"
#include "test_support.hpp"

using namespace faft;
using faft::testing::simpson_refined;

namespace {

double normal_pdf(double x, double sd) {
  return std::exp(-0.5 * x * x / (sd * sd)) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

/// log(f/S) with S integrated numerically from t to a far cutoff.
double numeric_loghazard(const std::function<double(double)>& pdf, double t, double cutoff) {
  return std::log(pdf(t) / simpson_refined(pdf, t, cutoff, 1e-14));
}

}  // namespace

TEST_SUITE("simulation") {
  TEST_CASE("law names") {
    CHECK(error_law_from_string("exponential") == ErrorLaw::exponential);
    CHECK(error_law_from_string("a") == ErrorLaw::exponential);
    CHECK(error_law_from_string("gaussian-mixture") == ErrorLaw::gaussian_mixture);
    CHECK(error_law_from_string("b") == ErrorLaw::gaussian_mixture);
    CHECK(error_law_from_string("extreme-value") == ErrorLaw::extreme_value);
    CHECK(error_law_from_string("c") == ErrorLaw::extreme_value);
    CHECK(error_law_from_string("extreme-value-min") == ErrorLaw::extreme_value_min);
    CHECK_THROWS_AS(error_law_from_string("weibull"), ConfigError);
    for (auto law : {ErrorLaw::exponential, ErrorLaw::gaussian_mixture, ErrorLaw::extreme_value, ErrorLaw::extreme_value_min}) {
      CHECK(error_law_from_string(to_string(law)) == law);
    }
  }

  TEST_CASE("scenario validation") {
    ScenarioConfig sc;
    CHECK_NOTHROW(sc.validate());
    sc.censoring_rate = 1.0;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
    sc = {};
    sc.n = 0;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
    sc = {};
    sc.expansion_terms = 0;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
  }

  TEST_CASE("eigen functions and true beta") {
    CHECK(eigen_function(1, 0.37) == 1.0);
    for (int k = 1; k < 6; ++k) {
      CHECK(eigen_function(k + 1, 0.37) == doctest::Approx(std::sqrt(2.0) * std::cos(k * std::numbers::pi * 0.37)));
    }
    for (double s : {0.0, 0.21, 0.5, 0.93, 1.0}) {
      double want = 0.0;
      for (int k = 1; k <= 50; ++k) want += ((k % 2 == 0) ? 1.0 : -1.0) * std::pow(k, -1.5) * eigen_function(k, s);
      CHECK(true_beta(s) == doctest::Approx(want).epsilon(1e-13));
    }
  }

  TEST_CASE("expansion covariate degenerate draws") {
    const auto zero = expansion_covariate(std::vector<double>(50, 0.0));
    std::vector<double> first(50, 0.0);
    first[0] = 1.0;
    const auto one = expansion_covariate(first);
    for (double s = 0.0; s <= 1.0; s += 0.1) {
      CHECK(zero.value(s) == 0.0);
      CHECK(one.value(s) == doctest::Approx(1.0).epsilon(1e-14));
    }
  }

  TEST_CASE("functional effect matches a million-point trapezoid") {
    Rng rng(8);
    const auto draw = draw_functional_covariate(rng);
    const std::size_t m = 1000000;
    const double h = 1.0 / static_cast<double>(m);
    double sum = 0.0;
    for (std::size_t j = 0; j <= m; ++j) {
      const double s = static_cast<double>(j) * h;
      const double w = (j == 0 || j == m) ? 0.5 : 1.0;
      sum += w * true_beta(s) * draw.z.value(s);
    }
    CHECK(std::abs(true_functional_effect(draw.u) - sum * h) < 1e-6);
  }

  TEST_CASE("covariate mean is zero") {
    Rng rng(10);
    double mean = 0.0;
    for (int i = 0; i < 10000; ++i) mean += draw_functional_covariate(rng).z.value(0.3);
    CHECK(std::abs(mean / 10000.0) < 0.02);
  }

  TEST_CASE("scalar covariates") {
    Rng rng(12);
    const int n = 100000;
    double m1 = 0.0;
    double s2 = 0.0;
    double m2 = 0.0;
    bool bounded = true;
    bool binary = true;
    for (int i = 0; i < n; ++i) {
      const auto [x1, x2] = draw_scalars(rng);
      binary = binary && (x1 == 0.0 || x1 == 1.0);
      bounded = bounded && std::abs(x2) <= 2.0;
      m1 += x1;
      m2 += x2;
      s2 += x2 * x2;
    }
    CHECK(binary);
    CHECK(bounded);
    CHECK(std::abs(m1 / n - 0.5) < 0.005);
    const double var = s2 / n - (m2 / n) * (m2 / n);
    const double sd = std::sqrt(0.5);
    const double mass = simpson_refined([&](double x) { return normal_pdf(x, sd); }, -2.0, 2.0);
    const double truth = simpson_refined([&](double x) { return x * x * normal_pdf(x, sd); }, -2.0, 2.0) / mass;
    CHECK(std::abs(var - truth) < 0.01);
  }

  TEST_CASE("error laws and their log-hazards") {
    for (double t : {-2.0, -0.3, 0.0, 0.7, 1.5}) {
      CHECK(true_loghazard(ErrorLaw::exponential, t) == t);
      CHECK(true_loghazard(ErrorLaw::extreme_value_min, t) == doctest::Approx(t).epsilon(1e-14));
    }
    const double f0 = 0.5 * normal_pdf(0.0, 1.0) + 0.5 * normal_pdf(0.0, 3.0);
    CHECK(true_loghazard(ErrorLaw::gaussian_mixture, 0.0) == doctest::Approx(std::log(f0 / 0.5)).epsilon(1e-12));
    auto mixture = [](double x) { return 0.5 * normal_pdf(x, 1.0) + 0.5 * normal_pdf(x, 3.0); };
    auto gumbel = [](double x) { return std::exp(-x - std::exp(-x)); };
    for (double t : {-1.0, 0.7, 2.0}) {
      CHECK(true_loghazard(ErrorLaw::gaussian_mixture, t) == doctest::Approx(numeric_loghazard(mixture, t, 60.0)).epsilon(1e-8));
      CHECK(true_loghazard(ErrorLaw::extreme_value, t) == doctest::Approx(numeric_loghazard(gumbel, t, 60.0)).epsilon(1e-8));
    }

    Rng rng(14);
    double mean = 0.0;
    for (int i = 0; i < 100000; ++i) mean += std::exp(draw_error(ErrorLaw::exponential, rng));
    CHECK(std::abs(mean / 100000.0 - 1.0) < 0.02);
  }

  TEST_CASE("Nelson-Aalen of exponential-law errors tracks e^t") {
    Rng rng(16);
    std::vector<double> eps(100000);
    for (double& e : eps) e = draw_error(ErrorLaw::exponential, rng);
    std::sort(eps.begin(), eps.end());
    for (double t : {-2.0, -1.0, 0.0, 1.0}) {
      double cumulative = 0.0;
      for (std::size_t i = 0; i < eps.size() && eps[i] <= t; ++i) cumulative += 1.0 / static_cast<double>(eps.size() - i);
      CHECK(cumulative == doctest::Approx(std::exp(t)).epsilon(0.05));
    }
  }

  TEST_CASE("censoring calibration") {
    const auto c25 = calibrate_censoring(ErrorLaw::exponential, 0.25);
    CHECK(std::abs(c25.achieved_rate - 0.25) <= 0.005);
    const double fresh = censoring_rate_for_tau(ErrorLaw::exponential, c25.tau, 777, 100000);
    CHECK(fresh >= 0.245);
    CHECK(fresh <= 0.255);
    const auto c40 = calibrate_censoring(ErrorLaw::exponential, 0.40);
    CHECK(c40.tau < c25.tau);

    double previous = 1.0;
    for (double tau : {1.0, 3.0, 10.0, 30.0, 100.0}) {
      const double rate = censoring_rate_for_tau(ErrorLaw::exponential, tau, 20240607, 100000);
      CHECK(rate < previous);
      previous = rate;
    }
  }

  TEST_CASE("generated datasets") {
    ScenarioConfig sc;
    sc.n = 400;
    sc.seed = 1;
    const auto first = generate_dataset(sc);
    const auto second = generate_dataset(sc);
    REQUIRE(first.data.size() == 400);
    for (std::size_t i = 0; i < 400; ++i) {
      CHECK(first.raw[i].time == second.raw[i].time);
      CHECK(first.raw[i].event == second.raw[i].event);
      CHECK(first.raw[i].x == second.raw[i].x);
    }
    CHECK(first.data.fingerprint() == second.data.fingerprint());
    CHECK(std::abs(first.achieved_censoring - 0.25) <= 0.03);

    for (std::size_t j = 0; j < 2; ++j) {
      double m = 0.0;
      for (const auto& rec : first.data.records()) m += rec.x[j];
      CHECK(std::abs(m / 400.0) < 1e-10);
    }
    double xbar = 0.0;
    std::vector<double> ubar(50, 0.0);
    for (std::size_t i = 0; i < 400; ++i) {
      xbar += first.raw[i].x[0] + first.raw[i].x[1];
      for (std::size_t k = 0; k < 50; ++k) ubar[k] += first.expansion_u[i][k];
    }
    for (double& u : ubar) u /= 400.0;
    CHECK(first.truth.centering_shift == doctest::Approx(xbar / 400.0 + true_functional_effect(ubar)).epsilon(1e-12));
  }

  TEST_CASE("degenerate noise reproduces the linear predictor") {
    ScenarioConfig sc;
    sc.n = 50;
    sc.seed = 4;
    const auto sim = generate_dataset(sc, 1.0, {true, true});
    for (std::size_t i = 0; i < sim.raw.size(); ++i) {
      const auto& rec = sim.raw[i];
      CHECK(rec.event);
      CHECK(rec.time == doctest::Approx(rec.x[0] + rec.x[1] + true_functional_effect(sim.expansion_u[i])).epsilon(1e-14));
    }
  }
}
