// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "faft/archive.hpp"
#include "faft/cli.hpp"
#include "faft/estimation.hpp"
#include "faft/harness.hpp"
#include "faft/likelihood.hpp"
#include "faft/optimizer.hpp"
#include "faft/simulation.hpp"
#include "test_support.hpp"

using namespace faft;
using faft::testing::cox_de_boor_all;
using faft::testing::fd_gradient;
using faft::testing::random_instance;
using faft::testing::simpson_split;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int number, const std::string& title, const Verdict& v, double seconds) {
  if (!v.pass) ++failures;
  std::cout << fmt::format("criterion {} {}: {} [{}] ({:.1f} s)", number, v.pass ? "PASS" : "FAIL", title, v.detail,
                           seconds)
            << std::endl;
}

template <class F>
void run_criterion(int number, const std::string& title, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report(number, title, v, secs);
}

Verdict gradient_correctness() {
  std::mt19937_64 rng(20240101);
  const SplineBasis beta_basis(KnotSequence(0.0, 1.0, {}, 4));
  const SplineBasis g_basis(KnotSequence(-2.0, 2.0, {-0.6, 0.7}, 4));
  double worst = 0.0;
  int bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = random_instance(rng, 30, beta_basis, g_basis);
    const LikelihoodModel model(inst.data, beta_basis);
    const auto x = inst.params.pack();
    const auto analytic = model.gradient(inst.params);
    const auto fd = fd_gradient(
        [&](const std::vector<double>& v) { return model.log_likelihood(inst.params.unpacked(v)); }, x, 1e-6);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double err = std::abs(analytic[j] - fd[j]);
      const double allowed = std::max(1e-5 * std::abs(fd[j]), 1e-8);
      worst = std::max(worst, err / allowed);
      if (err > allowed) ++bad;
    }
  }
  return {bad == 0, fmt::format("100 instances, {} components out of tolerance, worst error/allowed {:.3g}", bad, worst)};
}

Verdict constant_hazard() {
  ScenarioConfig sc;
  sc.n = 400;
  sc.seed = 7;
  const auto sim = generate_dataset(sc);
  const SplineBasis beta_basis(KnotSequence(0.0, 1.0, {0.5}, 2));
  std::vector<double> beta_coef;
  for (double s : beta_basis.greville()) beta_coef.push_back(sim.truth.beta(s));
  SieveParameters params{sim.truth.alpha, SplineFunction(beta_basis, beta_coef),
                         SplineFunction(SplineBasis(KnotSequence(-1.0, 1.0, {}, 1)), {0.0})};
  const LikelihoodModel model(sim.data, beta_basis);
  const auto r = model.residuals(params);
  const double a = *std::min_element(r.begin(), r.end()) - 0.1;
  const double b = *std::max_element(r.begin(), r.end()) + 0.1;
  params.loghaz = SplineFunction(SplineBasis(KnotSequence(a, b, {}, 1)), {0.0});
  double events = 0.0;
  double exposure = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    events += sim.data[i].event ? 1.0 : 0.0;
    exposure += std::min(r[i], b) - a;
  }
  auto at = [&](double c) {
    auto p = params;
    p.loghaz.coefficients()[0] = c;
    return p;
  };
  OptimizerConfig cfg;
  cfg.gradient_tolerance = 1e-13;
  cfg.step_tolerance = 1e-15;
  const auto res = maximize([&](std::span<const double> x) { return model.log_likelihood(at(x[0])); },
                            [&](std::span<const double> x) {
                              return std::vector<double>{model.gradient(at(x[0]), {false, false, true}).back()};
                            },
                            {0.0}, cfg);
  const double fitted = std::exp(res.x[0]);
  const double oracle = events / exposure;
  const double rel = std::abs(fitted - oracle) / oracle;
  return {rel < 1e-8, fmt::format("fitted rate {:.12g}, closed form {:.12g}, relative error {:.2e}", fitted, oracle, rel)};
}

Verdict spline_substrate() {
  std::mt19937_64 rng(99);
  const SplineBasis basis(KnotSequence(-2.0, 2.0, {-1.1, -0.3, 0.4, 1.2}, 4));
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  std::normal_distribution<double> normal;

  double unity = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto v = basis.evaluate(unif(rng));
    double s = 0.0;
    for (double x : v) s += x;
    unity = std::max(unity, std::abs(s - 1.0));
  }

  std::vector<double> coef(basis.dimension());
  for (double& c : coef) c = normal(rng);
  const SplineFunction f(basis, coef);
  const auto df = derivative_spline(f);
  double deriv = 0.0;
  const double h = 1e-6;
  for (int checked = 0; checked < 50;) {
    const double t = unif(rng);
    if (std::any_of(basis.breakpoints().begin(), basis.breakpoints().end(),
                    [&](double k) { return std::abs(t - k) < 10 * h; })) {
      continue;
    }
    const double fd = (f(t + h) - f(t - h)) / (2 * h);
    deriv = std::max(deriv, std::abs(df(t) - fd) / std::max(1.0, std::abs(fd)));
    ++checked;
  }

  double quad = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    for (double& c : coef) c = normal(rng);
    const SplineFunction g(basis, coef);
    const double u = unif(rng);
    const double want = simpson_split([&](double t) { return std::exp(g(t)); }, -2.0, u, basis.breakpoints());
    quad = std::max(quad, std::abs(quad_exp_spline(g, -2.0, u) - want));
    const auto weighted = quad_weighted_basis(g, -2.0, u);
    for (std::size_t k = 0; k < basis.dimension(); ++k) {
      const double wk = simpson_split(
          [&](double t) {
            return std::exp(g(t)) * cox_de_boor_all(-2.0, 2.0, basis.knots().interior(), 4, std::min(t, 2.0 - 1e-15))[k];
          },
          -2.0, u, basis.breakpoints(), 1e-12);
      quad = std::max(quad, std::abs(weighted[k] - wk));
    }
  }
  const bool ok = unity < 1e-12 && deriv < 1e-6 && quad < 1e-9;
  return {ok, fmt::format("partition of unity {:.2e}, derivative {:.2e}, quadrature {:.2e}", unity, deriv, quad)};
}

CellSpec study_cell(std::size_t n) {
  CellSpec spec;
  spec.scenario.n = n;
  spec.scenario.law = ErrorLaw::exponential;
  spec.scenario.censoring_rate = 0.25;
  spec.scenario.seed = 1;
  spec.replicates = 200;
  return spec;
}

Verdict coefficient_check(const CellSummary& s) {
  bool ok = true;
  std::string detail = fmt::format("{} used, {} failed", s.used, s.failures);
  for (std::size_t j = 0; j < 2; ++j) {
    const auto& a = s.alpha[j];
    const double ratio = a.ese / a.sse.value_or(NAN);
    const bool cell_ok = std::abs(a.bias) < 0.02 && std::abs(ratio - 1.0) < 0.15 && a.cp >= 0.90 && a.cp <= 0.98;
    ok = ok && cell_ok;
    detail += fmt::format("; alpha{}: bias {:.4f}, SSE {:.4f}, ESE {:.4f}, ESE/SSE {:.3f}, CP {:.3f}", j + 1, a.bias,
                          a.sse.value_or(NAN), a.ese, ratio, a.cp);
  }
  return {ok, detail};
}

Verdict function_check(const CellSummary& s) {
  const bool beta_ok = s.mean_mse_beta >= 0.010 && s.mean_mse_beta <= 0.030;
  const bool g_ok = s.mean_mse_g >= 0.010 && s.mean_mse_g <= 0.040;
  return {beta_ok && g_ok, fmt::format("mean MSE(beta) {:.4f} in [0.010, 0.030]: {}; mean MSE(g) {:.4f} in [0.010, 0.040]: {}",
                                       s.mean_mse_beta, beta_ok ? "yes" : "no", s.mean_mse_g, g_ok ? "yes" : "no")};
}

Verdict rate(const CellSummary& s400, const CellSummary& s800) {
  const auto rep = convergence_diagnostic({s400, s800});
  const double slope = rep.alpha_slope[0];
  const double sse400 = s400.alpha[0].sse.value_or(NAN);
  const double sse800 = s800.alpha[0].sse.value_or(NAN);
  const bool ok = slope >= -0.7 && slope <= -0.3 && sse800 < sse400;
  return {ok, fmt::format("median |alpha1 - 1|: {:.4f} -> {:.4f}, slope {:.3f}; SSE(alpha1) {:.4f} -> {:.4f}",
                          rep.median_abs_alpha_error[0][0], rep.median_abs_alpha_error[0][1], slope, sse400, sse800)};
}

Verdict determinism() {
  const auto dir = faft::testing::scratch_dir("acceptance_determinism");
  faft::testing::write_text(dir / "cell.ini",
                            "[run]\nseed = 5\n\n[cell.smoke]\nlaw = exponential\nn = 200\ncensoring_rate = 0.25\n"
                            "replicates = 2\n");
  std::vector<std::string> outs;
  for (const char* sub : {"first", "second"}) {
    const std::string cfg = (dir / "cell.ini").string();
    const std::string out = (dir / sub).string();
    const char* argv[] = {"faft", "replicate", "--config", cfg.c_str(), "--out", out.c_str()};
    std::ostringstream o;
    std::ostringstream e;
    const int code = cli::run(6, argv, o, e);
    if (code != 0) return {false, fmt::format("replicate exited with {}: {}", code, e.str())};
    outs.push_back(faft::testing::read_text(dir / sub / "summary.csv"));
  }
  const bool same = outs[0] == outs[1] && !outs[0].empty();
  return {same, fmt::format("summary.csv {} bytes, identical: {}", outs[0].size(), same ? "yes" : "no")};
}

Verdict round_trip() {
  double worst = 0.0;
  int fitted = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    ScenarioConfig sc;
    sc.n = 400;
    sc.seed = seed;
    const auto sim = generate_dataset(sc);
    const auto fit = fit_faft(sim.data, SieveSettings::for_sample_size(sc.n));
    std::stringstream buf;
    write_model(buf, fit, sim.data);
    const auto archive = read_model(buf, "memory");
    const auto r = rescore(archive, sim.data);
    worst = std::max(worst, std::abs(r.loglik - fit.loglik));
    if (archive.fit.params.pack() != fit.params.pack()) worst = INFINITY;
    ++fitted;
  }
  return {worst <= 1e-12, fmt::format("{} fits, worst |loglik difference| {:.2e}", fitted, worst)};
}

}  // namespace

int main() {
  const unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  run_criterion(1, "analytic gradient vs central differences", gradient_correctness);
  run_criterion(2, "constant-hazard oracle", constant_hazard);
  run_criterion(3, "spline substrate", spline_substrate);

  std::optional<CellSummary> s400;
  std::optional<CellSummary> s800;
  const auto start = std::chrono::steady_clock::now();
  std::string cell_error;
  try {
    s400 = run_cell(study_cell(400), threads);
    s800 = run_cell(study_cell(800), threads);
  } catch (const std::exception& e) {
    cell_error = e.what();
  }
  const double cell_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << fmt::format("# Monte Carlo cells (exponential law, 25% censoring, R=200, base seed 1, {} threads): {:.1f} s",
                           threads, cell_secs)
            << std::endl;
  auto cell_or_error = [&](auto&& f) -> Verdict {
    if (!cell_error.empty()) return {false, "cell failed: " + cell_error};
    return f();
  };
  report(4, "coefficient summary at n=400 (bias, ESE/SSE, CP)", cell_or_error([&] { return coefficient_check(*s400); }), 0.0);
  report(5, "function recovery at n=400 (mean MSE of beta and g)", cell_or_error([&] { return function_check(*s400); }), 0.0);
  report(6, "rate property n=400 vs n=800", cell_or_error([&] { return rate(*s400, *s800); }), 0.0);

  run_criterion(7, "replicate determinism", determinism);
  run_criterion(8, "archive round trip on 20 fits", round_trip);

  std::cout << fmt::format("{} of 8 criteria failed", failures) << std::endl;
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
