#include "faft/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include "faft/csv.hpp"
#include "faft/error.hpp"
#include "faft/inference.hpp"

namespace faft {

void CellSpec::validate() const {
  scenario.validate();
  if (replicates < 1) throw ConfigError("a cell needs at least one replicate");
  if (spline_order < 2) throw ConfigError(fmt::format("spline order must be >= 2, got {}", spline_order));
  if (basis_dimension && *basis_dimension < spline_order) {
    throw ConfigError(fmt::format("basis dimension {} is below the spline order {}", *basis_dimension, spline_order));
  }
  sieve_settings().validate();
}

SieveSettings CellSpec::sieve_settings() const {
  SieveSettings s = SieveSettings::for_sample_size(scenario.n, spline_order);
  if (basis_dimension) {
    s.beta_dimension = *basis_dimension;
    s.loghaz_dimension = *basis_dimension;
  }
  s.optimizer = optimizer;
  return s;
}

std::string CellSpec::label() const {
  return fmt::format("{}_n{}_c{}", to_string(scenario.law), scenario.n,
                     static_cast<long>(std::lround(100.0 * scenario.censoring_rate)));
}

namespace {

double mean_of(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::vector<double> beta_grid() { return uniform_grid(0.0, 1.0, kCurvePoints); }
std::vector<double> g_grid() { return uniform_grid(-1.5, 1.5, kCurvePoints); }

double slope_of(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

ReplicateOutcome run_replicate(const CellSpec& spec, std::size_t index) {
  ReplicateOutcome out;
  out.index = index;
  out.seed = spec.scenario.seed + index;
  ScenarioConfig scenario = spec.scenario;
  scenario.seed = out.seed;
  try {
    const SimulatedData sim = generate_dataset(scenario);
    out.achieved_censoring = sim.achieved_censoring;
    const FitResult fit = fit_faft(sim.data, spec.sieve_settings());
    out.termination = to_string(fit.trace.reason);
    out.widenings = fit.widenings;
    if (!fit.converged) {
      out.failure = fmt::format("optimizer stopped by {}", out.termination);
      return out;
    }
    if (!fit.has_inference()) {
      out.failure = fit.inference_error;
      return out;
    }
    out.alpha = fit.params.alpha;
    out.alpha_se = fit.alpha_se;
    const TrueModel& truth = sim.truth;
    out.mse_beta = mse_beta(fit.params.beta, [&](double s) { return truth.beta(s); });
    const MseG g_error = mse_g(fit.params.loghaz, [&](double t) { return truth.loghazard(t); });
    out.mse_g = g_error.value;
    out.mse_g_truncated = g_error.truncated;
    for (double s : beta_grid()) out.beta_curve.push_back(fit.params.beta(s));
    for (double t : g_grid()) {
      const bool inside = t >= fit.support_lower() && t <= fit.support_upper();
      out.g_curve.push_back(inside ? fit.params.loghaz(t) : std::numeric_limits<double>::quiet_NaN());
      out.g_truth.push_back(truth.loghazard(t));
    }
    out.ok = true;
  } catch (const Error& e) {
    out.failure = e.what();
  }
  return out;
}

CellSummary summarize_cell(const CellSpec& spec, const std::vector<ReplicateOutcome>& outcomes) {
  CellSummary summary;
  summary.spec = spec;
  std::vector<const ReplicateOutcome*> used;
  const ReplicateOutcome* first_failure = nullptr;
  for (const auto& o : outcomes) {
    if (o.ok) {
      used.push_back(&o);
    } else if (!first_failure) {
      first_failure = &o;
    }
  }
  summary.used = used.size();
  summary.failures = outcomes.size() - used.size();
  if (used.empty() || static_cast<double>(summary.failures) > kMaxFailureFraction * static_cast<double>(outcomes.size())) {
    throw ConvergenceError(fmt::format("cell {}: {} of {} replicates failed (replicate {}: {})", spec.label(),
                                       summary.failures, outcomes.size(), first_failure ? first_failure->index : 0,
                                       first_failure ? first_failure->failure : "none"));
  }

  const TrueModel truth;
  const std::size_t p = used.front()->alpha.size();
  for (std::size_t j = 0; j < p; ++j) {
    AlphaSummary a;
    a.truth = j < truth.alpha.size() ? truth.alpha[j] : 0.0;
    std::vector<double> est;
    std::vector<double> se;
    std::vector<double> abs_error;
    std::size_t covered = 0;
    for (const auto* o : used) {
      est.push_back(o->alpha[j]);
      se.push_back(o->alpha_se[j]);
      abs_error.push_back(std::abs(o->alpha[j] - a.truth));
      if (std::abs(o->alpha[j] - a.truth) <= kNormalQuantile975 * o->alpha_se[j]) ++covered;
    }
    const double m = mean_of(est);
    a.bias = m - a.truth;
    if (est.size() >= 2) {
      double ss = 0.0;
      for (double v : est) ss += (v - m) * (v - m);
      a.sse = std::sqrt(ss / static_cast<double>(est.size() - 1));
    }
    a.ese = mean_of(se);
    a.cp = static_cast<double>(covered) / static_cast<double>(used.size());
    a.median_abs_error = median_of(abs_error);
    summary.alpha.push_back(a);
  }

  std::vector<double> mb;
  std::vector<double> mg;
  std::vector<double> cens;
  for (const auto* o : used) {
    mb.push_back(o->mse_beta);
    mg.push_back(o->mse_g);
    cens.push_back(o->achieved_censoring);
  }
  summary.mean_mse_beta = mean_of(mb);
  summary.median_mse_beta = median_of(mb);
  summary.mean_mse_g = mean_of(mg);
  summary.mean_censoring = mean_of(cens);

  summary.beta_grid = beta_grid();
  summary.g_grid = g_grid();
  summary.beta_mean.assign(kCurvePoints, 0.0);
  summary.g_mean.assign(kCurvePoints, 0.0);
  summary.g_truth.assign(kCurvePoints, 0.0);
  std::vector<std::size_t> g_count(kCurvePoints, 0);
  for (const auto* o : used) {
    for (std::size_t k = 0; k < kCurvePoints; ++k) {
      summary.beta_mean[k] += o->beta_curve[k];
      summary.g_truth[k] += o->g_truth[k];
      if (!std::isnan(o->g_curve[k])) {
        summary.g_mean[k] += o->g_curve[k];
        ++g_count[k];
      }
    }
  }
  const auto nu = static_cast<double>(used.size());
  for (std::size_t k = 0; k < kCurvePoints; ++k) {
    summary.beta_mean[k] /= nu;
    summary.g_truth[k] /= nu;
    summary.g_mean[k] = g_count[k] > 0 ? summary.g_mean[k] / static_cast<double>(g_count[k])
                                       : std::numeric_limits<double>::quiet_NaN();
    summary.beta_truth.push_back(true_beta(summary.beta_grid[k], spec.scenario.expansion_terms));
  }
  return summary;
}

std::vector<ReplicateOutcome> run_replicates(const CellSpec& spec, unsigned threads) {
  spec.validate();
  // calibrate once up front so workers only read the cache
  (void)calibrate_censoring(spec.scenario.law, spec.scenario.censoring_rate, 20240607, 100000,
                            spec.scenario.expansion_terms, spec.scenario.x2_variance);

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, spec.replicates));

  std::vector<ReplicateOutcome> results(spec.replicates);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  auto worker = [&](unsigned id) {
    try {
      for (std::size_t r = next++; r < spec.replicates; r = next++) results[r] = run_replicate(spec, r);
    } catch (...) {
      errors[id] = std::current_exception();
    }
  };
  if (threads <= 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned id = 0; id < threads; ++id) pool.emplace_back(worker, id);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

CellSummary run_cell(const CellSpec& spec, unsigned threads, std::vector<ReplicateOutcome>* outcomes) {
  std::vector<ReplicateOutcome> results = run_replicates(spec, threads);
  CellSummary summary = summarize_cell(spec, results);
  if (outcomes) *outcomes = std::move(results);
  return summary;
}

RateReport convergence_diagnostic(const std::vector<CellSummary>& cells) {
  if (cells.empty()) throw ConfigError("convergence diagnostic needs cells");
  std::vector<const CellSummary*> sorted;
  for (const auto& c : cells) sorted.push_back(&c);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->spec.scenario.n < b->spec.scenario.n; });
  const auto& ref = sorted.front()->spec.scenario;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& sc = sorted[i]->spec.scenario;
    if (sc.law != ref.law || sc.censoring_rate != ref.censoring_rate) {
      throw ConfigError("convergence diagnostic needs cells with the same law and censoring rate");
    }
    if (i > 0 && sc.n == sorted[i - 1]->spec.scenario.n) {
      throw ConfigError(fmt::format("convergence diagnostic got two cells with n = {}", sc.n));
    }
  }
  if (sorted.size() < 2) throw ConfigError("convergence diagnostic needs at least two sample sizes");

  RateReport report;
  const std::size_t p = sorted.front()->alpha.size();
  report.median_abs_alpha_error.assign(p, {});
  std::vector<double> log_n;
  for (const auto* c : sorted) {
    report.n.push_back(c->spec.scenario.n);
    log_n.push_back(std::log(static_cast<double>(c->spec.scenario.n)));
    for (std::size_t j = 0; j < p; ++j) report.median_abs_alpha_error[j].push_back(c->alpha[j].median_abs_error);
    report.median_mse_beta.push_back(c->median_mse_beta);
  }
  auto log_slope = [&](const std::vector<double>& y) {
    std::vector<double> ly;
    for (double v : y) ly.push_back(std::log(v));
    return slope_of(log_n, ly);
  };
  for (std::size_t j = 0; j < p; ++j) report.alpha_slope.push_back(log_slope(report.median_abs_alpha_error[j]));
  report.mse_beta_slope = log_slope(report.median_mse_beta);
  return report;
}

void write_summary_csv(std::ostream& out, const std::vector<CellSummary>& cells) {
  out << "cell,law,n,censoring_rate,replicates,statistic,coordinate,value\n";
  for (const auto& c : cells) {
    const auto& sc = c.spec.scenario;
    const std::string prefix = fmt::format("{},{},{},{},{}", csv_field(c.spec.label()), to_string(sc.law), sc.n,
                                           format_double(sc.censoring_rate), c.spec.replicates);
    auto row = [&](std::string_view stat, std::string_view coord, const std::string& value) {
      out << prefix << ',' << stat << ',' << coord << ',' << value << '\n';
    };
    for (std::size_t j = 0; j < c.alpha.size(); ++j) {
      const std::string coord = fmt::format("alpha{}", j + 1);
      const auto& a = c.alpha[j];
      row("bias", coord, format_double(a.bias));
      row("sse", coord, a.sse ? format_double(*a.sse) : std::string());
      row("ese", coord, format_double(a.ese));
      row("cp", coord, format_double(a.cp));
      row("median_abs_error", coord, format_double(a.median_abs_error));
    }
    row("mse_beta", "", format_double(c.mean_mse_beta));
    row("median_mse_beta", "", format_double(c.median_mse_beta));
    row("mse_g", "", format_double(c.mean_mse_g));
    row("mean_censoring", "", format_double(c.mean_censoring));
    row("used", "", std::to_string(c.used));
    row("failures", "", std::to_string(c.failures));
  }
}

void write_curves_csv(std::ostream& out, const std::vector<CellSummary>& cells) {
  out << "cell,curve,grid,mean,truth\n";
  for (const auto& c : cells) {
    const std::string label = csv_field(c.spec.label());
    for (std::size_t k = 0; k < c.beta_grid.size(); ++k) {
      out << label << ",beta," << format_double(c.beta_grid[k]) << ',' << format_double(c.beta_mean[k]) << ','
          << format_double(c.beta_truth[k]) << '\n';
    }
    for (std::size_t k = 0; k < c.g_grid.size(); ++k) {
      out << label << ",loghazard," << format_double(c.g_grid[k]) << ',' << format_double(c.g_mean[k]) << ','
          << format_double(c.g_truth[k]) << '\n';
    }
  }
}

void write_rate_csv(std::ostream& out, const RateReport& report) {
  out << "statistic,coordinate,n,value\n";
  for (std::size_t j = 0; j < report.median_abs_alpha_error.size(); ++j) {
    for (std::size_t i = 0; i < report.n.size(); ++i) {
      out << "median_abs_error,alpha" << j + 1 << ',' << report.n[i] << ','
          << format_double(report.median_abs_alpha_error[j][i]) << '\n';
    }
  }
  for (std::size_t i = 0; i < report.n.size(); ++i) {
    out << "median_mse_beta,," << report.n[i] << ',' << format_double(report.median_mse_beta[i]) << '\n';
  }
  for (std::size_t j = 0; j < report.alpha_slope.size(); ++j) {
    out << "log_log_slope,alpha" << j + 1 << ",," << format_double(report.alpha_slope[j]) << '\n';
  }
  out << "log_log_slope,mse_beta,," << format_double(report.mse_beta_slope) << '\n';
}

}  // namespace faft
