#include "faft/simulation.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include <fmt/format.h>

#include "faft/error.hpp"

namespace faft {

std::string to_string(ErrorLaw law) {
  switch (law) {
    case ErrorLaw::exponential: return "exponential";
    case ErrorLaw::gaussian_mixture: return "gaussian-mixture";
    case ErrorLaw::extreme_value: return "extreme-value";
    case ErrorLaw::extreme_value_min: return "extreme-value-min";
  }
  return "unknown";
}

ErrorLaw error_law_from_string(const std::string& name) {
  if (name == "exponential" || name == "a") return ErrorLaw::exponential;
  if (name == "gaussian-mixture" || name == "b") return ErrorLaw::gaussian_mixture;
  if (name == "extreme-value" || name == "c") return ErrorLaw::extreme_value;
  if (name == "extreme-value-min") return ErrorLaw::extreme_value_min;
  throw ConfigError(fmt::format("unknown error law '{}'", name));
}

void ScenarioConfig::validate() const {
  if (n < 1) throw ConfigError("scenario needs n >= 1");
  if (!(censoring_rate > 0.0 && censoring_rate < 1.0)) {
    throw ConfigError(fmt::format("censoring rate {} outside (0, 1)", censoring_rate));
  }
  if (expansion_terms < 1) throw ConfigError("expansion needs at least one term");
  if (!(x2_variance > 0.0)) throw ConfigError("X2 variance must be positive");
}

double eigen_function(int k, double s) {
  if (k == 1) return 1.0;
  return std::numbers::sqrt2 * std::cos((k - 1) * std::numbers::pi * s);
}

double true_beta(double s, int terms) {
  double value = 0.0;
  for (int k = 1; k <= terms; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    value += sign * std::pow(k, -1.5) * eigen_function(k, s);
  }
  return value;
}

double true_functional_effect(const std::vector<double>& u) {
  // beta_k xi_k = (-1)^k k^{-3/2} (-1)^{k+1} k^{-1/2} = -k^{-2}
  double value = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const auto k = static_cast<double>(j + 1);
    value -= u[j] / (k * k);
  }
  return value;
}

FunctionalCovariate expansion_covariate(std::vector<double> coefficients) {
  return FunctionalCovariate::analytic([c = std::move(coefficients)](double s) {
    if (c.empty()) return 0.0;
    const double theta = std::numbers::pi * s;
    const double c1 = std::cos(theta);
    double prev = 1.0;  // cos(0 theta)
    double cur = c1;    // cos(1 theta)
    double sum = 0.0;
    for (std::size_t j = 1; j < c.size(); ++j) {
      sum += c[j] * cur;
      const double next = 2.0 * c1 * cur - prev;
      prev = cur;
      cur = next;
    }
    return c[0] + std::numbers::sqrt2 * sum;
  });
}

namespace {

double xi(int k) { return ((k % 2 == 1) ? 1.0 : -1.0) / std::sqrt(static_cast<double>(k)); }

std::vector<double> draw_u(Rng& rng, int terms) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> u(static_cast<std::size_t>(terms));
  for (double& v : u) v = unif(rng);
  return u;
}

std::vector<double> expansion_coefficients(const std::vector<double>& u) {
  std::vector<double> c(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) c[j] = xi(static_cast<int>(j) + 1) * u[j];
  return c;
}

double normal_survival(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }
double normal_density(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

// One subject's latent quantities, drawn in a fixed order.
struct Subject {
  std::vector<double> u;
  double x1 = 0.0;
  double x2 = 0.0;
  double eps = 0.0;
  double v = 0.0;  // C~ / tau
};

Subject draw_subject(Rng& rng, ErrorLaw law, int terms, double x2_variance) {
  Subject s;
  s.u = draw_u(rng, terms);
  std::tie(s.x1, s.x2) = draw_scalars(rng, x2_variance);
  s.eps = draw_error(law, rng);
  s.v = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return s;
}

double latent_time(const Subject& s) { return s.x1 + s.x2 + true_functional_effect(s.u) + s.eps; }

struct CalibrationKey {
  ErrorLaw law;
  double rate;
  std::uint64_t seed;
  std::size_t size;
  int terms;
  double x2_variance;
  auto tie() const { return std::tie(law, rate, seed, size, terms, x2_variance); }
  bool operator<(const CalibrationKey& o) const { return tie() < o.tie(); }
};

}  // namespace

CovariateDraw draw_functional_covariate(Rng& rng, int terms) {
  CovariateDraw out{draw_u(rng, terms), FunctionalCovariate::analytic([](double) { return 0.0; })};
  out.z = expansion_covariate(expansion_coefficients(out.u));
  return out;
}

std::pair<double, double> draw_scalars(Rng& rng, double x2_variance) {
  std::bernoulli_distribution bern(0.5);
  std::normal_distribution<double> normal(0.0, std::sqrt(x2_variance));
  const double x1 = bern(rng) ? 1.0 : 0.0;
  double x2 = normal(rng);
  while (std::abs(x2) > 2.0) x2 = normal(rng);
  return {x1, x2};
}

double draw_error(ErrorLaw law, Rng& rng) {
  switch (law) {
    case ErrorLaw::exponential:
    case ErrorLaw::extreme_value_min:
      return std::log(std::exponential_distribution<double>(1.0)(rng));
    case ErrorLaw::gaussian_mixture: {
      const bool wide = std::bernoulli_distribution(0.5)(rng);
      return std::normal_distribution<double>(0.0, wide ? 3.0 : 1.0)(rng);
    }
    case ErrorLaw::extreme_value:
      return -std::log(std::exponential_distribution<double>(1.0)(rng));
  }
  throw ConfigError("unknown error law");
}

double true_loghazard(ErrorLaw law, double t) {
  switch (law) {
    case ErrorLaw::exponential:
    case ErrorLaw::extreme_value_min:
      return t;
    case ErrorLaw::gaussian_mixture: {
      const double f = 0.5 * normal_density(t) + 0.5 * normal_density(t / 3.0) / 3.0;
      const double s = 0.5 * normal_survival(t) + 0.5 * normal_survival(t / 3.0);
      return std::log(f) - std::log(s);
    }
    case ErrorLaw::extreme_value: {
      const double e = std::exp(-t);
      return -t - e - std::log(-std::expm1(-e));
    }
  }
  throw ConfigError("unknown error law");
}

std::function<double(double)> true_loghazard(ErrorLaw law) {
  return [law](double t) { return true_loghazard(law, t); };
}

CensoringCalibration calibrate_censoring(ErrorLaw law, double target_rate, std::uint64_t pilot_seed,
                                         std::size_t pilot_size, int terms, double x2_variance) {
  if (!(target_rate > 0.0 && target_rate < 1.0)) {
    throw ConfigError(fmt::format("target censoring rate {} outside (0, 1)", target_rate));
  }
  static std::mutex mutex;
  static std::map<CalibrationKey, CensoringCalibration> cache;
  const CalibrationKey key{law, target_rate, pilot_seed, pilot_size, terms, x2_variance};
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }

  // Censored iff log(tau V) < T, i.e. tau V < exp(T).
  Rng rng(pilot_seed);
  std::vector<double> et(pilot_size);
  std::vector<double> v(pilot_size);
  for (std::size_t i = 0; i < pilot_size; ++i) {
    const Subject s = draw_subject(rng, law, terms, x2_variance);
    et[i] = std::exp(latent_time(s));
    v[i] = s.v;
  }
  auto rate = [&](double tau) {
    std::size_t censored = 0;
    for (std::size_t i = 0; i < pilot_size; ++i) censored += (tau * v[i] < et[i]) ? 1 : 0;
    return static_cast<double>(censored) / static_cast<double>(pilot_size);
  };

  double lo = 1.0;  // rate(lo) >= target
  double hi = 1.0;  // rate(hi) <= target
  int expansions = 0;
  while (rate(lo) < target_rate) {
    lo *= 0.5;
    if (++expansions > 200) throw ConvergenceError("censoring calibration could not bracket tau from below");
  }
  while (rate(hi) > target_rate) {
    hi *= 2.0;
    if (++expansions > 400) throw ConvergenceError("censoring calibration could not bracket tau from above");
  }
  CensoringCalibration result{hi, rate(hi)};
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = std::sqrt(lo * hi);
    const double r = rate(mid);
    result = {mid, r};
    if (std::abs(r - target_rate) <= 0.005 && iter >= 40) break;
    if (r > target_rate) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (std::abs(result.achieved_rate - target_rate) > 0.005) {
    throw ConvergenceError(fmt::format("censoring calibration reached rate {} for target {}", result.achieved_rate,
                                       target_rate));
  }
  std::lock_guard lock(mutex);
  cache.emplace(key, result);
  return result;
}

double censoring_rate_for_tau(ErrorLaw law, double tau, std::uint64_t seed, std::size_t size, int terms,
                              double x2_variance) {
  Rng rng(seed);
  std::size_t censored = 0;
  for (std::size_t i = 0; i < size; ++i) {
    const Subject s = draw_subject(rng, law, terms, x2_variance);
    censored += (std::log(tau * s.v) < latent_time(s)) ? 1 : 0;
  }
  return static_cast<double>(censored) / static_cast<double>(size);
}

SimulatedData generate_dataset(const ScenarioConfig& config, double tau, GenerationOverrides overrides) {
  config.validate();
  if (tau < 0.0) {
    tau = calibrate_censoring(config.law, config.censoring_rate, 20240607, 100000, config.expansion_terms,
                              config.x2_variance)
              .tau;
  }
  Rng rng(config.seed);
  const std::size_t n = config.n;
  std::vector<Subject> subjects;
  subjects.reserve(n);
  for (std::size_t i = 0; i < n; ++i) subjects.push_back(draw_subject(rng, config.law, config.expansion_terms, config.x2_variance));

  SimulatedData out;
  out.tau = tau;
  out.truth.law = config.law;
  out.truth.terms = config.expansion_terms;

  std::vector<SurvivalRecord> raw;
  raw.reserve(n);
  std::size_t censored = 0;
  for (auto& s : subjects) {
    if (overrides.zero_error) s.eps = 0.0;
    const double t = latent_time(s);
    const double c = overrides.no_censoring ? std::numeric_limits<double>::infinity() : std::log(tau * s.v);
    const bool event = t <= c;
    censored += event ? 0 : 1;
    raw.push_back({event ? t : c, event, {s.x1, s.x2}, expansion_covariate(expansion_coefficients(s.u))});
    out.expansion_u.push_back(s.u);
  }
  out.achieved_censoring = static_cast<double>(censored) / static_cast<double>(n);

  // Centering: X by column means, Z through its expansion coefficients.
  const auto terms = static_cast<std::size_t>(config.expansion_terms);
  std::vector<double> u_mean(terms, 0.0);
  double x1_mean = 0.0;
  double x2_mean = 0.0;
  for (const auto& s : subjects) {
    x1_mean += s.x1;
    x2_mean += s.x2;
    for (std::size_t k = 0; k < terms; ++k) u_mean[k] += s.u[k];
  }
  const auto dn = static_cast<double>(n);
  x1_mean /= dn;
  x2_mean /= dn;
  for (double& m : u_mean) m /= dn;

  std::vector<SurvivalRecord> centered;
  centered.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> uc(terms);
    for (std::size_t k = 0; k < terms; ++k) uc[k] = subjects[i].u[k] - u_mean[k];
    centered.push_back({raw[i].time, raw[i].event, {subjects[i].x1 - x1_mean, subjects[i].x2 - x2_mean},
                        expansion_covariate(expansion_coefficients(uc))});
  }
  out.truth.centering_shift = x1_mean + x2_mean + true_functional_effect(u_mean);

  CenteringInfo info;
  info.x_means = {x1_mean, x2_mean};
  out.raw = SurvivalDataset(std::move(raw));
  out.data = SurvivalDataset(std::move(centered), std::move(info));
  return out;
}

}  // namespace faft
