#include "faft/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "faft/archive.hpp"
#include "faft/config.hpp"
#include "faft/csv.hpp"
#include "faft/error.hpp"
#include "faft/estimation.hpp"
#include "faft/harness.hpp"
#include "faft/ingestion.hpp"
#include "faft/simulation.hpp"

namespace faft::cli {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const SupportViolation*>(&e)) return kSupport;
  if (dynamic_cast<const ConfigError*>(&e)) return kConfig;
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const ArchiveError*>(&e)) return kData;
  if (dynamic_cast<const ConvergenceError*>(&e) || dynamic_cast<const SingularInformation*>(&e)) return kConvergence;
  return kUnexpected;
}

namespace {

constexpr const char* kThreadsEnv = "FAFT_THREADS";

struct CommonOptions {
  std::string config_path;
  std::optional<long long> seed;
  std::string out_dir = "faft-out";
  std::optional<int> threads;
};

struct Context {
  Config config;
  fs::path config_dir;  ///< relative paths inside the config file resolve against this
  fs::path out;
  std::ostream& out_stream;
  std::ostream& err_stream;
};

void add_common(CLI::App* app, CommonOptions& opts) {
  app->add_option("--config", opts.config_path, "Configuration file");
  app->add_option("--seed", opts.seed, "Random seed (overrides [run] seed)");
  app->add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
  app->add_option("--threads", opts.threads, "Worker threads (overrides " + std::string(kThreadsEnv) + ")")
      ->check(CLI::PositiveNumber);
}

Context make_context(const CommonOptions& opts, std::ostream& out, std::ostream& err) {
  Context ctx{Config{}, fs::current_path(), fs::path(opts.out_dir), out, err};
  if (!opts.config_path.empty()) {
    ctx.config = Config::load(opts.config_path);
    ctx.config_dir = fs::absolute(opts.config_path).parent_path();
  }
  ctx.config.require_known("run", {"seed", "threads"});
  if (opts.seed) ctx.config.set("run", "seed", std::to_string(*opts.seed));
  if (!ctx.config.has("run", "seed")) ctx.config.set("run", "seed", "1");
  if (ctx.config.get_int("run", "seed", 1) < 0) throw ConfigError("seed must be non-negative");

  // precedence: flag, then config file, then environment, then 1
  int threads = 1;
  if (opts.threads) {
    threads = *opts.threads;
  } else if (ctx.config.has("run", "threads")) {
    threads = static_cast<int>(ctx.config.get_int("run", "threads", 1));
  } else if (const char* env = std::getenv(kThreadsEnv); env && *env) {
    Config tmp;
    tmp.set("env", kThreadsEnv, env);
    threads = static_cast<int>(tmp.get_int("env", kThreadsEnv, 1));
  }
  if (threads < 1) throw ConfigError(fmt::format("thread count must be positive, got {}", threads));
  ctx.config.set("run", "threads", std::to_string(threads));

  fs::create_directories(ctx.out);
  return ctx;
}

fs::path resolve(const Context& ctx, const std::string& path) {
  const fs::path p(path);
  return p.is_absolute() ? p : ctx.config_dir / p;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw DataError(fmt::format("write to '{}' failed", path.string()));
}

void write_resolved(const Context& ctx) {
  std::ostringstream s;
  s << "# resolved configuration\n";
  ctx.config.write(s);
  write_file(ctx.out / "resolved_config.ini", s.str());
}

std::string fixed4(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{:.4f}", v);
}

ScenarioConfig scenario_from(const Config& cfg, const std::string& section, std::uint64_t seed) {
  ScenarioConfig sc;
  sc.n = static_cast<std::size_t>(cfg.get_int(section, "n", static_cast<long long>(sc.n)));
  sc.law = error_law_from_string(cfg.get_string(section, "law", to_string(sc.law)));
  sc.censoring_rate = cfg.get_double(section, "censoring_rate", sc.censoring_rate);
  sc.expansion_terms = static_cast<int>(cfg.get_int(section, "expansion_terms", sc.expansion_terms));
  sc.x2_variance = cfg.get_double(section, "x2_variance", sc.x2_variance);
  sc.seed = seed;
  sc.validate();
  return sc;
}

void record_scenario(Config& cfg, const std::string& section, const ScenarioConfig& sc) {
  cfg.set(section, "n", std::to_string(sc.n));
  cfg.set(section, "law", to_string(sc.law));
  cfg.set(section, "censoring_rate", format_double(sc.censoring_rate));
  cfg.set(section, "expansion_terms", std::to_string(sc.expansion_terms));
  cfg.set(section, "x2_variance", format_double(sc.x2_variance));
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(Context& ctx) {
  auto& cfg = ctx.config;
  cfg.require_known("simulate", {"n", "law", "censoring_rate", "expansion_terms", "x2_variance", "grid_points", "tau"});
  const auto seed = static_cast<std::uint64_t>(cfg.get_int("run", "seed", 1));
  const ScenarioConfig sc = scenario_from(cfg, "simulate", seed);
  const long long grid_points = cfg.get_int("simulate", "grid_points", 101);
  if (grid_points < 2) throw ConfigError("grid_points must be at least 2");
  std::optional<double> tau;
  if (cfg.has("simulate", "tau")) {
    tau = cfg.get_double("simulate", "tau", 0.0);
    if (!(*tau > 0.0)) throw ConfigError("tau must be positive");
  }
  const SimulatedData sim = generate_dataset(sc, tau.value_or(-1.0));

  record_scenario(cfg, "simulate", sc);
  cfg.set("simulate", "grid_points", std::to_string(grid_points));
  cfg.set("simulate", "tau", format_double(sim.tau));

  const auto m = static_cast<std::size_t>(grid_points);
  const std::vector<double> grid = uniform_grid(0.0, 1.0, m);
  std::vector<std::string> z_names;
  const int width = static_cast<int>(std::to_string(m - 1).size());
  for (std::size_t k = 0; k < m; ++k) z_names.push_back(fmt::format("z_{:0{}}", k, std::max(width, 3)));

  std::ostringstream csv;
  csv << "id,time,status,x1,x2";
  for (const auto& z : z_names) csv << ',' << z;
  csv << '\n';
  for (std::size_t i = 0; i < sim.raw.size(); ++i) {
    const auto& r = sim.raw[i];
    csv << (i + 1) << ',' << format_double(r.time) << ',' << (r.event ? 1 : 0);
    for (double x : r.x) csv << ',' << format_double(x);
    for (double s : grid) csv << ',' << format_double(r.z.value(s));
    csv << '\n';
  }
  write_file(ctx.out / "dataset.csv", csv.str());

  Config truth;
  truth.set("truth", "alpha", "1, 1");
  truth.set("truth", "law", to_string(sc.law));
  truth.set("truth", "n", std::to_string(sc.n));
  truth.set("truth", "seed", std::to_string(seed));
  truth.set("truth", "tau", format_double(sim.tau));
  truth.set("truth", "target_censoring", format_double(sc.censoring_rate));
  truth.set("truth", "achieved_censoring", format_double(sim.achieved_censoring));
  truth.set("truth", "expansion_terms", std::to_string(sc.expansion_terms));
  std::ostringstream truth_text;
  truth.write(truth_text);
  write_file(ctx.out / "truth.ini", truth_text.str());

  // ready-made fit configuration for the exported dataset
  Config fit_cfg;
  fit_cfg.set("data", "id", "id");
  fit_cfg.set("data", "scalars", "x1, x2");
  std::string traj;
  for (const auto& z : z_names) traj += (traj.empty() ? "" : ", ") + z;
  fit_cfg.set("data", "trajectory", traj);
  fit_cfg.set("data", "time", "time");
  fit_cfg.set("data", "status", "status");
  fit_cfg.set("data", "transform", "identity");
  fit_cfg.set("fit", "data", "dataset.csv");
  fit_cfg.set("fit", "preset", "simulation");
  std::ostringstream fit_text;
  fit_cfg.write(fit_text);
  write_file(ctx.out / "fit_config.ini", fit_text.str());

  write_resolved(ctx);
  ctx.out_stream << fmt::format("simulated n={} law={} tau={} censoring={} -> {}\n", sc.n, to_string(sc.law),
                                fixed4(sim.tau), fixed4(sim.achieved_censoring), (ctx.out / "dataset.csv").string());
  return kSuccess;
}

// ---------------------------------------------------------------- fit

SieveSettings fit_settings(Config& cfg, std::size_t n) {
  cfg.require_known("fit", {"data", "preset", "order", "basis_dimension", "beta_dimension", "loghaz_dimension",
                            "support_margin", "max_widenings", "gradient_tolerance", "step_tolerance",
                            "max_iterations", "warm_start", "band_points"});
  const std::string preset = cfg.get_string("fit", "preset", "simulation");
  int order = 0;
  if (preset == "simulation") {
    order = 2;
  } else if (preset == "application") {
    order = 4;
  } else {
    throw ConfigError(fmt::format("unknown preset '{}' (expected simulation or application)", preset));
  }
  order = static_cast<int>(cfg.get_int("fit", "order", order));
  if (order < 2) throw ConfigError(fmt::format("spline order must be >= 2, got {}", order));
  const int q = static_cast<int>(cfg.get_int("fit", "basis_dimension", q_n_rule(n)));
  SieveSettings s;
  s.beta_order = order;
  s.loghaz_order = order;
  s.beta_dimension = static_cast<int>(cfg.get_int("fit", "beta_dimension", q));
  s.loghaz_dimension = static_cast<int>(cfg.get_int("fit", "loghaz_dimension", q));
  s.support_margin = cfg.get_double("fit", "support_margin", s.support_margin);
  s.max_widenings = static_cast<int>(cfg.get_int("fit", "max_widenings", s.max_widenings));
  s.optimizer.gradient_tolerance = cfg.get_double("fit", "gradient_tolerance", s.optimizer.gradient_tolerance);
  s.optimizer.step_tolerance = cfg.get_double("fit", "step_tolerance", s.optimizer.step_tolerance);
  s.optimizer.max_iterations = static_cast<int>(cfg.get_int("fit", "max_iterations", s.optimizer.max_iterations));
  s.validate();

  cfg.set("fit", "preset", preset);
  cfg.set("fit", "order", std::to_string(order));
  cfg.set("fit", "beta_dimension", std::to_string(s.beta_dimension));
  cfg.set("fit", "loghaz_dimension", std::to_string(s.loghaz_dimension));
  cfg.set("fit", "support_margin", format_double(s.support_margin));
  cfg.set("fit", "max_widenings", std::to_string(s.max_widenings));
  cfg.set("fit", "gradient_tolerance", format_double(s.optimizer.gradient_tolerance));
  cfg.set("fit", "step_tolerance", format_double(s.optimizer.step_tolerance));
  cfg.set("fit", "max_iterations", std::to_string(s.optimizer.max_iterations));
  return s;
}

void record_schema(Config& cfg, const IngestionSchema& schema) {
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
    return s;
  };
  cfg.set("data", "id", schema.id_column);
  cfg.set("data", "scalars", join(schema.scalar_columns));
  std::vector<std::string> binary;
  for (const auto& [col, level] : schema.binary_columns) binary.push_back(level.empty() ? col : col + ":" + level);
  cfg.set("data", "binary", join(binary));
  cfg.set("data", "trajectory", join(schema.trajectory_columns));
  cfg.set("data", "time", schema.time_column);
  cfg.set("data", "status", schema.status_column);
  cfg.set("data", "transform", to_string(schema.transform));
  cfg.set("data", "window_end", format_double(schema.window_end));
  cfg.set("data", "center", schema.center ? "true" : "false");
}

std::string describe_report(const ResidualReport& report) {
  return fmt::format("{} residuals below a, {} above b, {} events outside [a, b]", report.below, report.above,
                     report.events_outside);
}

int cmd_fit(Context& ctx, const std::string& data_flag, const std::string& warm_flag) {
  auto& cfg = ctx.config;
  if (!cfg.has_section("data")) throw ConfigError("fit needs a [data] section describing the CSV schema");
  const IngestionSchema schema = IngestionSchema::from_config(cfg, "data");
  fs::path data_path;
  if (!data_flag.empty()) {
    data_path = fs::absolute(data_flag);
  } else if (cfg.has("fit", "data")) {
    data_path = resolve(ctx, *cfg.get("fit", "data"));
  } else {
    throw ConfigError("no dataset given (use --data or [fit] data)");
  }
  const LoadedData loaded = load_long_csv(data_path.string(), schema);
  const SurvivalDataset& data = loaded.data;
  SieveSettings settings = fit_settings(cfg, data.size());
  cfg.set("fit", "data", data_path.string());
  record_schema(cfg, schema);
  const auto band_points = static_cast<std::size_t>(cfg.get_int("fit", "band_points", 101));
  if (band_points < 2) throw ConfigError("band_points must be at least 2");
  cfg.set("fit", "band_points", std::to_string(band_points));

  std::optional<ModelArchive> warm;
  std::string warm_path = warm_flag;
  if (warm_path.empty() && cfg.has("fit", "warm_start")) warm_path = resolve(ctx, *cfg.get("fit", "warm_start")).string();
  if (!warm_path.empty()) {
    warm = load_model(warm_path);
    cfg.set("fit", "warm_start", fs::absolute(warm_path).string());
    const Rescore check = rescore(*warm, data);
    if (!check.fingerprint_matches) ctx.err_stream << "warning: " << check.warning << '\n';
  }
  write_resolved(ctx);

  FitResult fit = [&] {
    try {
      return fit_faft(data, settings, warm ? &warm->fit.params : nullptr);
    } catch (const SupportViolation& e) {
      ctx.err_stream << "support violation: " << e.what() << "\n  " << describe_report(e.report()) << '\n';
      throw;
    }
  }();

  save_model((ctx.out / "model.faft").string(), fit, data);

  const bool inference = fit.has_inference();
  std::ostringstream alpha_csv;
  alpha_csv << "covariate,estimate,se,z,p_value\n";
  struct Row {
    std::string name;
    double est, se, z, p;
  };
  std::vector<Row> rows;
  for (std::size_t j = 0; j < fit.params.alpha.size(); ++j) {
    const double est = fit.params.alpha[j];
    const double se = inference ? fit.alpha_se[j] : std::nan("");
    const double z = est / se;
    const double p = std::erfc(std::abs(z) / std::sqrt(2.0));
    const std::string name = j < loaded.scalar_names.size() ? loaded.scalar_names[j] : fmt::format("x{}", j + 1);
    rows.push_back({name, est, se, z, p});
    alpha_csv << csv_field(name) << ',' << format_double(est) << ',' << format_double(se) << ',' << format_double(z)
              << ',' << format_double(p) << '\n';
  }
  write_file(ctx.out / "alpha.csv", alpha_csv.str());

  const std::vector<double> grid = uniform_grid(0.0, 1.0, band_points);
  std::ostringstream band_csv;
  band_csv << "grid,estimate,lower,upper\n";
  if (inference) {
    const PointwiseBand band = beta_pointwise_band(fit, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      band_csv << format_double(band.grid[k]) << ',' << format_double(band.estimate[k]) << ','
               << format_double(band.lower[k]) << ',' << format_double(band.upper[k]) << '\n';
    }
  } else {
    for (double s : grid) {
      band_csv << format_double(s) << ',' << format_double(fit.params.beta(s)) << ",nan,nan\n";
    }
  }
  write_file(ctx.out / "beta_band.csv", band_csv.str());

  std::ostringstream g_csv;
  g_csv << "grid,estimate\n";
  for (double t : uniform_grid(fit.support_lower(), fit.support_upper(), kCurvePoints)) {
    g_csv << format_double(t) << ',' << format_double(fit.params.loghaz(t)) << '\n';
  }
  write_file(ctx.out / "loghazard.csv", g_csv.str());

  Config summary;
  summary.set("fit", "loglik", format_double(fit.loglik));
  summary.set("fit", "n", std::to_string(data.size()));
  summary.set("fit", "events", std::to_string(data.num_events()));
  summary.set("fit", "termination", to_string(fit.trace.reason));
  summary.set("fit", "iterations", std::to_string(fit.trace.iterations.empty() ? 0 : fit.trace.iterations.size() - 1));
  summary.set("fit", "widenings", std::to_string(fit.widenings));
  summary.set("fit", "converged", fit.converged ? "true" : "false");
  summary.set("fit", "support_lower", format_double(fit.support_lower()));
  summary.set("fit", "support_upper", format_double(fit.support_upper()));
  summary.set("fit", "imputed_subjects", std::to_string(loaded.imputed_ids.size()));
  summary.set("fit", "imputed_cells", std::to_string(loaded.imputed_cells));
  summary.set("fit", "inference_error", fit.inference_error.empty() ? "none" : fit.inference_error);
  std::ostringstream summary_text;
  summary.write(summary_text);
  write_file(ctx.out / "fit_summary.ini", summary_text.str());

  auto& out = ctx.out_stream;
  out << fmt::format("n = {}, events = {}, log-likelihood = {}, termination = {}\n", data.size(), data.num_events(),
                     fixed4(fit.loglik), to_string(fit.trace.reason));
  out << fmt::format("{:<16}{:>12}{:>12}{:>12}{:>12}\n", "Covariate", "Estimate", "S.E.", "t-value", "p-value");
  for (const auto& r : rows) {
    const std::string p = std::isnan(r.p) ? "nan" : (r.p < 1e-4 ? "<0.0001" : fixed4(r.p));
    out << fmt::format("{:<16}{:>12}{:>12}{:>12}{:>12}\n", r.name, fmt::format("{:.5f}", r.est),
                       fmt::format("{:.5f}", r.se), fmt::format("{:.2f}", r.z), p);
  }
  if (!loaded.imputed_ids.empty()) {
    ctx.err_stream << fmt::format("note: {} trajectory cells filled in for {} subjects\n", loaded.imputed_cells,
                                  loaded.imputed_ids.size());
  }
  if (!fit.converged) {
    ctx.err_stream << "error: optimizer stopped by " << to_string(fit.trace.reason) << " without converging\n";
    return kConvergence;
  }
  if (!inference) {
    ctx.err_stream << "error: " << fit.inference_error << '\n';
    return kConvergence;
  }
  return kSuccess;
}

// ---------------------------------------------------------------- replicate

const std::vector<std::string> kCellKeys = {"law",       "n",    "censoring_rate",  "replicates",
                                            "order",     "seed", "basis_dimension", "expansion_terms",
                                            "x2_variance"};

CellSpec cell_from(Config& cfg, const std::string& section, std::uint64_t run_seed) {
  cfg.require_known(section, kCellKeys);
  CellSpec spec;
  const auto seed = static_cast<std::uint64_t>(cfg.get_int(section, "seed", static_cast<long long>(run_seed)));
  spec.scenario = scenario_from(cfg, section, seed);
  const long long replicates = cfg.get_int(section, "replicates", 200);
  if (replicates < 1) throw ConfigError(fmt::format("[{}] replicates must be >= 1", section));
  spec.replicates = static_cast<std::size_t>(replicates);
  spec.spline_order = static_cast<int>(cfg.get_int(section, "order", 2));
  if (cfg.has(section, "basis_dimension")) spec.basis_dimension = static_cast<int>(cfg.get_int(section, "basis_dimension", 0));
  spec.validate();

  record_scenario(cfg, section, spec.scenario);
  cfg.set(section, "seed", std::to_string(seed));
  cfg.set(section, "replicates", std::to_string(spec.replicates));
  cfg.set(section, "order", std::to_string(spec.spline_order));
  return spec;
}

int cmd_replicate(Context& ctx) {
  auto& cfg = ctx.config;
  const auto run_seed = static_cast<std::uint64_t>(cfg.get_int("run", "seed", 1));
  const auto threads = static_cast<unsigned>(cfg.get_int("run", "threads", 1));
  std::vector<std::pair<std::string, CellSpec>> cells;
  const auto cell_sections = cfg.sections("cell.");
  if (cell_sections.empty()) {
    cells.emplace_back("replicate", cell_from(cfg, "replicate", run_seed));
  } else {
    if (cfg.has_section("replicate")) throw ConfigError("use either [replicate] or [cell.NAME] sections, not both");
    for (const auto& s : cell_sections) cells.emplace_back(s, cell_from(cfg, s, run_seed));
  }
  write_resolved(ctx);

  std::vector<CellSummary> summaries;
  std::vector<std::string> failures;
  std::ostringstream reps;
  reps << "cell,replicate,seed,ok,termination,widenings,achieved_censoring,alpha1,alpha2,se1,se2,mse_beta,mse_g,"
          "failure\n";
  for (const auto& [section, spec] : cells) {
    const std::vector<ReplicateOutcome> outcomes = run_replicates(spec, threads);
    try {
      summaries.push_back(summarize_cell(spec, outcomes));
    } catch (const ConvergenceError& e) {
      failures.push_back(e.what());
    }
    for (const auto& o : outcomes) {
      auto at = [](const std::vector<double>& v, std::size_t j) {
        return j < v.size() ? format_double(v[j]) : std::string();
      };
      reps << csv_field(spec.label()) << ',' << o.index << ',' << o.seed << ',' << (o.ok ? 1 : 0) << ','
           << o.termination << ',' << o.widenings << ',' << format_double(o.achieved_censoring) << ','
           << at(o.alpha, 0) << ',' << at(o.alpha, 1) << ',' << at(o.alpha_se, 0) << ',' << at(o.alpha_se, 1) << ','
           << (o.ok ? format_double(o.mse_beta) : "") << ',' << (o.ok ? format_double(o.mse_g) : "") << ','
           << csv_field(o.failure) << '\n';
    }
  }

  std::ostringstream summary_csv;
  write_summary_csv(summary_csv, summaries);
  write_file(ctx.out / "summary.csv", summary_csv.str());
  std::ostringstream curves_csv;
  write_curves_csv(curves_csv, summaries);
  write_file(ctx.out / "curves.csv", curves_csv.str());
  write_file(ctx.out / "replicates.csv", reps.str());

  // rate diagnostics for every (law, rate) group with several sample sizes
  std::map<std::pair<int, double>, std::vector<CellSummary>> groups;
  for (const auto& s : summaries) {
    groups[{static_cast<int>(s.spec.scenario.law), s.spec.scenario.censoring_rate}].push_back(s);
  }
  std::ostringstream rate_csv;
  bool any_rate = false;
  for (const auto& [key, group] : groups) {
    std::vector<std::size_t> ns;
    for (const auto& s : group) ns.push_back(s.spec.scenario.n);
    std::sort(ns.begin(), ns.end());
    if (std::adjacent_find(ns.begin(), ns.end()) != ns.end() || ns.size() < 2) continue;
    const RateReport report = convergence_diagnostic(group);
    std::ostringstream one;
    write_rate_csv(one, report);
    std::string text = one.str();
    const std::string prefix = fmt::format("{},{},", to_string(static_cast<ErrorLaw>(key.first)), format_double(key.second));
    std::istringstream lines(text);
    std::string line;
    std::getline(lines, line);
    if (!any_rate) rate_csv << "law,censoring_rate," << line << '\n';
    while (std::getline(lines, line)) rate_csv << prefix << line << '\n';
    any_rate = true;
  }
  if (any_rate) write_file(ctx.out / "rate.csv", rate_csv.str());

  for (const auto& s : summaries) {
    ctx.out_stream << fmt::format("{}: used {}/{}", s.spec.label(), s.used, s.spec.replicates);
    for (std::size_t j = 0; j < s.alpha.size(); ++j) {
      const auto& a = s.alpha[j];
      ctx.out_stream << fmt::format("  alpha{} bias {} sse {} ese {} cp {}", j + 1, fixed4(a.bias),
                                    a.sse ? fixed4(*a.sse) : "-", fixed4(a.ese), fixed4(a.cp));
    }
    ctx.out_stream << fmt::format("  mse_beta {} mse_g {}\n", fixed4(s.mean_mse_beta), fixed4(s.mean_mse_g));
  }
  for (const auto& f : failures) ctx.err_stream << "error: " << f << '\n';
  return failures.empty() ? kSuccess : kConvergence;
}

// ---------------------------------------------------------------- report

const std::vector<std::string> kSummaryHeader = {"cell",       "law",       "n",          "censoring_rate",
                                                 "replicates", "statistic", "coordinate", "value"};

std::string header_diff(const std::vector<std::string>& found) {
  std::vector<std::string> missing;
  std::vector<std::string> extra;
  for (const auto& h : kSummaryHeader) {
    if (std::find(found.begin(), found.end(), h) == found.end()) missing.push_back(h);
  }
  for (const auto& h : found) {
    if (std::find(kSummaryHeader.begin(), kSummaryHeader.end(), h) == kSummaryHeader.end()) extra.push_back(h);
  }
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
    return s.empty() ? std::string("none") : s;
  };
  if (missing.empty() && extra.empty()) return "columns out of order";
  return fmt::format("missing columns: {}; unexpected columns: {}", join(missing), join(extra));
}

int cmd_report(Context& ctx, std::vector<std::string> inputs) {
  auto& cfg = ctx.config;
  cfg.require_known("report", {"inputs"});
  if (inputs.empty()) {
    for (const auto& p : cfg.get_list("report", "inputs")) inputs.push_back(resolve(ctx, p).string());
  }
  if (inputs.empty()) throw ConfigError("report needs at least one summary CSV");
  std::string joined;
  for (const auto& p : inputs) joined += (joined.empty() ? "" : ", ") + p;
  cfg.set("report", "inputs", joined);
  write_resolved(ctx);

  struct Row {
    int law;
    double n;
    double rate;
    std::size_t order;
    std::vector<std::string> fields;
  };
  std::vector<Row> rows;
  for (const auto& path : inputs) {
    const CsvTable table = read_csv_file(path);
    if (table.header != kSummaryHeader) {
      throw DataError(fmt::format("{}: summary schema differs: {}", path, header_diff(table.header)));
    }
    for (const auto& r : table.rows) {
      const std::string where = fmt::format("{}: row for cell '{}'", path, r[0]);
      rows.push_back({static_cast<int>(error_law_from_string(r[1])), parse_double(r[2], where),
                      parse_double(r[3], where), rows.size(), r});
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.law, a.n, a.rate) < std::tie(b.law, b.n, b.rate);
  });

  std::ostringstream merged;
  for (std::size_t k = 0; k < kSummaryHeader.size(); ++k) merged << (k ? "," : "") << kSummaryHeader[k];
  merged << '\n';
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.fields.size(); ++k) merged << (k ? "," : "") << csv_field(r.fields[k]);
    merged << '\n';
  }
  write_file(ctx.out / "summary.csv", merged.str());

  // cell key -> statistic/coordinate -> value
  struct CellKey {
    int law;
    double n;
    double rate;
    std::string cell;
    bool operator<(const CellKey& o) const { return std::tie(law, n, rate, cell) < std::tie(o.law, o.n, o.rate, o.cell); }
  };
  std::map<CellKey, std::map<std::pair<std::string, std::string>, std::string>> stats;
  for (const auto& r : rows) stats[{r.law, r.n, r.rate, r.fields[0]}][{r.fields[5], r.fields[6]}] = r.fields[7];

  auto num = [](const std::map<std::pair<std::string, std::string>, std::string>& m, const std::string& stat,
                const std::string& coord) -> std::string {
    const auto it = m.find({stat, coord});
    if (it == m.end() || it->second.empty()) return "";
    return fixed4(parse_double(it->second, stat));
  };

  std::ostringstream t1;
  std::ostringstream t2;
  t1 << "law,n,censoring_rate,coordinate,bias,sse,ese,cp\n";
  t2 << "law,n,censoring_rate,mse_beta,mse_g\n";
  auto& out = ctx.out_stream;
  out << fmt::format("{:<18}{:>6}{:>7}{:>8}{:>10}{:>10}{:>10}{:>10}\n", "law", "n", "cens", "coef", "BIAS", "SSE",
                     "ESE", "CP");
  for (const auto& [key, m] : stats) {
    const std::string law = to_string(static_cast<ErrorLaw>(key.law));
    const std::string n = fmt::format("{}", static_cast<long long>(key.n));
    const std::string rate = fmt::format("{}", key.rate);
    for (const std::string coord : {"alpha1", "alpha2"}) {
      if (!m.count({"bias", coord})) continue;
      t1 << law << ',' << n << ',' << rate << ',' << coord << ',' << num(m, "bias", coord) << ','
         << num(m, "sse", coord) << ',' << num(m, "ese", coord) << ',' << num(m, "cp", coord) << '\n';
      out << fmt::format("{:<18}{:>6}{:>7}{:>8}{:>10}{:>10}{:>10}{:>10}\n", law, n, fixed4(key.rate), coord,
                         num(m, "bias", coord), num(m, "sse", coord), num(m, "ese", coord), num(m, "cp", coord));
    }
    t2 << law << ',' << n << ',' << rate << ',' << num(m, "mse_beta", "") << ',' << num(m, "mse_g", "") << '\n';
  }
  write_file(ctx.out / "table1.csv", t1.str());
  write_file(ctx.out / "table2.csv", t2.str());
  return kSuccess;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Functional accelerated failure time models: simulation, sieve fitting and Monte Carlo studies", "faft"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  CommonOptions common;
  std::string data_flag;
  std::string warm_flag;
  std::vector<std::string> report_inputs;

  auto* simulate = app.add_subcommand("simulate", "Generate one synthetic dataset");
  add_common(simulate, common);
  auto* fit = app.add_subcommand("fit", "Fit the model to a wide-format CSV");
  add_common(fit, common);
  fit->add_option("--data", data_flag, "Dataset CSV (overrides [fit] data)");
  fit->add_option("--warm-start", warm_flag, "Start from an archived model and keep its bases");
  auto* replicate = app.add_subcommand("replicate", "Run Monte Carlo cells");
  add_common(replicate, common);
  auto* report = app.add_subcommand("report", "Merge summary CSVs into coefficient and MSE tables");
  add_common(report, common);
  report->add_option("inputs", report_inputs, "Summary CSV files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // help requests exit with 0 and print to out; real parse errors go to err
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kConfig;
  }

  try {
    Context ctx = make_context(common, out, err);
    if (simulate->parsed()) return cmd_simulate(ctx);
    if (fit->parsed()) return cmd_fit(ctx, data_flag, warm_flag);
    if (replicate->parsed()) return cmd_replicate(ctx);
    return cmd_report(ctx, report_inputs);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace faft::cli
