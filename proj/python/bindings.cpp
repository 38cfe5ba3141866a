// Python bindings: simulation, fitting from arrays and the command line.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "faft/cli.hpp"
#include "faft/error.hpp"
#include "faft/estimation.hpp"
#include "faft/inference.hpp"
#include "faft/likelihood.hpp"
#include "faft/simulation.hpp"

namespace py = pybind11;
using namespace faft;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::dict simulate(std::size_t n, const std::string& law, double censoring_rate, std::uint64_t seed,
                  std::size_t grid_points) {
  ScenarioConfig sc;
  sc.n = n;
  sc.law = error_law_from_string(law);
  sc.censoring_rate = censoring_rate;
  sc.seed = seed;
  sc.validate();
  if (grid_points < 2) throw ConfigError("grid_points must be at least 2");
  const auto sim = generate_dataset(sc);
  const auto grid = uniform_grid(0.0, 1.0, grid_points);
  Array time(static_cast<py::ssize_t>(n));
  py::array_t<int> status(static_cast<py::ssize_t>(n));
  Array x({static_cast<py::ssize_t>(n), py::ssize_t{2}});
  Array z({static_cast<py::ssize_t>(n), static_cast<py::ssize_t>(grid_points)});
  auto t = time.mutable_unchecked<1>();
  auto d = status.mutable_unchecked<1>();
  auto xv = x.mutable_unchecked<2>();
  auto zv = z.mutable_unchecked<2>();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = sim.raw[i];
    const auto ii = static_cast<py::ssize_t>(i);
    t(ii) = rec.time;
    d(ii) = rec.event ? 1 : 0;
    xv(ii, 0) = rec.x[0];
    xv(ii, 1) = rec.x[1];
    for (std::size_t k = 0; k < grid_points; ++k) zv(ii, static_cast<py::ssize_t>(k)) = rec.z.value(grid[k]);
  }
  py::dict out;
  out["time"] = time;
  out["status"] = status;
  out["x"] = x;
  out["z"] = z;
  out["grid"] = grid;
  out["tau"] = sim.tau;
  out["achieved_censoring"] = sim.achieved_censoring;
  out["alpha"] = sim.truth.alpha;
  return out;
}

py::dict fit(const Array& time, const py::array_t<int, py::array::c_style | py::array::forcecast>& status,
             const Array& x, const Array& z, std::vector<double> grid, int order,
             std::optional<int> basis_dimension, bool center, std::size_t band_points) {
  if (time.ndim() != 1 || status.ndim() != 1 || x.ndim() != 2 || z.ndim() != 2) {
    throw StructureError("expected time[n], status[n], x[n, p] and z[n, m]");
  }
  const auto n = static_cast<std::size_t>(time.shape(0));
  if (static_cast<std::size_t>(status.shape(0)) != n || static_cast<std::size_t>(x.shape(0)) != n ||
      static_cast<std::size_t>(z.shape(0)) != n) {
    throw StructureError("time, status, x and z must have the same number of rows");
  }
  const auto m = static_cast<std::size_t>(z.shape(1));
  if (grid.empty()) grid = uniform_grid(0.0, 1.0, m);
  if (grid.size() != m) throw StructureError("grid length must match the columns of z");
  auto t = time.unchecked<1>();
  auto d = status.unchecked<1>();
  auto xv = x.unchecked<2>();
  auto zv = z.unchecked<2>();
  std::vector<SurvivalRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<py::ssize_t>(i);
    if (d(ii) != 0 && d(ii) != 1) throw DataError("status must be 0 or 1");
    std::vector<double> xi(static_cast<std::size_t>(x.shape(1)));
    for (std::size_t j = 0; j < xi.size(); ++j) xi[j] = xv(ii, static_cast<py::ssize_t>(j));
    std::vector<double> zi(m);
    for (std::size_t k = 0; k < m; ++k) zi[k] = zv(ii, static_cast<py::ssize_t>(k));
    records.push_back({t(ii), d(ii) == 1, std::move(xi), FunctionalCovariate::grid(grid, std::move(zi))});
  }
  SurvivalDataset data(std::move(records));
  if (center) data = data.centered();

  auto settings = SieveSettings::for_sample_size(n, order);
  if (basis_dimension) {
    settings.beta_dimension = *basis_dimension;
    settings.loghaz_dimension = *basis_dimension;
  }
  std::optional<FitResult> fitted;
  {
    py::gil_scoped_release release;
    fitted = fit_faft(data, settings);
  }
  const FitResult& result = *fitted;
  py::dict out;
  out["alpha"] = result.params.alpha;
  out["alpha_se"] = result.alpha_se;
  out["loglik"] = result.loglik;
  out["converged"] = result.converged;
  out["termination"] = to_string(result.trace.reason);
  out["iterations"] = result.trace.iterations.empty() ? 0 : result.trace.iterations.size() - 1;
  out["support"] = py::make_tuple(result.support_lower(), result.support_upper());
  out["beta_coefficients"] = result.params.beta.coefficients();
  out["loghaz_coefficients"] = result.params.loghaz.coefficients();
  out["inference_error"] = result.inference_error;
  out["x_means"] = data.centering().x_means;
  if (result.has_inference()) {
    const auto band = beta_pointwise_band(result, uniform_grid(0.0, 1.0, band_points));
    py::dict b;
    b["grid"] = band.grid;
    b["estimate"] = band.estimate;
    b["lower"] = band.lower;
    b["upper"] = band.upper;
    out["beta_band"] = b;
  }
  return out;
}

py::tuple run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> full{"faft"};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : full) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sieve maximum likelihood for the functional accelerated failure time model";

  auto base = py::register_exception<Error>(m, "FaftError");
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<StructureError>(m, "StructureError", base.ptr());
  py::register_exception<UnsupportedOperation>(m, "UnsupportedOperation", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
  py::register_exception<SingularInformation>(m, "SingularInformation", base.ptr());
  py::register_exception<ArchiveError>(m, "ArchiveError", base.ptr());
  py::register_exception<SupportViolation>(m, "SupportViolation", base.ptr());

  m.def("q_n_rule", &q_n_rule, py::arg("n"), "floor(n^(1/4)), the sieve dimension for sample size n");
  m.def("true_beta", [](double s, int terms) { return true_beta(s, terms); }, py::arg("s"), py::arg("terms") = 50);
  m.def(
      "true_loghazard", [](const std::string& law, double t) { return true_loghazard(error_law_from_string(law), t); },
      py::arg("law"), py::arg("t"));
  m.def("simulate", &simulate, py::arg("n") = 400, py::arg("law") = "exponential", py::arg("censoring_rate") = 0.25,
        py::arg("seed") = 1, py::arg("grid_points") = 101,
        "Simulated dataset on the raw scale: time, status, x (n x 2), z (n x grid_points) and the truth.");
  m.def("fit", &fit, py::arg("time"), py::arg("status"), py::arg("x"), py::arg("z"),
        py::arg("grid") = std::vector<double>{}, py::arg("order") = 2, py::arg("basis_dimension") = py::none(),
        py::arg("center") = true, py::arg("band_points") = 101,
        "Fits the model to trajectories sampled on `grid` (default: equally spaced on [0, 1]).");
  m.def("run_cli", &run_cli, py::arg("args"), "Runs the faft command line; returns (exit_code, stdout, stderr).");
}
