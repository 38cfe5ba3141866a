#include "faft/archive.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "faft/csv.hpp"
#include "faft/error.hpp"

namespace faft {

namespace {

constexpr const char* kMagic = "faft-model-archive";

void write_values(std::ostream& out, const char* key, const std::vector<double>& v) {
  out << key << ' ' << v.size();
  for (double x : v) out << ' ' << format_double(x);
  out << '\n';
}

void write_basis(std::ostream& out, const char* key, const SplineBasis& basis) {
  const auto& k = basis.knots();
  out << key << ' ' << k.order() << ' ' << format_double(k.lower()) << ' ' << format_double(k.upper()) << ' '
      << k.interior().size();
  for (double t : k.interior()) out << ' ' << format_double(t);
  out << '\n';
}

void write_matrix(std::ostream& out, const char* key, const Eigen::MatrixXd& m) {
  out << key << ' ' << m.rows() << ' ' << m.cols();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ' ' << format_double(m(i, j));
  }
  out << '\n';
}

// Reads "key tokens..." lines in a fixed order.
class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  std::istringstream line(const std::string& key) {
    std::string text;
    while (std::getline(in_, text)) {
      ++line_no_;
      if (!text.empty() && text.back() == '\r') text.pop_back();
      if (!text.empty()) break;
    }
    if (!in_ && text.empty()) fail(fmt::format("missing '{}' line", key));
    std::istringstream ss(text);
    std::string found;
    ss >> found;
    if (found != key) fail(fmt::format("expected '{}', found '{}'", key, found));
    return ss;
  }

  std::string rest(const std::string& key) {
    auto ss = line(key);
    std::string text;
    std::getline(ss, text);
    if (!text.empty() && text.front() == ' ') text.erase(0, 1);
    return text;
  }

  template <typename T>
  T scalar(std::istringstream& ss, const std::string& what) {
    std::string token;
    if (!(ss >> token)) fail(fmt::format("missing value for {}", what));
    if constexpr (std::is_same_v<T, double>) {
      try {
        return parse_double(token, what);
      } catch (const DataError&) {
        fail(fmt::format("bad number '{}' for {}", token, what));
      }
    } else {
      std::istringstream ts(token);
      T value{};
      if (!(ts >> value) || !ts.eof()) fail(fmt::format("bad value '{}' for {}", token, what));
      return value;
    }
  }

  void done(std::istringstream& ss, const std::string& key) {
    std::string extra;
    if (ss >> extra) fail(fmt::format("trailing data on '{}' line", key));
  }

  std::vector<double> values(const std::string& key) {
    auto ss = line(key);
    const auto count = scalar<std::size_t>(ss, key + " count");
    std::vector<double> v(count);
    for (auto& x : v) x = scalar<double>(ss, key);
    done(ss, key);
    return v;
  }

  SplineBasis basis(const std::string& key) {
    auto ss = line(key);
    const int order = scalar<int>(ss, key + " order");
    const double lower = scalar<double>(ss, key + " lower");
    const double upper = scalar<double>(ss, key + " upper");
    const auto count = scalar<std::size_t>(ss, key + " interior count");
    std::vector<double> interior(count);
    for (auto& x : interior) x = scalar<double>(ss, key);
    done(ss, key);
    try {
      return SplineBasis(KnotSequence(lower, upper, std::move(interior), order));
    } catch (const Error& e) {
      fail(fmt::format("invalid {}: {}", key, e.what()));
    }
  }

  Eigen::MatrixXd matrix(const std::string& key) {
    auto ss = line(key);
    const auto rows = scalar<Eigen::Index>(ss, key + " rows");
    const auto cols = scalar<Eigen::Index>(ss, key + " cols");
    if (rows < 0 || cols < 0 || rows > 100000 || cols > 100000) fail(fmt::format("bad {} shape", key));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scalar<double>(ss, key);
    }
    done(ss, key);
    return m;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw ArchiveError(fmt::format("{}:{}: {}", source_, line_no_, message));
  }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_no_ = 0;
};

}  // namespace

void write_model(std::ostream& out, const FitResult& fit, const SurvivalDataset& data) {
  out << kMagic << '\n';
  out << "version " << kArchiveVersion << '\n';
  out << "records " << data.size() << '\n';
  out << "fingerprint " << fmt::format("{:016x}", data.fingerprint()) << '\n';
  write_values(out, "alpha", fit.params.alpha);
  write_basis(out, "beta_basis", fit.params.beta.basis());
  write_values(out, "beta_coefficients", fit.params.beta.coefficients());
  write_basis(out, "loghaz_basis", fit.params.loghaz.basis());
  write_values(out, "loghaz_coefficients", fit.params.loghaz.coefficients());
  out << "loglik " << format_double(fit.loglik) << '\n';
  out << "n " << fit.n << '\n';
  out << "termination " << to_string(fit.trace.reason) << '\n';
  out << "iterations " << (fit.trace.iterations.empty() ? 0 : fit.trace.iterations.size() - 1) << '\n';
  out << "widenings " << fit.widenings << '\n';
  out << "converged " << (fit.converged ? 1 : 0) << '\n';
  out << "coefficient_bound_active " << (fit.coefficient_bound_active ? 1 : 0) << '\n';
  write_matrix(out, "hessian", fit.hessian);
  write_matrix(out, "covariance", fit.covariance);
  write_values(out, "alpha_se", fit.alpha_se);
  write_values(out, "x_means", data.centering().x_means);
  write_values(out, "z_grid", data.centering().z_grid);
  write_values(out, "z_means", data.centering().z_means);
  out << "inference_error " << (fit.inference_error.empty() ? "-" : fit.inference_error) << '\n';
  out << "end\n";
}

void save_model(const std::string& path, const FitResult& fit, const SurvivalDataset& data) {
  std::ostringstream buffer;
  write_model(buffer, fit, data);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArchiveError(fmt::format("cannot write '{}'", path));
  out << buffer.str();
  if (!out) throw ArchiveError(fmt::format("write to '{}' failed", path));
}

ModelArchive read_model(std::istream& in, const std::string& source) {
  Reader r(in, source);
  {
    std::string magic;
    if (!std::getline(in, magic)) r.fail("empty archive");
    if (!magic.empty() && magic.back() == '\r') magic.pop_back();
    if (magic != kMagic) r.fail("not a model archive (bad header)");
  }
  {
    auto ss = r.line("version");
    const int version = r.scalar<int>(ss, "version");
    if (version != kArchiveVersion) {
      r.fail(fmt::format("incompatible archive version {} (this build reads version {})", version, kArchiveVersion));
    }
  }
  auto ss = r.line("records");
  const auto records = r.scalar<std::size_t>(ss, "records");
  std::string fp_text = r.rest("fingerprint");
  std::uint64_t fingerprint = 0;
  {
    if (fp_text.size() != 16) r.fail("fingerprint must be 16 hex digits");
    std::size_t used = 0;
    try {
      fingerprint = std::stoull(fp_text, &used, 16);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != 16) r.fail(fmt::format("bad fingerprint '{}'", fp_text));
  }
  std::vector<double> alpha = r.values("alpha");
  SplineBasis beta_basis = r.basis("beta_basis");
  std::vector<double> beta_coef = r.values("beta_coefficients");
  SplineBasis loghaz_basis = r.basis("loghaz_basis");
  std::vector<double> loghaz_coef = r.values("loghaz_coefficients");
  if (beta_coef.size() != beta_basis.dimension() || loghaz_coef.size() != loghaz_basis.dimension()) {
    r.fail("coefficient count does not match its basis");
  }
  ss = r.line("loglik");
  const double loglik = r.scalar<double>(ss, "loglik");
  ss = r.line("n");
  const auto n = r.scalar<std::size_t>(ss, "n");
  Termination reason{};
  try {
    reason = termination_from_string(r.rest("termination"));
  } catch (const ConfigError& e) {
    r.fail(e.what());
  }
  ss = r.line("iterations");
  const auto iterations = r.scalar<std::size_t>(ss, "iterations");
  ss = r.line("widenings");
  const int widenings = r.scalar<int>(ss, "widenings");
  ss = r.line("converged");
  const int converged = r.scalar<int>(ss, "converged");
  ss = r.line("coefficient_bound_active");
  const int bound = r.scalar<int>(ss, "coefficient_bound_active");
  Eigen::MatrixXd hessian = r.matrix("hessian");
  Eigen::MatrixXd covariance = r.matrix("covariance");
  std::vector<double> alpha_se = r.values("alpha_se");
  CenteringInfo centering;
  centering.x_means = r.values("x_means");
  centering.z_grid = r.values("z_grid");
  centering.z_means = r.values("z_means");
  std::string inference_error = r.rest("inference_error");
  if (inference_error == "-") inference_error.clear();
  r.line("end");

  const auto dim = static_cast<Eigen::Index>(alpha.size() + beta_coef.size() + loghaz_coef.size());
  if (hessian.size() != 0 && (hessian.rows() != dim || hessian.cols() != dim)) r.fail("hessian has the wrong size");
  if (covariance.size() != 0 && (covariance.rows() != dim || covariance.cols() != dim)) {
    r.fail("covariance has the wrong size");
  }
  if (centering.z_grid.size() != centering.z_means.size()) r.fail("z_grid and z_means differ in length");

  FitResult fit{.params = {std::move(alpha), SplineFunction(std::move(beta_basis), std::move(beta_coef)),
                           SplineFunction(std::move(loghaz_basis), std::move(loghaz_coef))},
                .loglik = loglik,
                .hessian = std::move(hessian),
                .covariance = std::move(covariance),
                .alpha_se = std::move(alpha_se),
                .trace = {},
                .n = n,
                .widenings = widenings,
                .converged = converged != 0,
                .coefficient_bound_active = bound != 0,
                .inference_error = std::move(inference_error)};
  fit.trace.reason = reason;
  fit.trace.iterations.resize(iterations + 1);
  return ModelArchive{std::move(fit), std::move(centering), records, fingerprint};
}

ModelArchive load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArchiveError(fmt::format("cannot open '{}'", path));
  return read_model(in, path);
}

Rescore rescore(const ModelArchive& archive, const SurvivalDataset& data) {
  Rescore out;
  out.fingerprint_matches = data.size() == archive.record_count && data.fingerprint() == archive.fingerprint;
  if (!out.fingerprint_matches) {
    out.warning = fmt::format("dataset fingerprint {:016x} ({} records) differs from the archived {:016x} ({} records)",
                              data.fingerprint(), data.size(), archive.fingerprint, archive.record_count);
  }
  out.loglik = log_likelihood(data, archive.fit.params);
  return out;
}

}  // namespace faft
