#include "faft/dataset.hpp"

#include <cmath>
#include <cstring>

#include <fmt/format.h>

#include "faft/error.hpp"

namespace faft {

SurvivalDataset::SurvivalDataset(std::vector<SurvivalRecord> records, CenteringInfo centering)
    : records_(std::move(records)), centering_(std::move(centering)) {
  if (records_.empty()) throw DataError("dataset has no records");
  p_ = records_.front().x.size();
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.x.size() != p_) {
      throw DataError(fmt::format("record {} has {} scalar covariates, expected {}", i, r.x.size(), p_));
    }
    if (!std::isfinite(r.time)) throw DataError(fmt::format("record {} has non-finite time", i));
    for (double v : r.x) {
      if (!std::isfinite(v)) throw DataError(fmt::format("record {} has a non-finite covariate", i));
    }
  }
  if (centering_.x_means.empty()) centering_.x_means.assign(p_, 0.0);
}

std::size_t SurvivalDataset::num_events() const {
  std::size_t d = 0;
  for (const auto& r : records_) d += r.event ? 1 : 0;
  return d;
}

double SurvivalDataset::censoring_fraction() const {
  return 1.0 - static_cast<double>(num_events()) / static_cast<double>(size());
}

SurvivalDataset SurvivalDataset::centered() const {
  const auto n = static_cast<double>(size());
  std::vector<SurvivalRecord> out = records_;
  CenteringInfo info = centering_;

  for (std::size_t j = 0; j < p_; ++j) {
    double mean = 0.0;
    for (const auto& r : records_) mean += r.x[j];
    mean /= n;
    for (auto& r : out) r.x[j] -= mean;
    info.x_means[j] += mean;
  }

  bool common_grid = true;
  const auto& grid0 = records_.front().z.grid_points();
  for (const auto& r : records_) {
    if (!r.z.is_grid() || r.z.grid_points() != grid0) {
      common_grid = false;
      break;
    }
  }
  if (common_grid) {
    std::vector<double> means(grid0.size(), 0.0);
    for (const auto& r : records_) {
      const auto& v = r.z.grid_values();
      for (std::size_t k = 0; k < v.size(); ++k) means[k] += v[k];
    }
    for (double& m : means) m /= n;
    for (auto& r : out) {
      std::vector<double> v = r.z.grid_values();
      for (std::size_t k = 0; k < v.size(); ++k) v[k] -= means[k];
      r.z = FunctionalCovariate::grid(grid0, std::move(v));
    }
    if (info.z_grid.empty()) {
      info.z_grid = grid0;
      info.z_means = means;
    } else if (info.z_grid == grid0) {
      for (std::size_t k = 0; k < means.size(); ++k) info.z_means[k] += means[k];
    }
  }
  return SurvivalDataset(std::move(out), std::move(info));
}

namespace {

struct Fnv1a {
  std::uint64_t h = 1469598103934665603ULL;
  void bytes(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  }
  void value(double v) {
    if (v == 0.0) v = 0.0;  // fold -0
    bytes(&v, sizeof v);
  }
};

}  // namespace

std::uint64_t SurvivalDataset::fingerprint() const {
  Fnv1a f;
  const std::uint64_t n = records_.size();
  f.bytes(&n, sizeof n);
  for (const auto& r : records_) {
    f.value(r.time);
    f.value(r.event ? 1.0 : 0.0);
    for (double v : r.x) f.value(v);
    for (int k = 0; k <= 10; ++k) f.value(r.z.value(k / 10.0));
  }
  return f.h;
}

}  // namespace faft
