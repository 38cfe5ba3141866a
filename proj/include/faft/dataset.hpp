#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "faft/covariate.hpp"

namespace faft {

struct SurvivalRecord {
  double time = 0.0;  ///< transformed observed time Y = min(T, C)
  bool event = false;  ///< Delta = 1{T <= C}
  std::vector<double> x;
  FunctionalCovariate z;
};

/// Shifts already subtracted from the covariates.
struct CenteringInfo {
  std::vector<double> x_means;
  std::vector<double> z_grid;   ///< empty when the functional part was not grid-centered
  std::vector<double> z_means;  ///< pointwise means at z_grid
};

class SurvivalDataset {
 public:
  SurvivalDataset() = default;
  /// Throws DataError on empty input, non-finite values or ragged scalar covariates.
  explicit SurvivalDataset(std::vector<SurvivalRecord> records, CenteringInfo centering = {});

  std::size_t size() const noexcept { return records_.size(); }
  std::size_t num_scalar() const noexcept { return p_; }
  const SurvivalRecord& operator[](std::size_t i) const { return records_[i]; }
  const std::vector<SurvivalRecord>& records() const noexcept { return records_; }
  const CenteringInfo& centering() const noexcept { return centering_; }

  std::size_t num_events() const;
  double censoring_fraction() const;

  /**
   * Returns a copy with mean-zero scalar columns and, when every record carries a
   * grid covariate on a common grid, pointwise mean-zero trajectories. Shifts are
   * accumulated into centering(). Analytic covariates are left untouched.
   */
  SurvivalDataset centered() const;

  /// FNV-1a over record count, Y, Delta, X and Z sampled at 11 fixed points.
  std::uint64_t fingerprint() const;

 private:
  std::vector<SurvivalRecord> records_;
  CenteringInfo centering_;
  std::size_t p_ = 0;
};

}  // namespace faft
