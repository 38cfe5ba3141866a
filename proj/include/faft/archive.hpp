/**
 * @file archive.hpp
 * @brief Versioned text archive of a fitted model.
 *
 * The format is line oriented: a magic line, a version line, then one
 * "key values..." line per field and a closing "end" line. Every number is
 * written with 17 significant digits so a load reproduces the saved doubles
 * exactly. Loading is all-or-nothing: any malformed or missing field raises
 * ArchiveError and nothing is returned.
 */
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "faft/dataset.hpp"
#include "faft/inference.hpp"

namespace faft {

inline constexpr int kArchiveVersion = 1;

struct ModelArchive {
  FitResult fit;
  CenteringInfo centering;
  std::size_t record_count = 0;
  std::uint64_t fingerprint = 0;
};

/// `data` supplies the centering metadata and the fingerprint.
void write_model(std::ostream& out, const FitResult& fit, const SurvivalDataset& data);
void save_model(const std::string& path, const FitResult& fit, const SurvivalDataset& data);

ModelArchive read_model(std::istream& in, const std::string& source);
ModelArchive load_model(const std::string& path);

struct Rescore {
  double loglik = 0.0;
  bool fingerprint_matches = true;
  std::string warning;  ///< set when the dataset differs from the archived one
};

/// Log-likelihood of the archived parameters on `data`.
Rescore rescore(const ModelArchive& archive, const SurvivalDataset& data);

}  // namespace faft
