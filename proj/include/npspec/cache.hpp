#pragma once

// On-disk cache of assembled matrices. File layout: a 64-byte header
//   [0, 8)   magic "NPSPEC01"
//   [8, 16)  rows, uint64 little-endian
//   [16, 24) cols, uint64 little-endian
//   [24, 32) first 8 bytes of the SHA-256 of the canonical key
//   [32, 48) operator tag, zero padded
//   [48, 64) zero
// followed by rows * cols float64 values, little-endian, row-major.

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "npspec/assembly.hpp"

namespace npspec {

struct CacheKey {
  std::string curve_spec;
  double lambda = 0.0;
  double mu = 0.0;
  int n = 0;
  std::string tag;
  std::string code_version = NPSPEC_VERSION;

  std::string canonical() const;
};

class MatrixCache {
 public:
  explicit MatrixCache(std::filesystem::path dir);

  std::filesystem::path path_for(const CacheKey& key) const;

  /// Empty when absent; throws std::runtime_error on a corrupt or mismatched file.
  std::optional<Eigen::MatrixXd> load(const CacheKey& key) const;

  /// Atomic write (temporary file + rename).
  void store(const CacheKey& key, const Eigen::MatrixXd& matrix) const;

  /// Loads the matrix or builds and stores it.
  Eigen::MatrixXd get_or_build(const CacheKey& key,
                               const std::function<Eigen::MatrixXd()>& build) const;

 private:
  std::filesystem::path dir_;
};

}  // namespace npspec
