#pragma once

#include <stdexcept>
#include <string>

namespace npspec {

/// Invalid user input: material constants, curve specs, grid sizes, CLI flags.
/// The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not deliver a trustworthy result
/// (eigensolver non-convergence, missing spectral gap, wrong null-space
/// dimension, ...). The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace npspec
