#pragma once

// Command layer behind the npspec executable: run configuration, the
// individual commands and their persisted outputs.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "npspec/report.hpp"

namespace npspec {

struct RunConfig {
  std::string command;
  std::string curve = "ellipse:a=2,b=1";
  double lambda = 0.0;
  double mu = 1.0;
  int n = 512;
  std::optional<int> n_check;  // 2n when unset
  int contour_nodes = 64;
  std::string window;          // "<lo>:<hi>", command-specific default when empty
  double tol = 0.15;           // relative tolerance of the sharp-rate verdicts
  double im_tol = 1e-8;        // relative to the norm bound of K_N
  std::string out = "npspec_run";
  std::uint64_t seed = 0;
  std::string kernel = "A";
  std::string field = "linear:a11=1,a12=0,a21=0,a22=-1";
  int m_max = 20;
  std::optional<double> eps_q;
  std::optional<double> smoothness;
  std::vector<double> sweep_a = {1.2, 1.5, 2.0};
  std::string cache_dir;  // empty disables the matrix cache; not part of the manifest
};

inline const std::vector<std::string> kCommands = {
    "spectrum", "decay", "kernel-decay", "defect", "project",
    "truncate", "bvp-check", "sweep", "verify"};

/// Overlays the keys present in a JSON config object. Unknown keys and
/// wrongly typed values throw ConfigError.
RunConfig merge_config(RunConfig base, const Json& config);

/// Fills every command-dependent default (curve canonicalization, n_check,
/// window) and validates ranges. Throws ConfigError.
RunConfig materialize(RunConfig config);

/// Manifest of a materialized config; every input that affects outputs.
Json manifest(const RunConfig& config);

/// Output files written by a command, in write order.
struct RunResult {
  std::vector<std::string> files;
  std::vector<std::string> messages;  // human-readable summary lines
  bool ok = true;                     // false only for a failed verify
};

/// Runs a materialized config. Throws ConfigError / NumericalError.
RunResult run_command(const RunConfig& config);

/// argv front end: parse, run, map exceptions to exit codes
/// (0 ok, 1 internal, 2 config, 3 numerical or failed verification).
int main_entry(int argc, char** argv);

}  // namespace npspec
