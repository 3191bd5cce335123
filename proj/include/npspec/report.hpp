#pragma once

// JSON/CSV serialization of results, run manifests and atomic file output.

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "npspec/ratefit.hpp"
#include "npspec/spectral.hpp"

namespace npspec {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

Json to_json(const SpectrumReport& report);
Json to_json(const RateFit& fit);
Json to_json(const Verdict& verdict);
Json to_json(const DecayTable& table);

/// Columns j, lambda_plus, dist_plus, lambda_minus, dist_minus.
std::string spectrum_csv(const SpectrumReport& report);

/// Columns j, d_j, model prediction (empty outside the fit window).
std::string fit_csv(const std::vector<DecaySample>& samples, const RateFit& fit);

/// SHA-256 of the compact dump of a manifest.
std::string manifest_hash(const Json& manifest);

/// Adds "manifest" and "manifest_hash" to a JSON report body.
Json attach_manifest(Json body, const Json& manifest);

/// Prefixes "# manifest_hash=<hex>" to CSV text.
std::string attach_manifest(const std::string& csv, const Json& manifest);

/// Writes through a sibling temporary file and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

struct VerifyResult {
  bool ok = true;
  std::vector<std::string> messages;
};

/// Re-hashes `<base>.manifest.json`, checks the SHA-256 digests it lists for
/// the output files, and checks every `<base>.*` file that carries a
/// manifest hash against it.
VerifyResult verify_outputs(const std::filesystem::path& base);

}  // namespace npspec
