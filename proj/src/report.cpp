#include "npspec/report.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "npspec/hash.hpp"

namespace npspec {

namespace {

Json members(const std::vector<ClusterMember>& cluster) {
  Json out = Json::array();
  for (const auto& m : cluster) {
    Json e = {{"j", m.j}, {"lambda", m.lambda}, {"dist", m.dist}};
    if (m.match_error >= 0.0) {
      e["match_error"] = m.match_error;
      e["resolved"] = m.resolved;
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Json to_json(const SpectrumReport& report) {
  Json eigs = Json::array();
  for (const auto& z : report.eigenvalues) eigs.push_back({z.real(), z.imag()});
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["curve"] = report.curve;
  j["lambda"] = report.params ? Json(report.params->lambda()) : Json();
  j["mu"] = report.params ? Json(report.params->mu()) : Json();
  j["k0"] = report.k0;
  j["n"] = report.n;
  j["n_check"] = report.n_check;
  j["norm"] = "discrete L2";
  j["nyquist_deflated"] = true;
  j["eigenvalues"] = std::move(eigs);
  j["plus"] = members(report.plus);
  j["minus"] = members(report.minus);
  j["outliers"] = report.outliers;
  j["resolved_count"] = report.resolved_count();
  j["resolved_plus"] = report.resolved_plus;
  j["resolved_minus"] = report.resolved_minus;
  j["im_tol"] = report.im_tol;
  j["warnings"] = report.warnings;
  return j;
}

Json to_json(const RateFit& fit) {
  Json j;
  j["model"] = to_string(fit.model);
  j["cluster"] = fit.cluster;
  j["C"] = fit.C;
  j[fit.model == DecayModel::Polynomial ? "d" : "eps"] = fit.rate;
  j["window"] = {fit.window.j_min, fit.window.j_max};
  j["index_scale"] = fit.index_scale;
  j["residual"] = fit.residual;
  return j;
}

Json to_json(const Verdict& v) {
  Json j;
  j["claim"] = v.claim;
  j["quote_anchor"] = v.quote_anchor;
  j["fitted"] = v.fitted;
  j["theoretical"] = v.theoretical ? Json(*v.theoretical) : Json();
  j["tolerance"] = v.tolerance;
  j["pass"] = v.pass ? Json(*v.pass) : Json("not checkable");
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

Json to_json(const DecayTable& table) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < table.k.size(); ++i) rows.push_back({table.k[i], table.max_abs[i]});
  return rows;
}

std::string spectrum_csv(const SpectrumReport& report) {
  std::ostringstream os;
  os << "j,lambda_plus,dist_plus,lambda_minus,dist_minus\n";
  const std::size_t rows = std::max(report.plus.size(), report.minus.size());
  for (std::size_t i = 0; i < rows; ++i) {
    os << i + 1 << ',';
    if (i < report.plus.size()) {
      os << format_double(report.plus[i].lambda) << ',' << format_double(report.plus[i].dist);
    } else {
      os << ',';
    }
    os << ',';
    if (i < report.minus.size()) {
      os << format_double(report.minus[i].lambda) << ',' << format_double(report.minus[i].dist);
    } else {
      os << ',';
    }
    os << '\n';
  }
  return os.str();
}

std::string fit_csv(const std::vector<DecaySample>& samples, const RateFit& fit) {
  std::ostringstream os;
  os << "j,d_j,model\n";
  for (const auto& s : samples) {
    os << s.j << ',' << format_double(s.d) << ',';
    if (s.j >= fit.window.j_min && s.j <= fit.window.j_max) os << format_double(fit.predict(s.j));
    os << '\n';
  }
  return os.str();
}

std::string manifest_hash(const Json& manifest) { return sha256_hex(manifest.dump()); }

Json attach_manifest(Json body, const Json& manifest) {
  body["manifest"] = manifest;
  body["manifest_hash"] = manifest_hash(manifest);
  return body;
}

std::string attach_manifest(const std::string& csv, const Json& manifest) {
  return "# manifest_hash=" + manifest_hash(manifest) + "\n" + csv;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("failed to write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

VerifyResult verify_outputs(const std::filesystem::path& base) {
  VerifyResult result;
  auto fail = [&](std::string msg) {
    result.ok = false;
    result.messages.push_back(std::move(msg));
  };
  auto manifest_path = base;
  manifest_path += ".manifest.json";
  Json stored;
  try {
    stored = Json::parse(read_file(manifest_path));
  } catch (const std::exception& e) {
    fail(std::string("cannot load manifest: ") + e.what());
    return result;
  }
  const std::string expected = manifest_hash(stored.at("manifest"));
  if (stored.value("manifest_hash", "") != expected) {
    fail("manifest hash mismatch in " + manifest_path.string());
    return result;
  }
  result.messages.push_back("manifest " + manifest_path.filename().string() + " ok (" + expected + ")");

  const auto dir = base.has_parent_path() ? base.parent_path() : std::filesystem::path(".");
  if (stored.contains("files")) {
    for (const auto& [name, digest] : stored["files"].items()) {
      try {
        if (sha256_hex(read_file(dir / name)) != digest.get<std::string>()) {
          fail(name + ": content digest does not match the manifest");
        }
      } catch (const std::exception& e) {
        fail(name + ": " + e.what());
      }
    }
  }
  const std::string stem = base.filename().string() + ".";
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.starts_with(stem) && entry.path() != manifest_path && !name.ends_with(".tmp")) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    const std::string text = read_file(path);
    std::string found;
    if (path.extension() == ".json") {
      try {
        const Json j = Json::parse(text);
        found = j.value("manifest_hash", "");
        if (j.contains("manifest") && manifest_hash(j["manifest"]) != found) {
          fail(path.filename().string() + ": embedded manifest does not match its hash");
          continue;
        }
      } catch (const std::exception& e) {
        fail(path.filename().string() + ": " + e.what());
        continue;
      }
    } else {
      const std::string prefix = "# manifest_hash=";
      if (text.starts_with(prefix)) found = text.substr(prefix.size(), text.find('\n') - prefix.size());
    }
    if (found != expected) {
      fail(path.filename().string() + ": manifest hash " + (found.empty() ? "missing" : found) +
           " does not match");
    } else {
      result.messages.push_back(path.filename().string() + " ok");
    }
  }
  return result;
}

}  // namespace npspec
