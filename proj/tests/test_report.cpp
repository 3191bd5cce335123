#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "npspec/cache.hpp"
#include "npspec/hash.hpp"
#include "npspec/report.hpp"

namespace npspec {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("npspec_report_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

SpectrumReport sample_report() {
  SpectrumReport r = cluster_pm_k0({0.5, 0.3, 0.26, -0.24, -0.2}, 0.25);
  r.curve = "ellipse:a=2,b=1";
  r.params = LameParams(0.0, 1.0);
  r.n = 16;
  r.eigenvalues = {{-0.24, 0}, {-0.2, 0}, {0.26, 0}, {0.3, 0}, {0.5, 0}};
  r.im_tol = 1e-9;
  return r;
}

TEST(Report, SpectrumJsonFields) {
  const Json j = to_json(sample_report());
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["k0"], 0.25);
  EXPECT_EQ(j["plus"].size(), 2u);
  EXPECT_EQ(j["outliers"][0], 0.5);
  EXPECT_EQ(j["eigenvalues"][4][0], 0.5);
  EXPECT_EQ(to_json(sample_report()).dump(), j.dump());
}

TEST(Report, SpectrumCsv) {
  const std::string csv = spectrum_csv(sample_report());
  EXPECT_EQ(csv,
            "j,lambda_plus,dist_plus,lambda_minus,dist_minus\n"
            "1,0.3,0.04999999999999999,-0.2,0.04999999999999999\n"
            "2,0.26,0.010000000000000009,-0.24,0.010000000000000009\n");
}

TEST(Report, VerdictJson) {
  Verdict v;
  v.claim = "c";
  v.fitted = 1.0;
  EXPECT_EQ(to_json(v)["pass"], "not checkable");
  v.pass = true;
  v.theoretical = 0.5;
  EXPECT_EQ(to_json(v)["pass"], true);
}

TEST(Report, ManifestHashIsStable) {
  const Json m = {{"a", 1}, {"b", "x"}};
  EXPECT_EQ(manifest_hash(m), sha256_hex(m.dump()));
  EXPECT_EQ(attach_manifest(std::string("x\n"), m), "# manifest_hash=" + manifest_hash(m) + "\nx\n");
  const Json body = attach_manifest(Json{{"v", 2}}, m);
  EXPECT_EQ(body["manifest_hash"], manifest_hash(m));
}

TEST_F(TempDir, WriteAtomicLeavesNoTemporary) {
  write_atomic(dir_ / "sub" / "f.txt", "hello");
  EXPECT_EQ(slurp(dir_ / "sub" / "f.txt"), "hello");
  EXPECT_FALSE(fs::exists(dir_ / "sub" / "f.txt.tmp"));
}

TEST_F(TempDir, VerifyDetectsMismatch) {
  const Json m = {{"k", 1}};
  const auto base = dir_ / "run";
  write_atomic(dir_ / "run.csv", attach_manifest(std::string("a\n"), m));
  write_atomic(dir_ / "run.json", attach_manifest(Json{{"v", 1}}, m).dump());
  write_atomic(dir_ / "run.manifest.json", Json{{"manifest", m}, {"manifest_hash", manifest_hash(m)}}.dump());
  EXPECT_TRUE(verify_outputs(base).ok);
  write_atomic(dir_ / "run.csv", attach_manifest(std::string("a\n"), Json{{"k", 2}}));
  EXPECT_FALSE(verify_outputs(base).ok);
  fs::remove(dir_ / "run.manifest.json");
  EXPECT_FALSE(verify_outputs(base).ok);
}

TEST_F(TempDir, CacheRoundTrip) {
  const MatrixCache cache(dir_);
  const CacheKey key{"ellipse:a=2,b=1", 0.0, 1.0, 16, "K"};
  EXPECT_FALSE(cache.load(key));
  Eigen::MatrixXd m = Eigen::MatrixXd::Random(32, 32);
  m(0, 1) = 1.0 / 3.0;
  cache.store(key, m);
  const auto back = cache.load(key);
  ASSERT_TRUE(back);
  EXPECT_EQ((*back - m).cwiseAbs().maxCoeff(), 0.0);

  const std::string bytes = slurp(cache.path_for(key));
  EXPECT_EQ(bytes.size(), 64u + 32u * 32u * 8u);
  EXPECT_EQ(bytes.substr(0, 8), "NPSPEC01");

  CacheKey other = key;
  other.mu = 2.0;
  EXPECT_NE(cache.path_for(other), cache.path_for(key));
  other = key;
  other.code_version = "0.0.0";
  EXPECT_NE(cache.path_for(other), cache.path_for(key));

  int builds = 0;
  auto build = [&] {
    ++builds;
    return Eigen::MatrixXd::Identity(4, 4).eval();
  };
  CacheKey k2 = key;
  k2.tag = "I";
  cache.get_or_build(k2, build);
  cache.get_or_build(k2, build);
  EXPECT_EQ(builds, 1);
}

TEST_F(TempDir, CacheRejectsCorruptFile) {
  const MatrixCache cache(dir_);
  const CacheKey key{"ellipse:a=2,b=1", 0.0, 1.0, 16, "K"};
  cache.store(key, Eigen::MatrixXd::Ones(8, 8));
  {
    std::ofstream out(cache.path_for(key), std::ios::binary | std::ios::trunc);
    out << "NPSPEC01garbage";
  }
  EXPECT_THROW(cache.load(key), std::runtime_error);
}

}  // namespace
}  // namespace npspec
