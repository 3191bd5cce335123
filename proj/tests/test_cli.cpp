#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "npspec/app.hpp"
#include "npspec/error.hpp"

namespace npspec {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("npspec_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the executable; returns its exit code, stderr captured into `err`.
  int run(const std::string& args, std::string* err = nullptr) {
    const fs::path err_path = dir_ / "stderr.txt";
    const std::string cmd = std::string(NPSPEC_CLI) + " " + args + " > " + (dir_ / "stdout.txt").string() +
                            " 2> " + err_path.string();
    const int status = std::system(cmd.c_str());
    if (err) *err = slurp(err_path);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  RunConfig config(const std::string& command, const std::string& name) {
    RunConfig c;
    c.command = command;
    c.out = (dir_ / name).string();
    return c;
  }

  fs::path dir_;
};

TEST_F(Cli, MaterializeFillsDefaults) {
  RunConfig c = config("decay", "x");
  c.n = 64;
  const RunConfig m = materialize(c);
  EXPECT_EQ(m.n_check.value(), 128);
  EXPECT_EQ(m.window, "3:auto");
  const Json man = manifest(m);
  for (const char* key : {"curve", "lambda", "mu", "n", "n_check", "contour_nodes", "window", "tol",
                          "im_tol", "seed", "code_version"}) {
    EXPECT_TRUE(man.contains(key)) << key;
  }
  EXPECT_EQ(man["contour_nodes"], 64);
  EXPECT_EQ(man["im_tol"], 1e-8);

  RunConfig s = config("spectrum", "s");
  s.curve = "smoothtest:beta=4.5,delta=0.05";
  s.n = 64;
  EXPECT_EQ(materialize(s).curve, "smoothtest:beta=4.5,delta=0.05,cutoff=256");

  RunConfig k = config("kernel-decay", "k");
  EXPECT_EQ(materialize(k).window, "5:40");
  EXPECT_EQ(materialize(k).n_check.value(), 0);
}

TEST_F(Cli, ConfigValidation) {
  EXPECT_THROW(merge_config(RunConfig{}, Json{{"bogus", 1}}), ConfigError);
  EXPECT_THROW(merge_config(RunConfig{}, Json{{"n", "many"}}), ConfigError);
  const RunConfig c = merge_config(RunConfig{}, Json{{"n", 64}, {"curve", "ellipse:a=3,b=1"}});
  EXPECT_EQ(c.n, 64);
  RunConfig bad = config("spectrum", "b");
  bad.window = "5";
  EXPECT_THROW(materialize(bad), ConfigError);
  bad = config("spectrum", "b");
  bad.n_check = 32;
  bad.n = 64;
  EXPECT_THROW(materialize(bad), ConfigError);
  bad = config("fly", "b");
  EXPECT_THROW(materialize(bad), ConfigError);
}

TEST_F(Cli, SpectrumOutputsAreDeterministic) {
  RunConfig c = config("spectrum", "a");
  c.n = 64;
  run_command(materialize(c));
  RunConfig d = c;
  d.out = (dir_ / "sub" / "a").string();
  run_command(materialize(d));
  for (const char* suffix : {".json", ".csv", ".manifest.json"}) {
    EXPECT_EQ(slurp(dir_ / (std::string("a") + suffix)), slurp(dir_ / "sub" / (std::string("a") + suffix)))
        << suffix;
  }
  const Json j = Json::parse(slurp(dir_ / "a.json"));
  EXPECT_EQ(j["k0"], 0.25);
  EXPECT_EQ(j["manifest"]["n"], 64);
}

TEST_F(Cli, ExitCodes) {
  std::string err;
  EXPECT_EQ(run("spectrum --curve ellipse:a=1,b=2 --out " + (dir_ / "x").string(), &err), 2);
  EXPECT_NE(err.find("ellipse requires a ≥ b"), std::string::npos) << err;
  EXPECT_EQ(run("spectrum --n 7 --out " + (dir_ / "x").string(), &err), 2);
  EXPECT_EQ(run("spectrum --bogus 1", &err), 2);
  EXPECT_EQ(run("warp --out x", &err), 2);
  EXPECT_EQ(run("spectrum --mu -1 --out x", &err), 2);
  EXPECT_EQ(run("spectrum --config " + (dir_ / "missing.json").string(), &err), 2);
  // Too coarse for the finite-smoothness curve: no resolved members to fit.
  EXPECT_EQ(run("decay --curve smoothtest:beta=4.5,delta=0.05 --n 64 --out " + (dir_ / "s").string(), &err), 3);
  EXPECT_NE(err.find("numerical failure"), std::string::npos) << err;
  EXPECT_EQ(run("spectrum --n 64 --out " + (dir_ / "ok").string(), &err), 0);
}

TEST_F(Cli, ConfigFileAndOverride) {
  {
    std::ofstream f(dir_ / "c.json");
    f << R"({"curve": "ellipse:a=1.5,b=1", "n": 32, "seed": 7})";
  }
  const std::string base = (dir_ / "cfg").string();
  EXPECT_EQ(run("spectrum --config " + (dir_ / "c.json").string() + " --n 64 --out " + base), 0);
  const Json m = Json::parse(slurp(base + ".manifest.json"))["manifest"];
  EXPECT_EQ(m["n"], 64);
  EXPECT_EQ(m["n_check"], 128);
  EXPECT_EQ(m["seed"], 7);
  EXPECT_EQ(m["curve"], "ellipse:a=1.5,b=1");
}

TEST_F(Cli, VerifyDetectsTampering) {
  const std::string base = (dir_ / "v").string();
  ASSERT_EQ(run("defect --n 32 --out " + base), 0);
  EXPECT_EQ(run("verify --out " + base), 0);
  {
    std::ofstream f(base + ".csv", std::ios::app);
    f << "99,0\n";
  }
  EXPECT_EQ(run("verify --out " + base), 3);
}

TEST_F(Cli, DefectTableIsNonIncreasing) {
  RunConfig c = config("defect", "d");
  c.n = 64;
  run_command(materialize(c));
  const Json j = Json::parse(slurp(dir_ / "d.json"));
  const auto s = j["singular_values"].get<std::vector<double>>();
  ASSERT_EQ(s.size(), 126u);
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LE(s[i], s[i - 1]);
}

TEST_F(Cli, DecayVerdictsOnEllipse) {
  RunConfig c = config("decay", "e");
  c.n = 256;
  run_command(materialize(c));
  const Json j = Json::parse(slurp(dir_ / "e.json"));
  int bound_passes = 0;
  for (const auto& v : j["verdicts"]) {
    if (v["claim"] == "analytic boundary: eps >= eps_q / 8") {
      EXPECT_EQ(v["pass"], true);
      ++bound_passes;
    }
  }
  EXPECT_EQ(bound_passes, 4);  // two clusters, prefactor and plain models
}

TEST_F(Cli, DecayWithUnknownEpsQ) {
  RunConfig c = config("decay", "t");
  c.curve = "trig:c2=0.05";
  c.n = 128;
  c.window = "3:24";
  run_command(materialize(c));
  const Json j = Json::parse(slurp(dir_ / "t.json"));
  EXPECT_TRUE(j["eps_q"].is_null());
  bool found = false;
  for (const auto& v : j["verdicts"]) {
    EXPECT_EQ(v["pass"], "not checkable");
    found = found || v.value("note", "") == "eps_q unknown, bound not checkable";
  }
  EXPECT_TRUE(found);
}

TEST_F(Cli, SweepHasRhoColumn) {
  RunConfig c = config("sweep", "sw");
  c.n = 64;
  c.sweep_a = {1.2, 1.5, 2.0, 0.5};  // the last point is invalid and recorded
  run_command(materialize(c));
  std::istringstream csv(slurp(dir_ / "sw.csv"));
  std::string line;
  std::getline(csv, line);  // manifest hash
  std::getline(csv, line);
  EXPECT_EQ(line.rfind("a,b,rho,", 0), 0u);
  const double expected[] = {std::log(2.2 / 0.2), std::log(2.5 / 0.5), std::log(3.0)};
  for (double rho : expected) {
    ASSERT_TRUE(std::getline(csv, line));
    std::istringstream row(line);
    std::string a, b, r;
    std::getline(row, a, ',');
    std::getline(row, b, ',');
    std::getline(row, r, ',');
    EXPECT_NEAR(std::stod(r), rho, 1e-15);
  }
  ASSERT_TRUE(std::getline(csv, line));
  EXPECT_NE(line.find("failed"), std::string::npos) << line;
}

TEST_F(Cli, ProjectMarksApproximateFrame) {
  RunConfig c = config("project", "p");
  c.n = 32;
  run_command(materialize(c));
  EXPECT_EQ(Json::parse(slurp(dir_ / "p.json"))["frame"], "approximate frame");
  c.curve = "ellipse:a=1,b=1";
  run_command(materialize(c));
  EXPECT_EQ(Json::parse(slurp(dir_ / "p.json"))["frame"], "exact frame");
}

TEST_F(Cli, TruncateAndKernelDecayAndBvp) {
  RunConfig t = config("truncate", "t");
  t.curve = "ellipse:a=1,b=1";
  t.n = 64;
  run_command(materialize(t));
  const Json jt = Json::parse(slurp(dir_ / "t.json"));
  EXPECT_EQ(jt["rank_bound_holds"], true);
  EXPECT_EQ(jt["weyl_courant_holds"], true);
  EXPECT_LT(jt["tail_slope"].get<double>(), -0.5);

  RunConfig k = config("kernel-decay", "k");
  k.n = 128;
  run_command(materialize(k));
  EXPECT_NEAR(Json::parse(slurp(dir_ / "k.json"))["slope"].get<double>(), -std::log(3.0), 0.11);

  RunConfig b = config("bvp-check", "b");
  b.n = 128;
  run_command(materialize(b));
  const Json jb = Json::parse(slurp(dir_ / "b.json"));
  EXPECT_LT(jb["gauge_fixed_error"].get<double>(), 1e-6);
  EXPECT_NE(slurp(dir_ / "b.csv").find("x1,x2,u1_exact,u2_exact,u1,u2,error"), std::string::npos);
}

TEST_F(Cli, CacheDoesNotChangeOutputs) {
  RunConfig c = config("spectrum", "plain");
  c.n = 32;
  run_command(materialize(c));
  RunConfig d = c;
  d.out = (dir_ / "cached" / "plain").string();
  d.cache_dir = (dir_ / "cache").string();
  run_command(materialize(d));
  run_command(materialize(d));  // second run reads the cache
  EXPECT_EQ(slurp(dir_ / "plain.json"), slurp(dir_ / "cached" / "plain.json"));
  EXPECT_FALSE(fs::is_empty(dir_ / "cache"));
}

}  // namespace
}  // namespace npspec
