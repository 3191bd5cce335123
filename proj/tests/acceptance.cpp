// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Criteria that concern command outputs go through the command layer and
// read back the written reports.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "npspec/app.hpp"
#include "npspec/assembly.hpp"
#include "npspec/kernels.hpp"
#include "npspec/spectral.hpp"

using namespace npspec;
namespace fs = std::filesystem;

namespace {

fs::path g_dir;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json run(RunConfig c, const std::string& name) {
  c.out = (g_dir / name).string();
  run_command(materialize(c));
  return Json::parse(slurp(g_dir / (name + ".json")));
}

RunConfig cfg(const std::string& command, int n) {
  RunConfig c;
  c.command = command;
  c.n = n;
  return c;
}

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& ex) {
    o = {false, std::string("error: ") + ex.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << title << ": " << o.detail << std::endl;
}

const Json* find_fit(const Json& decay, const std::string& cluster, const std::string& model) {
  for (const auto& f : decay["fits"]) {
    if (f["cluster"] == cluster && f["model"] == model && !f.contains("error")) return &f;
  }
  return nullptr;
}

}  // namespace

int main() {
  g_dir = fs::temp_directory_path() / ("npspec_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(g_dir);
  fs::create_directories(g_dir);

  const double rho = std::log(3.0);
  Json decay;
  criterion(1, "ellipse rates, prefactor fits at n=512 (check 1024)", [&]() -> Outcome {
    decay = run(cfg("decay", 512), "decay");
    const Json* p = find_fit(decay, "+", "exponential_with_prefactor");
    const Json* m = find_fit(decay, "-", "exponential_with_prefactor");
    if (!p || !m) return {false, "prefactor fit missing"};
    const double ep = (*p)["eps"], em = (*m)["eps"];
    const double dp = std::abs(ep - rho) / rho, dm = std::abs(em - 2 * rho) / (2 * rho);
    std::ostringstream s;
    s << "eps_plus " << ep << " (dev " << dp << "), eps_minus " << em << " (dev " << dm << ")";
    return {dp <= 0.15 && dm <= 0.15, s.str()};
  });

  criterion(2, "fitted eps exceeds rho/8", [&]() -> Outcome {
    int checked = 0;
    bool ok = true;
    std::ostringstream s;
    for (const auto& v : decay["verdicts"]) {
      if (v["claim"] != "analytic boundary: eps >= eps_q / 8" || v["model"] != "exponential_with_prefactor") continue;
      ++checked;
      ok = ok && v["pass"] == true && v["fitted"].get<double>() > rho / 8;
      s << v["cluster"].get<std::string>() << " " << v["fitted"].get<double>() << " > " << rho / 8 << "; ";
    }
    return {ok && checked == 2, s.str() + "verdicts " + std::to_string(checked)};
  });

  criterion(3, "clustering at +-k0 with rigid triple, >= 20 resolved per cluster", [&]() -> Outcome {
    const Json sp = run(cfg("spectrum", 512), "spectrum");
    const auto outliers = sp["outliers"].get<std::vector<double>>();
    bool ok = outliers.size() == 3;
    for (double x : outliers) ok = ok && std::abs(x - 0.5) < 1e-8;
    const std::size_t total = sp["plus"].size() + sp["minus"].size() + outliers.size();
    ok = ok && total == sp["eigenvalues"].size();
    const int rp = sp["resolved_plus"], rm = sp["resolved_minus"];
    std::ostringstream s;
    s << "outliers " << outliers.size() << ", members " << sp["plus"].size() << "+" << sp["minus"].size()
      << " of " << sp["eigenvalues"].size() << ", resolved " << rp << "/" << rm;
    return {ok && rp >= 20 && rm >= 20, s.str()};
  });

  criterion(4, "compactness defect at n=512", [&]() -> Outcome {
    const Json d = run(cfg("defect", 512), "defect");
    const double ratio = d["sigma_100_over_sigma_1"];
    const bool fitted = d["fit"].is_object();
    const double eps = fitted ? d["fit"]["eps"].get<double>() : 0.0;
    std::ostringstream s;
    s << "sigma_100/sigma_1 " << ratio << ", band " << d["band"] << ", fitted slope " << -eps;
    return {ratio < 1e-6 && fitted && eps > 0.0, s.str()};
  });

  criterion(5, "Fourier slope of the A kernel, 5 <= |k| <= 40", [&]() -> Outcome {
    const Json k = run(cfg("kernel-decay", 256), "kernel");
    const double slope = k["slope"];
    const double dev = std::abs(slope + rho) / rho;
    std::ostringstream s;
    s << "slope " << slope << ", relative deviation " << dev;
    return {dev <= 0.10, s.str()};
  });

  criterion(6, "conormal decomposition identity, 1000 samples", [&]() -> Outcome {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_real_distribution<double> pos(0.1, 3.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double mu = pos(rng);
      const LameParams p(pos(rng) - mu, mu);
      const Vec2<double> x(u(rng), u(rng)), y(u(rng), u(rng));
      const double th = u(rng) * detail::pi<double>();
      const Vec2<double> n(std::cos(th), std::sin(th));
      const Mat2<double> c = conormal_kelvin(p, x, y, n);
      const Mat2<double> split = 2.0 * p.k0() * kernel_K1(x, y, n) - kernel_K2(p, x, y, n);
      worst = std::max(worst, (c - split).norm() / c.norm());
    }
    std::ostringstream s;
    s << "max relative error " << worst;
    return {worst < 1e-12, s.str()};
  });

  criterion(7, "Plemelj symmetrization at n=256", [&]() -> Outcome {
    const Curve e = Curve::ellipse(2.0, 1.0);
    const LameParams p(0.0, 1.0);
    const QuadratureGrid g(256);
    const Eigen::MatrixXd s = assemble_S(e, p, g).matrix();
    const Eigen::MatrixXd k = assemble_K(e, p, g).matrix();
    const Eigen::MatrixXd ks = assemble_K_adjoint(e, p, g).matrix();
    const double r = (s * ks - k * s).norm() / (s.norm() * k.norm());
    std::ostringstream o;
    o << "relative Frobenius residual " << r;
    return {r < 1e-8, o.str()};
  });

  criterion(8, "Riesz projectors at n=256, M=64", [&]() -> Outcome {
    RunConfig c = cfg("project", 256);
    c.contour_nodes = 64;
    const Json j = run(c, "project");
    const double idem = std::max(j["idempotency_plus"].get<double>(), j["idempotency_minus"].get<double>());
    const double comp = j["completeness"];
    const double comm = std::max(j["commutation_plus"].get<double>(), j["commutation_minus"].get<double>());
    std::ostringstream s;
    s << "idempotency " << idem << ", completeness " << comp << ", commutation " << comm << " (Frobenius)";
    return {idem < 1e-8 && comp < 1e-8 && comm < 1e-8, s.str()};
  });

  criterion(9, "truncation rank, tail slope and Weyl-Courant on the disk", [&]() -> Outcome {
    RunConfig c = cfg("truncate", 256);
    c.curve = "ellipse:a=1,b=1";
    const Json j = run(c, "truncate");
    const bool rank = j["rank_bound_holds"], wc = j["weyl_courant_holds"];
    const bool slope_ok = j["tail_slope"].is_number() && j["tail_slope"].get<double>() < 0.0;
    std::ostringstream s;
    s << "rank bound " << rank << ", Weyl-Courant " << wc << ", tail slope " << j["tail_slope"];
    return {rank && wc && slope_ok, s.str()};
  });

  criterion(10, "smooth-boundary polynomial exponent on SmoothTest(beta=4.5)", [&]() -> Outcome {
    RunConfig c = cfg("decay", 512);
    c.curve = "smoothtest:beta=4.5,delta=0.05";
    const Json j = run(c, "smooth");
    int fits = 0;
    bool ok = true;
    std::ostringstream s;
    for (const auto& f : j["fits"]) {
      if (f.contains("error")) continue;
      ++fits;
      ok = ok && f["model"] == "polynomial" && f["d"].get<double>() <= -1.5;
      s << f["cluster"].get<std::string>() << " d " << f["d"].get<double>() << "; ";
    }
    return {ok && fits > 0, s.str() + "bound -1.5"};
  });

  criterion(11, "BVP reconstruction at n=256", [&]() -> Outcome {
    bool ok = true;
    std::ostringstream s;
    int idx = 0;
    for (const char* field : {"linear:a11=1,a12=0,a21=0,a22=-1", "linear:a11=0.5,a12=0.2,a21=-0.3,a22=1"}) {
      RunConfig c = cfg("bvp-check", 256);
      c.field = field;
      const Json j = run(c, "bvp" + std::to_string(idx++));
      const double err = j["gauge_fixed_error"], rig = j["rigid_residual_inf"];
      ok = ok && err < 1e-6 && rig < 1e-8;
      s << "error " << err << ", rigid " << rig << "; ";
    }
    return {ok, s.str()};
  });

  criterion(12, "byte-identical reports across repeated runs", [&]() -> Outcome {
    int compared = 0;
    for (const char* command : {"spectrum", "decay", "truncate"}) {
      RunConfig c = cfg(command, 128);
      for (const char* sub : {"first", "second"}) {
        fs::create_directories(g_dir / sub);
        c.out = (g_dir / sub / command).string();
        run_command(materialize(c));
      }
      for (const auto& entry : fs::directory_iterator(g_dir / "first")) {
        const auto twin = g_dir / "second" / entry.path().filename();
        if (!fs::exists(twin) || slurp(entry.path()) != slurp(twin)) {
          return {false, "differs: " + entry.path().filename().string()};
        }
        ++compared;
      }
    }
    return {compared > 0, std::to_string(compared) + " file comparisons identical"};
  });

  fs::remove_all(g_dir);
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
