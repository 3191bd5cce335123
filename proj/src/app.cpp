#include "npspec/app.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "npspec/assembly.hpp"
#include "npspec/bvp.hpp"
#include "npspec/cache.hpp"
#include "npspec/error.hpp"
#include "npspec/geometry.hpp"
#include "npspec/hash.hpp"
#include "npspec/ratefit.hpp"
#include "npspec/spectral.hpp"

namespace npspec {

namespace {

constexpr double kDecayFloor = 1e-12;
constexpr double kTailFloorRel = 1e-12;
constexpr int kDefaultDecayJmin = 3;

// ---------------------------------------------------------------------------
// config plumbing

template <typename T>
T typed(const Json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const Json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

struct Window {
  int lo = 0;
  std::optional<int> hi;  // nullopt: data-driven upper end
};

Window parse_window(const std::string& text) {
  const auto colon = text.find(':');
  auto as_int = [&](std::string_view s, int& out) {
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
  };
  Window w;
  if (colon == std::string::npos || !as_int(std::string_view(text).substr(0, colon), w.lo)) {
    throw ConfigError("invalid window '" + text + "': expected <lo>:<hi>");
  }
  const std::string hi = text.substr(colon + 1);
  if (hi != "auto") {
    int v = 0;
    if (!as_int(hi, v)) throw ConfigError("invalid window '" + text + "': expected <lo>:<hi>");
    if (v < w.lo) throw ConfigError("invalid window '" + text + "': upper end below lower end");
    w.hi = v;
  }
  if (w.lo < 1) throw ConfigError("invalid window '" + text + "': indices start at 1");
  return w;
}

std::string default_window(const std::string& command) {
  if (command == "decay" || command == "sweep") return std::to_string(kDefaultDecayJmin) + ":auto";
  if (command == "kernel-decay") return "5:40";
  return "";
}

bool uses_n_check(const std::string& c) {
  return c == "spectrum" || c == "decay" || c == "sweep";
}

Curve config_curve(const RunConfig& c) { return parse_curve_spec(c.curve); }
LameParams config_params(const RunConfig& c) { return LameParams(c.lambda, c.mu); }

std::filesystem::path with_suffix(const std::string& base, const std::string& suffix) {
  return std::filesystem::path(base + suffix);
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

class Writer {
 public:
  Writer(const RunConfig& config, RunResult& result)
      : manifest_(manifest(config)), base_(config.out), result_(result) {}

  const Json& manifest_json() const { return manifest_; }

  void json(const std::string& suffix, Json body) {
    put(suffix, dump(attach_manifest(std::move(body), manifest_)));
  }
  void csv(const std::string& suffix, const std::string& text) {
    put(suffix, attach_manifest(text, manifest_));
  }
  void finish() {
    Json m;
    m["manifest"] = manifest_;
    m["manifest_hash"] = manifest_hash(manifest_);
    m["files"] = digests_;
    put(".manifest.json", dump(m));
  }

 private:
  void put(const std::string& suffix, const std::string& text) {
    const auto path = with_suffix(base_, suffix);
    write_atomic(path, text);
    result_.files.push_back(path.string());
    digests_[path.filename().string()] = sha256_hex(text);
  }

  Json manifest_;
  Json digests_ = Json::object();
  std::string base_;
  RunResult& result_;
};

// ---------------------------------------------------------------------------
// shared pipelines

OperatorMatrix cached_K(const Curve& curve, const LameParams& params, int n,
                        const std::string& cache_dir) {
  const QuadratureGrid grid(n);
  if (cache_dir.empty()) return assemble_K(curve, params, grid);
  const MatrixCache cache(cache_dir);
  const CacheKey key{curve.spec(), params.lambda(), params.mu(), n, "K"};
  OperatorMetadata meta{OperatorKind::K, curve.spec(), params, n, true,
                        curve.riemann_parametrization()};
  return OperatorMatrix(
      cache.get_or_build(key, [&] { return assemble_K(curve, params, grid).matrix(); }),
      std::move(meta));
}

SpectrumReport spectrum_for(const Curve& curve, const LameParams& params, const RunConfig& c) {
  SpectrumConfig sc;
  sc.n = c.n;
  sc.n_check = *c.n_check;
  sc.im_tol_rel = c.im_tol;
  const OperatorMatrix k = cached_K(curve, params, c.n, c.cache_dir);
  if (sc.n_check <= 0) return analyze_spectrum(k, nullptr, sc);
  const OperatorMatrix fine = cached_K(curve, params, sc.n_check, c.cache_dir);
  return analyze_spectrum(k, &fine, sc);
}

bool is_ellipse(const Curve& curve) {
  const auto* e = std::get_if<Ellipse>(&curve.family());
  return e && e->a > e->b;
}

TheoryContext theory_for(const Curve& curve, const RunConfig& c) {
  TheoryContext ctx;
  ctx.rate_tolerance = c.tol;
  if (c.eps_q) {
    ctx.eps_q = c.eps_q;
  } else if (const auto g = grauert_radius(curve)) {
    ctx.eps_q = g->value;
  }
  ctx.ellipse = is_ellipse(curve) && !c.eps_q;
  if (c.smoothness) {
    ctx.smoothness = c.smoothness;
  } else if (const auto* s = std::get_if<SmoothTest>(&curve.family())) {
    ctx.smoothness = s->beta - 1.0;
  }
  return ctx;
}

struct ClusterFit {
  std::string cluster;
  std::vector<DecaySample> samples;
  FitWindow window{0, 0};
  std::optional<RateFit> fit;
  std::string error;
};

struct DecayOutcome {
  Json body;
  std::vector<ClusterFit> fits;
  SpectrumReport report;
};

Json fit_entry(const RateFit& fit, const TheoryContext& ctx, Json& verdicts) {
  Json entry = to_json(fit);
  entry["points"] = fit.points;
  entry["pair_offset"] = fit.pair_offset;
  for (const auto& v : compare_with_theory(fit, ctx)) {
    Json jv = to_json(v);
    jv["cluster"] = fit.cluster;
    jv["model"] = to_string(fit.model);
    verdicts.push_back(std::move(jv));
  }
  return entry;
}

// Exponential prefactor fits for analytic curves, polynomial fits when a
// finite smoothness is known.
DecayOutcome run_decay(const Curve& curve, const LameParams& params, const RunConfig& c) {
  DecayOutcome out;
  out.report = spectrum_for(curve, params, c);
  const Window w = parse_window(c.window);
  const TheoryContext ctx = theory_for(curve, c);
  const bool exponential = !ctx.smoothness;

  Json fits = Json::array();
  Json verdicts = Json::array();
  for (const char* name : {"+", "-"}) {
    const bool plus = std::string(name) == "+";
    ClusterFit cf;
    cf.cluster = name;
    cf.samples = distances(plus ? out.report.plus : out.report.minus);
    const int resolved = plus ? out.report.resolved_plus : out.report.resolved_minus;
    const int cap = w.hi ? std::min(*w.hi, resolved) : resolved;
    cf.window = truncate_window(cf.samples, w.lo, cap, kDecayFloor);
    Json entry;
    Json plain_entry;
    try {
      FitOptions opt;
      opt.pair_average = true;
      if (exponential) {
        opt.index_scale = 0.5;
        cf.fit = fit_exponential(cf.samples, cf.window, true, opt);
      } else {
        cf.fit = fit_polynomial(cf.samples, cf.window, opt);
      }
      cf.fit->cluster = name;
      entry = fit_entry(*cf.fit, ctx, verdicts);
      if (exponential) {
        // The plain model carries the eps_q / 8 bound check as well.
        RateFit plain = fit_exponential(cf.samples, cf.window, false, opt);
        plain.cluster = name;
        plain_entry = fit_entry(plain, ctx, verdicts);
      }
    } catch (const NumericalError& e) {
      cf.error = e.what();
      entry = {{"cluster", name},
               {"model", exponential ? "exponential_with_prefactor" : "polynomial"},
               {"window", {cf.window.j_min, cf.window.j_max}},
               {"error", cf.error}};
    }
    fits.push_back(std::move(entry));
    if (!plain_entry.is_null()) fits.push_back(std::move(plain_entry));
    out.fits.push_back(std::move(cf));
  }

  Json& b = out.body;
  b["schema_version"] = kSchemaVersion;
  b["command"] = "decay";
  b["curve"] = curve.spec();
  b["lambda"] = params.lambda();
  b["mu"] = params.mu();
  b["k0"] = params.k0();
  b["n"] = out.report.n;
  b["n_check"] = out.report.n_check;
  b["eps_q"] = ctx.eps_q ? Json(*ctx.eps_q) : Json();
  b["smoothness"] = ctx.smoothness ? Json(*ctx.smoothness) : Json();
  b["resolved_plus"] = out.report.resolved_plus;
  b["resolved_minus"] = out.report.resolved_minus;
  b["fit_options"] = {{"pair_average", true}, {"index_scale", exponential ? 0.5 : 1.0}};
  b["fits"] = std::move(fits);
  b["verdicts"] = std::move(verdicts);
  b["warnings"] = out.report.warnings;
  return out;
}

std::string decay_csv(const ClusterFit& cf) {
  if (cf.fit) return fit_csv(cf.samples, *cf.fit);
  std::ostringstream os;
  os << "j,d_j,model\n";
  for (const auto& s : cf.samples) os << s.j << ',' << format_double(s.d) << ",\n";
  return os.str();
}

Json contour_json(const Contour& c) {
  return {{"center", {c.center.real(), c.center.imag()}}, {"radius", c.radius}, {"nodes", c.nodes}};
}

// ---------------------------------------------------------------------------
// commands

RunResult cmd_spectrum(const RunConfig& c) {
  RunResult r;
  const Curve curve = config_curve(c);
  const LameParams params = config_params(c);
  const SpectrumReport report = spectrum_for(curve, params, c);
  Writer w(c, r);
  Json body = to_json(report);
  w.json(".json", std::move(body));
  w.csv(".csv", spectrum_csv(report));
  w.finish();
  r.messages.push_back("k0 = " + format_double(report.k0) + ", plus " +
                       std::to_string(report.plus.size()) + " (" +
                       std::to_string(report.resolved_plus) + " resolved), minus " +
                       std::to_string(report.minus.size()) + " (" +
                       std::to_string(report.resolved_minus) + " resolved), outliers " +
                       std::to_string(report.outliers.size()));
  return r;
}

RunResult cmd_decay(const RunConfig& c) {
  RunResult r;
  const Curve curve = config_curve(c);
  const LameParams params = config_params(c);
  DecayOutcome d = run_decay(curve, params, c);
  const bool any = std::any_of(d.fits.begin(), d.fits.end(), [](const auto& f) { return f.fit.has_value(); });
  if (!any) throw NumericalError("no cluster admits a fit: " + d.fits.front().error);
  Writer w(c, r);
  w.json(".json", d.body);
  w.csv(".plus.csv", decay_csv(d.fits[0]));
  w.csv(".minus.csv", decay_csv(d.fits[1]));
  w.finish();
  for (const auto& v : d.body["verdicts"]) {
    const std::string pass = v["pass"].is_boolean() ? (v["pass"].get<bool>() ? "pass" : "FAIL")
                                                    : v["pass"].get<std::string>();
    r.messages.push_back("[" + v["cluster"].get<std::string>() + ", " + v["model"].get<std::string>() + "] " +
                         v["claim"].get<std::string>() + ": " + pass + " (fitted " +
                         format_double(v["fitted"].get<double>()) + ")");
  }
  return r;
}

RunResult cmd_kernel_decay(const RunConfig& c) {
  RunResult r;
  const Curve curve = config_curve(c);
  const KernelSelector sel = parse_kernel_selector(c.kernel);
  const Window win = parse_window(c.window);
  const int kmax = std::min(win.hi.value_or(c.n / 2 - 1), c.n / 2 - 1);
  if (kmax - win.lo < 2) throw ConfigError("kernel-decay window too narrow for n = " + std::to_string(c.n));
  const DecayTable table = kernel_fourier_decay(curve, sel, c.n);
  const double slope = decay_slope(table, win.lo, kmax);
  const auto g = grauert_radius(curve);

  Json body;
  body["schema_version"] = kSchemaVersion;
  body["command"] = "kernel-decay";
  body["curve"] = curve.spec();
  body["kernel"] = to_string(sel);
  body["n"] = c.n;
  body["precision"] = "binary128";
  body["window"] = {win.lo, kmax};
  body["slope"] = slope;
  if (g && std::isfinite(g->value)) {
    body["eps_q"] = g->value;
    body["relative_deviation_from_minus_eps_q"] = std::abs(slope + g->value) / g->value;
  } else {
    body["eps_q"] = nullptr;
  }
  body["table"] = to_json(table);

  std::ostringstream csv;
  csv << "k,max_abs\n";
  for (std::size_t i = 0; i < table.k.size(); ++i) {
    csv << table.k[i] << ',' << format_double(table.max_abs[i]) << '\n';
  }
  Writer w(c, r);
  w.json(".json", std::move(body));
  w.csv(".csv", csv.str());
  w.finish();
  r.messages.push_back(to_string(sel) + " slope over " + std::to_string(win.lo) + ".." +
                       std::to_string(kmax) + ": " + format_double(slope));
  return r;
}

RunResult cmd_defect(const RunConfig& c) {
  RunResult r;
  const Curve curve = config_curve(c);
  const LameParams params = config_params(c);
  const OperatorMatrix k = cached_K(curve, params, c.n, c.cache_dir);
  const DefectProfile prof = compact_defect(deflate_nyquist(k), params.k0());
  const Eigen::VectorXd& s = prof.singular_values;

  Json body;
  body["schema_version"] = kSchemaVersion;
  body["command"] = "defect";
  body["curve"] = curve.spec();
  body["lambda"] = params.lambda();
  body["mu"] = params.mu();
  body["k0"] = params.k0();
  body["n"] = c.n;
  body["sigma_1"] = s.size() ? s(0) : 0.0;
  body["sigma_100_over_sigma_1"] =
      s.size() >= 100 && s(0) > 0.0 ? Json(s(99) / s(0)) : Json();
  body["band"] = prof.band;
  body["fit"] = prof.fit ? to_json(*prof.fit) : Json();
  body["singular_values"] = std::vector<double>(s.data(), s.data() + s.size());

  std::ostringstream csv;
  csv << "m,sigma\n";
  for (Eigen::Index m = 0; m < s.size(); ++m) csv << m + 1 << ',' << format_double(s(m)) << '\n';
  Writer w(c, r);
  w.json(".json", std::move(body));
  w.csv(".csv", csv.str());
  w.finish();
  r.messages.push_back("band " + std::to_string(prof.band) +
                       (prof.fit ? ", fitted rate " + format_double(prof.fit->rate) : std::string()));
  return r;
}

RunResult cmd_project(const RunConfig& c) {
  RunResult r;
  const Curve curve = config_curve(c);
  const LameParams params = config_params(c);
  const OperatorMatrix k = cached_K(curve, params, c.n, c.cache_dir);
  const Eigen::MatrixXd a = deflate_nyquist(k);
  const EigenDecomposition dec = eigen_decompose(a);
  const ProjectorPair pp = riesz_projectors(a, dec.values, c.contour_nodes);
  const ConjugatedOperator q = conjugate_by_P(k, assemble_P(QuadratureGrid(c.n)));

  Json body;
  body["schema_version"] = kSchemaVersion;
  body["command"] = "project";
  body["curve"] = curve.spec();
  body["lambda"] = params.lambda();
  body["mu"] = params.mu();
  body["k0"] = params.k0();
  body["n"] = c.n;
  body["frame"] = q.approximate ? "approximate frame" : "exact frame";
  body["contour_plus"] = contour_json(pp.plus_contour);
  body["contour_minus"] = contour_json(pp.minus_contour);
  body["gap"] = pp.gap;
  body["residual_norm"] = "Frobenius";
  body["idempotency_plus"] = pp.idempotency_plus;
  body["idempotency_minus"] = pp.idempotency_minus;
  body["completeness"] = pp.completeness;
  body["commutation_plus"] = pp.commutation_plus;
  body["commutation_minus"] = pp.commutation_minus;
  body["trace_plus"] = pp.trace_plus;
  body["trace_minus"] = pp.trace_minus;
  body["deflated_dimension"] = a.rows();
  const auto& sv = q.singular_values;
  body["q_singular_values"] = std::vector<double>(sv.data(), sv.data() + sv.size());

  std::ostringstream csv;
  csv << "m,sigma_q\n";
  for (Eigen::Index m = 0; m < sv.size(); ++m) csv << m + 1 << ',' << format_double(sv(m)) << '\n';
  Writer w(c, r);
  w.json(".json", std::move(body));
  w.csv(".csv", csv.str());
  w.finish();
  r.messages.push_back(std::string(q.approximate ? "approximate frame" : "exact frame") +
                       ", idempotency " + format_double(std::max(pp.idempotency_plus, pp.idempotency_minus)) +
                       ", completeness " + format_double(pp.completeness));
  return r;
}

RunResult cmd_truncate(const RunConfig& c) {
  RunResult r;
  const Curve curve = config_curve(c);
  const LameParams params = config_params(c);
  const OperatorMatrix k = cached_K(curve, params, c.n, c.cache_dir);
  const ConjugatedOperator q = conjugate_by_P(k, assemble_P(QuadratureGrid(c.n)));
  const Eigen::VectorXd kappa = eigenvalue_magnitudes(q.Q);
  const int m_max = std::min(c.m_max, c.n / 2 - 1);
  const double sigma1 = q.singular_values.size() ? q.singular_values(0) : 0.0;

  Json rows = Json::array();
  std::vector<double> tails;
  bool rank_ok = true, weyl_ok = true;
  std::ostringstream csv;
  csv << "m,tail_norm,rank,rank_bound,kappa,weyl_courant\n";
  for (int m = 1; m <= m_max; ++m) {
    const Truncation t = truncate_fourier(q.Q, m);
    const Eigen::Index idx = 2 * (2 * m - 1);
    const double kap = idx < kappa.size() ? kappa(idx) : 0.0;
    const bool wc = t.tail_norm >= (1.0 - 1e-8) * kap;
    rank_ok = rank_ok && t.rank <= t.rank_bound;
    weyl_ok = weyl_ok && wc;
    tails.push_back(t.tail_norm);
    rows.push_back({{"m", m}, {"tail_norm", t.tail_norm}, {"rank", t.rank},
                    {"rank_bound", t.rank_bound}, {"kappa", kap}, {"weyl_courant", wc}});
    csv << m << ',' << format_double(t.tail_norm) << ',' << t.rank << ',' << t.rank_bound << ','
        << format_double(kap) << ',' << (wc ? "true" : "false") << '\n';
  }

  Json body;
  body["schema_version"] = kSchemaVersion;
  body["command"] = "truncate";
  body["curve"] = curve.spec();
  body["lambda"] = params.lambda();
  body["mu"] = params.mu();
  body["n"] = c.n;
  body["frame"] = q.approximate ? "approximate frame" : "exact frame";
  body["sigma_1"] = sigma1;
  if (sigma1 > 0.0 && tails.size() >= 2) {
    const TailFit tf = fit_tail_slope(tails, kTailFloorRel * sigma1);
    body["tail_slope"] = tf.slope;
    body["tail_fit_window"] = {1, tf.m_last};
    body["tail_floor"] = tf.floor;
  } else {
    body["tail_slope"] = nullptr;
  }
  body["rank_bound_holds"] = rank_ok;
  body["weyl_courant_holds"] = weyl_ok;
  body["rows"] = std::move(rows);

  Writer w(c, r);
  w.json(".json", body);
  w.csv(".csv", csv.str());
  w.finish();
  r.messages.push_back(std::string(q.approximate ? "approximate frame" : "exact frame") +
                       ", tail slope " +
                       (body["tail_slope"].is_number() ? format_double(body["tail_slope"].get<double>())
                                                       : std::string("n/a")) +
                       ", rank bound " + (rank_ok ? "holds" : "VIOLATED"));
  return r;
}

RunResult cmd_bvp_check(const RunConfig& c) {
  RunResult r;
  const Curve curve = config_curve(c);
  const LameParams params = config_params(c);
  const QuadratureGrid grid(c.n);
  const ManufacturedField field = parse_manufactured(c.field);
  const BvpConfig bc;
  const TractionData data = TractionData::from_field(field, curve, params, grid);
  const NeumannSolution sol = solve_neumann(curve, params, data, grid, bc);

  const Eigen::MatrixXd rig = rigid_motions(curve, grid);
  const Eigen::MatrixXd kmat = cached_K(curve, params, c.n, c.cache_dir).matrix();
  const Eigen::MatrixXd res = kmat * rig - 0.5 * rig;
  const double rigid_residual = res.cwiseAbs().maxCoeff();

  const auto probes = interior_probes(curve, 2.0 * bc.near_boundary_rel * sol.diameter());
  std::vector<Vec2<double>> computed, exact;
  double lame = 0.0;
  const double h = 1e-3 * sol.diameter();
  for (const auto& x : probes) {
    computed.push_back(sol.evaluate(x).u);
    exact.push_back(field.displacement(x));
    lame = std::max(lame, sol.lame_residual(x, h).norm());
  }
  const std::vector<double> err = gauge_fixed_errors(probes, computed, exact);
  const double worst = err.empty() ? 0.0 : *std::max_element(err.begin(), err.end());

  std::ostringstream csv;
  csv << "x1,x2,u1_exact,u2_exact,u1,u2,error\n";
  for (std::size_t i = 0; i < probes.size(); ++i) {
    csv << format_double(probes[i].x()) << ',' << format_double(probes[i].y()) << ','
        << format_double(exact[i].x()) << ',' << format_double(exact[i].y()) << ','
        << format_double(computed[i].x()) << ',' << format_double(computed[i].y()) << ','
        << format_double(err[i]) << '\n';
  }
  const auto& sv = sol.singular_values();
  Json body;
  body["schema_version"] = kSchemaVersion;
  body["command"] = "bvp-check";
  body["curve"] = curve.spec();
  body["lambda"] = params.lambda();
  body["mu"] = params.mu();
  body["n"] = c.n;
  body["field"] = field.spec;
  body["compat_residuals"] = {data.compat_residuals(0), data.compat_residuals(1), data.compat_residuals(2)};
  body["null_singular_values"] = {sv(sv.size() - 3), sv(sv.size() - 2), sv(sv.size() - 1)};
  body["smallest_retained_singular_value"] = sv(sv.size() - 4);
  body["rigid_residual_inf"] = rigid_residual;
  body["probes"] = probes.size();
  body["gauge_fixed_error"] = worst;
  body["lame_residual"] = lame;
  body["lame_step"] = h;

  Writer w(c, r);
  w.json(".json", std::move(body));
  w.csv(".csv", csv.str());
  w.finish();
  r.messages.push_back("gauge-fixed error " + format_double(worst) + " at " +
                       std::to_string(probes.size()) + " probes, rigid residual " +
                       format_double(rigid_residual));
  return r;
}

RunResult cmd_sweep(const RunConfig& c) {
  RunResult r;
  const Curve base = config_curve(c);
  const auto* e = std::get_if<Ellipse>(&base.family());
  if (!e) throw ConfigError("sweep varies the ellipse semi-axis a; --curve must be an ellipse");
  const double b = e->b;
  const LameParams params = config_params(c);

  struct Point {
    std::optional<Curve> curve;
    std::optional<DecayOutcome> outcome;
    std::string error;
  };
  std::vector<Point> points(c.sweep_a.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    try {
      points[i].curve = Curve::ellipse(c.sweep_a[i], b);
      check_on_grid(*points[i].curve, c.n);
    } catch (const std::exception& ex) {
      points[i].curve.reset();
      points[i].error = ex.what();
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < points.size();) {
      if (!points[i].curve) continue;
      try {
        points[i].outcome = run_decay(*points[i].curve, params, c);
      } catch (const std::exception& ex) {
        points[i].error = ex.what();
      }
    }
  };
  const std::size_t threads =
      std::max<std::size_t>(1, std::min<std::size_t>(points.size(), std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  Writer w(c, r);
  std::ostringstream csv;
  csv << "a,b,rho,eps_plus,eps_minus,resolved_plus,resolved_minus,status\n";
  Json rows = Json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double a = c.sweep_a[i];
    const double rho = a > b ? std::log((a + b) / (a - b)) : INFINITY;
    Json row = {{"a", a}, {"b", b}, {"rho", std::isfinite(rho) ? Json(rho) : Json()}};
    std::string eps[2];
    std::string status = "ok";
    if (points[i].outcome) {
      const auto& o = *points[i].outcome;
      for (int s = 0; s < 2; ++s) {
        const auto& f = o.fits[s];
        eps[s] = f.fit ? format_double(f.fit->rate) : "";
        row[s == 0 ? "eps_plus" : "eps_minus"] = f.fit ? Json(f.fit->rate) : Json();
        if (!f.fit) status = "partial: " + f.error;
      }
      row["resolved_plus"] = o.report.resolved_plus;
      row["resolved_minus"] = o.report.resolved_minus;
      w.json(".point" + std::to_string(i) + ".json", o.body);
    } else {
      status = "failed: " + points[i].error;
    }
    row["status"] = status;
    std::string quoted = status;
    std::replace(quoted.begin(), quoted.end(), '"', '\'');
    csv << format_double(a) << ',' << format_double(b) << ','
        << (std::isfinite(rho) ? format_double(rho) : "inf") << ',' << eps[0] << ',' << eps[1] << ',';
    if (points[i].outcome) {
      csv << points[i].outcome->report.resolved_plus << ',' << points[i].outcome->report.resolved_minus;
    } else {
      csv << ',';
    }
    csv << ",\"" << quoted << "\"\n";
    r.messages.push_back("a = " + format_double(a) + ": " + status);
    rows.push_back(std::move(row));
  }
  Json body;
  body["schema_version"] = kSchemaVersion;
  body["command"] = "sweep";
  body["rows"] = std::move(rows);
  w.json(".json", std::move(body));
  w.csv(".csv", csv.str());
  w.finish();
  return r;
}

RunResult cmd_verify(const RunConfig& c) {
  RunResult r;
  const VerifyResult v = verify_outputs(c.out);
  r.ok = v.ok;
  r.messages = v.messages;
  return r;
}

}  // namespace

RunConfig merge_config(RunConfig base, const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "command") base.command = typed<std::string>(value, key);
    else if (key == "curve") base.curve = typed<std::string>(value, key);
    else if (key == "lambda") base.lambda = typed<double>(value, key);
    else if (key == "mu") base.mu = typed<double>(value, key);
    else if (key == "n") base.n = typed<int>(value, key);
    else if (key == "n_check") base.n_check = typed<int>(value, key);
    else if (key == "contour_nodes") base.contour_nodes = typed<int>(value, key);
    else if (key == "window") base.window = typed<std::string>(value, key);
    else if (key == "tol") base.tol = typed<double>(value, key);
    else if (key == "im_tol") base.im_tol = typed<double>(value, key);
    else if (key == "out") base.out = typed<std::string>(value, key);
    else if (key == "seed") base.seed = typed<std::uint64_t>(value, key);
    else if (key == "kernel") base.kernel = typed<std::string>(value, key);
    else if (key == "field") base.field = typed<std::string>(value, key);
    else if (key == "m_max") base.m_max = typed<int>(value, key);
    else if (key == "eps_q") base.eps_q = typed<double>(value, key);
    else if (key == "smoothness") base.smoothness = typed<double>(value, key);
    else if (key == "sweep_a") base.sweep_a = typed<std::vector<double>>(value, key);
    else if (key == "cache_dir") base.cache_dir = typed<std::string>(value, key);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  return base;
}

RunConfig materialize(RunConfig c) {
  if (std::find(kCommands.begin(), kCommands.end(), c.command) == kCommands.end()) {
    throw ConfigError("unknown command '" + c.command + "'");
  }
  if (c.out.empty()) throw ConfigError("--out must not be empty");
  if (c.command == "verify") return c;

  // SmoothTest needs a harmonic cutoff; default to 4n.
  if (c.curve.starts_with("smoothtest:") && c.curve.find("cutoff=") == std::string::npos) {
    c.curve += ",cutoff=" + std::to_string(4 * c.n);
  }
  const Curve curve = parse_curve_spec(c.curve);
  c.curve = curve.spec();
  (void)LameParams(c.lambda, c.mu);
  (void)QuadratureGrid(c.n);
  check_on_grid(curve, c.n);

  if (uses_n_check(c.command)) {
    if (!c.n_check) c.n_check = 2 * c.n;
    if (*c.n_check != 0) {
      if (*c.n_check <= c.n) throw ConfigError("n_check must exceed n (or be 0 to skip the check)");
      (void)QuadratureGrid(*c.n_check);
    }
  } else {
    c.n_check = 0;
  }
  if (c.window.empty()) c.window = default_window(c.command);
  if (!c.window.empty()) (void)parse_window(c.window);
  if (c.contour_nodes < 2 || c.contour_nodes % 2 != 0) {
    throw ConfigError("contour node count must be even and >= 2");
  }
  if (!(c.tol > 0.0)) throw ConfigError("--tol must be positive");
  if (!(c.im_tol > 0.0)) throw ConfigError("im_tol must be positive");
  if (c.m_max < 1) throw ConfigError("m_max must be >= 1");
  if (c.command == "kernel-decay") (void)parse_kernel_selector(c.kernel);
  if (c.command == "bvp-check") (void)parse_manufactured(c.field);
  if (c.command == "sweep" && c.sweep_a.empty()) throw ConfigError("sweep needs at least one value of a");
  return c;
}

Json manifest(const RunConfig& c) {
  Json m;
  m["tool"] = "npspec";
  m["code_version"] = NPSPEC_VERSION;
  m["schema_version"] = kSchemaVersion;
  m["command"] = c.command;
  m["curve"] = c.curve;
  m["lambda"] = c.lambda;
  m["mu"] = c.mu;
  m["n"] = c.n;
  m["n_check"] = c.n_check.value_or(0);
  m["contour_nodes"] = c.contour_nodes;
  m["window"] = c.window;
  m["tol"] = c.tol;
  m["im_tol"] = c.im_tol;
  m["seed"] = c.seed;
  m["kernel"] = c.kernel;
  m["field"] = c.field;
  m["m_max"] = c.m_max;
  m["eps_q"] = c.eps_q ? Json(*c.eps_q) : Json();
  m["smoothness"] = c.smoothness ? Json(*c.smoothness) : Json();
  m["sweep_a"] = c.sweep_a;
  m["fit_floor"] = kDecayFloor;
  m["tail_floor_rel"] = kTailFloorRel;
  m["out"] = std::filesystem::path(c.out).filename().string();
  return m;
}

RunResult run_command(const RunConfig& c) {
  if (c.command == "spectrum") return cmd_spectrum(c);
  if (c.command == "decay") return cmd_decay(c);
  if (c.command == "kernel-decay") return cmd_kernel_decay(c);
  if (c.command == "defect") return cmd_defect(c);
  if (c.command == "project") return cmd_project(c);
  if (c.command == "truncate") return cmd_truncate(c);
  if (c.command == "bvp-check") return cmd_bvp_check(c);
  if (c.command == "sweep") return cmd_sweep(c);
  if (c.command == "verify") return cmd_verify(c);
  throw ConfigError("unknown command '" + c.command + "'");
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Elastic Neumann-Poincare spectra on planar curves", "npspec"};
  app.set_version_flag("--version", std::string(NPSPEC_VERSION));

  std::string command, curve, window, out, config_path, kernel, field, cache_dir, sweep_a;
  double lambda = 0, mu = 0, tol = 0, im_tol = 0, eps_q = 0, smoothness = 0;
  int n = 0, n_check = 0, nodes = 0, m_max = 0;
  std::uint64_t seed = 0;

  app.add_option("command", command, "spectrum | decay | kernel-decay | defect | project | truncate | bvp-check | sweep | verify")
      ->required();
  auto* o_curve = app.add_option("--curve", curve, "curve spec, e.g. ellipse:a=2,b=1");
  auto* o_lambda = app.add_option("--lambda", lambda, "Lame lambda");
  auto* o_mu = app.add_option("--mu", mu, "Lame mu");
  auto* o_n = app.add_option("--n", n, "quadrature nodes");
  auto* o_nc = app.add_option("--n-check", n_check, "two-grid check resolution (default 2n, 0 skips)");
  auto* o_nodes = app.add_option("--contour-nodes", nodes, "trapezoid nodes per Riesz contour");
  auto* o_window = app.add_option("--window", window, "fit window <lo>:<hi>, hi may be 'auto'");
  auto* o_tol = app.add_option("--tol", tol, "relative tolerance for sharp-rate verdicts");
  auto* o_imtol = app.add_option("--im-tol", im_tol, "imaginary-part tolerance relative to ||K_N||");
  auto* o_out = app.add_option("--out", out, "output base path");
  app.add_option("--config", config_path, "JSON run configuration; flags override it");
  auto* o_seed = app.add_option("--seed", seed, "seed recorded in the manifest");
  auto* o_kernel = app.add_option("--kernel", kernel, "kernel-decay selector: A | K22 | K1-remainder");
  auto* o_field = app.add_option("--field", field, "bvp-check field: linear:a11=..,a12=..,a21=..,a22=.. | rigid:rot");
  auto* o_mmax = app.add_option("--m-max", m_max, "largest truncation order");
  auto* o_epsq = app.add_option("--eps-q", eps_q, "Grauert radius for curves without a closed form");
  auto* o_smooth = app.add_option("--smoothness", smoothness, "k + alpha of the boundary");
  auto* o_sweep = app.add_option("--sweep-a", sweep_a, "comma-separated ellipse semi-axes a");
  auto* o_cache = app.add_option("--cache-dir", cache_dir, "matrix cache directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig c;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot read config file " + config_path);
      Json j;
      try {
        j = Json::parse(in);
      } catch (const Json::parse_error& e) {
        throw ConfigError("config file " + config_path + " is not valid JSON: " + e.what());
      }
      c = merge_config(c, j);
    }
    c.command = command;
    auto set = [](const CLI::Option* o) { return o->count() > 0; };
    if (set(o_curve)) c.curve = curve;
    if (set(o_lambda)) c.lambda = lambda;
    if (set(o_mu)) c.mu = mu;
    if (set(o_n)) c.n = n;
    if (set(o_nc)) c.n_check = n_check;
    if (set(o_nodes)) c.contour_nodes = nodes;
    if (set(o_window)) c.window = window;
    if (set(o_tol)) c.tol = tol;
    if (set(o_imtol)) c.im_tol = im_tol;
    if (set(o_out)) c.out = out;
    if (set(o_seed)) c.seed = seed;
    if (set(o_kernel)) c.kernel = kernel;
    if (set(o_field)) c.field = field;
    if (set(o_mmax)) c.m_max = m_max;
    if (set(o_epsq)) c.eps_q = eps_q;
    if (set(o_smooth)) c.smoothness = smoothness;
    if (set(o_cache)) c.cache_dir = cache_dir;
    if (set(o_sweep)) {
      c.sweep_a.clear();
      std::stringstream ss(sweep_a);
      for (std::string tok; std::getline(ss, tok, ',');) {
        double v = 0;
        const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || p != tok.data() + tok.size()) {
          throw ConfigError("invalid --sweep-a value '" + tok + "'");
        }
        c.sweep_a.push_back(v);
      }
    }

    const RunResult result = run_command(materialize(c));
    for (const auto& f : result.files) std::cout << "wrote " << f << '\n';
    for (const auto& m : result.messages) std::cout << m << '\n';
    if (!result.ok) {
      std::cerr << "npspec: verification failed\n";
      return 3;
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "npspec: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "npspec: numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "npspec: internal error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace npspec
