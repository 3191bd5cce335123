#include "npspec/bvp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "npspec/error.hpp"
#include "npspec/kernels.hpp"

namespace npspec {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double boundary_distance(const std::vector<Vec2<double>>& boundary, const Vec2<double>& x) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& b : boundary) d = std::min(d, (b - x).norm());
  return d;
}

std::vector<Vec2<double>> dense_boundary(const Curve& curve, int samples) {
  std::vector<Vec2<double>> pts;
  pts.reserve(samples);
  for (int j = 0; j < samples; ++j) pts.push_back(curve.point(2.0 * std::numbers::pi * j / samples));
  return pts;
}

}  // namespace

Vec2<double> ManufacturedField::traction(const LameParams& params, const Vec2<double>& normal) const {
  const Mat2<double> sym = 0.5 * (A + A.transpose());
  return params.lambda() * sym.trace() * normal + 2.0 * params.mu() * sym * normal;
}

ManufacturedField parse_manufactured(std::string_view spec) {
  ManufacturedField f;
  f.spec = std::string(spec);
  if (spec == "rigid:rot") {
    f.A << 0.0, -1.0, 1.0, 0.0;
    return f;
  }
  constexpr std::string_view prefix = "linear:";
  if (!spec.starts_with(prefix)) {
    throw ConfigError("unknown manufactured field '" + std::string(spec) +
                      "' (expected linear:a11=..,a12=..,a21=..,a22=.. or rigid:rot)");
  }
  std::map<std::string, double> seen;
  std::string_view body = spec.substr(prefix.size());
  while (!body.empty()) {
    const auto comma = body.find(',');
    const std::string_view token = body.substr(0, comma);
    body = comma == std::string_view::npos ? std::string_view{} : body.substr(comma + 1);
    const auto eq = token.find('=');
    const std::string key(token.substr(0, eq));
    if (eq == std::string_view::npos ||
        (key != "a11" && key != "a12" && key != "a21" && key != "a22")) {
      throw ConfigError("malformed manufactured-field token '" + std::string(token) + "'");
    }
    const std::string_view value = token.substr(eq + 1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (value.empty() || ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(v)) {
      throw ConfigError("malformed number in manufactured-field token '" + std::string(token) + "'");
    }
    if (!seen.emplace(key, v).second) {
      throw ConfigError("duplicate manufactured-field token '" + std::string(token) + "'");
    }
  }
  for (const char* key : {"a11", "a12", "a21", "a22"}) {
    if (!seen.contains(key)) throw ConfigError(std::string("missing manufactured-field token '") + key + "'");
  }
  f.A << seen["a11"], seen["a12"], seen["a21"], seen["a22"];
  return f;
}

TractionData TractionData::from_samples(const Curve& curve, const QuadratureGrid& grid, VectorXd g) {
  const int n = grid.size();
  if (g.size() != 2 * n) throw std::invalid_argument("traction samples must have length 2n");
  TractionData data;
  const VectorXd w = l2_weights(curve, grid, true);
  const MatrixXd r = rigid_motions(curve, grid);
  const double g_norm = std::sqrt(g.dot(w.asDiagonal() * g));
  for (int k = 0; k < 3; ++k) {
    const double r_norm = std::sqrt(r.col(k).dot(w.asDiagonal() * r.col(k)));
    data.compat_residuals(k) =
        g_norm == 0.0 ? 0.0 : std::abs(g.dot(w.asDiagonal() * r.col(k))) / (g_norm * r_norm);
  }
  data.g = std::move(g);
  return data;
}

TractionData TractionData::from_field(const ManufacturedField& field, const Curve& curve,
                                      const LameParams& params, const QuadratureGrid& grid) {
  const int n = grid.size();
  VectorXd g(2 * n);
  for (int j = 0; j < n; ++j) {
    const Vec2<double> t = field.traction(params, outward_normal(curve, grid.node(j)));
    g(j) = t.x();
    g(n + j) = t.y();
  }
  return from_samples(curve, grid, std::move(g));
}

NeumannSolution::NeumannSolution(VectorXd phi, VectorXd singular_values, const Curve& curve,
                                 const LameParams& params, const QuadratureGrid& grid,
                                 const BvpConfig& config)
    : phi_(std::move(phi)), sigma_(std::move(singular_values)), params_(params) {
  const int n = grid.size();
  weights_.resize(n);
  for (int j = 0; j < n; ++j) {
    const CurvePoint<double> p = curve.eval(grid.node(j));
    nodes_.push_back(p.point);
    weights_(j) = grid.weight() * p.d1.norm();
  }
  for (const auto& a : nodes_) {
    for (const auto& b : nodes_) diameter_ = std::max(diameter_, (a - b).norm());
  }
  near_tol_ = config.near_boundary_rel * diameter_;
}

InteriorValue NeumannSolution::evaluate(const Vec2<double>& x) const {
  const int n = static_cast<int>(nodes_.size());
  InteriorValue out;
  out.u.setZero();
  for (int j = 0; j < n; ++j) {
    const Vec2<double> density(phi_(j), phi_(n + j));
    out.u += weights_(j) * (kelvin<double>(params_, x - nodes_[j]) * density);
  }
  out.near_boundary = boundary_distance(nodes_, x) < near_tol_;
  return out;
}

Vec2<double> NeumannSolution::lame_residual(const Vec2<double>& x, double h) const {
  auto u = [&](double dx, double dy) { return evaluate(x + Vec2<double>(dx, dy)).u; };
  const Vec2<double> c = u(0, 0);
  const Vec2<double> e = u(h, 0), w = u(-h, 0), nn = u(0, h), s = u(0, -h);
  const Vec2<double> ne = u(h, h), nw = u(-h, h), se = u(h, -h), sw = u(-h, -h);
  const Vec2<double> lap = (e + w + nn + s - 4.0 * c) / (h * h);
  const Vec2<double> dxx = (e - 2.0 * c + w) / (h * h);
  const Vec2<double> dyy = (nn - 2.0 * c + s) / (h * h);
  const Vec2<double> dxy = (ne - nw - se + sw) / (4.0 * h * h);
  // grad div u = (u1_xx + u2_xy, u1_xy + u2_yy)
  const Vec2<double> grad_div(dxx.x() + dxy.y(), dxy.x() + dyy.y());
  return params_.mu() * lap + (params_.lambda() + params_.mu()) * grad_div;
}

NeumannSolution solve_neumann(const Curve& curve, const LameParams& params,
                              const TractionData& data, const QuadratureGrid& grid,
                              const BvpConfig& config) {
  for (int k = 0; k < 3; ++k) {
    if (!(data.compat_residuals(k) < config.compat_tol)) {
      throw NumericalError("traction data incompatible with rigid motions: residuals (" +
                           format_double(data.compat_residuals(0)) + ", " +
                           format_double(data.compat_residuals(1)) + ", " +
                           format_double(data.compat_residuals(2)) + ")");
    }
  }
  MatrixXd a = assemble_K_adjoint(curve, params, grid).matrix();
  a.diagonal().array() -= 0.5;
  Eigen::BDCSVD<MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& s = svd.singularValues();
  const double cut = config.null_tol_rel * s(0);
  const auto null_dim = (s.array() < cut).count();
  if (null_dim != 3) {
    throw NumericalError("expected a 3-dimensional null space of -1/2 I + K*, found " +
                         std::to_string(null_dim) + " (n = " + std::to_string(grid.size()) +
                         "; discretization too coarse?)");
  }
  const Eigen::Index keep = s.size() - 3;
  const VectorXd coeff =
      (svd.matrixU().leftCols(keep).transpose() * data.g).cwiseQuotient(s.head(keep));
  VectorXd phi = svd.matrixV().leftCols(keep) * coeff;
  return NeumannSolution(std::move(phi), s, curve, params, grid, config);
}

std::vector<Vec2<double>> interior_probes(const Curve& curve, double min_dist, int rays) {
  const std::vector<Vec2<double>> boundary = dense_boundary(curve, 2048);
  std::vector<Vec2<double>> out;
  const Vec2<double> origin = Vec2<double>::Zero();
  if (boundary_distance(boundary, origin) > min_dist) out.push_back(origin);
  for (int k = 0; k < rays; ++k) {
    const double t = 2.0 * std::numbers::pi * (k + 0.25) / rays;
    const Vec2<double> q = curve.point(t);
    for (double scale : {0.25, 0.5, 0.7, 0.85}) {
      const Vec2<double> x = scale * q;
      if (boundary_distance(boundary, x) > min_dist) out.push_back(x);
    }
  }
  return out;
}

std::vector<double> gauge_fixed_errors(const std::vector<Vec2<double>>& points,
                                       const std::vector<Vec2<double>>& computed,
                                       const std::vector<Vec2<double>>& exact) {
  const auto m = static_cast<Eigen::Index>(points.size());
  if (m == 0 || computed.size() != points.size() || exact.size() != points.size()) {
    throw std::invalid_argument("gauge_fixed_error: mismatched probe lists");
  }
  MatrixXd basis(2 * m, 3);
  VectorXd err(2 * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& x = points[i];
    basis.row(2 * i) << 1.0, 0.0, -x.y();
    basis.row(2 * i + 1) << 0.0, 1.0, x.x();
    err.segment<2>(2 * i) = computed[i] - exact[i];
  }
  const VectorXd c = basis.colPivHouseholderQr().solve(err);
  const VectorXd residual = err - basis * c;
  std::vector<double> out(points.size());
  for (Eigen::Index i = 0; i < m; ++i) out[i] = residual.segment<2>(2 * i).norm();
  return out;
}

double gauge_fixed_error(const std::vector<Vec2<double>>& points,
                         const std::vector<Vec2<double>>& computed,
                         const std::vector<Vec2<double>>& exact) {
  const auto e = gauge_fixed_errors(points, computed, exact);
  return *std::max_element(e.begin(), e.end());
}

}  // namespace npspec
