#include "npspec/ratefit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "npspec/error.hpp"
#include "npspec/geometry.hpp"

namespace npspec {

namespace {

struct Design {
  Eigen::VectorXd x;
  Eigen::VectorXd logd;
  int pair_offset = -1;
};

Design collect(const std::vector<DecaySample>& samples, FitWindow window,
               const FitOptions& options) {
  if (!(options.index_scale > 0.0)) throw ConfigError("index scale must be positive");
  std::vector<int> js;
  std::vector<double> logs;
  for (const auto& s : samples) {
    if (s.j < window.j_min || s.j > window.j_max) continue;
    if (!(s.d > 0.0) || !std::isfinite(s.d)) {
      throw NumericalError("nonpositive distance at j = " + std::to_string(s.j) +
                           "; shrink the fit window");
    }
    js.push_back(s.j);
    logs.push_back(std::log(s.d));
  }

  Design d;
  std::vector<double> x, logd;
  if (options.pair_average) {
    double best_spread = std::numeric_limits<double>::infinity();
    for (int offset : {0, 1}) {
      double spread = 0.0;
      int pairs = 0;
      for (std::size_t a = offset; a + 1 < js.size(); a += 2, ++pairs) {
        spread += std::abs(logs[a] - logs[a + 1]);
      }
      if (pairs > 0 && spread / pairs < best_spread) {
        best_spread = spread / pairs;
        d.pair_offset = offset;
      }
    }
    if (d.pair_offset >= 0) {
      for (std::size_t a = d.pair_offset; a + 1 < js.size(); a += 2) {
        x.push_back(options.index_scale * 0.5 * (js[a] + js[a + 1]));
        logd.push_back(0.5 * (logs[a] + logs[a + 1]));
      }
    }
  } else {
    for (std::size_t a = 0; a < js.size(); ++a) {
      x.push_back(options.index_scale * js[a]);
      logd.push_back(logs[a]);
    }
  }
  if (x.size() < 4) {
    throw NumericalError("fit window [" + std::to_string(window.j_min) + ", " +
                         std::to_string(window.j_max) + "] yields " + std::to_string(x.size()) +
                         " points, need at least 4");
  }
  d.x = Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  d.logd = Eigen::Map<Eigen::VectorXd>(logd.data(), static_cast<Eigen::Index>(logd.size()));
  return d;
}

// Least squares y = c0 + c1 * z.
Eigen::Vector2d line_fit(const Eigen::VectorXd& z, const Eigen::VectorXd& y) {
  Eigen::MatrixXd a(z.size(), 2);
  a.col(0).setOnes();
  a.col(1) = z;
  return a.colPivHouseholderQr().solve(y);
}

double log_model(const RateFit& fit, double x) {
  switch (fit.model) {
    case DecayModel::Exponential: return std::log(fit.C) - fit.rate * x;
    case DecayModel::ExponentialWithPrefactor: return std::log(fit.C) + std::log(x) - fit.rate * x;
    case DecayModel::Polynomial: return std::log(fit.C) + fit.rate * std::log(x);
  }
  return 0.0;
}

RateFit finish(RateFit fit, const Design& d, FitWindow window, const FitOptions& options) {
  fit.window = window;
  fit.index_scale = options.index_scale;
  fit.points = static_cast<int>(d.x.size());
  fit.pair_offset = d.pair_offset;
  fit.residual = 0.0;
  for (Eigen::Index i = 0; i < d.x.size(); ++i) {
    fit.residual = std::max(fit.residual, std::abs(d.logd(i) - log_model(fit, d.x(i))));
  }
  return fit;
}

}  // namespace

std::string to_string(DecayModel model) {
  switch (model) {
    case DecayModel::Exponential: return "exponential";
    case DecayModel::ExponentialWithPrefactor: return "exponential_with_prefactor";
    case DecayModel::Polynomial: return "polynomial";
  }
  return "exponential";
}

double RateFit::predict(int j) const {
  const double x = index_scale * j;
  switch (model) {
    case DecayModel::Exponential: return C * std::exp(-rate * x);
    case DecayModel::ExponentialWithPrefactor: return C * x * std::exp(-rate * x);
    case DecayModel::Polynomial: return C * std::pow(x, rate);
  }
  return 0.0;
}

RateFit fit_exponential(const std::vector<DecaySample>& samples, FitWindow window, bool prefactor,
                        const FitOptions& options) {
  const Design d = collect(samples, window, options);
  Eigen::VectorXd y = d.logd;
  if (prefactor) y -= d.x.array().log().matrix();
  const Eigen::Vector2d c = line_fit(d.x, y);
  RateFit fit;
  fit.model = prefactor ? DecayModel::ExponentialWithPrefactor : DecayModel::Exponential;
  fit.C = std::exp(c(0));
  fit.rate = -c(1);
  return finish(fit, d, window, options);
}

RateFit fit_polynomial(const std::vector<DecaySample>& samples, FitWindow window,
                       const FitOptions& options) {
  const Design d = collect(samples, window, options);
  const Eigen::Vector2d c = line_fit(d.x.array().log().matrix(), d.logd);
  RateFit fit;
  fit.model = DecayModel::Polynomial;
  fit.C = std::exp(c(0));
  fit.rate = c(1);
  return finish(fit, d, window, options);
}

FitWindow truncate_window(const std::vector<DecaySample>& samples, int j_min, int j_max_cap,
                          double floor) {
  int j_max = j_min - 1;
  for (const auto& s : samples) {
    if (s.j < j_min) continue;
    if (s.j > j_max_cap || !(s.d > floor)) break;
    j_max = s.j;
  }
  return {j_min, j_max};
}

std::vector<Verdict> compare_with_theory(const RateFit& fit, const TheoryContext& ctx) {
  std::vector<Verdict> out;
  if (!(fit.residual <= ctx.residual_threshold)) {
    Verdict v;
    v.claim = "fit quality";
    v.quote_anchor = "residual <= threshold";
    v.fitted = fit.residual;
    v.theoretical = ctx.residual_threshold;
    v.note = "fit residual " + format_double(fit.residual) +
             " exceeds threshold; verdicts suppressed";
    out.push_back(v);
    return out;
  }

  if (fit.model == DecayModel::Polynomial) {
    Verdict v;
    v.claim = "smooth boundary: d <= -(k+alpha) + 3/2";
    v.quote_anchor = "d > -(k+alpha)+3/2";
    v.fitted = fit.rate;
    v.tolerance = ctx.smooth_slack;
    if (ctx.smoothness) {
      const double bound = -*ctx.smoothness + 1.5;
      v.theoretical = bound;
      v.pass = fit.rate <= bound + ctx.smooth_slack;
      v.note = "margin " + format_double(bound + ctx.smooth_slack - fit.rate);
    } else {
      v.note = "smoothness unknown, bound not checkable";
    }
    out.push_back(v);
    return out;
  }

  Verdict bound;
  bound.claim = "analytic boundary: eps >= eps_q / 8";
  bound.quote_anchor = "for any eps < eps_q/8";
  bound.fitted = fit.rate;
  if (ctx.eps_q && std::isfinite(*ctx.eps_q)) {
    bound.theoretical = *ctx.eps_q / 8.0;
    bound.pass = fit.rate >= *ctx.eps_q / 8.0;
  } else if (ctx.eps_q) {
    bound.note = "eps_q infinite, bound not checkable";
  } else {
    bound.note = "eps_q unknown, bound not checkable";
  }
  out.push_back(bound);

  if (ctx.ellipse && fit.model == DecayModel::ExponentialWithPrefactor && ctx.eps_q &&
      std::isfinite(*ctx.eps_q) && (fit.cluster == "+" || fit.cluster == "-")) {
    const bool plus = fit.cluster == "+";
    const double target = (plus ? 1.0 : 2.0) * *ctx.eps_q;
    Verdict v;
    v.claim = plus ? "ellipse plus cluster: eps = rho" : "ellipse minus cluster: eps = 2 rho";
    v.quote_anchor = plus ? "|lambda+_j - k0| ~ C n e^{-n rho}" : "|lambda-_j + k0| ~ C n e^{-2n rho}";
    v.fitted = fit.rate;
    v.theoretical = target;
    v.tolerance = ctx.rate_tolerance;
    v.pass = std::abs(fit.rate - target) <= ctx.rate_tolerance * target;
    v.note = "relative deviation " + format_double(std::abs(fit.rate - target) / target);
    out.push_back(v);
  }
  return out;
}

}  // namespace npspec
