#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace npspec {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Mat2 = Eigen::Matrix<Scalar, 2, 2>;

/// Lamé constants of an isotropic elastic body. Construction validates
/// mu > 0 and 2 mu + lambda > 0; the derived constants are then finite.
class LameParams {
 public:
  LameParams(double lambda, double mu);

  double lambda() const { return lambda_; }
  double mu() const { return mu_; }

  /// Accumulation point of the elastic NP spectrum, mu / (2 (2 mu + lambda)).
  double k0() const { return mu_ / (2.0 * (2.0 * mu_ + lambda_)); }
  double alpha1() const { return 0.5 * (1.0 / mu_ + 1.0 / (2.0 * mu_ + lambda_)); }
  double alpha2() const { return 0.5 * (1.0 / mu_ - 1.0 / (2.0 * mu_ + lambda_)); }

 private:
  double lambda_;
  double mu_;
};

double k0(const LameParams& params);

template <typename Scalar>
struct CurvePoint {
  Vec2<Scalar> point;
  Vec2<Scalar> d1;  // q'(t)
  Vec2<Scalar> d2;  // q''(t)
};

/// q(t) = (a cos t, b sin t), a >= b > 0.
struct Ellipse {
  double a;
  double b;
};

/// Star-shaped curve q(t) = r(t) (cos t, sin t) with
/// r(t) = 1 + sum_m (c_m cos mt + s_m sin mt).
struct TrigRadius {
  struct Harmonic {
    int m;
    double cos_amp;
    double sin_amp;
  };
  std::vector<Harmonic> harmonics;
};

/// Finite-smoothness model: r(t) = 1 + delta * sum_{m=2}^{cutoff} m^-beta cos(mt).
/// Boundary regularity is roughly C^{beta-1} for harmonics below the cutoff.
struct SmoothTest {
  double beta;
  double delta;
  int cutoff;
};

/// A 2pi-periodic closed-form parametrization of a simple, counterclockwise
/// closed curve. Immutable after construction.
class Curve {
 public:
  using Family = std::variant<Ellipse, TrigRadius, SmoothTest>;

  explicit Curve(Family family);

  static Curve ellipse(double a, double b) { return Curve(Ellipse{a, b}); }
  static Curve circle() { return ellipse(1.0, 1.0); }

  const Family& family() const { return family_; }

  /// Canonical spec string; parse_curve_spec(spec()) reproduces the curve.
  std::string spec() const;

  /// True only when q is known to be the boundary trace of a Riemann map of
  /// the unit disk (the centred circle). Diagnostics that rely on the
  /// conformal conjugation of the Hilbert transform are exact only then.
  bool riemann_parametrization() const;

  template <typename Scalar>
  CurvePoint<Scalar> eval(Scalar t) const;

  Vec2<double> point(double t) const { return eval(t).point; }

 private:
  Family family_;
  std::vector<TrigRadius::Harmonic> radius_terms_;
};

template <typename Scalar>
CurvePoint<Scalar> Curve::eval(Scalar t) const {
  using std::cos;
  using std::sin;
  CurvePoint<Scalar> out;
  if (const auto* e = std::get_if<Ellipse>(&family_)) {
    const Scalar a(e->a);
    const Scalar b(e->b);
    const Scalar c = cos(t);
    const Scalar s = sin(t);
    out.point << a * c, b * s;
    out.d1 << -a * s, b * c;
    out.d2 << -a * c, -b * s;
    return out;
  }
  Scalar r(1), r1(0), r2(0);
  for (const auto& h : radius_terms_) {
    const Scalar m(h.m);
    const Scalar c = cos(m * t);
    const Scalar s = sin(m * t);
    const Scalar ca(h.cos_amp);
    const Scalar sa(h.sin_amp);
    r += ca * c + sa * s;
    r1 += m * (sa * c - ca * s);
    r2 -= m * m * (ca * c + sa * s);
  }
  const Scalar c = cos(t);
  const Scalar s = sin(t);
  // e = (cos, sin), e_perp = (-sin, cos); e' = e_perp, e_perp' = -e.
  out.point << r * c, r * s;
  out.d1 << r1 * c - r * s, r1 * s + r * c;
  out.d2 << (r2 - r) * c - Scalar(2) * r1 * s, (r2 - r) * s + Scalar(2) * r1 * c;
  return out;
}

/// Outward unit normal: q'(t)/|q'(t)| rotated by -90 degrees.
/// Throws ConfigError when |q'(t)| < 1e-12.
Vec2<double> outward_normal(const Curve& curve, double t);

/// Modified maximal Grauert radius where known in closed form.
struct GrauertRadius {
  double value;  // +infinity for the circle
};

/// Ellipse(a, b) with a > b gives log((a+b)/(a-b)); the circle gives +inf;
/// other families return nullopt and need a user-supplied value.
std::optional<GrauertRadius> grauert_radius(const Curve& curve);

/// Regularity and orientation of the sampled curve on an n-point grid.
struct GridCheck {
  double min_speed;
  double turning;  // sum of tangent angle increments, 2pi for a CCW simple curve
};

/// Samples the curve at t_j = 2 pi j / n and throws ConfigError if |q'| drops
/// below 1e-12 or the tangent turning differs from 2pi by more than 1e-8.
GridCheck check_on_grid(const Curve& curve, int n);

/// Parses "ellipse:a=<f>,b=<f>", "trig:c<m>=<f>[,s<m>=<f>]..." or
/// "smoothtest:beta=<f>,delta=<f>,cutoff=<int>". Throws ConfigError with a
/// one-line message naming the offending token.
Curve parse_curve_spec(std::string_view spec);

/// Shortest round-trip decimal representation.
std::string format_double(double value);

}  // namespace npspec
