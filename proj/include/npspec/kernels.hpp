#pragma once

// Pointwise integral kernels of the 2D elastostatic layer potentials.
//
// Free kernels take plane points; parametrized kernels take curve samples
// (so assembly evaluates the parametrization once per node) and carry exact
// diagonal limits. Everything is templated on the scalar so the Fourier
// diagnostics can run in extended precision.

#include <cmath>
#include <stdexcept>

#include <boost/math/constants/constants.hpp>

#include "npspec/geometry.hpp"

namespace npspec {

template <typename Scalar>
struct SplitKernelValue {
  Scalar singular_coeff;  // multiplies (1/4pi) cot((t-s)/2)
  Scalar smooth_part;
};

namespace detail {

template <typename Scalar>
Scalar pi() {
  return boost::math::constants::pi<Scalar>();
}

template <typename Scalar>
Scalar cross(const Vec2<Scalar>& a, const Vec2<Scalar>& b) {
  return a.x() * b.y() - a.y() * b.x();
}

template <typename Scalar>
Vec2<Scalar> rotate_cw(const Vec2<Scalar>& v) {
  return Vec2<Scalar>(v.y(), -v.x());
}

template <typename Scalar>
void require_distinct(const Vec2<Scalar>& z) {
  if (z.x() == Scalar(0) && z.y() == Scalar(0)) {
    throw std::domain_error("kernel evaluated at its singular point x = y");
  }
}

// (t - s) reduced to (-pi, pi].
template <typename Scalar>
Scalar wrap(Scalar h) {
  using std::floor;
  const Scalar two_pi = Scalar(2) * pi<Scalar>();
  h -= two_pi * floor(h / two_pi);
  if (h > pi<Scalar>()) h -= two_pi;
  return h;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Free-space kernels

/// Kelvin matrix Gamma(x) of the Lamé operator.
template <typename Scalar>
Mat2<Scalar> kelvin(const LameParams& params, const Vec2<Scalar>& x) {
  using std::log;
  detail::require_distinct(x);
  const Scalar two_pi = Scalar(2) * detail::pi<Scalar>();
  const Scalar r2 = x.squaredNorm();
  const Scalar a1 = Scalar(params.alpha1()) / two_pi;
  const Scalar a2 = Scalar(params.alpha2()) / two_pi;
  Mat2<Scalar> g = -a2 * (x * x.transpose()) / r2;
  g.diagonal().array() += a1 * log(r2) / Scalar(2);
  return g;
}

/// Matrix M with M b = traction (at y, normal n_y) of y -> Gamma(x - y) b,
/// from closed-form derivatives of the Kelvin matrix.
template <typename Scalar>
Mat2<Scalar> conormal_kelvin(const LameParams& params, const Vec2<Scalar>& x,
                             const Vec2<Scalar>& y, const Vec2<Scalar>& n_y) {
  const Vec2<Scalar> z = x - y;
  detail::require_distinct(z);
  const Scalar two_pi = Scalar(2) * detail::pi<Scalar>();
  const Scalar r2 = z.squaredNorm();
  const Scalar a1 = Scalar(params.alpha1()) / two_pi;
  const Scalar a2 = Scalar(params.alpha2()) / two_pi;
  const Scalar lam(params.lambda());
  const Scalar mu(params.mu());

  // du_i/dy_k for u = Gamma(x - y) e_j is -(d_k Gamma_ij)(z).
  auto grad = [&](int i, int k, int j) {
    const Scalar dij = i == j ? Scalar(1) : Scalar(0);
    const Scalar dik = i == k ? Scalar(1) : Scalar(0);
    const Scalar djk = j == k ? Scalar(1) : Scalar(0);
    const Scalar d = a1 * dij * z(k) / r2 -
                     a2 * ((dik * z(j) + djk * z(i)) / r2 - Scalar(2) * z(i) * z(j) * z(k) / (r2 * r2));
    return -d;
  };

  Mat2<Scalar> m;
  for (int j = 0; j < 2; ++j) {
    const Scalar div = grad(0, 0, j) + grad(1, 1, j);
    for (int i = 0; i < 2; ++i) {
      Scalar t = lam * div * n_y(i);
      for (int k = 0; k < 2; ++k) t += mu * (grad(i, k, j) + grad(k, i, j)) * n_y(k);
      m(i, j) = t;
    }
  }
  return m;
}

/// Antisymmetric part of the conormal kernel:
/// (n_y (x-y)^T - (x-y) n_y^T) / (2 pi |x-y|^2).
template <typename Scalar>
Mat2<Scalar> kernel_K1(const Vec2<Scalar>& x, const Vec2<Scalar>& y, const Vec2<Scalar>& n_y) {
  const Vec2<Scalar> z = x - y;
  detail::require_distinct(z);
  const Scalar k = (n_y.x() * z.y() - n_y.y() * z.x()) /
                   (Scalar(2) * detail::pi<Scalar>() * z.squaredNorm());
  Mat2<Scalar> m;
  m << Scalar(0), k, -k, Scalar(0);
  return m;
}

/// Symmetric part; note the leading factor uses (x - y) . n_y.
template <typename Scalar>
Mat2<Scalar> kernel_K2(const LameParams& params, const Vec2<Scalar>& x, const Vec2<Scalar>& y,
                       const Vec2<Scalar>& n_y) {
  const Vec2<Scalar> z = x - y;
  detail::require_distinct(z);
  const Scalar lam(params.lambda());
  const Scalar mu(params.mu());
  const Scalar denom = Scalar(2) * mu + lam;
  const Scalar r2 = z.squaredNorm();
  const Scalar c = z.dot(n_y) / (Scalar(2) * detail::pi<Scalar>() * r2);
  Mat2<Scalar> m = (Scalar(2) * (mu + lam) / denom) * c * (z * z.transpose()) / r2;
  m.diagonal().array() += (mu / denom) * c;
  return m;
}

/// Electrostatic NP kernel (y - x) . n_y / (2 pi |x - y|^2).
template <typename Scalar>
Scalar kernel_K0(const Vec2<Scalar>& x, const Vec2<Scalar>& y, const Vec2<Scalar>& n_y) {
  const Vec2<Scalar> z = y - x;
  detail::require_distinct(z);
  return z.dot(n_y) / (Scalar(2) * detail::pi<Scalar>() * z.squaredNorm());
}

// ---------------------------------------------------------------------------
// Parametrized kernels. `diagonal` selects the t = s limit.

/// (1/4 pi i)[q'(t)/(q(t)-q(s)) - conj(q'(t))/(conj q(t) - conj q(s))]
/// = Im(q'(t)/(q(t)-q(s))) / 2pi; diagonal Im(q''/q')/4pi.
template <typename Scalar>
Scalar param_A(const CurvePoint<Scalar>& at_t, const CurvePoint<Scalar>& at_s, bool diagonal) {
  const Scalar four_pi = Scalar(4) * detail::pi<Scalar>();
  if (diagonal) {
    return detail::cross(at_t.d1, at_t.d2) / (four_pi * at_t.d1.squaredNorm());
  }
  const Vec2<Scalar> delta = at_t.point - at_s.point;
  return Scalar(2) * detail::cross(delta, at_t.d1) / (four_pi * delta.squaredNorm());
}

/// K0(q(t), q(s)) |q'(s)|: the electrostatic kernel in the density-measure
/// convention used by assembly. Diagonal cross(q', q'')/(4 pi |q'|^2).
template <typename Scalar>
Scalar param_K0_measure(const CurvePoint<Scalar>& at_t, const CurvePoint<Scalar>& at_s,
                        bool diagonal) {
  const Scalar four_pi = Scalar(4) * detail::pi<Scalar>();
  if (diagonal) {
    return detail::cross(at_s.d1, at_s.d2) / (four_pi * at_s.d1.squaredNorm());
  }
  const Vec2<Scalar> delta = at_t.point - at_s.point;
  return Scalar(2) * detail::cross(at_s.d1, delta) / (four_pi * delta.squaredNorm());
}

/// R(t, s) = (q(t)-q(s)) (q(t)-q(s))^T / |q(t)-q(s)|^2, diagonal q' q'^T / |q'|^2.
template <typename Scalar>
Mat2<Scalar> chord_projector(const CurvePoint<Scalar>& at_t, const CurvePoint<Scalar>& at_s,
                             bool diagonal) {
  const Vec2<Scalar> v = diagonal ? at_s.d1 : Vec2<Scalar>(at_t.point - at_s.point);
  return (v * v.transpose()) / v.squaredNorm();
}

/// ((x-y).n_y / (2 pi |x-y|^4)) (x-y)(x-y)^T |q'(s)| = -K0 |q'(s)| R(t, s).
template <typename Scalar>
Mat2<Scalar> param_K22(const CurvePoint<Scalar>& at_t, const CurvePoint<Scalar>& at_s,
                       bool diagonal) {
  return -param_K0_measure(at_t, at_s, diagonal) * chord_projector(at_t, at_s, diagonal);
}

/// k1(t, s) = q'(s) . (q(t)-q(s)) / (2 pi |q(t)-q(s)|^2), split as
/// (1/4pi) cot((t-s)/2) + smooth. Diagonal smooth limit -(q'.q'')/(4 pi |q'|^2).
template <typename Scalar>
SplitKernelValue<Scalar> param_K1_split(const CurvePoint<Scalar>& at_t,
                                        const CurvePoint<Scalar>& at_s, Scalar t_minus_s,
                                        bool diagonal) {
  using std::tan;
  const Scalar four_pi = Scalar(4) * detail::pi<Scalar>();
  if (diagonal) {
    return {Scalar(1), -at_s.d1.dot(at_s.d2) / (four_pi * at_s.d1.squaredNorm())};
  }
  const Vec2<Scalar> delta = at_t.point - at_s.point;
  const Scalar k1 = Scalar(2) * at_s.d1.dot(delta) / (four_pi * delta.squaredNorm());
  const Scalar h = detail::wrap(t_minus_s);
  return {Scalar(1), k1 - Scalar(1) / (four_pi * tan(h / Scalar(2)))};
}

// Curve-level conveniences; the diagonal is taken when t = s modulo 2pi.

template <typename Scalar>
Scalar param_A(const Curve& curve, Scalar t, Scalar s) {
  return param_A(curve.eval(t), curve.eval(s), detail::wrap(t - s) == Scalar(0));
}

template <typename Scalar>
Mat2<Scalar> param_K22(const Curve& curve, Scalar t, Scalar s) {
  return param_K22(curve.eval(t), curve.eval(s), detail::wrap(t - s) == Scalar(0));
}

template <typename Scalar>
Mat2<Scalar> chord_projector(const Curve& curve, Scalar t, Scalar s) {
  return chord_projector(curve.eval(t), curve.eval(s), detail::wrap(t - s) == Scalar(0));
}

template <typename Scalar>
SplitKernelValue<Scalar> param_K1_split(const Curve& curve, Scalar t, Scalar s) {
  return param_K1_split(curve.eval(t), curve.eval(s), t - s, detail::wrap(t - s) == Scalar(0));
}

}  // namespace npspec
