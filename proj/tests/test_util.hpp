#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "npspec/geometry.hpp"

namespace npspec::test {

inline constexpr double kPi = std::numbers::pi;

inline std::mt19937_64& rng() {
  static std::mt19937_64 engine(20240611);
  return engine;
}

inline double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng());
}

inline Vec2<double> random_vec(double scale = 1.0) {
  return {uniform(-scale, scale), uniform(-scale, scale)};
}

inline Vec2<double> random_unit() {
  const double a = uniform(0.0, 2.0 * kPi);
  return {std::cos(a), std::sin(a)};
}

/// Richardson extrapolation of f(h) -> f(0) for an O(h) error using h, h/2, h/4.
inline double richardson(const std::function<double(double)>& f, double h) {
  const double a = f(h), b = f(h / 2), c = f(h / 4);
  const double r1 = 2 * b - a, r2 = 2 * c - b;  // O(h^2)
  return (4 * r2 - r1) / 3;
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace npspec::test
