#pragma once

// Interior Neumann problem for the Lamé system through the single layer
// representation u = S[phi] with (-1/2 I + K*) phi = g.

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "npspec/assembly.hpp"
#include "npspec/geometry.hpp"

namespace npspec {

/// Manufactured displacement u(x) = A x (any A solves the Lamé system).
struct ManufacturedField {
  Mat2<double> A = Mat2<double>::Zero();
  std::string spec;

  Vec2<double> displacement(const Vec2<double>& x) const { return A * x; }
  /// Traction lambda tr(sym A) n + mu (A + A^T) n.
  Vec2<double> traction(const LameParams& params, const Vec2<double>& normal) const;
};

/// "linear:a11=<f>,a12=<f>,a21=<f>,a22=<f>" or "rigid:rot".
ManufacturedField parse_manufactured(std::string_view spec);

/// Boundary traction samples (component-blocked) and their normalized
/// L2 pairings with the three rigid motions.
struct TractionData {
  Eigen::VectorXd g;
  Eigen::Vector3d compat_residuals = Eigen::Vector3d::Zero();

  static TractionData from_samples(const Curve& curve, const QuadratureGrid& grid,
                                   Eigen::VectorXd g);
  static TractionData from_field(const ManufacturedField& field, const Curve& curve,
                                 const LameParams& params, const QuadratureGrid& grid);
};

struct BvpConfig {
  double compat_tol = 1e-8;
  double null_tol_rel = 1e-6;  // null space: sigma < null_tol_rel * sigma_max
  double near_boundary_rel = 0.05;
};

struct InteriorValue {
  Vec2<double> u;
  bool near_boundary = false;  // dist(x, boundary) < near_boundary_rel * diameter
};

class NeumannSolution {
 public:
  NeumannSolution(Eigen::VectorXd phi, Eigen::VectorXd singular_values, const Curve& curve,
                  const LameParams& params, const QuadratureGrid& grid, const BvpConfig& config);

  const Eigen::VectorXd& density() const { return phi_; }
  /// Singular values of -1/2 I + K*_N, descending.
  const Eigen::VectorXd& singular_values() const { return sigma_; }
  double diameter() const { return diameter_; }

  /// Plain trapezoid single layer at an interior point.
  InteriorValue evaluate(const Vec2<double>& x) const;

  /// mu Lap u + (lambda + mu) grad div u by 5-point differences of step h.
  Vec2<double> lame_residual(const Vec2<double>& x, double h) const;

 private:
  Eigen::VectorXd phi_;
  Eigen::VectorXd sigma_;
  LameParams params_;
  std::vector<Vec2<double>> nodes_;
  Eigen::VectorXd weights_;  // w |q'(t_j)|
  double diameter_ = 0.0;
  double near_tol_ = 0.0;
};

/// Truncated-SVD solve dropping the three null directions. Throws
/// NumericalError on incompatible data or a null space of dimension != 3.
NeumannSolution solve_neumann(const Curve& curve, const LameParams& params,
                              const TractionData& data, const QuadratureGrid& grid,
                              const BvpConfig& config = {});

/// Deterministic interior probes s q(t) on rays from the origin whose
/// distance to the boundary exceeds min_dist (star-shaped curves).
std::vector<Vec2<double>> interior_probes(const Curve& curve, double min_dist, int rays = 12);

/// Pointwise error norms after removing the least-squares rigid motion.
std::vector<double> gauge_fixed_errors(const std::vector<Vec2<double>>& points,
                                       const std::vector<Vec2<double>>& computed,
                                       const std::vector<Vec2<double>>& exact);

/// Max of gauge_fixed_errors.
double gauge_fixed_error(const std::vector<Vec2<double>>& points,
                         const std::vector<Vec2<double>>& computed,
                         const std::vector<Vec2<double>>& exact);

}  // namespace npspec
