#pragma once

// Dense Nyström discretizations on the periodic trapezoid grid.
//
// Vector densities use the component-blocked layout [f1(t_0..t_{n-1}),
// f2(t_0..t_{n-1})], so 2x2 block operators are literal block matrices.
//
// Convention for the elastic NP operator: assemble_K applies the conormal
// kernel transposed relative to conormal_kelvin() (the Betti double layer).
// In that convention the rigid motions are eigenvectors with eigenvalue 1/2,
// and K = k0 H - 2 k0 B H - T2 with H = [0 -H0; H0 0] on the disk.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "npspec/geometry.hpp"

namespace npspec {

/// n equispaced nodes t_j = 2 pi j / n with trapezoid weight 2 pi / n.
class QuadratureGrid {
 public:
  static constexpr int kMinNodes = 16;
  static constexpr int kMaxNodes = 4096;

  explicit QuadratureGrid(int n);

  int size() const { return n_; }
  double node(int j) const;
  double weight() const;
  Eigen::VectorXd nodes() const;

 private:
  int n_;
};

enum class OperatorKind { K, KAdjoint, Kcal, S, H0, P, T1, T2, B, Q, Other };

std::string to_string(OperatorKind kind);

struct OperatorMetadata {
  OperatorKind kind = OperatorKind::Other;
  std::string curve_spec;  // empty for curve-independent operators
  std::optional<LameParams> params;
  int n = 0;
  bool vector_density = false;
  bool exact_frame = false;  // curve carries a Riemann parametrization
};

/// A dense real Nyström matrix together with what it discretizes.
/// Construction checks that entries are finite and the size matches n.
class OperatorMatrix {
 public:
  OperatorMatrix(Eigen::MatrixXd matrix, OperatorMetadata meta);

  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const OperatorMetadata& meta() const { return meta_; }
  Eigen::Index rows() const { return matrix_.rows(); }

 private:
  Eigen::MatrixXd matrix_;
  OperatorMetadata meta_;
};

/// Curve samples on a grid, validated for regularity and orientation.
struct CurveSamples {
  std::vector<CurvePoint<double>> at;
  Eigen::VectorXd speed;  // |q'(t_j)|

  static CurveSamples take(const Curve& curve, const QuadratureGrid& grid);
};

/// Discrete L2 weight |q'(t_j)| w, repeated per component when `vector_density`.
Eigen::VectorXd l2_weights(const Curve& curve, const QuadratureGrid& grid, bool vector_density);

/// Circle conjugate-function operator: multiplier -i sgn(k) for |k| < n/2,
/// zero for k = 0 and for the Nyquist mode. Real and skew-symmetric.
OperatorMatrix assemble_H0(const QuadratureGrid& grid);

/// Elastic NP operator K (2n x 2n).
OperatorMatrix assemble_K(const Curve& curve, const LameParams& params, const QuadratureGrid& grid);

/// L2 adjoint K*, assembled from the exchanged kernel.
OperatorMatrix assemble_K_adjoint(const Curve& curve, const LameParams& params,
                                  const QuadratureGrid& grid);

/// Electrostatic NP operator (n x n).
OperatorMatrix assemble_Kcal(const Curve& curve, const QuadratureGrid& grid);

/// B = diag(Kcal, Kcal).
OperatorMatrix assemble_B(const Curve& curve, const QuadratureGrid& grid);

/// Principal-value operator of the antisymmetric kernel, in the convention
/// of assemble_K; K = 2 k0 T1 - T2.
OperatorMatrix assemble_T1(const Curve& curve, const QuadratureGrid& grid);

/// Operator of the symmetric kernel K2.
OperatorMatrix assemble_T2(const Curve& curve, const LameParams& params,
                           const QuadratureGrid& grid);

/// Lamé single layer potential with periodic logarithmic quadrature.
OperatorMatrix assemble_S(const Curve& curve, const LameParams& params, const QuadratureGrid& grid);

/// Block Hilbert operator [0 -H0; H0 0].
Eigen::MatrixXd hilbert_block(const QuadratureGrid& grid);

/// P = (1/sqrt 2)[I H0; H0 I] with two inverses: the closed form
/// (1/sqrt 2)[I -H0; -H0 I], exact off the k = 0 and Nyquist modes, and the
/// exact matrix inverse from the multiplier algebra.
struct PTransform {
  OperatorMatrix forward;
  Eigen::MatrixXd inverse_formula;
  Eigen::MatrixXd inverse;
  double defect_norm;  // || P * inverse_formula - I ||_2
};

PTransform assemble_P(const QuadratureGrid& grid);

/// Periodic log quadrature weights: sum_j R(t_i - t_j) f(t_j) approximates
/// int_0^{2pi} ln(4 sin^2((t_i - s)/2)) f(s) ds for trigonometric f.
Eigen::VectorXd log_quadrature_weights(const QuadratureGrid& grid);

/// Samples of the three rigid motions (1,0), (0,1), (-x2, x1) as columns.
Eigen::MatrixXd rigid_motions(const Curve& curve, const QuadratureGrid& grid);

}  // namespace npspec
