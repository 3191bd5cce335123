#include "npspec/assembly.hpp"

#include <cmath>
#include <numbers>

#include "npspec/error.hpp"
#include "npspec/kernels.hpp"

namespace npspec {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

using Eigen::MatrixXd;
using Eigen::VectorXd;

OperatorMetadata scalar_meta(OperatorKind kind, const Curve* curve, int n) {
  OperatorMetadata meta;
  meta.kind = kind;
  meta.n = n;
  if (curve != nullptr) {
    meta.curve_spec = curve->spec();
    meta.exact_frame = curve->riemann_parametrization();
  }
  return meta;
}

OperatorMetadata vector_meta(OperatorKind kind, const Curve* curve, const LameParams* params,
                             int n) {
  OperatorMetadata meta = scalar_meta(kind, curve, n);
  meta.vector_density = true;
  if (params != nullptr) meta.params = *params;
  return meta;
}

// Scalar principal-value part m(t_i, t_j) of the k1 kernel (cotangent removed).
MatrixXd k1_remainder(const CurveSamples& cs, const QuadratureGrid& grid) {
  const int n = grid.size();
  MatrixXd m(n, n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      m(i, j) = param_K1_split(cs.at[i], cs.at[j], grid.node(i) - grid.node(j), i == j).smooth_part;
    }
  }
  return m;
}

MatrixXd k0_measure(const CurveSamples& cs, int n) {
  MatrixXd k(n, n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) k(i, j) = param_K0_measure(cs.at[i], cs.at[j], i == j);
  }
  return k;
}

// Writes the 2x2 block `b` scaled into the component-blocked slot (i, j).
void put_block(MatrixXd& out, int n, int i, int j, const Mat2<double>& b) {
  out(i, j) = b(0, 0);
  out(i, n + j) = b(0, 1);
  out(n + i, j) = b(1, 0);
  out(n + i, n + j) = b(1, 1);
}

// T2 in the plain convention (transpose = false) or its weighted transpose.
MatrixXd assemble_T2_matrix(const CurveSamples& cs, const LameParams& params,
                            const QuadratureGrid& grid, bool adjoint) {
  const int n = grid.size();
  const double w = grid.weight();
  const double denom = 2.0 * params.mu() + params.lambda();
  const double c1 = params.mu() / denom;
  const double c2 = 2.0 * (params.mu() + params.lambda()) / denom;
  const MatrixXd k = k0_measure(cs, n);
  MatrixXd out(2 * n, 2 * n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Mat2<double> b = c2 * chord_projector(cs.at[i], cs.at[j], i == j);
      b.diagonal().array() += c1;
      const double scale = adjoint ? -w * k(j, i) * cs.speed(j) / cs.speed(i) : -w * k(i, j);
      put_block(out, n, i, j, scale * b);
    }
  }
  return out;
}

MatrixXd antisymmetric_block(const MatrixXd& s) {
  const Eigen::Index n = s.rows();
  MatrixXd out = MatrixXd::Zero(2 * n, 2 * n);
  out.topRightCorner(n, n) = -s;
  out.bottomLeftCorner(n, n) = s;
  return out;
}

MatrixXd h0_matrix(const QuadratureGrid& grid) {
  const int n = grid.size();
  MatrixXd h = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if ((i - j) % 2 != 0) h(i, j) = (2.0 / n) / std::tan(0.5 * (grid.node(i) - grid.node(j)));
    }
  }
  return h;
}

}  // namespace

QuadratureGrid::QuadratureGrid(int n) : n_(n) {
  if (n % 2 != 0) throw ConfigError("grid size n must be even (n = " + std::to_string(n) + ")");
  if (n < kMinNodes || n > kMaxNodes) {
    throw ConfigError("grid size n must lie in [" + std::to_string(kMinNodes) + ", " +
                      std::to_string(kMaxNodes) + "] (n = " + std::to_string(n) + ")");
  }
}

double QuadratureGrid::node(int j) const { return kTwoPi * j / n_; }

double QuadratureGrid::weight() const { return kTwoPi / n_; }

VectorXd QuadratureGrid::nodes() const {
  VectorXd t(n_);
  for (int j = 0; j < n_; ++j) t(j) = node(j);
  return t;
}

std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::K: return "K";
    case OperatorKind::KAdjoint: return "K_adjoint";
    case OperatorKind::Kcal: return "Kcal";
    case OperatorKind::S: return "S";
    case OperatorKind::H0: return "H0";
    case OperatorKind::P: return "P";
    case OperatorKind::T1: return "T1";
    case OperatorKind::T2: return "T2";
    case OperatorKind::B: return "B";
    case OperatorKind::Q: return "Q";
    case OperatorKind::Other: return "other";
  }
  return "other";
}

OperatorMatrix::OperatorMatrix(MatrixXd matrix, OperatorMetadata meta)
    : matrix_(std::move(matrix)), meta_(std::move(meta)) {
  const Eigen::Index expected = (meta_.vector_density ? 2 : 1) * static_cast<Eigen::Index>(meta_.n);
  if (matrix_.rows() != expected || matrix_.cols() != expected) {
    throw std::invalid_argument("operator " + to_string(meta_.kind) + ": size " +
                                std::to_string(matrix_.rows()) + "x" +
                                std::to_string(matrix_.cols()) + " does not match n = " +
                                std::to_string(meta_.n));
  }
  if (!matrix_.allFinite()) {
    throw NumericalError("operator " + to_string(meta_.kind) + " has non-finite entries (curve " +
                         meta_.curve_spec + ", n = " + std::to_string(meta_.n) + ")");
  }
}

CurveSamples CurveSamples::take(const Curve& curve, const QuadratureGrid& grid) {
  check_on_grid(curve, grid.size());
  CurveSamples cs;
  cs.at.reserve(grid.size());
  cs.speed.resize(grid.size());
  for (int j = 0; j < grid.size(); ++j) {
    cs.at.push_back(curve.eval(grid.node(j)));
    cs.speed(j) = cs.at.back().d1.norm();
  }
  return cs;
}

VectorXd l2_weights(const Curve& curve, const QuadratureGrid& grid, bool vector_density) {
  const int n = grid.size();
  VectorXd w(vector_density ? 2 * n : n);
  for (int j = 0; j < n; ++j) {
    w(j) = curve.eval(grid.node(j)).d1.norm() * grid.weight();
    if (vector_density) w(n + j) = w(j);
  }
  return w;
}

OperatorMatrix assemble_H0(const QuadratureGrid& grid) {
  return {h0_matrix(grid), scalar_meta(OperatorKind::H0, nullptr, grid.size())};
}

MatrixXd hilbert_block(const QuadratureGrid& grid) { return antisymmetric_block(h0_matrix(grid)); }

OperatorMatrix assemble_T1(const Curve& curve, const QuadratureGrid& grid) {
  const CurveSamples cs = CurveSamples::take(curve, grid);
  const MatrixXd s1 = 0.5 * h0_matrix(grid) + grid.weight() * k1_remainder(cs, grid);
  return {antisymmetric_block(s1), vector_meta(OperatorKind::T1, &curve, nullptr, grid.size())};
}

OperatorMatrix assemble_T2(const Curve& curve, const LameParams& params,
                           const QuadratureGrid& grid) {
  const CurveSamples cs = CurveSamples::take(curve, grid);
  return {assemble_T2_matrix(cs, params, grid, false),
          vector_meta(OperatorKind::T2, &curve, &params, grid.size())};
}

OperatorMatrix assemble_K(const Curve& curve, const LameParams& params, const QuadratureGrid& grid) {
  const CurveSamples cs = CurveSamples::take(curve, grid);
  const MatrixXd s1 = 0.5 * h0_matrix(grid) + grid.weight() * k1_remainder(cs, grid);
  MatrixXd k = 2.0 * params.k0() * antisymmetric_block(s1);
  k -= assemble_T2_matrix(cs, params, grid, false);
  return {std::move(k), vector_meta(OperatorKind::K, &curve, &params, grid.size())};
}

OperatorMatrix assemble_K_adjoint(const Curve& curve, const LameParams& params,
                                  const QuadratureGrid& grid) {
  const CurveSamples cs = CurveSamples::take(curve, grid);
  const int n = grid.size();
  const MatrixXd m = k1_remainder(cs, grid);
  // Exchanged kernel: the smooth part is m(t_j, t_i) with the measure moved
  // to the evaluation point; the PV part is the weighted adjoint of H0/2.
  MatrixXd s = -0.5 * cs.speed.cwiseInverse().asDiagonal() * h0_matrix(grid) *
               cs.speed.asDiagonal();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) s(i, j) += grid.weight() * m(j, i) * cs.speed(j) / cs.speed(i);
  }
  MatrixXd k = -2.0 * params.k0() * antisymmetric_block(s);
  k -= assemble_T2_matrix(cs, params, grid, true);
  return {std::move(k), vector_meta(OperatorKind::KAdjoint, &curve, &params, n)};
}

OperatorMatrix assemble_Kcal(const Curve& curve, const QuadratureGrid& grid) {
  const CurveSamples cs = CurveSamples::take(curve, grid);
  return {grid.weight() * k0_measure(cs, grid.size()),
          scalar_meta(OperatorKind::Kcal, &curve, grid.size())};
}

OperatorMatrix assemble_B(const Curve& curve, const QuadratureGrid& grid) {
  const int n = grid.size();
  const MatrixXd kcal = assemble_Kcal(curve, grid).matrix();
  MatrixXd b = MatrixXd::Zero(2 * n, 2 * n);
  b.topLeftCorner(n, n) = kcal;
  b.bottomRightCorner(n, n) = kcal;
  return {std::move(b), vector_meta(OperatorKind::B, &curve, nullptr, n)};
}

VectorXd log_quadrature_weights(const QuadratureGrid& grid) {
  const int n = grid.size();
  const int half = n / 2;
  VectorXd r(n);
  for (int j = 0; j < n; ++j) {
    const double tau = grid.node(j);
    double sum = 0.0;
    for (int m = 1; m < half; ++m) sum += std::cos(m * tau) / m;
    r(j) = -(4.0 * kPi / n) * sum - (4.0 * kPi / (double(n) * n)) * std::cos(half * tau);
  }
  return r;
}

OperatorMatrix assemble_S(const Curve& curve, const LameParams& params, const QuadratureGrid& grid) {
  const CurveSamples cs = CurveSamples::take(curve, grid);
  const int n = grid.size();
  const double w = grid.weight();
  const double a1 = params.alpha1() / kTwoPi;
  const double a2 = params.alpha2() / kTwoPi;
  const VectorXd r = log_quadrature_weights(grid);
  MatrixXd s(2 * n, 2 * n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const bool diag = i == j;
      // ln|q(t)-q(s)| = (1/2) ln(4 sin^2((t-s)/2)) + (1/2) ln(|dq|^2 / (4 sin^2((t-s)/2)))
      double remainder;
      if (diag) {
        remainder = std::log(cs.speed(i));
      } else {
        const double sh = std::sin(0.5 * (grid.node(i) - grid.node(j)));
        remainder = 0.5 * std::log((cs.at[i].point - cs.at[j].point).squaredNorm() / (4.0 * sh * sh));
      }
      const double log_part = a1 * (0.5 * r((i - j + n) % n) + w * remainder);
      Mat2<double> b = -a2 * w * chord_projector(cs.at[i], cs.at[j], diag);
      b.diagonal().array() += log_part;
      put_block(s, n, i, j, cs.speed(j) * b);
    }
  }
  return {std::move(s), vector_meta(OperatorKind::S, &curve, &params, n)};
}

PTransform assemble_P(const QuadratureGrid& grid) {
  const int n = grid.size();
  const double c = 1.0 / std::sqrt(2.0);
  const MatrixXd h = h0_matrix(grid);
  const MatrixXd id = MatrixXd::Identity(n, n);

  MatrixXd p(2 * n, 2 * n);
  p << c * id, c * h, c * h, c * id;
  MatrixXd inv_formula(2 * n, 2 * n);
  inv_formula << c * id, -c * h, -c * h, c * id;

  // Projector onto the constant and Nyquist modes; P acts as I / sqrt 2 there.
  MatrixXd pi0 = MatrixXd::Constant(n, n, 1.0 / n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) pi0(i, j) += ((i + j) % 2 == 0 ? 1.0 : -1.0) / n;
  }
  MatrixXd inv = inv_formula;
  inv.topLeftCorner(n, n) += c * pi0;
  inv.bottomRightCorner(n, n) += c * pi0;

  const MatrixXd defect = p * inv_formula - MatrixXd::Identity(2 * n, 2 * n);
  const double defect_norm = Eigen::BDCSVD<MatrixXd>(defect).singularValues()(0);

  OperatorMetadata meta = scalar_meta(OperatorKind::P, nullptr, n);
  meta.vector_density = true;
  return {OperatorMatrix(std::move(p), meta), std::move(inv_formula), std::move(inv), defect_norm};
}

MatrixXd rigid_motions(const Curve& curve, const QuadratureGrid& grid) {
  const int n = grid.size();
  MatrixXd r = MatrixXd::Zero(2 * n, 3);
  for (int j = 0; j < n; ++j) {
    const Vec2<double> x = curve.point(grid.node(j));
    r(j, 0) = 1.0;
    r(n + j, 1) = 1.0;
    r(j, 2) = -x.y();
    r(n + j, 2) = x.x();
  }
  return r;
}

}  // namespace npspec
