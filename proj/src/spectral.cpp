#include "npspec/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "npspec/error.hpp"

namespace npspec {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Householder vector u with (I - 2 u u^T) v = e_last for v = (-1)^j / sqrt(n).
VectorXd nyquist_householder(int n) {
  VectorXd u(n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (int j = 0; j < n; ++j) u(j) = (j % 2 == 0) ? s : -s;
  u(n - 1) -= 1.0;
  return u.normalized();
}

VectorXd nyquist_vector(int n) {
  VectorXd v(n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (int j = 0; j < n; ++j) v(j) = (j % 2 == 0) ? s : -s;
  return v;
}

VectorXd singular_values(const MatrixXd& a) { return Eigen::BDCSVD<MatrixXd>(a).singularValues(); }

std::vector<ClusterMember> sort_cluster(std::vector<ClusterMember> c) {
  std::sort(c.begin(), c.end(), [](const ClusterMember& a, const ClusterMember& b) {
    if (a.dist != b.dist) return a.dist > b.dist;
    return a.lambda < b.lambda;
  });
  for (std::size_t i = 0; i < c.size(); ++i) c[i].j = static_cast<int>(i) + 1;
  return c;
}

int leading_resolved(const std::vector<ClusterMember>& c) {
  int count = 0;
  while (count < static_cast<int>(c.size()) && c[count].resolved) ++count;
  return count;
}

}  // namespace

EigenDecomposition eigen_decompose(const MatrixXd& a, bool with_vectors) {
  if (a.rows() != a.cols()) throw std::invalid_argument("eigen_decompose needs a square matrix");
  if (!a.allFinite()) throw NumericalError("eigen_decompose: matrix has non-finite entries");
  Eigen::EigenSolver<MatrixXd> solver(a, with_vectors);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigensolver did not converge (size " + std::to_string(a.rows()) + ")");
  }
  const Eigen::VectorXcd raw = solver.eigenvalues();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(raw.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    if (raw(x).real() != raw(y).real()) return raw(x).real() < raw(y).real();
    return raw(x).imag() < raw(y).imag();
  });
  EigenDecomposition out;
  out.values.reserve(order.size());
  for (auto i : order) out.values.push_back(raw(i));
  if (with_vectors) {
    const MatrixXcd v = solver.eigenvectors();
    MatrixXcd sorted(v.rows(), v.cols());
    for (std::size_t c = 0; c < order.size(); ++c) sorted.col(static_cast<Eigen::Index>(c)) = v.col(order[c]);
    out.vectors = std::move(sorted);
  }
  return out;
}

EigenDecomposition eigen_decompose(const OperatorMatrix& op, bool with_vectors) {
  try {
    return eigen_decompose(op.matrix(), with_vectors);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(e.what()) + " for operator " + to_string(op.meta().kind) +
                         " on curve " + op.meta().curve_spec + ", n = " +
                         std::to_string(op.meta().n));
  }
}

MatrixXd nyquist_frame(int n, bool vector_density) {
  const VectorXd u = nyquist_householder(n);
  const MatrixXd h = MatrixXd::Identity(n, n) - 2.0 * u * u.transpose();
  if (!vector_density) return h;
  MatrixXd out = MatrixXd::Zero(2 * n, 2 * n);
  out.topLeftCorner(n, n) = h;
  out.bottomRightCorner(n, n) = h;
  return out;
}

MatrixXd deflate_nyquist(const OperatorMatrix& op) {
  const int n = op.meta().n;
  const int blocks = op.meta().vector_density ? 2 : 1;
  const VectorXd u = nyquist_householder(n);
  MatrixXd a = op.matrix();
  // Apply the reflector blockwise from the left and the right: O(n^2).
  for (int b = 0; b < blocks; ++b) {
    auto rows = a.middleRows(b * n, n);
    const Eigen::RowVectorXd ut_a = u.transpose() * rows;
    rows.noalias() -= 2.0 * u * ut_a;
  }
  for (int b = 0; b < blocks; ++b) {
    auto cols = a.middleCols(b * n, n);
    const VectorXd a_u = cols * u;
    cols.noalias() -= 2.0 * a_u * u.transpose();
  }
  std::vector<int> keep;
  for (int b = 0; b < blocks; ++b) {
    for (int j = 0; j < n - 1; ++j) keep.push_back(b * n + j);
  }
  const auto m = static_cast<Eigen::Index>(keep.size());
  MatrixXd out(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) out(i, j) = a(keep[i], keep[j]);
  }
  return out;
}

MatrixXd nyquist_complement(int n, bool vector_density) {
  const VectorXd v = nyquist_vector(n);
  const MatrixXd p = MatrixXd::Identity(n, n) - v * v.transpose();
  if (!vector_density) return p;
  MatrixXd out = MatrixXd::Zero(2 * n, 2 * n);
  out.topLeftCorner(n, n) = p;
  out.bottomRightCorner(n, n) = p;
  return out;
}

double norm_bound(const MatrixXd& a) {
  const double one = a.cwiseAbs().colwise().sum().maxCoeff();
  const double inf = a.cwiseAbs().rowwise().sum().maxCoeff();
  return std::sqrt(one * inf);
}

std::vector<double> collapse_to_real(const std::vector<Complex>& values, double im_tol) {
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& z : values) {
    if (!(std::abs(z.imag()) < im_tol)) {
      throw NumericalError("eigenvalue " + format_double(z.real()) + (z.imag() < 0 ? " - " : " + ") +
                           format_double(std::abs(z.imag())) + "i exceeds im_tol " +
                           format_double(im_tol) + "; refine the grid");
    }
    out.push_back(z.real());
  }
  std::sort(out.begin(), out.end());
  return out;
}

SpectrumReport cluster_pm_k0(const std::vector<double>& eigenvalues, double k0,
                             const ClusterConfig& config) {
  SpectrumReport report;
  report.k0 = k0;
  const double radius = config.outlier_radius.value_or(k0) * (1.0 - config.margin);
  std::vector<ClusterMember> plus, minus;
  for (double lam : eigenvalues) {
    const double dp = std::abs(lam - k0);
    const double dm = std::abs(lam + k0);
    if (dp < dm && dp < radius) {
      plus.push_back({0, lam, dp});
    } else if (dm < dp && dm < radius) {
      minus.push_back({0, lam, dm});
    } else {
      report.outliers.push_back(lam);
    }
  }
  report.plus = sort_cluster(std::move(plus));
  report.minus = sort_cluster(std::move(minus));
  std::sort(report.outliers.begin(), report.outliers.end());
  if (report.plus.empty()) report.warnings.push_back("plus cluster is empty");
  if (report.minus.empty()) report.warnings.push_back("minus cluster is empty");
  return report;
}

void resolve_two_grid(SpectrumReport& report, const std::vector<double>& fine,
                      const ResolveConfig& config) {
  std::vector<bool> used(fine.size(), false);
  auto match = [&](std::vector<ClusterMember>& cluster) {
    for (auto& m : cluster) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_i = fine.size();
      for (std::size_t i = 0; i < fine.size(); ++i) {
        if (used[i]) continue;
        const double e = std::abs(fine[i] - m.lambda);
        if (e < best) {
          best = e;
          best_i = i;
        }
      }
      if (best_i == fine.size()) {
        m.match_error = std::numeric_limits<double>::infinity();
        m.resolved = false;
        continue;
      }
      used[best_i] = true;
      m.match_error = best;
      m.resolved = best < config.abs_tol && best <= config.rel_factor * m.dist;
    }
  };
  match(report.plus);
  match(report.minus);
  report.resolved_plus = leading_resolved(report.plus);
  report.resolved_minus = leading_resolved(report.minus);
}

std::vector<double> real_spectrum(const OperatorMatrix& k, double im_tol_rel, double* im_tol_out) {
  const MatrixXd a = k.meta().vector_density ? deflate_nyquist(k) : k.matrix();
  const double im_tol = im_tol_rel * norm_bound(a);
  if (im_tol_out != nullptr) *im_tol_out = im_tol;
  return collapse_to_real(eigen_decompose(a).values, im_tol);
}

SpectrumReport analyze_spectrum(const OperatorMatrix& k, const OperatorMatrix* k_check,
                                const SpectrumConfig& config) {
  if (!k.meta().params) throw std::invalid_argument("analyze_spectrum: K carries no Lame parameters");
  const LameParams& params = *k.meta().params;
  const MatrixXd a = deflate_nyquist(k);
  const double im_tol = config.im_tol_rel * norm_bound(a);
  EigenDecomposition dec = eigen_decompose(a);
  SpectrumReport report = cluster_pm_k0(collapse_to_real(dec.values, im_tol), params.k0(),
                                        config.cluster);
  report.eigenvalues = std::move(dec.values);
  report.curve = k.meta().curve_spec;
  report.params = params;
  report.n = k.meta().n;
  report.im_tol = im_tol;
  if (k_check) {
    report.n_check = k_check->meta().n;
    resolve_two_grid(report, real_spectrum(*k_check, config.im_tol_rel), config.resolve);
  }
  return report;
}

SpectrumReport analyze_spectrum(const Curve& curve, const LameParams& params,
                                const SpectrumConfig& config) {
  const OperatorMatrix k = assemble_K(curve, params, QuadratureGrid(config.n));
  if (config.n_check <= 0) return analyze_spectrum(k, nullptr, config);
  const OperatorMatrix fine = assemble_K(curve, params, QuadratureGrid(config.n_check));
  return analyze_spectrum(k, &fine, config);
}

std::vector<DecaySample> distances(const std::vector<ClusterMember>& cluster) {
  std::vector<DecaySample> out;
  out.reserve(cluster.size());
  for (const auto& m : cluster) out.push_back({m.j, m.dist});
  return out;
}

// ---------------------------------------------------------------------------

ProjectorPair riesz_projectors(const MatrixXd& a, const std::vector<Complex>& eigenvalues,
                               int nodes, double gap_tol) {
  if (nodes < 2 || nodes % 2 != 0) throw ConfigError("contour node count must be even and >= 2");
  if (static_cast<Eigen::Index>(eigenvalues.size()) != a.rows()) {
    throw std::invalid_argument("riesz_projectors: eigenvalue count does not match the matrix");
  }
  std::vector<Complex> plus, minus;
  for (const auto& z : eigenvalues) (z.real() >= 0.0 ? plus : minus).push_back(z);

  auto design = [&](const std::vector<Complex>& in, const std::vector<Complex>& out) {
    Contour c;
    c.nodes = nodes;
    if (in.empty()) return c;
    double lo = in.front().real(), hi = lo;
    for (const auto& z : in) {
      lo = std::min(lo, z.real());
      hi = std::max(hi, z.real());
    }
    c.center = Complex(0.5 * (lo + hi), 0.0);
    double r_in = 0.0;
    for (const auto& z : in) r_in = std::max(r_in, std::abs(z - c.center));
    double r_out = std::numeric_limits<double>::infinity();
    for (const auto& z : out) r_out = std::min(r_out, std::abs(z - c.center));
    if (!std::isfinite(r_out)) {
      c.radius = std::max(2.0 * r_in, 1e-3);
      return c;
    }
    if (!(r_in < r_out)) {
      throw NumericalError("no spectral gap: the two eigenvalue sets cannot be separated by a circle");
    }
    // Geometric mean balances the two geometric convergence ratios.
    c.radius = std::sqrt(std::max(r_in, 0.01 * r_out) * r_out);
    return c;
  };

  ProjectorPair out;
  out.plus_contour = design(plus, minus);
  out.minus_contour = design(minus, plus);

  double gap = std::numeric_limits<double>::infinity();
  for (const auto& z : eigenvalues) {
    int inside = 0;
    for (const Contour* c : {&out.plus_contour, &out.minus_contour}) {
      if (c->radius == 0.0) continue;
      const double r = std::abs(z - c->center);
      gap = std::min(gap, std::abs(r - c->radius));
      if (r < c->radius) ++inside;
    }
    if (inside != 1) {
      throw NumericalError("eigenvalue " + format_double(z.real()) +
                           " is not inside exactly one contour");
    }
  }
  out.gap = gap;
  if (!(gap >= gap_tol)) {
    throw NumericalError("spectral gap " + format_double(gap) + " below gap_tol " +
                         format_double(gap_tol));
  }

  const Eigen::Index m = a.rows();
  const MatrixXcd ac = a.cast<Complex>();
  auto projector = [&](const Contour& c) -> MatrixXd {
    if (c.radius == 0.0) return MatrixXd::Zero(m, m);
    MatrixXcd acc = MatrixXcd::Zero(m, m);
    // Nodes come in conjugate pairs; the real part of half the sum suffices.
    for (int k = 0; k < nodes / 2; ++k) {
      const double theta = 2.0 * std::numbers::pi * (k + 0.5) / nodes;
      const Complex step = c.radius * std::polar(1.0, theta);
      MatrixXcd shifted = -ac;
      shifted.diagonal().array() += c.center + step;
      Eigen::PartialPivLU<MatrixXcd> lu(shifted);
      acc += step * lu.inverse();
    }
    MatrixXd e = (2.0 / nodes) * acc.real();
    if (!e.allFinite()) throw NumericalError("resolvent solve failed on the contour");
    return e;
  };
  out.E_plus = projector(out.plus_contour);
  out.E_minus = projector(out.minus_contour);

  const MatrixXd id = MatrixXd::Identity(m, m);
  out.idempotency_plus = (out.E_plus * out.E_plus - out.E_plus).norm();
  out.idempotency_minus = (out.E_minus * out.E_minus - out.E_minus).norm();
  out.completeness = (out.E_plus + out.E_minus - id).norm();
  out.commutation_plus = (out.E_plus * a - a * out.E_plus).norm();
  out.commutation_minus = (out.E_minus * a - a * out.E_minus).norm();
  out.trace_plus = out.E_plus.trace();
  out.trace_minus = out.E_minus.trace();
  return out;
}

// ---------------------------------------------------------------------------

DefectProfile compact_defect(const MatrixXd& a, double k0, double floor_rel) {
  MatrixXd d = a * a;
  d.diagonal().array() -= k0 * k0;
  DefectProfile out;
  out.singular_values = singular_values(d);
  const auto& s = out.singular_values;
  if (s.size() == 0 || s(0) == 0.0) return out;
  while (out.band < s.size() && s(out.band) >= floor_rel * s(0)) ++out.band;
  if (out.band >= 4) {
    std::vector<DecaySample> samples;
    for (int m = 0; m < out.band; ++m) samples.push_back({m + 1, s(m)});
    out.fit = fit_exponential(samples, {1, out.band}, false);
  }
  return out;
}

double decay_slope(const DecayTable& table, int kmin, int kmax) {
  std::vector<DecaySample> samples;
  for (std::size_t i = 0; i < table.k.size(); ++i) {
    if (table.k[i] >= kmin && table.k[i] <= kmax) samples.push_back({table.k[i], table.max_abs[i]});
  }
  return -fit_exponential(samples, {kmin, kmax}, false).rate;
}

std::string to_string(KernelSelector selector) {
  switch (selector) {
    case KernelSelector::A: return "A";
    case KernelSelector::K22: return "K22";
    case KernelSelector::K1Remainder: return "K1-remainder";
  }
  return "A";
}

KernelSelector parse_kernel_selector(const std::string& name) {
  if (name == "A") return KernelSelector::A;
  if (name == "K22") return KernelSelector::K22;
  if (name == "K1-remainder") return KernelSelector::K1Remainder;
  throw ConfigError("unknown kernel selector '" + name + "' (expected A, K22 or K1-remainder)");
}

// ---------------------------------------------------------------------------

ConjugatedOperator conjugate_by_P(const OperatorMatrix& k, const PTransform& p) {
  if (!k.meta().vector_density || k.meta().n != p.forward.meta().n) {
    throw std::invalid_argument("conjugate_by_P: K and P must share the vector grid");
  }
  const int n = k.meta().n;
  const double k0 = k.meta().params ? k.meta().params->k0() : 0.0;
  MatrixXd q = -(p.inverse * k.matrix() * p.forward.matrix());
  q.topLeftCorner(n, n).diagonal().array() += k0;
  q.bottomRightCorner(n, n).diagonal().array() -= k0;
  const MatrixXd proj = nyquist_complement(n, true);
  ConjugatedOperator out;
  out.Q = proj * q * proj;
  out.singular_values = singular_values(out.Q);
  out.approximate = !k.meta().exact_frame;
  return out;
}

MatrixXd band_projector(int n, int m, bool vector_density) {
  MatrixXd f(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double tau = 2.0 * std::numbers::pi * (i - j) / n;
      double s = 1.0;
      for (int k = 1; k < m; ++k) s += 2.0 * std::cos(k * tau);
      f(i, j) = s / n;
    }
  }
  if (!vector_density) return f;
  MatrixXd out = MatrixXd::Zero(2 * n, 2 * n);
  out.topLeftCorner(n, n) = f;
  out.bottomRightCorner(n, n) = f;
  return out;
}

Truncation truncate_fourier(const MatrixXd& q, int m, bool vector_density) {
  const int n = static_cast<int>(q.rows()) / (vector_density ? 2 : 1);
  if (m < 1 || m >= n / 2) {
    throw ConfigError("truncation order m must satisfy 1 <= m < n/2 (m = " + std::to_string(m) +
                      ", n = " + std::to_string(n) + ")");
  }
  Truncation out;
  out.Q_m = band_projector(n, m, vector_density) * q;
  out.tail_norm = singular_values(q - out.Q_m)(0);
  const VectorXd s = singular_values(out.Q_m);
  const double cut = s.size() > 0 ? 1e-12 * s(0) : 0.0;
  out.rank = static_cast<int>((s.array() > cut).count());
  out.rank_bound = (vector_density ? 2 : 1) * (2 * m - 1);
  return out;
}

TailFit fit_tail_slope(const std::vector<double>& tails, double floor) {
  if (!(floor > 0.0)) throw std::invalid_argument("tail floor must be positive");
  TailFit out;
  out.floor = floor;
  std::vector<double> m, y;
  for (std::size_t i = 0; i < tails.size(); ++i) {
    m.push_back(static_cast<double>(i + 1));
    y.push_back(std::log(std::max(tails[i], floor)));
    if (tails[i] <= floor) break;
  }
  if (m.size() < 2) throw NumericalError("tail slope needs at least two truncation orders");
  out.m_last = static_cast<int>(m.size());
  const Eigen::Map<const VectorXd> x(m.data(), static_cast<Eigen::Index>(m.size()));
  const Eigen::Map<const VectorXd> v(y.data(), static_cast<Eigen::Index>(y.size()));
  const VectorXd xc = x.array() - x.mean();
  out.slope = xc.dot(v.array().matrix() - VectorXd::Constant(v.size(), v.mean())) / xc.squaredNorm();
  return out;
}

VectorXd eigenvalue_magnitudes(const MatrixXd& a) {
  const auto values = eigen_decompose(a).values;
  VectorXd out(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) out(static_cast<Eigen::Index>(i)) = std::abs(values[i]);
  std::sort(out.data(), out.data() + out.size(), std::greater<>());
  return out;
}

}  // namespace npspec
