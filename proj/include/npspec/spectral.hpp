#pragma once

// Spectral diagnostics of Nyström matrices: eigenvalues, clustering at +-k0,
// Riesz projectors, the compactness defect, kernel Fourier decay, the
// P-conjugated remainder and its Fourier truncation.
//
// The skew discrete conjugate-function matrix annihilates the Nyquist mode,
// which leaves two spurious eigenvalues in K_N. Spectral work therefore runs
// on the compression of K_N to the complement of the per-component Nyquist
// vectors (size 2n - 2); see deflate_nyquist.

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "npspec/assembly.hpp"
#include "npspec/geometry.hpp"
#include "npspec/ratefit.hpp"

namespace npspec {

using Complex = std::complex<double>;

struct EigenDecomposition {
  std::vector<Complex> values;  // ascending by real part, then imaginary part
  std::optional<Eigen::MatrixXcd> vectors;  // columns match `values`
};

/// Dense nonsymmetric eigensolve. Throws NumericalError on non-convergence.
EigenDecomposition eigen_decompose(const Eigen::MatrixXd& a, bool with_vectors = false);

/// Same, with the operator metadata quoted in any failure message.
EigenDecomposition eigen_decompose(const OperatorMatrix& op, bool with_vectors = false);

/// Orthogonal map (one Householder reflector per component) sending the
/// alternating vector (-1)^j / sqrt(n) of each component to its last slot.
Eigen::MatrixXd nyquist_frame(int n, bool vector_density);

/// Compression of a vector-density operator to the complement of the
/// Nyquist modes: (U^T A U) with the two Nyquist rows/columns removed.
Eigen::MatrixXd deflate_nyquist(const OperatorMatrix& op);

/// Orthogonal projector onto the complement of the Nyquist modes.
Eigen::MatrixXd nyquist_complement(int n, bool vector_density);

/// Upper bound sqrt(||A||_1 ||A||_inf) of the spectral norm.
double norm_bound(const Eigen::MatrixXd& a);

/// Collapses eigenvalues with |Im| < im_tol to their real parts; larger
/// imaginary parts throw NumericalError with a refinement hint.
std::vector<double> collapse_to_real(const std::vector<Complex>& values, double im_tol);

struct ClusterMember {
  int j = 0;  // 1-based, by decreasing distance
  double lambda = 0.0;
  double dist = 0.0;
  double match_error = -1.0;  // two-grid mismatch, negative if not checked
  bool resolved = false;
};

struct ClusterConfig {
  std::optional<double> outlier_radius;  // default k0
  double margin = 1e-6;                  // membership needs dist < radius * (1 - margin)
};

struct SpectrumReport {
  std::string curve;
  std::optional<LameParams> params;
  int n = 0;
  int n_check = 0;
  double k0 = 0.0;
  double im_tol = 0.0;
  std::vector<Complex> eigenvalues;  // as returned by the eigensolver
  std::vector<ClusterMember> plus;
  std::vector<ClusterMember> minus;
  std::vector<double> outliers;  // ascending
  int resolved_plus = 0;         // leading run of resolved members
  int resolved_minus = 0;
  std::vector<std::string> warnings;

  int resolved_count() const { return resolved_plus + resolved_minus; }
};

/// Splits real eigenvalues into the +k0 cluster, the -k0 cluster and outliers.
SpectrumReport cluster_pm_k0(const std::vector<double>& eigenvalues, double k0,
                             const ClusterConfig& config = {});

struct ResolveConfig {
  double abs_tol = 1e-9;
  double rel_factor = 0.1;  // also require mismatch <= rel_factor * dist
};

/// Greedy nearest matching of every cluster member against a finer-grid
/// spectrum; fills match_error / resolved and the leading resolved runs.
void resolve_two_grid(SpectrumReport& report, const std::vector<double>& fine,
                      const ResolveConfig& config = {});

struct SpectrumConfig {
  int n = 512;
  int n_check = 1024;  // 0 skips the two-grid check
  double im_tol_rel = 1e-8;
  ClusterConfig cluster;
  ResolveConfig resolve;
};

/// assemble -> deflate -> eigensolve -> cluster at n, then resolve against n_check.
SpectrumReport analyze_spectrum(const Curve& curve, const LameParams& params,
                                const SpectrumConfig& config);

/// Same pipeline on pre-assembled matrices (K at n, optionally K at n_check).
SpectrumReport analyze_spectrum(const OperatorMatrix& k, const OperatorMatrix* k_check,
                                const SpectrumConfig& config);

/// Sorted real spectrum of the deflated K_N (helper shared by the sweeps).
std::vector<double> real_spectrum(const OperatorMatrix& k, double im_tol_rel,
                                  double* im_tol_out = nullptr);

/// Distance samples (j, d_j) of a cluster.
std::vector<DecaySample> distances(const std::vector<ClusterMember>& cluster);

// ---------------------------------------------------------------------------
// Riesz projectors

struct Contour {
  Complex center;
  double radius = 0.0;
  int nodes = 0;
};

struct ProjectorPair {
  Eigen::MatrixXd E_plus;
  Eigen::MatrixXd E_minus;
  Contour plus_contour;
  Contour minus_contour;
  double gap = 0.0;  // min distance from either contour to the spectrum
  double idempotency_plus = 0.0;   // ||E+^2 - E+||_F
  double idempotency_minus = 0.0;
  double completeness = 0.0;       // ||E+ + E- - I||_F
  double commutation_plus = 0.0;   // ||E+ A - A E+||_F
  double commutation_minus = 0.0;
  double trace_plus = 0.0;
  double trace_minus = 0.0;
};

/// Trapezoid rule with M nodes for (1/2 pi i) oint (z I - A)^{-1} dz over
/// counterclockwise circles around {Re lambda >= 0} and {Re lambda < 0}.
/// Refuses (NumericalError) when a contour passes within gap_tol of an
/// eigenvalue or an eigenvalue is not inside exactly one contour.
ProjectorPair riesz_projectors(const Eigen::MatrixXd& a, const std::vector<Complex>& eigenvalues,
                               int nodes, double gap_tol = 1e-6);

// ---------------------------------------------------------------------------
// Compactness defect

struct DefectProfile {
  Eigen::VectorXd singular_values;  // descending
  int band = 0;                     // resolved band: sigma_m >= floor_rel * sigma_1
  std::optional<RateFit> fit;       // plain exponential over the band
};

/// Singular values of A^2 - k0^2 I with an exponential fit over the band.
DefectProfile compact_defect(const Eigen::MatrixXd& a, double k0, double floor_rel = 1e-11);

// ---------------------------------------------------------------------------
// Kernel Fourier decay

enum class KernelSelector { A, K22, K1Remainder };

std::string to_string(KernelSelector selector);
KernelSelector parse_kernel_selector(const std::string& name);

struct DecayTable {
  std::vector<int> k;          // -n/2 .. n/2 - 1
  std::vector<double> max_abs;  // max over s and matrix entries of |a_k(s)|
};

/// For each grid value s the kernel is sampled in t (diagonal limits
/// included) and transformed with a direct DFT carried out in Scalar.
template <typename Scalar>
DecayTable kernel_fourier_decay(const Curve& curve, KernelSelector selector, int n);

/// Extended-precision (binary128) table.
DecayTable kernel_fourier_decay(const Curve& curve, KernelSelector selector, int n);

/// Least-squares slope of log max|a_k| against |k| over kmin <= |k| <= kmax.
double decay_slope(const DecayTable& table, int kmin, int kmax);

// ---------------------------------------------------------------------------
// P-conjugation and truncation

struct ConjugatedOperator {
  Eigen::MatrixXd Q;  // k0 diag(I, -I) - P^{-1} K P, Nyquist modes projected out
  Eigen::VectorXd singular_values;
  bool approximate = true;  // false only for a Riemann parametrization
};

ConjugatedOperator conjugate_by_P(const OperatorMatrix& k, const PTransform& p);

/// Per-component band projector onto Fourier modes |k| < m.
Eigen::MatrixXd band_projector(int n, int m, bool vector_density);

struct Truncation {
  Eigen::MatrixXd Q_m;
  double tail_norm = 0.0;  // ||Q - F_m Q||_2
  int rank = 0;            // singular values above 1e-12 sigma_1
  int rank_bound = 0;      // 2 (2m - 1)
};

/// Throws ConfigError unless 1 <= m < n/2.
Truncation truncate_fourier(const Eigen::MatrixXd& q, int m, bool vector_density = true);

struct TailFit {
  double slope = 0.0;  // d log tail / d m
  int m_last = 0;      // last m in the fit window
  double floor = 0.0;
};

/// Least-squares slope of log tail(m), m = 1, 2, ..., over the window that
/// ends at the first m with tail <= floor (values clamped to the floor).
/// Needs at least two points.
TailFit fit_tail_slope(const std::vector<double>& tails, double floor);

/// Eigenvalue magnitudes sorted descending.
Eigen::VectorXd eigenvalue_magnitudes(const Eigen::MatrixXd& a);

}  // namespace npspec
