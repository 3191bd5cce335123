#pragma once

// Least-squares decay laws for cluster distances d_j = |lambda_j -+ k0|.

#include <optional>
#include <string>
#include <vector>

namespace npspec {

enum class DecayModel {
  Exponential,             // d ~ C e^{-eps x}
  ExponentialWithPrefactor,  // d ~ C x e^{-eps x}
  Polynomial,              // d ~ C x^{d}
};

std::string to_string(DecayModel model);

/// One sample of a decay sequence; x = index_scale * j enters the model.
struct DecaySample {
  int j;
  double d;
};

struct FitWindow {
  int j_min;
  int j_max;  // inclusive
};

struct FitOptions {
  double index_scale = 1.0;
  /// Merge consecutive members into pairs before fitting (geometric mean of
  /// d, mean of x). The pairing parity is the one with the smaller mean
  /// within-pair log spread; unpaired window ends are dropped.
  bool pair_average = false;
};

struct RateFit {
  DecayModel model = DecayModel::Exponential;
  double C = 0.0;
  double rate = 0.0;  // eps for exponential models, the exponent d for polynomial
  FitWindow window{0, 0};
  double index_scale = 1.0;
  double residual = 0.0;  // max |log d - log model| over the fitted points
  int points = 0;         // fitted points (pairs when pair averaging)
  int pair_offset = -1;   // first paired j minus j_min, -1 without pairing
  std::string cluster;    // "+", "-" or empty

  double predict(int j) const;
};

/// Plain or prefactor exponential fit on the samples whose j lies in `window`.
/// Throws NumericalError when fewer than 4 points remain or a distance is
/// not positive (the message names the index).
RateFit fit_exponential(const std::vector<DecaySample>& samples, FitWindow window, bool prefactor,
                        const FitOptions& options = {});

RateFit fit_polynomial(const std::vector<DecaySample>& samples, FitWindow window,
                       const FitOptions& options = {});

/// Window from j_min up to the last j <= j_max_cap before the first distance
/// at or below `floor`.
FitWindow truncate_window(const std::vector<DecaySample>& samples, int j_min, int j_max_cap,
                          double floor);

struct TheoryContext {
  std::optional<double> eps_q;       // modified maximal Grauert radius, if known
  bool ellipse = false;              // eps_q is the ellipse rho, compare sharp rates
  std::optional<double> smoothness;  // k + alpha for finite-smoothness curves
  double rate_tolerance = 0.15;
  double smooth_slack = 0.5;
  double residual_threshold = 0.5;
};

/// A single comparison of a fitted number with a theoretical statement.
/// `pass` is empty when the statement cannot be checked.
struct Verdict {
  std::string claim;
  std::string quote_anchor;
  double fitted = 0.0;
  std::optional<double> theoretical;
  double tolerance = 0.0;
  std::optional<bool> pass;
  std::string note;
};

/// Applicable statements for the fit: the analytic bound eps >= eps_q / 8,
/// the sharp ellipse rates rho (plus) and 2 rho (minus) for prefactor fits,
/// and the smooth-boundary exponent bound d <= -(k+alpha) + 3/2 + slack.
std::vector<Verdict> compare_with_theory(const RateFit& fit, const TheoryContext& ctx);

}  // namespace npspec
