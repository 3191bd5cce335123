#include <algorithm>
#include <array>
#include <vector>

#include <boost/multiprecision/float128.hpp>

#include "npspec/kernels.hpp"
#include "npspec/spectral.hpp"

namespace npspec {

namespace {

// Kernel samples T(t_i, s) for fixed s; one row per matrix entry.
template <typename Scalar>
std::vector<std::vector<Scalar>> sample_kernel(const std::vector<CurvePoint<Scalar>>& pts,
                                               const std::vector<Scalar>& t, KernelSelector sel,
                                               int s_index) {
  const int n = static_cast<int>(pts.size());
  const auto& at_s = pts[s_index];
  std::vector<std::vector<Scalar>> rows(sel == KernelSelector::K22 ? 3 : 1,
                                        std::vector<Scalar>(n));
  for (int i = 0; i < n; ++i) {
    const bool diag = i == s_index;
    switch (sel) {
      case KernelSelector::A:
        rows[0][i] = param_A(pts[i], at_s, diag);
        break;
      case KernelSelector::K1Remainder:
        rows[0][i] = param_K1_split(pts[i], at_s, t[i] - t[s_index], diag).smooth_part;
        break;
      case KernelSelector::K22: {
        const Mat2<Scalar> m = param_K22(pts[i], at_s, diag);
        rows[0][i] = m(0, 0);
        rows[1][i] = m(0, 1);  // symmetric
        rows[2][i] = m(1, 1);
        break;
      }
    }
  }
  return rows;
}

}  // namespace

template <typename Scalar>
DecayTable kernel_fourier_decay(const Curve& curve, KernelSelector selector, int n) {
  using std::abs;
  using std::cos;
  using std::sin;
  using std::sqrt;
  const QuadratureGrid grid(n);
  check_on_grid(curve, n);
  const Scalar two_pi = Scalar(2) * detail::pi<Scalar>();

  std::vector<Scalar> t(n), cs(n), sn(n);
  std::vector<CurvePoint<Scalar>> pts;
  pts.reserve(n);
  for (int j = 0; j < n; ++j) {
    t[j] = two_pi * Scalar(j) / Scalar(n);
    cs[j] = cos(t[j]);
    sn[j] = sin(t[j]);
    pts.push_back(curve.eval(t[j]));
  }

  // Real samples: |a_{-k}| = |a_k|, so only 0 <= k <= n/2 is transformed.
  const int half = n / 2;
  std::vector<Scalar> best(half + 1, Scalar(0));
  for (int s = 0; s < n; ++s) {
    for (const auto& row : sample_kernel(pts, t, selector, s)) {
      for (int k = 0; k <= half; ++k) {
        Scalar re(0), im(0);
        for (int i = 0; i < n; ++i) {
          const int idx = static_cast<int>((static_cast<long long>(k) * i) % n);
          re += row[i] * cs[idx];
          im -= row[i] * sn[idx];
        }
        const Scalar mag = sqrt(re * re + im * im) / Scalar(n);
        if (mag > best[k]) best[k] = mag;
      }
    }
  }

  DecayTable table;
  for (int k = -half; k < half; ++k) {
    table.k.push_back(k);
    table.max_abs.push_back(static_cast<double>(best[std::abs(k)]));
  }
  return table;
}

template DecayTable kernel_fourier_decay<double>(const Curve&, KernelSelector, int);
template DecayTable kernel_fourier_decay<boost::multiprecision::float128>(const Curve&,
                                                                          KernelSelector, int);

DecayTable kernel_fourier_decay(const Curve& curve, KernelSelector selector, int n) {
  return kernel_fourier_decay<boost::multiprecision::float128>(curve, selector, n);
}

}  // namespace npspec
