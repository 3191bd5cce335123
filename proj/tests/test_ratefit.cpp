#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "npspec/error.hpp"
#include "npspec/ratefit.hpp"
#include "test_util.hpp"

namespace npspec {
namespace {

std::vector<DecaySample> make(int n, double (*f)(int)) {
  std::vector<DecaySample> s;
  for (int j = 1; j <= n; ++j) s.push_back({j, f(j)});
  return s;
}

TEST(FitExponential, ExactLogLinearData) {
  const auto s = make(10, [](int j) { return 3.0 * std::exp(-1.1 * j); });
  const RateFit f = fit_exponential(s, {1, 10}, false);
  EXPECT_NEAR(f.C, 3.0, 1e-12);
  EXPECT_NEAR(f.rate, 1.1, 1e-12);
  EXPECT_LT(f.residual, 1e-12);
  EXPECT_NEAR(f.predict(4), 3.0 * std::exp(-4.4), 1e-14);
}

TEST(FitExponential, PrefactorModel) {
  const auto s = make(10, [](int j) { return 2.0 * j * std::exp(-0.7 * j); });
  const RateFit f = fit_exponential(s, {1, 10}, true);
  EXPECT_NEAR(f.C, 2.0, 1e-10);
  EXPECT_NEAR(f.rate, 0.7, 1e-10);
  EXPECT_EQ(f.model, DecayModel::ExponentialWithPrefactor);
}

TEST(FitExponential, RandomExactModels) {
  for (int trial = 0; trial < 20; ++trial) {
    const double c = test::uniform(0.1, 10.0), eps = test::uniform(0.05, 2.0);
    std::vector<DecaySample> a, b;
    for (int j = 1; j <= 15; ++j) {
      a.push_back({j, c * std::exp(-eps * j)});
      b.push_back({j, c * j * std::exp(-eps * j)});
    }
    const RateFit fa = fit_exponential(a, {1, 15}, false);
    const RateFit fb = fit_exponential(b, {1, 15}, true);
    EXPECT_NEAR(fa.rate, eps, 1e-10);
    EXPECT_NEAR(fa.C, c, 1e-10 * c);
    EXPECT_NEAR(fb.rate, eps, 1e-10);
    EXPECT_NEAR(fb.C, c, 1e-10 * c);
  }
}

TEST(FitExponential, ScaleInvariance) {
  const auto s = make(12, [](int j) { return 0.4 * std::exp(-0.9 * j) * (1.0 + 0.1 * std::sin(j)); });
  std::vector<DecaySample> scaled = s;
  for (auto& x : scaled) x.d *= 7.5;
  for (bool pre : {false, true}) {
    const RateFit a = fit_exponential(s, {2, 12}, pre);
    const RateFit b = fit_exponential(scaled, {2, 12}, pre);
    EXPECT_NEAR(a.rate, b.rate, 1e-12);
    EXPECT_NEAR(b.C / a.C, 7.5, 1e-11);
  }
  const RateFit p = fit_polynomial(s, {2, 12});
  const RateFit q = fit_polynomial(scaled, {2, 12});
  EXPECT_NEAR(p.rate, q.rate, 1e-12);
}

TEST(FitExponential, IndexScaleAndPairAveraging) {
  // Near-degenerate pairs around C x e^{-rho x}, x = i - 1/4 the scaled pair centre.
  const double rho = std::log(3.0);
  std::vector<DecaySample> s;
  for (int i = 1; i <= 12; ++i) {
    const double x = i - 0.25;
    const double base = 0.5 * x * std::exp(-rho * x);
    s.push_back({2 * i - 1, base * 1.1});
    s.push_back({2 * i, base / 1.1});
  }
  FitOptions opt;
  opt.index_scale = 0.5;
  opt.pair_average = true;
  const RateFit f = fit_exponential(s, {1, 24}, true, opt);
  EXPECT_EQ(f.pair_offset, 0);
  EXPECT_EQ(f.points, 12);
  EXPECT_NEAR(f.rate, rho, 1e-12);
  EXPECT_NEAR(f.C, 0.5, 1e-12);
  EXPECT_LT(f.residual, 1e-12);
}

TEST(FitExponential, Errors) {
  std::vector<DecaySample> s = make(10, [](int j) { return std::exp(-1.0 * j); });
  s[5].d = 0.0;
  try {
    fit_exponential(s, {1, 10}, false);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("j = 6"), std::string::npos) << e.what();
  }
  EXPECT_THROW(fit_exponential(make(10, [](int j) { return 1.0 / j; }), {1, 3}, false), NumericalError);
}

TEST(FitPolynomial, ExactPowerLaws) {
  const RateFit a = fit_polynomial(make(20, [](int j) { return 5.0 * std::pow(j, -2.0); }), {1, 20});
  EXPECT_NEAR(a.C, 5.0, 1e-12);
  EXPECT_NEAR(a.rate, -2.0, 1e-12);
  const RateFit b = fit_polynomial(make(20, [](int j) { return std::pow(j, -3.5); }), {1, 20});
  EXPECT_NEAR(b.rate, -3.5, 1e-12);
}

TEST(TruncateWindow, StopsAtCapOrFloor) {
  const auto s = make(30, [](int j) { return j < 20 ? std::exp(-1.0 * j) : 0.0; });
  EXPECT_EQ(truncate_window(s, 3, 10, 1e-12).j_max, 10);
  EXPECT_EQ(truncate_window(s, 3, 30, 1e-12).j_max, 19);
  EXPECT_EQ(truncate_window(s, 3, 30, 1e-5).j_max, 11);
}

RateFit exp_fit(double eps, const std::string& cluster, DecayModel model = DecayModel::ExponentialWithPrefactor) {
  RateFit f;
  f.model = model;
  f.rate = eps;
  f.cluster = cluster;
  return f;
}

TEST(CompareWithTheory, AnalyticBound) {
  TheoryContext ctx;
  ctx.eps_q = std::log(3.0);
  const auto v = compare_with_theory(exp_fit(1.05, "", DecayModel::Exponential), ctx);
  ASSERT_EQ(v.size(), 1u);
  ASSERT_TRUE(v[0].pass);
  EXPECT_TRUE(*v[0].pass);
  EXPECT_NEAR(*v[0].theoretical, std::log(3.0) / 8, 1e-15);
  EXPECT_EQ(v[0].quote_anchor, "for any eps < eps_q/8");
}

TEST(CompareWithTheory, EllipseMinusCluster) {
  TheoryContext ctx;
  ctx.eps_q = std::log(3.0);
  ctx.ellipse = true;
  const auto v = compare_with_theory(exp_fit(2.15, "-"), ctx);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_NEAR(*v[1].theoretical, 2 * std::log(3.0), 1e-15);
  EXPECT_TRUE(v[1].pass.value());
  const auto bad = compare_with_theory(exp_fit(1.5, "-"), ctx);
  EXPECT_FALSE(bad[1].pass.value());
}

TEST(CompareWithTheory, SmoothBoundFailsWithMargin) {
  TheoryContext ctx;
  ctx.smoothness = 3.5;
  RateFit f;
  f.model = DecayModel::Polynomial;
  f.rate = -1.0;
  const auto v = compare_with_theory(f, ctx);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NEAR(*v[0].theoretical, -2.0, 1e-15);
  EXPECT_FALSE(v[0].pass.value());
  EXPECT_NE(v[0].note.find("margin -0.5"), std::string::npos) << v[0].note;
  EXPECT_EQ(v[0].quote_anchor, "d > -(k+alpha)+3/2");
}

TEST(CompareWithTheory, MissingEpsQ) {
  const auto v = compare_with_theory(exp_fit(1.0, "+"), TheoryContext{});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_FALSE(v[0].pass);
  EXPECT_EQ(v[0].note, "eps_q unknown, bound not checkable");
}

TEST(CompareWithTheory, PoorFitSuppressesVerdicts) {
  TheoryContext ctx;
  ctx.eps_q = 1.0;
  RateFit f = exp_fit(1.0, "+");
  f.residual = 0.9;
  const auto v = compare_with_theory(f, ctx);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_FALSE(v[0].pass);
  EXPECT_NE(v[0].note.find("suppressed"), std::string::npos);
}

}  // namespace
}  // namespace npspec
