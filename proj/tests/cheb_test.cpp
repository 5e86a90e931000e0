#include "deskq/cheb.hpp"

#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

namespace deskq {
namespace {

double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

TEST(ChebEval, PureT2) {
  ChebSeries s;
  s.coeffs = RealVector::Zero(3);
  s.coeffs(2) = 1.0;
  EXPECT_NEAR(cheb_eval(s, 0.5), -0.5, 1e-14);  // 2x^2 - 1
}

TEST(ChebEval, ConstantSeries) {
  ChebSeries s;
  s.coeffs = RealVector::Zero(1);
  s.coeffs(0) = 1.0;
  EXPECT_NEAR(cheb_eval(s, -0.3), 1.0, 1e-15);
  EXPECT_NEAR(cheb_eval(s, 0.99), 1.0, 1e-15);
}

TEST(ChebEval, MatchesRecurrenceOracle) {
  std::mt19937_64 g(51);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ChebSeries s;
  s.coeffs = RealVector(9);
  for (Index i = 0; i < 9; ++i) s.coeffs(i) = u(g);
  for (int t = 0; t < 50; ++t) {
    const double x = u(g);
    EXPECT_NEAR(cheb_eval(s, x), test::cheb_recurrence_oracle(s.coeffs, x), 1e-10);
  }
}

TEST(ChebEval, RejectsOutOfDomain) {
  ChebSeries s;
  s.coeffs = RealVector::Ones(2);
  EXPECT_THROW(cheb_eval(s, 1.1), Error);
}

TEST(ChebEval, SumAtOneEqualsCoefficientSum) {
  ChebSeries s;
  s.coeffs = RealVector(5);
  s.coeffs << 0.3, -0.2, 0.05, 0.4, -0.7;
  EXPECT_NEAR(cheb_eval(s, 1.0), s.coeffs.sum(), 1e-10);  // T_i(1) = 1
}

TEST(ChebProject, RecoversBasisPolynomial) {
  auto t3 = [](double x) { return 4 * x * x * x - 3 * x; };
  ChebSeries s = cheb_project(t3, 5);
  RealVector expect = RealVector::Zero(6);
  expect(3) = 1.0;
  EXPECT_LE((s.coeffs - expect).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ChebProject, OrthogonalityUpToDegreeTwelve) {
  for (int j = 0; j <= 12; ++j) {
    auto tj = [j](double x) { return std::cos(j * std::acos(std::clamp(x, -1.0, 1.0))); };
    ChebSeries s = cheb_project(tj, 12);
    for (int i = 0; i <= 12; ++i)
      EXPECT_NEAR(s.coeffs(i), i == j ? 1.0 : 0.0, 1e-10) << "i=" << i << " j=" << j;
  }
}

TEST(ChebProject, SignClosedFormCoefficients) {
  // <T_i, sgn> = (-1)^{(i-1)/2} * 4 / (pi i) for odd i
  const double pi = std::acos(-1.0);
  ChebSeries s = cheb_project([](double x) { return sgn(x); }, 51);
  for (int i = 1; i <= 51; i += 2) {
    const double expect = ((i - 1) / 2 % 2 == 0 ? 1.0 : -1.0) * 4.0 / (pi * i);
    EXPECT_NEAR(s.coeffs(i), expect, 1e-8) << "i=" << i;
  }
  for (int i = 0; i <= 51; i += 2) EXPECT_NEAR(s.coeffs(i), 0.0, 1e-9);
}

TEST(ChebProject, MonomialIdentity) {
  // x^2 = (T_0 + T_2)/2
  ChebSeries s = cheb_project([](double x) { return x * x; }, 4);
  EXPECT_NEAR(s.coeffs(0), 0.5, 1e-10);
  EXPECT_NEAR(s.coeffs(2), 0.5, 1e-10);
  EXPECT_NEAR(std::abs(s.coeffs(1)) + std::abs(s.coeffs(3)) + std::abs(s.coeffs(4)), 0.0, 1e-10);
}

TEST(SignSeries, OddAndZeroAtOrigin) {
  ChebSeries s = sign_series(0.1);
  EXPECT_TRUE(s.is_odd());
  EXPECT_NEAR(cheb_eval(s, 0.0), 0.0, 1e-12);
}

TEST(SignSeries, GridBoundAtKappaTenth) {
  const double kappa = 0.1;
  ChebSeries s = sign_series(kappa);
  double worst = 0.0, bound = 0.0;
  for (int i = 0; i <= 2000; ++i) {
    const double x = kappa + (1.0 - kappa) * i / 2000.0;
    worst = std::max(worst, std::abs(cheb_eval(s, x) - 1.0));
    worst = std::max(worst, std::abs(cheb_eval(s, -x) + 1.0));
  }
  for (int i = 0; i <= 2000; ++i) bound = std::max(bound, std::abs(cheb_eval(s, -1.0 + i / 1000.0)));
  EXPECT_LE(worst, kappa);
  EXPECT_LE(bound, 1.0 + kappa);
}

TEST(SignSeries, TracksErfProjectionOracle) {
  // independent dense-grid comparison against the erf target the series projects
  const double kappa = 0.05;
  ChebSeries s = sign_series(kappa);
  const double k = std::sqrt(2.0 * std::log(2.0 / (std::acos(-1.0) * kappa * kappa))) / kappa;
  double worst = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double x = -1.0 + 2.0 * i / 4000.0;
    worst = std::max(worst, std::abs(cheb_eval(s, x) - std::erf(k * x)));
  }
  EXPECT_LE(worst, kappa);  // projection sits close to its target
  EXPECT_GE(s.degree(), 8);
}

TEST(SignSeries, L1NormLogarithmicGrowth) {
  for (double kappa : {0.1, 0.05, 0.02}) {
    ChebSeries s = sign_series(kappa);
    double harmonic = 0.0;
    for (int i = 1; i <= s.degree(); ++i) harmonic += 1.0 / i;
    EXPECT_LE(s.l1(), 2.0 + 4.0 / std::acos(-1.0) * harmonic) << "kappa=" << kappa;
  }
}

TEST(SignSeries, MonotoneImprovementInDegree) {
  const double kappa = 0.08;
  const double pi = std::acos(-1.0);
  const double k = std::sqrt(2.0 * std::log(2.0 / (pi * kappa * kappa))) / kappa;
  auto grid_err = [&](const ChebSeries& s) {
    double worst = 0.0;
    for (int i = 0; i <= 500; ++i) {
      const double x = kappa + (1.0 - kappa) * i / 500.0;
      worst = std::max(worst, std::abs(cheb_eval(s, x) - 1.0));
    }
    return worst;
  };
  QuadratureOptions opt;
  opt.parity = 1;
  double prev = 1e300;
  for (int d : {41, 81, 161, 321}) {
    ChebSeries s = cheb_project([k](double x) { return std::erf(k * x); }, d, opt);
    const double err = grid_err(s);
    EXPECT_LE(err, prev + 1e-12);
    prev = err;
  }
}

TEST(SqrtSeries, EndpointValues) {
  const double kappa = 0.1;
  ChebSeries s = sqrt_series(kappa);
  EXPECT_NEAR(cheb_eval(s, 1.0), 1.0, kappa);
  EXPECT_NEAR(cheb_eval(s, -1.0), 0.0, kappa);
}

TEST(SqrtSeries, DenseGridBound) {
  const double kappa = 0.05;
  ChebSeries s = sqrt_series(kappa);
  double worst = 0.0;
  for (int i = 0; i <= 2000; ++i) {
    const double x = -1.0 + 2.0 * i / 2000.0;
    worst = std::max(worst, std::abs(cheb_eval(s, x) - std::sqrt((x + 1.0) / 2.0)));
  }
  EXPECT_LE(worst, kappa);
}

TEST(ExpSeries, ZeroExponentIsConstantOne) {
  ChebSeries s = exp_series(0.0, 7);
  EXPECT_NEAR(s.coeffs(0), 1.0, 1e-15);
  EXPECT_NEAR(s.l1_tail(), 0.0, 1e-15);
}

TEST(ExpSeries, DenseGridAgainstExp) {
  ChebSeries s = exp_series(1.0, 20);
  double worst = 0.0;
  for (int i = 0; i <= 2000; ++i) {
    const double x = -1.0 + 2.0 * i / 2000.0;
    worst = std::max(worst, std::abs(cheb_eval(s, x) - std::exp(x)));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(ExpSeries, MatchesTaylorPartialSumAtOne) {
  const double b = -0.5;
  const int k = 15;
  ChebSeries s = exp_series(b, k);
  double taylor = 0.0, term = 1.0;
  for (int n = 0; n <= k; ++n) {
    taylor += term;
    term *= b / (n + 1);
  }
  EXPECT_NEAR(cheb_eval(s, 1.0), taylor, 1e-12);
}

TEST(ExpSeries, NonnegativeCoefficientsForPositiveExponent) {
  ChebSeries s = exp_series(2.5, 25);
  for (Index i = 0; i < s.coeffs.size(); ++i) EXPECT_GE(s.coeffs(i), 0.0);
}

}  // namespace
}  // namespace deskq
