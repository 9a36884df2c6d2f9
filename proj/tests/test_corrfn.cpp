#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <vector>

#include "bivcov/corrfn.hpp"
#include "bivcov/field/random.hpp"

using namespace bivcov;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace {

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return out;
}

// Central differences of eval in 50-digit arithmetic. Step r*1e-8 keeps truncation (~1e-16
// relative) and cancellation (at most ~25 of the 50 digits) below double precision.
double big_fd(const CorrelationFamily& f, double r, int order) {
  const Big x(r);
  const Big h = x * Big("1e-8");
  auto e = [&](const Big& y) { return eval<Big>(f, y); };
  Big d;
  switch (order) {
    case 1: d = (e(x + h) - e(x - h)) / (2 * h); break;
    case 2: d = (e(x + h) - 2 * e(x) + e(x - h)) / (h * h); break;
    default: d = (e(x + 2 * h) - 2 * e(x + h) + 2 * e(x - h) - e(x - 2 * h)) / (2 * h * h * h); break;
  }
  return static_cast<double>(d);
}

std::vector<CorrelationFamily> sample_families() {
  return {CorrelationFamily::stable(0.2, 2.0),  CorrelationFamily::stable(0.5, 1.0),
          CorrelationFamily::stable(1.0, 0.3),  CorrelationFamily::stable(1.5, 1.0),
          CorrelationFamily::stable(2.0, 0.7),  CorrelationFamily::cauchy(0.5, 2.0, 1.0),
          CorrelationFamily::cauchy(1.0, 0.5, 3.0), CorrelationFamily::cauchy(2.0, 2.0, 1.0),
          CorrelationFamily::cauchy(1.7, 4.0, 0.2), CorrelationFamily::spherical(0.9)};
}

}  // namespace

TEST(CorrFnEval, SpecExamples) {
  EXPECT_EQ(eval(CorrelationFamily::stable(1, 1), 0.0), 1.0);
  EXPECT_NEAR(eval(CorrelationFamily::stable(2, 1), 1.0), 0.3678794412, 1e-10);
  EXPECT_NEAR(eval(CorrelationFamily::spherical(1), 2.0 / 3.0), 4.0 / 27.0, 1e-15);
  EXPECT_NEAR(eval(CorrelationFamily::cauchy(1, 1, 1), 1.0), 0.5, 1e-15);
}

TEST(CorrFnEval, ExactOneAtOriginForEveryKind) {
  for (const auto& f : sample_families()) EXPECT_EQ(eval(f, 0.0), 1.0) << f.describe();
  EXPECT_EQ(eval(CorrelationFamily::matern(1.3, 2.0), 0.0), 1.0);
}

TEST(CorrFnEval, NegativeDistanceIsDomainError) {
  EXPECT_THROW(eval(CorrelationFamily::stable(1, 1), -1e-12), DomainError);
  EXPECT_THROW(eval(CorrelationFamily::spherical(1), -1.0), DomainError);
}

TEST(CorrFnEval, TinyStableAlphaRejected) {
  EXPECT_THROW(eval(CorrelationFamily::stable(5e-5, 1), 1.0), DomainError);
  EXPECT_NO_THROW(eval(CorrelationFamily::stable(2e-4, 1), 1.0));
}

TEST(CorrFnEval, ParameterBoxes) {
  EXPECT_THROW(CorrelationFamily::stable(0.0, 1), ParameterError);
  EXPECT_THROW(CorrelationFamily::stable(2.1, 1), ParameterError);
  EXPECT_THROW(CorrelationFamily::stable(1, 0), ParameterError);
  EXPECT_THROW(CorrelationFamily::cauchy(1, 0, 1), ParameterError);
  EXPECT_THROW(CorrelationFamily::spherical(-1), ParameterError);
  EXPECT_THROW(CorrelationFamily::matern(0, 1), ParameterError);
}

TEST(CorrFnEval, MaternHalfIntegerClosedForms) {
  for (double r : {0.01, 0.3, 1.0, 2.5, 7.0}) {
    const double x = 1.7 * r;
    EXPECT_NEAR(eval(CorrelationFamily::matern(0.5, 1.7), r), std::exp(-x), 1e-13);
    EXPECT_NEAR(eval(CorrelationFamily::matern(1.5, 1.7), r), (1 + x) * std::exp(-x), 1e-13);
    EXPECT_NEAR(eval(CorrelationFamily::matern(2.5, 1.7), r), (1 + x + x * x / 3) * std::exp(-x), 1e-13);
  }
}

TEST(CorrFnDeriv, SpecExamples) {
  const auto f = CorrelationFamily::stable(1, 1);
  EXPECT_NEAR(deriv(f, 1.0, 1), -std::exp(-1.0), 1e-15);
  EXPECT_NEAR(deriv(f, 1.0, 2), std::exp(-1.0), 1e-15);
}

TEST(CorrFnDeriv, CauchyAgainstRichardsonDifference) {
  // Independent oracle: central differences, Richardson extrapolated. The second difference
  // uses a wider step since its rounding error grows like eps/h^2.
  const auto f = CorrelationFamily::cauchy(2, 2, 1);
  auto g = [&](double r) { return eval(f, r); };
  for (double r : {0.1, 0.5, 2.0, 7.0}) {
    auto d1 = [&](double s) { return (g(r + s) - g(r - s)) / (2 * s); };
    auto d2 = [&](double s) { return (g(r + s) - 2 * g(r) + g(r - s)) / (s * s); };
    const double fd1 = (4 * d1(0.5e-5) - d1(1e-5)) / 3;
    const double fd2 = (4 * d2(0.5e-3) - d2(1e-3)) / 3;
    EXPECT_NEAR(deriv(f, r, 1), fd1, 1e-8 * (std::abs(fd1) + 1e-3)) << r;
    EXPECT_NEAR(deriv(f, r, 2), fd2, 1e-7 * (std::abs(fd2) + 1e-3)) << r;
  }
}

TEST(CorrFnDeriv, Errors) {
  const auto f = CorrelationFamily::stable(1, 1);
  EXPECT_THROW(deriv(f, 0.0, 1), DomainError);
  EXPECT_THROW(deriv(f, -1.0, 1), DomainError);
  EXPECT_THROW(deriv(f, 1.0, 0), DomainError);
  EXPECT_THROW(deriv(f, 1.0, 4), DomainError);
  const auto s = CorrelationFamily::spherical(2.0);
  EXPECT_THROW(deriv(s, 0.5, 2), DomainError);
  EXPECT_THROW(deriv(s, 0.5 + 1e-10, 3), DomainError);
  EXPECT_NO_THROW(deriv(s, 0.5 + 1e-6, 3));
}

// Property: closed forms agree with a high-precision finite-difference oracle on a log grid
// over [1e-6, 1e6], for orders 1-3.
TEST(CorrFnDeriv, MatchesExtendedPrecisionDifferences) {
  const auto grid = log_grid(1e-6, 1e6, 61);
  for (const auto& f : sample_families()) {
    for (double r : grid) {
      if (f.kind() == FamilyKind::Spherical && std::abs(r * f.scale() - 1.0) < 1e-6) continue;
      for (int k = 1; k <= 3; ++k) {
        const double d = deriv(f, r, k);
        const double oracle = big_fd(f, r, k);
        EXPECT_LE(std::abs(d - oracle), 1e-6 * (1 + std::abs(d)))
            << f.describe() << " r=" << r << " order=" << k << " closed=" << d << " fd=" << oracle;
      }
    }
  }
}

TEST(CorrFnDeriv, MaternFiniteDifferencesMatchHalfIntegerForms) {
  // nu = 1.5: psi = (1+x)e^-x, psi' = -s x e^-x, psi'' = s^2 (x-1) e^-x, psi''' = s^3 (2-x) e^-x.
  const double s = 0.8;
  const auto f = CorrelationFamily::matern(1.5, s);
  for (double r : {0.2, 0.7, 1.5, 4.0, 9.0}) {
    const double x = s * r, e = std::exp(-x);
    EXPECT_NEAR(deriv(f, r, 1), -s * x * e, 1e-8);
    EXPECT_NEAR(deriv(f, r, 2), s * s * (x - 1) * e, 1e-7);
    EXPECT_NEAR(deriv(f, r, 3), s * s * s * (2 - x) * e, 1e-5);
  }
}

// Property: stable and Cauchy correlations are strictly decreasing on (0, inf).
TEST(CorrFnProperties, StrictlyDecreasing) {
  const CounterRng rng(11);
  const auto grid = log_grid(1e-3, 1e2, 400);
  for (int trial = 0; trial < 40; ++trial) {
    const double a = 0.05 + 1.95 * rng.uniform(4 * trial);
    const double b = 0.1 + 5 * rng.uniform(4 * trial + 1);
    const double s = 0.1 + 3 * rng.uniform(4 * trial + 2);
    for (const auto& f : {CorrelationFamily::stable(a, s), CorrelationFamily::cauchy(a, b, s)}) {
      double prev = 1.0;
      for (double r : grid) {
        const double v = eval(f, r);
        if (prev == 0.0) break;  // underflow past the range
        EXPECT_LT(v, prev) << f.describe() << " r=" << r;
        EXPECT_GE(v, 0.0);
        prev = v;
      }
    }
  }
}

// Property: for alpha <= 1, psi'' >= 0 and psi'' - r psi''' >= 0.
TEST(CorrFnProperties, CompleteMonotonicityProxies) {
  const CounterRng rng(12);
  const auto grid = log_grid(1e-4, 1e3, 200);
  for (int trial = 0; trial < 30; ++trial) {
    const double a = 0.05 + 0.95 * rng.uniform(4 * trial);
    const double b = 0.1 + 5 * rng.uniform(4 * trial + 1);
    const double s = 0.1 + 3 * rng.uniform(4 * trial + 2);
    for (const auto& f : {CorrelationFamily::stable(a, s), CorrelationFamily::cauchy(a, b, s)}) {
      for (double r : grid) {
        const double d2 = deriv(f, r, 2), d3 = deriv(f, r, 3);
        const double tol = 1e-12 * (std::abs(d2) + std::abs(r * d3));
        EXPECT_GE(d2, -tol) << f.describe() << " r=" << r;
        EXPECT_GE(d2 - r * d3, -tol) << f.describe() << " r=" << r;
      }
    }
  }
}

TEST(CorrFnProperties, SphericalCompactSupport) {
  for (double s : {0.1, 1.0, 3.3}) {
    const auto f = CorrelationFamily::spherical(s);
    for (double k : {1.0, 1.0 + 1e-12, 1.5, 10.0, 1e6}) EXPECT_EQ(eval(f, k / s), 0.0);
    EXPECT_GT(eval(f, 0.999 / s), 0.0);
  }
}

TEST(CorrFnProperties, BoundedByOne) {
  const auto grid = log_grid(1e-8, 1e8, 200);
  for (const auto& f : sample_families()) {
    for (double r : grid) {
      const double v = eval(f, r);
      EXPECT_LE(std::abs(v), 1.0);
    }
  }
}
