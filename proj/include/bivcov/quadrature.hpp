#pragma once

// Quadrature for half-line Fourier-type integrals
//
//   I = int_0^inf g(x) K(x) dx,   K = cos or sin,
//
// with g smooth on (0, inf) apart from listed breakpoints and decaying to zero, possibly
// slowly. The integral is split at the zeros of K; each half period is integrated with an
// adaptive Gauss-Kronrod rule (tanh-sinh on the first one, which carries the x = 0 endpoint
// behaviour), and the alternating sequence of partial sums is accelerated by repeated
// averaging (Euler transform).

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "bivcov/errors.hpp"

namespace bivcov {

enum class OscillatoryKernel { Cos, Sin };

struct OscillatoryOptions {
  double abs_tol = 1e-15;
  double rel_tol = 1e-11;
  /// Cap on the number of half periods integrated before giving up.
  int max_half_periods = 100000;
  /// Number of most recent partial sums fed to the averaging scheme.
  int euler_depth = 24;
  /// Consecutive estimates that must agree before stopping.
  int stable_estimates = 3;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int half_periods = 0;
};

namespace detail {

template <class G>
double panel_integral(const G& g, double a, double b, bool singular_left, double* err) {
  double e = 0.0;
  double v;
  if (singular_left) {
    thread_local boost::math::quadrature::tanh_sinh<double> ts(12);
    double l1 = 0.0;
    v = ts.integrate(g, a, b, 1e-14, &e, &l1);
  } else {
    v = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(g, a, b, 12, 1e-14, &e);
  }
  *err = e;
  return v;
}

// Integrates g over [a, b], splitting at interior breakpoints.
template <class G>
double split_panel(const G& g, double a, double b, const std::vector<double>& breaks, bool singular_left,
                   double* err) {
  double total = 0.0;
  double left = a;
  bool singular = singular_left;
  *err = 0.0;
  for (double bp : breaks) {
    if (bp > left && bp < b) {
      double e = 0.0;
      total += panel_integral(g, left, bp, singular, &e);
      *err += e;
      left = bp;
      singular = false;
    }
  }
  double e = 0.0;
  total += panel_integral(g, left, b, singular, &e);
  *err += e;
  return total;
}

inline double euler_average(const std::vector<double>& partial, int depth) {
  const int n = static_cast<int>(partial.size());
  const int k = std::min(depth, n);
  std::vector<double> row(partial.end() - k, partial.end());
  for (int level = 1; level < k; ++level) {
    for (int i = 0; i + level < k; ++i) row[i] = 0.5 * (row[i] + row[i + 1]);
  }
  return row[0];
}

}  // namespace detail

/// int_0^X g(x) K(x) dx, X = support_end or infinity.
template <class G>
QuadratureResult oscillatory_integral(const G& g, OscillatoryKernel kernel, std::optional<double> support_end = {},
                                      std::vector<double> breakpoints = {}, const OscillatoryOptions& opt = {}) {
  constexpr double pi = std::numbers::pi;
  std::sort(breakpoints.begin(), breakpoints.end());
  auto integrand = [&](double x) {
    return g(x) * (kernel == OscillatoryKernel::Cos ? std::cos(x) : std::sin(x));
  };
  // Zeros of the kernel bounding half period j.
  auto zero = [&](int j) {
    if (kernel == OscillatoryKernel::Sin) return j * pi;
    return j == 0 ? 0.0 : pi / 2 + (j - 1) * pi;
  };

  QuadratureResult out;
  std::vector<double> partial;
  double sum = 0.0;
  double quad_err = 0.0;
  double last_estimate = std::numeric_limits<double>::quiet_NaN();
  int agreeing = 0;

  for (int j = 0; j < opt.max_half_periods; ++j) {
    double a = zero(j);
    double b = zero(j + 1);
    bool last_panel = false;
    if (support_end && b >= *support_end) {
      b = *support_end;
      last_panel = true;
    }
    if (b > a) {
      double e = 0.0;
      sum += detail::split_panel(integrand, a, b, breakpoints, j == 0, &e);
      quad_err += e;
    }
    out.half_periods = j + 1;
    if (last_panel) {
      out.value = sum;
      out.error_estimate = quad_err;
      return out;
    }
    partial.push_back(sum);
    // Acceleration is only meaningful past the last breakpoint.
    if (!breakpoints.empty() && a < breakpoints.back()) continue;
    if (static_cast<int>(partial.size()) < 4) continue;
    const double estimate = detail::euler_average(partial, opt.euler_depth);
    const double delta = std::abs(estimate - last_estimate);
    if (std::isfinite(delta) && delta <= std::max(opt.abs_tol, opt.rel_tol * std::abs(estimate))) {
      if (++agreeing >= opt.stable_estimates) {
        out.value = estimate;
        out.error_estimate = delta + quad_err;
        return out;
      }
    } else {
      agreeing = 0;
    }
    last_estimate = estimate;
  }
  const double estimate = detail::euler_average(partial, opt.euler_depth);
  throw QuadratureError("oscillatory quadrature did not converge within the half-period cap",
                        std::abs(estimate - last_estimate));
}

/// int_0^inf g(x) dx for a positive, eventually decaying g: tanh-sinh on [0, x0] and
/// Gauss-Kronrod on successive decades until the decade contribution is negligible.
template <class G>
QuadratureResult half_line_integral(const G& g, double x0, std::optional<double> support_end = {},
                                    std::vector<double> breakpoints = {}, double rel_tol = 1e-13) {
  QuadratureResult out;
  double err = 0.0;
  std::sort(breakpoints.begin(), breakpoints.end());
  double end = support_end ? std::min(x0, *support_end) : x0;
  out.value = detail::split_panel(g, 0.0, end, breakpoints, true, &err);
  out.error_estimate = err;
  double a = end;
  for (int decade = 0; decade < 400; ++decade) {
    if (support_end && a >= *support_end) return out;
    double b = a * 10.0;
    if (support_end) b = std::min(b, *support_end);
    const double piece = detail::split_panel(g, a, b, breakpoints, false, &err);
    out.value += piece;
    out.error_estimate += err;
    out.half_periods = decade + 1;
    if (std::abs(piece) <= rel_tol * std::abs(out.value) && decade > 2) return out;
    a = b;
  }
  throw QuadratureError("half-line integral did not converge", out.error_estimate);
}

}  // namespace bivcov
