#pragma once

// One-dimensional infimum search over r in (0, inf) for smooth positive functions with few
// local minima. The function is supplied in log form; +inf marks excluded points.
//
// The scan covers a log-spaced grid, the best local-minimum brackets are refined by Brent's
// method (Boost.Math) in log r, and the caller combines the result with whatever it knows
// about the limits r -> 0+ and r -> inf.

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace bivcov {

struct InfimumOptions {
  double r_min = 1e-8;
  double r_max = 1e8;
  int grid_points = 4096;
  int brackets = 8;
  /// Bits of log r resolved by the bracket refinement; Brent's method gains nothing beyond
  /// half the mantissa.
  int refine_bits = std::numeric_limits<double>::digits / 2;
};

struct GridInfimum {
  /// Smallest refined value found strictly inside the grid; +inf if none.
  double log_value = std::numeric_limits<double>::infinity();
  double r = std::numeric_limits<double>::quiet_NaN();
  /// True when the smallest evaluated value sits on the first/last finite grid point.
  bool at_low_edge = false;
  bool at_high_edge = false;
  /// log values at the first and last finite grid points and their inner neighbours.
  double low_edge_log = std::numeric_limits<double>::infinity();
  double low_next_log = std::numeric_limits<double>::infinity();
  double high_edge_log = std::numeric_limits<double>::infinity();
  double high_prev_log = std::numeric_limits<double>::infinity();
  double low_edge_r = std::numeric_limits<double>::quiet_NaN();
  double high_edge_r = std::numeric_limits<double>::quiet_NaN();
};

template <class LogF>
GridInfimum grid_infimum(const LogF& log_f, const InfimumOptions& opt = {}) {
  const int n = std::max(opt.grid_points, 3);
  const double x0 = std::log(opt.r_min);
  const double x1 = std::log(opt.r_max);
  const double dx = (x1 - x0) / (n - 1);
  const double inf = std::numeric_limits<double>::infinity();

  auto eval_log = [&](double x) {
    const double v = log_f(std::exp(x));
    return std::isnan(v) ? inf : v;
  };

  std::vector<double> xs(n), vs(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = x0 + dx * i;
    vs[i] = eval_log(xs[i]);
  }

  GridInfimum out;
  int first = -1, last = -1;
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(vs[i])) {
      if (first < 0) first = i;
      last = i;
    }
  }
  if (first < 0) return out;
  out.low_edge_log = vs[first];
  out.low_edge_r = std::exp(xs[first]);
  out.high_edge_log = vs[last];
  out.high_edge_r = std::exp(xs[last]);
  if (first + 1 < n) out.low_next_log = vs[first + 1];
  if (last > 0) out.high_prev_log = vs[last - 1];

  // Interior local minima: both neighbours finite and not lower.
  std::vector<int> minima;
  for (int i = 1; i + 1 < n; ++i) {
    if (!std::isfinite(vs[i]) || !std::isfinite(vs[i - 1]) || !std::isfinite(vs[i + 1])) continue;
    if (vs[i] <= vs[i - 1] && vs[i] <= vs[i + 1]) minima.push_back(i);
  }
  std::sort(minima.begin(), minima.end(), [&](int a, int b) { return vs[a] < vs[b]; });
  if (static_cast<int>(minima.size()) > opt.brackets) minima.resize(opt.brackets);

  for (int i : minima) {
    // Brent's parabolic steps need finite values; excluded points become merely huge.
    auto finite_log = [&](double x) { return std::min(eval_log(x), 1e300); };
    std::uintmax_t iterations = 200;
    auto [x_min, v] = boost::math::tools::brent_find_minima(finite_log, xs[i - 1], xs[i + 1], opt.refine_bits, iterations);
    double best = std::min(v, vs[i]);
    if (vs[i] < v) x_min = xs[i];
    if (best < out.log_value) {
      out.log_value = best;
      out.r = std::exp(x_min);
    }
  }

  const double edge_min = std::min(vs[first], vs[last]);
  if (edge_min < out.log_value) {
    out.at_low_edge = vs[first] <= vs[last];
    out.at_high_edge = !out.at_low_edge;
  }
  return out;
}

}  // namespace bivcov
