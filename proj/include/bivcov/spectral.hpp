#pragma once

// Spectral densities of isotropic correlation functions in R^1 and R^3,
//
//   n = 1:  f(u) = 1/pi          int_0^inf psi(r) cos(u r) dr
//   n = 3:  f(u) = 1/(2 pi^2 u)  int_0^inf r psi(r) sin(u r) dr
//
// (the inverses of C(r) = 2 int f(u) cos(ur) du and C(r) = 4 pi/r int u f(u) sin(ur) du),
// the closed-form spherical density, the positive roots of u = tan(u), the pointwise
// determinant check f11 f22 - rho^2 f12^2 >= 0, and log-log slope fits of density tails.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "bivcov/bimodels.hpp"
#include "bivcov/corrfn.hpp"
#include "bivcov/dimension.hpp"
#include "bivcov/errors.hpp"
#include "bivcov/quadrature.hpp"

namespace bivcov {

struct SpectralOptions {
  /// Use the closed form for the spherical family in R^3 instead of quadrature.
  bool closed_form_when_available = true;
  /// Admit correlation functions whose transform converges only conditionally (Cauchy with
  /// beta <= n). Used by the tail-slope fits; tabulation refuses them by default.
  bool allow_conditional = false;
  OscillatoryOptions quadrature{};
};

/// Density of the spherical correlation with scale s in R^3:
/// 3 s / (pi^2 u^6) (u cos(u/2s) - 2 s sin(u/2s))^2.
inline double spherical_density_closed_form(double s, double u) {
  if (!(s > 0.0)) throw DomainError("spherical density requires s > 0");
  if (!(u >= 0.0)) throw DomainError("spherical density requires u >= 0");
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  const double x = u / (2.0 * s);
  if (u / s < 1e-3) {
    // Series of (x cos x - sin x) / x^3 = -1/3 + x^2/30 - x^4/840 + ...
    const double x2 = x * x;
    const double b = 1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 840.0;
    return 3.0 / (16.0 * pi2 * s * s * s) * b * b;
  }
  const double bracket = u * std::cos(x) - 2.0 * s * std::sin(x);
  const double u3 = u * u * u;
  return 3.0 * s / pi2 * (bracket / u3) * (bracket / u3);
}

namespace detail {

inline void require_transformable(const CorrelationFamily& family, int n, const SpectralOptions& opt) {
  if (n != 1 && n != 3) throw DomainError("spectral densities are available for n = 1 and n = 3 only");
  if (const auto* c = std::get_if<CauchyParams>(&family.params())) {
    if (c->beta <= n && !opt.allow_conditional) {
      throw NonIntegrable("cauchy correlation with beta <= n is not absolutely integrable in R^" +
                          std::to_string(n));
    }
    if (opt.allow_conditional && n == 3 && c->beta <= 1.0) {
      throw NonIntegrable("r psi(r) does not decay for cauchy beta <= 1");
    }
  }
}

}  // namespace detail

/// f(u) for a single correlation family.
inline double density(const CorrelationFamily& family, Dimension dim, double u, const SpectralOptions& opt = {}) {
  const int n = dim.value();
  detail::require_transformable(family, n, opt);
  if (!(u >= 0.0) || !std::isfinite(u)) throw DomainError("frequency must be finite and >= 0");
  if (n == 3 && opt.closed_form_when_available && family.kind() == FamilyKind::Spherical) {
    return spherical_density_closed_form(family.scale(), u);
  }
  constexpr double pi = std::numbers::pi;
  const auto support = family.support_radius();
  std::vector<double> kinks;
  if (support) kinks.push_back(*support);

  if (u == 0.0) {
    // Non-oscillatory limit: 1/pi int psi, resp. 1/(2 pi^2) int r^2 psi.
    const double x0 = 1.0 / family.scale();
    QuadratureResult q;
    if (n == 1) {
      q = half_line_integral([&](double r) { return eval(family, r); }, x0, support, kinks);
      return q.value / pi;
    }
    q = half_line_integral([&](double r) { return r * r * eval(family, r); }, x0, support, kinks);
    return q.value / (2.0 * pi * pi);
  }

  // Substitute x = u r so that the kernel has unit period.
  std::optional<double> x_support;
  std::vector<double> x_kinks;
  if (support) {
    x_support = u * *support;
    x_kinks.push_back(*x_support);
  }
  if (n == 1) {
    const auto q = oscillatory_integral([&](double x) { return eval(family, x / u); }, OscillatoryKernel::Cos,
                                        x_support, x_kinks, opt.quadrature);
    return q.value / (pi * u);
  }
  const auto q = oscillatory_integral([&](double x) { return x * eval(family, x / u); }, OscillatoryKernel::Sin,
                                      x_support, x_kinks, opt.quadrature);
  return q.value / (2.0 * pi * pi * u * u * u);
}

inline std::vector<double> spectral_density(const CorrelationFamily& family, Dimension dim,
                                            std::span<const double> u_grid, const SpectralOptions& opt = {}) {
  std::vector<double> out;
  out.reserve(u_grid.size());
  for (std::size_t i = 0; i < u_grid.size(); ++i) {
    if (i > 0 && !(u_grid[i] > u_grid[i - 1])) throw DomainError("frequency grid must be strictly ascending");
    out.push_back(density(family, dim, u_grid[i], opt));
  }
  return out;
}

/// Densities of the three correlation members of a bivariate model on a common grid.
/// Variances and rho are not folded in.
struct SpectralProfile {
  int dimension = 1;
  std::vector<double> u;
  std::vector<double> f11, f12, f22;
};

inline SpectralProfile spectral_profile(const BivariateModel& model, Dimension dim, std::span<const double> u_grid,
                                        const SpectralOptions& opt = {}) {
  SpectralProfile p;
  p.dimension = dim.value();
  p.u.assign(u_grid.begin(), u_grid.end());
  p.f11 = spectral_density(model.psi11(), dim, u_grid, opt);
  p.f12 = (model.psi12() == model.psi11()) ? p.f11 : spectral_density(model.psi12(), dim, u_grid, opt);
  p.f22 = (model.psi22() == model.psi11()) ? p.f11 : spectral_density(model.psi22(), dim, u_grid, opt);
  return p;
}

inline void write_csv(const SpectralProfile& p, std::ostream& os) {
  const auto old = os.precision(17);
  os << "u,f11,f12,f22\n";
  for (std::size_t i = 0; i < p.u.size(); ++i) {
    os << p.u[i] << ',' << p.f11[i] << ',' << p.f12[i] << ',' << p.f22[i] << '\n';
  }
  os.precision(old);
}

/// Covariance recovered from a tabulated density by the forward transform, composite Simpson
/// on a uniform grid starting at u = 0 (odd number of points). Truncated at the last node.
inline double covariance_from_density(std::span<const double> u, std::span<const double> f, Dimension dim,
                                      double r) {
  const std::size_t m = u.size();
  if (m < 3 || m % 2 == 0 || f.size() != m || u[0] != 0.0) {
    throw DomainError("forward transform needs an odd-length uniform grid starting at 0");
  }
  const double h = u[1] - u[0];
  const int n = dim.value();
  if (n != 1 && n != 3) throw DomainError("forward transform available for n = 1 and n = 3 only");
  auto kernel = [&](double uu) {
    if (n == 1) return 2.0 * std::cos(uu * r);
    if (r == 0.0) return 4.0 * std::numbers::pi * uu * uu;
    return 4.0 * std::numbers::pi * uu * std::sin(uu * r) / r;
  };
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double w = (i == 0 || i == m - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * kernel(u[i]) * f[i];
  }
  return acc * h / 3.0;
}

/// Positive roots u_1 < u_2 < ... of u = tan(u); u_k lies in (pi/2 + pi(k-1), pi/2 + pi k).
struct TanRoots {
  std::vector<double> roots;
  /// 1-based access matching the usual u_k numbering.
  double operator()(int k) const { return roots.at(static_cast<std::size_t>(k - 1)); }
  int size() const { return static_cast<int>(roots.size()); }
};

inline TanRoots tan_roots(int count) {
  if (count < 1) throw DomainError("tan_roots needs count >= 1");
  constexpr double pi = std::numbers::pi;
  // sin u - u cos u = cos u (tan u - u) changes sign exactly once per bracket.
  auto h = [](double u) { return std::sin(u) - u * std::cos(u); };
  TanRoots out;
  out.roots.reserve(count);
  for (int k = 1; k <= count; ++k) {
    const double delta = 1e-12;
    double lo = pi / 2 + pi * (k - 1) + delta;
    double hi = pi / 2 + pi * k - delta;
    double hlo = h(lo);
    while (hi - lo > 1e-14 * std::max(1.0, hi)) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double hm = h(mid);
      if ((hm < 0) == (hlo < 0)) {
        lo = mid;
        hlo = hm;
      } else {
        hi = mid;
      }
    }
    out.roots.push_back(0.5 * (lo + hi));
  }
  return out;
}

struct SpectralPdCheck {
  bool holds_everywhere = true;
  std::optional<double> first_violation;
  /// Most negative value of det / (f11 f22 + rho^2 f12^2) seen on the grid.
  double worst_relative_determinant = 0.0;
};

/// f11(u) f22(u) - rho^2 f12(u)^2 >= -rel_tol (f11 f22 + rho^2 f12^2) at every grid point.
inline SpectralPdCheck spectral_pd_inequality(const BivariateModel& model, Dimension dim, std::span<const double> u_grid,
                                              double rel_tol = 1e-8, const SpectralOptions& opt = {}) {
  SpectralPdCheck out;
  const double rho2 = model.rho() * model.rho();
  if (rho2 == 0.0) {
    // Nothing to compare against; the marginal densities are nonnegative by assumption.
    return out;
  }
  const auto p = spectral_profile(model, dim, u_grid, opt);
  for (std::size_t i = 0; i < p.u.size(); ++i) {
    const double a = p.f11[i] * p.f22[i];
    const double b = rho2 * p.f12[i] * p.f12[i];
    const double det = a - b;
    const double scale = std::abs(a) + b;
    if (scale == 0.0) continue;
    const double rel = det / scale;
    out.worst_relative_determinant = std::min(out.worst_relative_determinant, rel);
    if (rel < -rel_tol && out.holds_everywhere) {
      out.holds_everywhere = false;
      out.first_violation = p.u[i];
    }
  }
  return out;
}

enum class AsymptoticRegime { AtInfinity, AtZero };

struct SlopeWindow {
  double u_lo;
  double u_hi;
  int points = 9;
};

inline SlopeWindow default_slope_window(AsymptoticRegime regime) {
  return regime == AsymptoticRegime::AtInfinity ? SlopeWindow{1e2, 1e3} : SlopeWindow{1e-3, 1e-2};
}

/// Least-squares slope of log f against log u over a log-spaced window.
inline double tauberian_slope(const CorrelationFamily& family, Dimension dim, AsymptoticRegime regime,
                              std::optional<SlopeWindow> window = {}, SpectralOptions opt = {}) {
  const SlopeWindow w = window.value_or(default_slope_window(regime));
  if (!(w.u_lo > 0.0 && w.u_hi > w.u_lo) || w.points < 2) throw DomainError("invalid slope window");
  opt.allow_conditional = true;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double l0 = std::log(w.u_lo), l1 = std::log(w.u_hi);
  for (int i = 0; i < w.points; ++i) {
    const double lu = l0 + (l1 - l0) * i / (w.points - 1);
    const double f = density(family, dim, std::exp(lu), opt);
    if (!(f > 0.0)) throw QuadratureError("nonpositive density inside the slope window", std::abs(f));
    const double lf = std::log(f);
    sx += lu;
    sy += lf;
    sxx += lu * lu;
    sxy += lu * lf;
  }
  const double n = w.points;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace bivcov
