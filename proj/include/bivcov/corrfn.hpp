#pragma once

// Univariate stationary isotropic correlation families: powered exponential (stable),
// generalized Cauchy, spherical and Matern. Values are templated on the scalar type so
// that tests can evaluate them in extended precision; derivatives are closed form for
// stable, Cauchy and spherical, and finite differences for Matern.

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <variant>

#include "bivcov/errors.hpp"

namespace bivcov {

/// exp(-(s r)^alpha), 0 < alpha <= 2.
struct StableParams {
  double alpha;
  double scale;
};

/// (1 + (s r)^alpha)^(-beta/alpha), 0 < alpha <= 2, beta > 0.
struct CauchyParams {
  double alpha;
  double beta;
  double scale;
};

/// (1 - 3/2 s r + 1/2 (s r)^3)_+, support radius 1/s.
struct SphericalParams {
  double scale;
};

/// 2^(1-nu)/Gamma(nu) (s r)^nu K_nu(s r).
struct MaternParams {
  double nu;
  double scale;
};

enum class FamilyKind { Stable, Cauchy, Spherical, Matern };

inline const char* to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::Stable: return "stable";
    case FamilyKind::Cauchy: return "cauchy";
    case FamilyKind::Spherical: return "spherical";
    case FamilyKind::Matern: return "matern";
  }
  return "?";
}

class CorrelationFamily {
 public:
  using Params = std::variant<StableParams, CauchyParams, SphericalParams, MaternParams>;

  static CorrelationFamily stable(double alpha, double scale) {
    if (!(alpha > 0.0 && alpha <= 2.0)) throw ParameterError("stable: alpha must lie in (0, 2]");
    require_scale(scale);
    return CorrelationFamily(StableParams{alpha, scale});
  }

  static CorrelationFamily cauchy(double alpha, double beta, double scale) {
    if (!(alpha > 0.0 && alpha <= 2.0)) throw ParameterError("cauchy: alpha must lie in (0, 2]");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ParameterError("cauchy: beta must be > 0");
    require_scale(scale);
    return CorrelationFamily(CauchyParams{alpha, beta, scale});
  }

  static CorrelationFamily spherical(double scale) {
    require_scale(scale);
    return CorrelationFamily(SphericalParams{scale});
  }

  static CorrelationFamily matern(double nu, double scale) {
    if (!(nu > 0.0) || !std::isfinite(nu)) throw ParameterError("matern: nu must be > 0");
    require_scale(scale);
    return CorrelationFamily(MaternParams{nu, scale});
  }

  FamilyKind kind() const { return static_cast<FamilyKind>(params_.index()); }
  const Params& params() const { return params_; }

  double scale() const {
    return std::visit([](const auto& p) { return p.scale; }, params_);
  }

  /// Radius beyond which the function vanishes identically, if any.
  std::optional<double> support_radius() const {
    if (const auto* p = std::get_if<SphericalParams>(&params_)) return 1.0 / p->scale;
    return std::nullopt;
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(10);
    std::visit(
        [&](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, StableParams>) {
            os << "stable(alpha=" << p.alpha << ", s=" << p.scale << ")";
          } else if constexpr (std::is_same_v<P, CauchyParams>) {
            os << "cauchy(alpha=" << p.alpha << ", beta=" << p.beta << ", s=" << p.scale << ")";
          } else if constexpr (std::is_same_v<P, SphericalParams>) {
            os << "spherical(s=" << p.scale << ")";
          } else {
            os << "matern(nu=" << p.nu << ", s=" << p.scale << ")";
          }
        },
        params_);
    return os.str();
  }

  friend bool operator==(const CorrelationFamily& a, const CorrelationFamily& b) {
    if (a.params_.index() != b.params_.index()) return false;
    return std::visit(
        [&](const auto& pa) {
          using P = std::decay_t<decltype(pa)>;
          const auto& pb = std::get<P>(b.params_);
          if constexpr (std::is_same_v<P, StableParams>) {
            return pa.alpha == pb.alpha && pa.scale == pb.scale;
          } else if constexpr (std::is_same_v<P, CauchyParams>) {
            return pa.alpha == pb.alpha && pa.beta == pb.beta && pa.scale == pb.scale;
          } else if constexpr (std::is_same_v<P, SphericalParams>) {
            return pa.scale == pb.scale;
          } else {
            return pa.nu == pb.nu && pa.scale == pb.scale;
          }
        },
        a.params_);
  }

 private:
  explicit CorrelationFamily(Params p) : params_(p) {}

  static void require_scale(double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ParameterError("scale must be > 0");
  }

  Params params_;
};

/// Stable exponents below this are rejected by eval: (s r)^alpha is ~1 for every r.
inline constexpr double kMinStableAlpha = 1e-4;

/// psi(r). Exactly 1 at r = 0.
template <class T>
T eval(const CorrelationFamily& family, T r) {
  using std::exp;
  using std::log1p;
  using std::pow;
  if (r < T(0)) throw DomainError("correlation evaluated at negative distance");
  if (r == T(0)) return T(1);
  return std::visit(
      [&](const auto& p) -> T {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, StableParams>) {
          if (p.alpha < kMinStableAlpha) throw DomainError("stable alpha too close to 0 (ill-conditioned)");
          return exp(-pow(T(p.scale) * r, T(p.alpha)));
        } else if constexpr (std::is_same_v<P, CauchyParams>) {
          const T t = pow(T(p.scale) * r, T(p.alpha));
          return exp(-(T(p.beta) / T(p.alpha)) * log1p(t));
        } else if constexpr (std::is_same_v<P, SphericalParams>) {
          const T x = T(p.scale) * r;
          if (x >= T(1)) return T(0);
          return T(1) - T(1.5) * x + T(0.5) * x * x * x;
        } else {
          const T x = T(p.scale) * r;
          // K_nu underflows past ~700 in double.
          if (x > T(700)) return T(0);
          const T nu(p.nu);
          return pow(T(2), T(1) - nu) / boost::math::tgamma(nu) * pow(x, nu) *
                 boost::math::cyl_bessel_k(nu, x);
        }
      },
      family.params());
}

inline double eval(const CorrelationFamily& family, int r) = delete;

struct DerivOptions {
  /// Spherical derivatives are refused within this half-width of the kink, in units of 1/s.
  double kink_halfwidth = 1e-9;
};

namespace detail {

// log psi and its first three r-derivatives are cheap in closed form for the stable and
// Cauchy families; psi^(k) follows from them by Faa di Bruno.
struct LogDerivs {
  double l1, l2, l3;
};

inline LogDerivs stable_log_derivs(const StableParams& p, double r) {
  const double a = p.alpha;
  const double t = std::pow(p.scale * r, a);
  const double t1 = a * t / r;
  const double t2 = a * (a - 1.0) * t / (r * r);
  const double t3 = a * (a - 1.0) * (a - 2.0) * t / (r * r * r);
  return {-t1, -t2, -t3};
}

inline LogDerivs cauchy_log_derivs(const CauchyParams& p, double r) {
  const double a = p.alpha;
  const double t = std::pow(p.scale * r, a);
  const double t1 = a * t / r;
  const double t2 = a * (a - 1.0) * t / (r * r);
  const double t3 = a * (a - 1.0) * (a - 2.0) * t / (r * r * r);
  const double w = 1.0 / (1.0 + t);
  const double g1 = t1 * w;
  const double g2 = t2 * w - t1 * t1 * w * w;
  const double g3 = t3 * w - 3.0 * t1 * t2 * w * w + 2.0 * t1 * t1 * t1 * w * w * w;
  const double c = -p.beta / a;
  return {c * g1, c * g2, c * g3};
}

inline double from_log_derivs(const LogDerivs& d, double psi, int order) {
  switch (order) {
    case 1: return d.l1 * psi;
    case 2: return (d.l2 + d.l1 * d.l1) * psi;
    default: return (d.l3 + 3.0 * d.l1 * d.l2 + d.l1 * d.l1 * d.l1) * psi;
  }
}

// Richardson-extrapolated central differences (three levels, error O(h^6)).
template <class F>
double richardson_derivative(const F& f, double r, int order, double h) {
  auto central = [&](double step) {
    switch (order) {
      case 1: return (f(r + step) - f(r - step)) / (2.0 * step);
      case 2: return (f(r + step) - 2.0 * f(r) + f(r - step)) / (step * step);
      default:
        return (f(r + 2.0 * step) - 2.0 * f(r + step) + 2.0 * f(r - step) - f(r - 2.0 * step)) /
               (2.0 * step * step * step);
    }
  };
  std::array<double, 3> d{central(h), central(h / 2.0), central(h / 4.0)};
  const double e1a = (4.0 * d[1] - d[0]) / 3.0;
  const double e1b = (4.0 * d[2] - d[1]) / 3.0;
  return (16.0 * e1b - e1a) / 15.0;
}

}  // namespace detail

/// d^k psi / dr^k for k in {1, 2, 3} at r > 0.
inline double deriv(const CorrelationFamily& family, double r, int order, const DerivOptions& opt = {}) {
  if (!(r > 0.0)) throw DomainError("derivative requires r > 0");
  if (order < 1 || order > 3) throw DomainError("derivative order must be 1, 2 or 3");
  return std::visit(
      [&](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, StableParams>) {
          return detail::from_log_derivs(detail::stable_log_derivs(p, r), eval(family, r), order);
        } else if constexpr (std::is_same_v<P, CauchyParams>) {
          return detail::from_log_derivs(detail::cauchy_log_derivs(p, r), eval(family, r), order);
        } else if constexpr (std::is_same_v<P, SphericalParams>) {
          const double s = p.scale;
          if (std::abs(r - 1.0 / s) <= opt.kink_halfwidth / s) {
            throw DomainError("spherical derivative requested at the support kink r = 1/s");
          }
          const double x = s * r;
          if (x > 1.0) return 0.0;
          switch (order) {
            case 1: return s * (-1.5 + 1.5 * x * x);
            case 2: return 3.0 * s * s * x;
            default: return 3.0 * s * s * s;
          }
        } else {
          const double h = std::min(0.2 * r, 0.05 / p.scale);
          return detail::richardson_derivative([&](double x) { return eval(family, x); }, r, order, h);
        }
      },
      family.params());
}

}  // namespace bivcov
