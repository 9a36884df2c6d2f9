#pragma once

// Sufficient conditions on the colocated correlation rho for the bivariate stable and
// Cauchy models, a generic derivative criterion for arbitrary twice/thrice differentiable
// members, and the decision procedure for the bivariate spherical model.
//
// For a model of the form C_ij = sigma_i sigma_j rho_ij psi_ij (rho_ii = 1) the criterion is
//
//   rho^2 <= inf_{r>0} D11(r) D22(r) / D12(r)^2,
//   D = psi''            in R^1,
//   D = psi'' - r psi''' in R^3,
//
// provided D11, D22 >= 0 together with decay and integrability side conditions. For the
// stable family D = alpha s^alpha r^(alpha-2) psi q(r); for the Cauchy family
// D = beta s^alpha r^(alpha-2) p(r), with q, p given below.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bivcov/bimodels.hpp"
#include "bivcov/corrfn.hpp"
#include "bivcov/dimension.hpp"
#include "bivcov/errors.hpp"
#include "bivcov/infimum.hpp"
#include "bivcov/spectral.hpp"

namespace bivcov {

enum class Decidability {
  /// The infimum is positive; every |rho| <= rho_bound gives a valid model.
  SufficientBound,
  /// Only rho = 0 gives a valid model (necessary condition violated).
  NecessarilyZero,
  /// The infimum is zero. The sufficient criterion says nothing; the model may still be valid.
  ZeroInfimumInconclusive,
};

enum class RegimeCase {
  StableEqualSmoothness,        // alpha12 = alpha11 = alpha22
  StableCrossMatchesFirst,      // alpha12 = alpha11 > alpha22
  StableCrossMatchesSecond,     // alpha12 = alpha22 > alpha11
  StableCrossSmoothest,         // alpha12 > max(alpha11, alpha22)
  StableZeroInfimum,            // none of the above with alpha12 >= mean
  CrossSmoothnessBelowMean,     // alpha12 < (alpha11 + alpha22)/2
  CauchyLongRangeBelowDimension,  // beta12 < mean, all beta < n
  CauchyMixedLongRange,         // 2 beta12 < beta_ii + n, beta_ii < n < beta_jj
  CauchyLongRangeBelowMean,     // beta12 < mean otherwise
  CauchyPositiveInfimum,        // alpha12 >= mean and beta12 >= mean
  GenericDerivative,
};

inline const char* to_string(Decidability d) {
  switch (d) {
    case Decidability::SufficientBound: return "sufficient-bound";
    case Decidability::NecessarilyZero: return "necessarily-zero";
    case Decidability::ZeroInfimumInconclusive: return "zero-infimum-inconclusive";
  }
  return "?";
}

inline const char* to_string(RegimeCase c) {
  switch (c) {
    case RegimeCase::StableEqualSmoothness: return "stable-equal-smoothness";
    case RegimeCase::StableCrossMatchesFirst: return "stable-cross-matches-first";
    case RegimeCase::StableCrossMatchesSecond: return "stable-cross-matches-second";
    case RegimeCase::StableCrossSmoothest: return "stable-cross-smoothest";
    case RegimeCase::StableZeroInfimum: return "stable-zero-infimum";
    case RegimeCase::CrossSmoothnessBelowMean: return "cross-smoothness-below-mean";
    case RegimeCase::CauchyLongRangeBelowDimension: return "cauchy-long-range-below-dimension";
    case RegimeCase::CauchyMixedLongRange: return "cauchy-mixed-long-range";
    case RegimeCase::CauchyLongRangeBelowMean: return "cauchy-long-range-below-mean";
    case RegimeCase::CauchyPositiveInfimum: return "cauchy-positive-infimum";
    case RegimeCase::GenericDerivative: return "generic-derivative";
  }
  return "?";
}

struct InfimumLocation {
  enum class Where { Interior, AtZero, AtInfinity };
  Where where = Where::Interior;
  double r = std::numeric_limits<double>::quiet_NaN();
};

inline const char* to_string(InfimumLocation::Where w) {
  switch (w) {
    case InfimumLocation::Where::Interior: return "interior";
    case InfimumLocation::Where::AtZero: return "at-zero";
    case InfimumLocation::Where::AtInfinity: return "at-infinity";
  }
  return "?";
}

struct ValidityReport {
  /// Infimum of the bound integrand (rho^2 threshold before the square root).
  double infimum = 0.0;
  double rho_bound_raw = 0.0;
  /// min(1, rho_bound_raw).
  double rho_bound = 0.0;
  RegimeCase regime = RegimeCase::GenericDerivative;
  InfimumLocation location{};
  Decidability decidability = Decidability::ZeroInfimumInconclusive;
  std::string note;
};

// ---------------------------------------------------------------------------------------
// Auxiliary functions

/// q^(1) = alpha (sr)^alpha - alpha + 1,
/// q^(3) = alpha^2 (sr)^(2 alpha) - 3 alpha^2 (sr)^alpha + 4 alpha (sr)^alpha + alpha^2 - 4 alpha + 3.
inline double q_fn(double alpha, double s, Dimension dim, double r) {
  if (!(r > 0.0)) throw DomainError("q requires r > 0");
  const double t = std::pow(s * r, alpha);
  if (dim.criterion() == 1) return alpha * t + (1.0 - alpha);
  return alpha * alpha * t * t + alpha * (4.0 - 3.0 * alpha) * t + (alpha - 1.0) * (alpha - 3.0);
}

/// Cauchy counterpart of q:
/// p^(1) = ((beta+1) t - alpha + 1) / (1+t)^(beta/alpha + 2),
/// p^(3) = ((beta+1)(beta+3) t^2 + (4 beta + 6 - 3 alpha beta - 4 alpha - alpha^2) t
///          + (alpha-1)(alpha-3)) / (1+t)^(beta/alpha + 3),     t = (sr)^alpha,
/// so that psi'' (resp. psi'' - r psi''') = beta s^alpha r^(alpha-2) p.
inline double p_fn(double alpha, double beta, double s, Dimension dim, double r) {
  if (!(r > 0.0)) throw DomainError("p requires r > 0");
  const double t = std::pow(s * r, alpha);
  if (dim.criterion() == 1) {
    return ((beta + 1.0) * t + (1.0 - alpha)) * std::exp(-(beta / alpha + 2.0) * std::log1p(t));
  }
  const double num = (beta + 1.0) * (beta + 3.0) * t * t +
                     (4.0 * beta + 6.0 - 3.0 * alpha * beta - 4.0 * alpha - alpha * alpha) * t +
                     (alpha - 1.0) * (alpha - 3.0);
  return num * std::exp(-(beta / alpha + 3.0) * std::log1p(t));
}

namespace detail {

inline bool near(double a, double b, double tol = 1e-12) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// Relative threshold under which the cross factor counts as vanishing.
inline constexpr double kExcludedRel = 1e-12;

// log|q| with the exclusion test applied; +inf marks an excluded point (returned negated
// by callers so the integrand becomes +inf there).
struct LogFactor {
  double log_abs;
  bool vanishes;
};

inline LogFactor log_q(double alpha, double s, int n, double r) {
  const double t = std::pow(s * r, alpha);
  double value, magnitude;
  if (n == 1) {
    value = alpha * t + (1.0 - alpha);
    magnitude = std::abs(alpha * t) + std::abs(1.0 - alpha);
  } else {
    const double a2 = alpha * alpha * t * t;
    const double a1 = alpha * (4.0 - 3.0 * alpha) * t;
    const double a0 = (alpha - 1.0) * (alpha - 3.0);
    value = a2 + a1 + a0;
    magnitude = std::abs(a2) + std::abs(a1) + std::abs(a0);
  }
  return {std::log(std::abs(value)), std::abs(value) <= kExcludedRel * magnitude};
}

inline LogFactor log_p(double alpha, double beta, double s, int n, double r) {
  const double t = std::pow(s * r, alpha);
  double value, magnitude, power;
  if (n == 1) {
    value = (beta + 1.0) * t + (1.0 - alpha);
    magnitude = (beta + 1.0) * t + std::abs(1.0 - alpha);
    power = beta / alpha + 2.0;
  } else {
    const double a2 = (beta + 1.0) * (beta + 3.0) * t * t;
    const double a1 = (4.0 * beta + 6.0 - 3.0 * alpha * beta - 4.0 * alpha - alpha * alpha) * t;
    const double a0 = (alpha - 1.0) * (alpha - 3.0);
    value = a2 + a1 + a0;
    magnitude = std::abs(a2) + std::abs(a1) + std::abs(a0);
    power = beta / alpha + 3.0;
  }
  return {std::log(std::abs(value)) - power * std::log1p(t), std::abs(value) <= kExcludedRel * magnitude};
}

inline double stable_log_prefactor(const StableBivariate& m) {
  return std::log(m.alpha11 * m.alpha22) + m.alpha11 * std::log(m.s11) + m.alpha22 * std::log(m.s22) -
         2.0 * std::log(m.alpha12) - 2.0 * m.alpha12 * std::log(m.s12);
}

inline double cauchy_log_prefactor(const CauchyBivariate& m) {
  return std::log(m.beta11 * m.beta22) - 2.0 * std::log(m.beta12) + m.alpha11 * std::log(m.s11) +
         m.alpha22 * std::log(m.s22) - 2.0 * m.alpha12 * std::log(m.s12);
}

inline double stable_log_integrand(const StableBivariate& m, int n, double r) {
  const auto q11 = log_q(m.alpha11, m.s11, n, r);
  const auto q22 = log_q(m.alpha22, m.s22, n, r);
  const auto q12 = log_q(m.alpha12, m.s12, n, r);
  if (q12.vanishes) return std::numeric_limits<double>::infinity();
  const double expo = 2.0 * std::pow(m.s12 * r, m.alpha12) - std::pow(m.s11 * r, m.alpha11) -
                      std::pow(m.s22 * r, m.alpha22);
  return stable_log_prefactor(m) + (m.alpha11 + m.alpha22 - 2.0 * m.alpha12) * std::log(r) + expo +
         q11.log_abs + q22.log_abs - 2.0 * q12.log_abs;
}

inline double cauchy_log_integrand(const CauchyBivariate& m, int n, double r) {
  const auto p11 = log_p(m.alpha11, m.beta11, m.s11, n, r);
  const auto p22 = log_p(m.alpha22, m.beta22, m.s22, n, r);
  const auto p12 = log_p(m.alpha12, m.beta12, m.s12, n, r);
  if (p12.vanishes) return std::numeric_limits<double>::infinity();
  return cauchy_log_prefactor(m) + (m.alpha11 + m.alpha22 - 2.0 * m.alpha12) * std::log(r) + p11.log_abs +
         p22.log_abs - 2.0 * p12.log_abs;
}

// Behaviour of the integrand at an endpoint.
struct EndpointLimit {
  enum class Kind { Zero, Finite, Infinite };
  Kind kind;
  double log_value = 0.0;  // valid for Finite
};

// Near r = 0 each q (or p) behaves like c (s r)^(k alpha) with k = 1, c = 1 (q) or beta + 1 (p)
// when alpha = 1, else k = 0 and c = q(0) = p(0) = (1 - alpha) resp. (alpha - 1)(alpha - 3).
struct LeadingAtZero {
  double k;
  double log_c;
};

inline LeadingAtZero leading_at_zero(double alpha, double beta_plus_one, int n) {
  if (near(alpha, 1.0)) return {1.0, std::log(beta_plus_one)};
  const double c = n == 1 ? 1.0 - alpha : (alpha - 1.0) * (alpha - 3.0);
  return {0.0, std::log(std::abs(c))};
}

inline EndpointLimit limit_at_zero(double log_prefactor, double a11, double a22, double a12, double s11, double s22,
                                   double s12, LeadingAtZero l11, LeadingAtZero l22, LeadingAtZero l12) {
  const double e0 = (a11 + a22 - 2.0 * a12) + l11.k * a11 + l22.k * a22 - 2.0 * l12.k * a12;
  const double scale = std::abs(a11) + std::abs(a22) + 2.0 * std::abs(a12);
  if (e0 > 1e-12 * scale) return {EndpointLimit::Kind::Zero};
  if (e0 < -1e-12 * scale) return {EndpointLimit::Kind::Infinite};
  const double v = log_prefactor + l11.log_c + l22.log_c - 2.0 * l12.log_c + l11.k * a11 * std::log(s11) +
                   l22.k * a22 * std::log(s22) - 2.0 * l12.k * a12 * std::log(s12);
  return {EndpointLimit::Kind::Finite, v};
}

inline EndpointLimit stable_limit_at_infinity(const StableBivariate& m, int n) {
  const double top = std::max({m.alpha11, m.alpha22, m.alpha12});
  const bool d11 = near(m.alpha11, top), d22 = near(m.alpha22, top), d12 = near(m.alpha12, top);
  const double c12 = d12 ? 2.0 * std::pow(m.s12, m.alpha12) : 0.0;
  const double c11 = d11 ? std::pow(m.s11, m.alpha11) : 0.0;
  const double c22 = d22 ? std::pow(m.s22, m.alpha22) : 0.0;
  const double coef = c12 - c11 - c22;
  if (coef > 1e-12 * (c12 + c11 + c22)) return {EndpointLimit::Kind::Infinite};
  if (coef < -1e-12 * (c12 + c11 + c22)) return {EndpointLimit::Kind::Zero};
  // Leading exponential terms cancel; any lower-order marginal term still drives it to 0.
  if (!(d11 && d22 && d12)) return {EndpointLimit::Kind::Zero};
  // All smoothness parameters equal: q ~ alpha t (n = 1) or alpha^2 t^2 (n = 3).
  const double k = n == 1 ? 1.0 : 2.0;
  const double a = m.alpha12;
  const double v =
      stable_log_prefactor(m) + k * a * (std::log(m.s11) + std::log(m.s22) - 2.0 * std::log(m.s12));
  return {EndpointLimit::Kind::Finite, v};
}

inline EndpointLimit cauchy_limit_at_infinity(const CauchyBivariate& m, int n) {
  const double e = 2.0 * m.beta12 - m.beta11 - m.beta22;
  const double scale = 2.0 * m.beta12 + m.beta11 + m.beta22;
  if (e > 1e-12 * scale) return {EndpointLimit::Kind::Infinite};
  if (e < -1e-12 * scale) return {EndpointLimit::Kind::Zero};
  // p ~ C (s r)^(-beta - alpha), C = beta + 1 (n = 1) or (beta + 1)(beta + 3) (n = 3).
  auto log_c = [n](double beta) { return n == 1 ? std::log(beta + 1.0) : std::log((beta + 1.0) * (beta + 3.0)); };
  const double v = cauchy_log_prefactor(m) + log_c(m.beta11) + log_c(m.beta22) - 2.0 * log_c(m.beta12) -
                   (m.beta11 + m.alpha11) * std::log(m.s11) - (m.beta22 + m.alpha22) * std::log(m.s22) +
                   2.0 * (m.beta12 + m.alpha12) * std::log(m.s12);
  return {EndpointLimit::Kind::Finite, v};
}

struct CombinedInfimum {
  double log_value;
  InfimumLocation location;
};

// Interior search plus endpoint limits. When the grid minimum sits on an edge whose limit is
// +inf, the true minimum lies beyond the grid and the range is widened.
template <class LogF>
CombinedInfimum combine_infimum(const LogF& log_f, EndpointLimit at_zero, EndpointLimit at_inf,
                                InfimumOptions opt) {
  GridInfimum g = grid_infimum(log_f, opt);
  for (int widen = 0; widen < 4; ++widen) {
    const bool low = g.at_low_edge && at_zero.kind == EndpointLimit::Kind::Infinite;
    const bool high = g.at_high_edge && at_inf.kind == EndpointLimit::Kind::Infinite;
    if (!low && !high) break;
    if (low) opt.r_min *= 1e-6;
    if (high) opt.r_max *= 1e6;
    opt.grid_points += opt.grid_points / 2;
    g = grid_infimum(log_f, opt);
  }

  CombinedInfimum out{std::numeric_limits<double>::infinity(), {}};
  if (std::isfinite(g.log_value)) {
    out.log_value = g.log_value;
    out.location = {InfimumLocation::Where::Interior, g.r};
  }
  auto consider = [&](const EndpointLimit& lim, InfimumLocation::Where where) {
    if (lim.kind == EndpointLimit::Kind::Zero) {
      out.log_value = -std::numeric_limits<double>::infinity();
      out.location = {where, where == InfimumLocation::Where::AtZero ? 0.0 : std::numeric_limits<double>::infinity()};
    } else if (lim.kind == EndpointLimit::Kind::Finite && lim.log_value < out.log_value) {
      out.log_value = lim.log_value;
      out.location = {where, where == InfimumLocation::Where::AtZero ? 0.0 : std::numeric_limits<double>::infinity()};
    }
  };
  if (at_zero.kind == EndpointLimit::Kind::Zero) {
    consider(at_zero, InfimumLocation::Where::AtZero);
  } else if (at_inf.kind == EndpointLimit::Kind::Zero) {
    consider(at_inf, InfimumLocation::Where::AtInfinity);
  } else {
    consider(at_zero, InfimumLocation::Where::AtZero);
    consider(at_inf, InfimumLocation::Where::AtInfinity);
  }
  return out;
}

inline void fill_bound(ValidityReport& rep, double log_inf) {
  rep.infimum = std::exp(log_inf);
  rep.rho_bound_raw = std::sqrt(rep.infimum);
  rep.rho_bound = std::min(1.0, rep.rho_bound_raw);
}

inline bool theorem_positive(RegimeCase c) {
  switch (c) {
    case RegimeCase::StableEqualSmoothness:
    case RegimeCase::StableCrossMatchesFirst:
    case RegimeCase::StableCrossMatchesSecond:
    case RegimeCase::StableCrossSmoothest:
    case RegimeCase::CauchyPositiveInfimum:
      return true;
    default:
      return false;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------------------
// Bound integrands

/// The stable bound integrand at r, i.e. D11 D22 / D12^2 written through q. std::nullopt
/// when the cross factor q12 vanishes at r (point excluded from the infimum).
inline std::optional<double> stable_bound_integrand(const StableBivariate& m, Dimension dim, double r) {
  m.validate();
  if (!(r > 0.0)) throw DomainError("bound integrand requires r > 0");
  const double v = detail::stable_log_integrand(m, dim.criterion(), r);
  if (v == std::numeric_limits<double>::infinity()) return std::nullopt;
  return std::exp(v);
}

inline std::optional<double> cauchy_bound_integrand(const CauchyBivariate& m, Dimension dim, double r) {
  m.validate();
  if (!(r > 0.0)) throw DomainError("bound integrand requires r > 0");
  const double v = detail::cauchy_log_integrand(m, dim.criterion(), r);
  if (v == std::numeric_limits<double>::infinity()) return std::nullopt;
  return std::exp(v);
}

// ---------------------------------------------------------------------------------------
// Case classification

inline RegimeCase classify_stable(const StableBivariate& m) {
  const double a11 = m.alpha11, a22 = m.alpha22, a12 = m.alpha12;
  const double mean = 0.5 * (a11 + a22);
  if (a12 < mean && !detail::near(a12, mean)) return RegimeCase::CrossSmoothnessBelowMean;
  const bool eq1 = detail::near(a12, a11), eq2 = detail::near(a12, a22);
  if (eq1 && eq2) {
    const double lhs = std::pow(m.s12, a11);
    const double rhs = 0.5 * (std::pow(m.s11, a11) + std::pow(m.s22, a11));
    return lhs >= rhs * (1.0 - 1e-12) ? RegimeCase::StableEqualSmoothness : RegimeCase::StableZeroInfimum;
  }
  if (eq1 && a11 > a22) {
    return m.s12 > std::pow(2.0, -1.0 / a11) * m.s11 ? RegimeCase::StableCrossMatchesFirst
                                                     : RegimeCase::StableZeroInfimum;
  }
  if (eq2 && a22 > a11) {
    return m.s12 > std::pow(2.0, -1.0 / a22) * m.s22 ? RegimeCase::StableCrossMatchesSecond
                                                     : RegimeCase::StableZeroInfimum;
  }
  if (a12 > std::max(a11, a22)) return RegimeCase::StableCrossSmoothest;
  return RegimeCase::StableZeroInfimum;
}

inline RegimeCase classify_cauchy(const CauchyBivariate& m, Dimension dim) {
  const double n = dim.criterion();
  const double amean = 0.5 * (m.alpha11 + m.alpha22);
  if (m.alpha12 < amean && !detail::near(m.alpha12, amean)) return RegimeCase::CrossSmoothnessBelowMean;
  const double bmean = 0.5 * (m.beta11 + m.beta22);
  const bool beta_below = m.beta12 < bmean && !detail::near(m.beta12, bmean);
  if (beta_below && m.beta11 < n && m.beta22 < n && m.beta12 < n) return RegimeCase::CauchyLongRangeBelowDimension;
  auto mixed = [&](double bii, double bjj) { return 2.0 * m.beta12 < bii + n && bii < n && bjj > n; };
  if (mixed(m.beta11, m.beta22) || mixed(m.beta22, m.beta11)) return RegimeCase::CauchyMixedLongRange;
  if (beta_below) return RegimeCase::CauchyLongRangeBelowMean;
  return RegimeCase::CauchyPositiveInfimum;
}

namespace detail {

inline void finish_report(ValidityReport& rep, const CombinedInfimum& ci) {
  rep.location = ci.location;
  if (ci.log_value == -std::numeric_limits<double>::infinity()) {
    rep.infimum = rep.rho_bound_raw = rep.rho_bound = 0.0;
    rep.decidability = Decidability::ZeroInfimumInconclusive;
  } else {
    fill_bound(rep, ci.log_value);
    rep.decidability = Decidability::SufficientBound;
  }
  const bool engine_positive = rep.decidability == Decidability::SufficientBound;
  if (engine_positive != theorem_positive(rep.regime)) {
    rep.note = engine_positive ? "endpoint limits give a positive infimum outside the listed cases"
                               : "listed case predicts a positive infimum, but the integrand vanishes at "
                                 "an endpoint (a marginal smoothness equals 1)";
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------------------
// Maximum attainable |rho|

inline ValidityReport max_rho_stable(const StableBivariate& m, Dimension dim, const InfimumOptions& opt = {}) {
  m.validate();
  const int n = dim.criterion();
  ValidityReport rep;
  rep.regime = classify_stable(m);
  if (dim.promoted()) rep.note = "n = 2 answered with the R^3 criterion";
  if (rep.regime == RegimeCase::CrossSmoothnessBelowMean) {
    rep.decidability = Decidability::NecessarilyZero;
    rep.location = {InfimumLocation::Where::AtInfinity, std::numeric_limits<double>::infinity()};
    return rep;
  }
  const auto at_zero = detail::limit_at_zero(detail::stable_log_prefactor(m), m.alpha11, m.alpha22, m.alpha12, m.s11,
                                             m.s22, m.s12, detail::leading_at_zero(m.alpha11, 1.0, n),
                                             detail::leading_at_zero(m.alpha22, 1.0, n),
                                             detail::leading_at_zero(m.alpha12, 1.0, n));
  const auto at_inf = detail::stable_limit_at_infinity(m, n);
  const auto ci = detail::combine_infimum([&](double r) { return detail::stable_log_integrand(m, n, r); }, at_zero,
                                          at_inf, opt);
  const std::string promoted = rep.note;
  detail::finish_report(rep, ci);
  if (!promoted.empty()) rep.note = rep.note.empty() ? promoted : promoted + "; " + rep.note;
  return rep;
}

inline ValidityReport max_rho_cauchy(const CauchyBivariate& m, Dimension dim, const InfimumOptions& opt = {}) {
  m.validate();
  const int n = dim.criterion();
  ValidityReport rep;
  rep.regime = classify_cauchy(m, dim);
  if (dim.promoted()) rep.note = "n = 2 answered with the R^3 criterion";
  switch (rep.regime) {
    case RegimeCase::CrossSmoothnessBelowMean:
    case RegimeCase::CauchyLongRangeBelowDimension:
    case RegimeCase::CauchyMixedLongRange:
      rep.decidability = Decidability::NecessarilyZero;
      rep.location = rep.regime == RegimeCase::CrossSmoothnessBelowMean
                         ? InfimumLocation{InfimumLocation::Where::AtZero, 0.0}
                         : InfimumLocation{InfimumLocation::Where::AtInfinity, std::numeric_limits<double>::infinity()};
      return rep;
    default:
      break;
  }
  const auto at_zero = detail::limit_at_zero(
      detail::cauchy_log_prefactor(m), m.alpha11, m.alpha22, m.alpha12, m.s11, m.s22, m.s12,
      detail::leading_at_zero(m.alpha11, m.beta11 + 1.0, n), detail::leading_at_zero(m.alpha22, m.beta22 + 1.0, n),
      detail::leading_at_zero(m.alpha12, m.beta12 + 1.0, n));
  const auto at_inf = detail::cauchy_limit_at_infinity(m, n);
  const auto ci = detail::combine_infimum([&](double r) { return detail::cauchy_log_integrand(m, n, r); }, at_zero,
                                          at_inf, opt);
  const std::string promoted = rep.note;
  detail::finish_report(rep, ci);
  if (!promoted.empty()) rep.note = rep.note.empty() ? promoted : promoted + "; " + rep.note;
  return rep;
}

// ---------------------------------------------------------------------------------------
// Generic derivative criterion

struct GenericCheckOptions {
  InfimumOptions infimum{};
  /// Relative tolerance for "D_ii >= 0" on the probe grid.
  double sign_tol = 1e-10;
  /// Edge values within this (log) distance of their inner neighbour count as a reached limit.
  double flat_log_tol = 1e-9;
};

namespace detail {

// D(r) = psi'' (n = 1) or psi'' - r psi''' (n = 3), together with a magnitude for sign tests.
inline std::pair<double, double> criterion_derivative(const CorrelationFamily& f, int n, double r) {
  const double d2 = deriv(f, r, 2);
  if (n == 1) return {d2, std::abs(d2)};
  const double d3 = deriv(f, r, 3);
  return {d2 - r * d3, std::abs(d2) + std::abs(r * d3)};
}

}  // namespace detail

/// rho bound from the infimum of D11 D22 / D12^2 for arbitrary members with closed-form or
/// numerical derivatives. Throws NotApplicable when the marginal sign condition or the decay
/// condition fails on the probe grid; integrability of r D is a documented precondition.
inline ValidityReport generic_sufficient_check(const BivariateModel& model, Dimension dim,
                                               const GenericCheckOptions& opt = {}) {
  const int n = dim.criterion();
  for (int k = 0; k < 3; ++k) {
    const auto& f = k == 0 ? model.psi11() : (k == 1 ? model.psi12() : model.psi22());
    if (f.kind() == FamilyKind::Spherical) {
      throw NotApplicable("spherical members are not differentiable at the support boundary");
    }
  }

  const int m = std::max(opt.infimum.grid_points, 3);
  const double x0 = std::log(opt.infimum.r_min), x1 = std::log(opt.infimum.r_max);
  for (const auto* f : {&model.psi11(), &model.psi22()}) {
    for (int i = 0; i < m; ++i) {
      const double r = std::exp(x0 + (x1 - x0) * i / (m - 1));
      const auto [d, mag] = detail::criterion_derivative(*f, n, r);
      if (d < -opt.sign_tol * mag) {
        throw NotApplicable("marginal " + f->describe() + " violates the sign condition at r = " + std::to_string(r));
      }
    }
  }
  for (const auto* f : {&model.psi11(), &model.psi22(), &model.psi12()}) {
    const double far = opt.infimum.r_max;
    const double psi_far = std::abs(eval(*f, far)), psi_near = std::abs(eval(*f, far / 10.0));
    const double dpsi_far = std::abs(far * deriv(*f, far, 1));
    const double dpsi_near = std::abs(far / 10.0 * deriv(*f, far / 10.0, 1));
    if (psi_far > psi_near || dpsi_far > dpsi_near) {
      throw NotApplicable(f->describe() + " does not decay on the probe grid");
    }
  }

  auto log_ratio = [&](double r) {
    const double d11 = detail::criterion_derivative(model.psi11(), n, r).first;
    const double d22 = detail::criterion_derivative(model.psi22(), n, r).first;
    const double d12 = detail::criterion_derivative(model.psi12(), n, r).first;
    for (double d : {d11, d22, d12}) {
      if (std::fpclassify(d) != FP_NORMAL) return std::numeric_limits<double>::infinity();
    }
    return std::log(d11) + std::log(d22) - 2.0 * std::log(std::abs(d12));
  };

  ValidityReport rep;
  rep.regime = RegimeCase::GenericDerivative;
  if (dim.promoted()) rep.note = "n = 2 answered with the R^3 criterion";
  // An edge still descending outwards means the limit is unknown (possibly zero). A minimum
  // on such an edge may also be an interior one beyond the grid, so the range is widened a
  // few times first.
  InfimumOptions range = opt.infimum;
  GridInfimum g = grid_infimum(log_ratio, range);
  if (!std::isfinite(g.low_edge_log)) throw NotApplicable("derivative ratio not computable on the probe grid");
  bool low_descends = false, high_descends = false;
  for (int widen = 0;; ++widen) {
    low_descends = g.low_edge_log < g.low_next_log - opt.flat_log_tol;
    high_descends = g.high_edge_log < g.high_prev_log - opt.flat_log_tol;
    const bool low = g.at_low_edge && low_descends, high = g.at_high_edge && high_descends;
    if (widen == 4 || (!low && !high)) break;
    if (low) range.r_min *= 1e-6;
    if (high) range.r_max *= 1e6;
    range.grid_points += range.grid_points / 2;
    g = grid_infimum(log_ratio, range);
  }
  double best = g.log_value;
  InfimumLocation loc{InfimumLocation::Where::Interior, g.r};
  if (g.low_edge_log < best) {
    best = g.low_edge_log;
    loc = {InfimumLocation::Where::AtZero, g.low_edge_r};
  }
  if (g.high_edge_log < best) {
    best = g.high_edge_log;
    loc = {InfimumLocation::Where::AtInfinity, g.high_edge_r};
  }
  rep.location = loc;
  if ((loc.where == InfimumLocation::Where::AtZero && low_descends) ||
      (loc.where == InfimumLocation::Where::AtInfinity && high_descends)) {
    rep.decidability = Decidability::ZeroInfimumInconclusive;
    rep.note += std::string(rep.note.empty() ? "" : "; ") +
                "ratio still decreasing at the edge of the probe range; infimum not determined";
    return rep;
  }
  detail::fill_bound(rep, best);
  rep.decidability = Decidability::SufficientBound;
  return rep;
}

// ---------------------------------------------------------------------------------------
// Bivariate spherical model

struct SphericalVerdict {
  bool valid = true;
  /// Frequency where f11 f22 - rho^2 f12^2 < 0.
  std::optional<double> witness_frequency;
  /// Index k of the tan root generating the witness u = 2 s u_k.
  int root_index = 0;
  /// Determinant at the witness.
  double determinant = 0.0;
};

/// Valid iff rho = 0 or s11 = s12 = s22; otherwise a witness frequency is located among the
/// zeros 2 s_ii u_k of the marginal densities where the cross density does not vanish.
inline SphericalVerdict spherical_triviality(const SphericalBivariate& m, int max_roots = 200) {
  m.validate();
  if (!(std::abs(m.rho) <= 1.0)) throw ParameterError("|rho| must not exceed 1");
  SphericalVerdict out;
  if (m.rho == 0.0 || (detail::near(m.s11, m.s12) && detail::near(m.s12, m.s22))) return out;

  const auto roots = tan_roots(max_roots);
  const double rho2 = m.rho * m.rho;
  auto det_at = [&](double u) {
    const double f11 = spherical_density_closed_form(m.s11, u);
    const double f22 = spherical_density_closed_form(m.s22, u);
    const double f12 = spherical_density_closed_form(m.s12, u);
    return std::pair{f11 * f22 - rho2 * f12 * f12, f11 * f22 + rho2 * f12 * f12};
  };
  // Zeros of whichever marginal differs from the cross scale; f11 first.
  std::vector<double> marginal_scales;
  if (!detail::near(m.s11, m.s12)) marginal_scales.push_back(m.s11);
  if (!detail::near(m.s22, m.s12)) marginal_scales.push_back(m.s22);
  for (double s : marginal_scales) {
    for (int k = 1; k <= roots.size(); ++k) {
      const double u = 2.0 * s * roots(k);
      const auto [det, scale] = det_at(u);
      if (det < -1e-8 * scale) {
        out.valid = false;
        out.witness_frequency = u;
        out.root_index = k;
        out.determinant = det;
        return out;
      }
    }
  }
  // Not reached for distinct scales; the verdict stands without a located witness.
  out.valid = false;
  return out;
}

// ---------------------------------------------------------------------------------------
// Full bivariate Matern

/// Largest |rho| for which the full bivariate Matern model is valid in R^d. The Matern
/// density in R^d is
///
///   f(u) = Gamma(nu + d/2) / (Gamma(nu) pi^(d/2)) s^(2 nu) / (s^2 + u^2)^(nu + d/2),
///
/// and the model is valid iff f11 f22 >= rho^2 f12^2 for every u, so the bound is the
/// square root of the infimum of that ratio over t = u^2 in [0, inf), capped at 1.
inline double max_rho_matern(const MaternBivariate& m, Dimension dim, const InfimumOptions& opt = {}) {
  for (double v : {m.nu1, m.nu2, m.nu12, m.s11, m.s22, m.s12}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError("matern bound: nu and s must be positive");
  }
  const double h = 0.5 * dim.value();
  const double log_pre = std::lgamma(m.nu1 + h) + std::lgamma(m.nu2 + h) + 2.0 * std::lgamma(m.nu12) -
                         std::lgamma(m.nu1) - std::lgamma(m.nu2) - 2.0 * std::lgamma(m.nu12 + h) +
                         2.0 * m.nu1 * std::log(m.s11) + 2.0 * m.nu2 * std::log(m.s22) -
                         4.0 * m.nu12 * std::log(m.s12);
  auto log_ratio = [&](double t) {
    return log_pre - (m.nu1 + h) * std::log(m.s11 * m.s11 + t) - (m.nu2 + h) * std::log(m.s22 * m.s22 + t) +
           (2.0 * m.nu12 + 2.0 * h) * std::log(m.s12 * m.s12 + t);
  };
  // Power of t in the ratio as t -> inf.
  const double tail = 2.0 * m.nu12 - m.nu1 - m.nu2;
  if (tail < 0.0 && !detail::near(2.0 * m.nu12, m.nu1 + m.nu2)) return 0.0;
  double lowest = log_ratio(0.0);
  if (detail::near(2.0 * m.nu12, m.nu1 + m.nu2)) lowest = std::min(lowest, log_pre);
  const double smin = std::min({m.s11, m.s22, m.s12}), smax = std::max({m.s11, m.s22, m.s12});
  InfimumOptions range = opt;
  range.r_min = opt.r_min * smin * smin;
  range.r_max = opt.r_max * smax * smax;
  const auto g = grid_infimum(log_ratio, range);
  lowest = std::min({lowest, g.log_value, g.low_edge_log, g.high_edge_log});
  return std::min(1.0, std::exp(0.5 * lowest));
}

}  // namespace bivcov
