#pragma once

// Maximum likelihood for the bivariate models on a FieldSample.
//
// The exact Gaussian negative log-likelihood
//
//   NLL = 1/2 [ log|K| + (z - X mu)' K^-1 (z - X mu) + N log(2 pi) ]
//
// is minimized by Nelder-Mead in an unconstrained coordinate z per parameter, mapped into its
// box by a logistic (log-scale for scales, standard deviations and nuggets). The constant
// means mu are profiled out by generalized least squares. The colocated correlation is
// rho = b tanh(z/2) with b the (capped) bound of the current marginal/cross parameters in the
// dimension of the data: the sufficient bound for the stable and Cauchy kinds, the exact
// spectral bound for Matern. Every iterate is a valid model; without the Matern bound the
// likelihood runs off to nearly singular invalid models.
//
// Each fit first optimizes the separable member of the kind (shared shape and scale, 4-6
// coordinates). Its optimum is the first start of the full fit; further starts are the box
// centre and a Latin hypercube.

#include <Eigen/Dense>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "bivcov/bimodels.hpp"
#include "bivcov/errors.hpp"
#include "bivcov/field/gram.hpp"
#include "bivcov/field/nelder_mead.hpp"
#include "bivcov/field/random.hpp"
#include "bivcov/field/sample.hpp"
#include "bivcov/model_io.hpp"
#include "bivcov/validity.hpp"

namespace bivcov {

struct FitOptions {
  int starts = 8;
  /// Estimate one nugget per component; otherwise `fixed_nugget` is used as given.
  bool free_nugget = false;
  std::array<double, 2> fixed_nugget{0.0, 0.0};
  std::uint64_t seed = 1;
  /// Always added to the diagonal, relative to the component's sample variance.
  double nugget_floor_rel = 1e-8;
  /// Log-spaced nodes for the tabulated Matern correlations.
  int matern_nodes = 512;
  /// Per-start simplex settings (max_evaluations bounds the objective calls of each start).
  NelderMeadOptions simplex{};
  std::function<void(const std::string&)> log;
};

struct FitResult {
  /// Fitted kind and parameters, including nugget1/2 and the GLS means mean1/2.
  ModelSpec model;
  double nll = std::numeric_limits<double>::infinity();
  double aic = std::numeric_limits<double>::infinity();
  int parameters = 0;
  bool converged = false;
  int evaluations = 0;
  int best_start = -1;
  /// Leave-one-out prediction RMSE per component, and their mean after division by the
  /// component's sample standard deviation.
  std::array<double, 2> loo_rmse{0.0, 0.0};
  double loo_score = 0.0;
};

namespace detail {

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }
inline double in_box(double z, double lo, double hi) { return lo + (hi - lo) * logistic(z); }
inline double in_log_box(double z, double lo, double hi) {
  return std::exp(in_box(z, std::log(lo), std::log(hi)));
}

// Shared data for repeated likelihood evaluations.
struct LikelihoodData {
  Eigen::Index n = 0;
  std::vector<int> comp;
  std::vector<double> dist;  // lower triangle including the diagonal, row-major
  Eigen::VectorXd z;
  Eigen::MatrixXd x;  // component indicators
  std::array<double, 2> var{0.0, 0.0}, sd{0.0, 0.0};
  double d_min = 0.0, d_max = 0.0;
  int space_dim = 2;

  explicit LikelihoodData(const FieldSample& s) {
    n = static_cast<Eigen::Index>(s.size());
    space_dim = s.points.dim;
    comp = s.component;
    z = Eigen::Map<const Eigen::VectorXd>(s.value.data(), n);
    x = Eigen::MatrixXd::Zero(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) x(i, comp[i]) = 1.0;
    dist.reserve(static_cast<std::size_t>(n * (n + 1) / 2));
    d_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b <= a; ++b) {
        const double d = s.points.distance(a, b);
        dist.push_back(d);
        if (d > 0.0) d_min = std::min(d_min, d);
        d_max = std::max(d_max, d);
      }
    }
    for (int c = 0; c < 2; ++c) {
      double sum = 0.0, sum2 = 0.0, cnt = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (comp[i] != c) continue;
        sum += z(i);
        cnt += 1.0;
      }
      const double mean = sum / cnt;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (comp[i] == c) sum2 += (z(i) - mean) * (z(i) - mean);
      }
      var[c] = sum2 / (cnt - 1.0);
      sd[c] = std::sqrt(var[c]);
    }
  }

  template <class Cov>
  Eigen::MatrixXd covariance(const Cov& cov, const std::array<double, 2>& nugget) const {
    Eigen::MatrixXd k(n, n);
    std::size_t idx = 0;
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b <= a; ++b) {
        const double v = cov.cov(comp[a], comp[b], dist[idx++]);
        k(a, b) = v;
        k(b, a) = v;
      }
      k(a, a) += nugget[comp[a]];
    }
    return k;
  }

  struct Evaluation {
    double nll = std::numeric_limits<double>::infinity();
    std::array<double, 2> mean{0.0, 0.0};
  };

  Evaluation evaluate(const Eigen::MatrixXd& k) const {
    Evaluation out;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) return out;
    const Eigen::MatrixXd l = llt.matrixL();
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = l(i, i);
      if (!(d > 0.0)) return out;
      logdet += 2.0 * std::log(d);
    }
    const Eigen::MatrixXd kx = llt.solve(x);
    const Eigen::VectorXd kz = llt.solve(z);
    const Eigen::Matrix2d xkx = x.transpose() * kx;
    const Eigen::Vector2d mu = xkx.ldlt().solve(x.transpose() * kz);
    const Eigen::VectorXd r = z - x * mu;
    const double quad = r.dot(llt.solve(r));
    if (!std::isfinite(quad) || !std::isfinite(logdet)) return out;
    out.nll = 0.5 * (logdet + quad + static_cast<double>(n) * std::log(2.0 * std::numbers::pi));
    out.mean = {mu(0), mu(1)};
    return out;
  }
};

// Cubic spline in log r through a Matern correlation, exact 1 at r = 0. Used only inside the
// likelihood loop, where Bessel evaluations would dominate.
class TabulatedCorrelation {
 public:
  TabulatedCorrelation(const CorrelationFamily& f, double r_lo, double r_hi, int nodes)
      : family_(f), x0_(std::log(r_lo)), x1_(std::log(r_hi)) {
    if (!(x1_ > x0_)) x1_ = x0_ + 1.0;
    std::vector<double> y(static_cast<std::size_t>(nodes));
    h_ = (x1_ - x0_) / (nodes - 1);
    for (int i = 0; i < nodes; ++i) y[static_cast<std::size_t>(i)] = eval(f, std::exp(x0_ + h_ * i));
    spline_ = boost::math::interpolators::cardinal_cubic_b_spline<double>(y.begin(), y.end(), x0_, h_);
  }

  double operator()(double r) const {
    if (r == 0.0) return 1.0;
    const double x = std::log(r);
    if (x < x0_ || x > x1_) return eval(family_, r);
    return spline_(x);
  }

 private:
  CorrelationFamily family_;
  double x0_, x1_, h_ = 1.0;
  boost::math::interpolators::cardinal_cubic_b_spline<double> spline_;
};

struct TabulatedMatern {
  double sigma1, sigma2, rho;
  std::array<TabulatedCorrelation, 3> psi;  // 11, 12, 22

  double cov(int i, int j, double r) const {
    const double v = psi[static_cast<std::size_t>(i + j)](r);
    if (i != j) return rho * sigma1 * sigma2 * v;
    const double s = i == 0 ? sigma1 : sigma2;
    return s * s * v;
  }
};

// Box limits derived from the data.
struct Boxes {
  double s_lo, s_hi;
  std::array<double, 2> sigma_lo, sigma_hi, nugget_lo, nugget_hi;
};

inline Boxes make_boxes(const LikelihoodData& d) {
  Boxes b{};
  b.s_lo = 0.05 / d.d_max;
  b.s_hi = 50.0 / d.d_max;
  for (int c = 0; c < 2; ++c) {
    b.sigma_lo[c] = 0.05 * d.sd[c];
    b.sigma_hi[c] = 20.0 * d.sd[c];
    b.nugget_lo[c] = 1e-6 * d.var[c];
    b.nugget_hi[c] = 2.0 * d.var[c];
  }
  return b;
}

inline constexpr double kAlphaLo = 0.05;
inline constexpr double kBetaLo = 0.05, kBetaHi = 20.0;
inline constexpr double kNuLo = 0.05, kNuHi = 3.0;

// Maps an unconstrained vector to a model; `ok` false when the point cannot be evaluated.
struct Decoded {
  ModelSpec spec;
  std::array<double, 2> nugget{0.0, 0.0};
};

class Parameterization {
 public:
  Parameterization(ModelKind kind, const LikelihoodData& data, const FitOptions& opt)
      : kind_(kind), data_(data), opt_(opt), box_(make_boxes(data)) {
    switch (kind) {
      case ModelKind::Stable: core_ = 9; break;
      case ModelKind::Cauchy: core_ = 12; break;
      case ModelKind::Matern: core_ = 9; break;
      case ModelKind::Lmc: core_ = 8; break;
      default: throw ParameterError(std::string("cannot fit kind ") + to_string(kind));
    }
  }

  int dimension() const { return core_ + (opt_.free_nugget ? 2 : 0); }

  Decoded decode(const Eigen::VectorXd& z) const {
    Decoded out;
    out.spec.kind = kind_;
    auto& v = out.spec.values;
    int i = 0;
    auto next = [&] { return z(i++); };
    auto sigma = [&](int c) { return in_log_box(next(), box_.sigma_lo[c], box_.sigma_hi[c]); };
    auto scale = [&] { return in_log_box(next(), box_.s_lo, box_.s_hi); };
    switch (kind_) {
      case ModelKind::Stable: {
        StableBivariate m;
        m.sigma1 = sigma(0);
        m.sigma2 = sigma(1);
        m.alpha11 = in_box(next(), kAlphaLo, 1.0);
        m.alpha22 = in_box(next(), kAlphaLo, 1.0);
        m.alpha12 = in_box(next(), kAlphaLo, 2.0);
        m.s11 = scale();
        m.s22 = scale();
        m.s12 = scale();
        const auto rep = max_rho_stable(m, Dimension(data_.space_dim));
        m.rho = bound(rep) * std::tanh(0.5 * next());
        out.spec = to_spec(m);
        break;
      }
      case ModelKind::Cauchy: {
        CauchyBivariate m;
        m.sigma1 = sigma(0);
        m.sigma2 = sigma(1);
        m.alpha11 = in_box(next(), kAlphaLo, 1.0);
        m.alpha22 = in_box(next(), kAlphaLo, 1.0);
        m.alpha12 = in_box(next(), kAlphaLo, 2.0);
        m.beta11 = in_log_box(next(), kBetaLo, kBetaHi);
        m.beta22 = in_log_box(next(), kBetaLo, kBetaHi);
        m.beta12 = in_log_box(next(), kBetaLo, kBetaHi);
        m.s11 = scale();
        m.s22 = scale();
        m.s12 = scale();
        const auto rep = max_rho_cauchy(m, Dimension(data_.space_dim));
        m.rho = bound(rep) * std::tanh(0.5 * next());
        out.spec = to_spec(m);
        break;
      }
      case ModelKind::Matern: {
        MaternBivariate m;
        m.sigma1 = sigma(0);
        m.sigma2 = sigma(1);
        m.nu1 = in_log_box(next(), kNuLo, kNuHi);
        m.nu2 = in_log_box(next(), kNuLo, kNuHi);
        m.nu12 = in_log_box(next(), kNuLo, kNuHi);
        m.s11 = scale();
        m.s22 = scale();
        m.s12 = scale();
        m.rho = max_rho_matern(m, Dimension(data_.space_dim)) * std::tanh(0.5 * next());
        out.spec = to_spec(m);
        break;
      }
      case ModelKind::Lmc: {
        // B_k = L_k L_k' with L_k = [[a, 0], [b, c]].
        std::array<Matrix2, 2> bs;
        for (auto& bk : bs) {
          const double a = in_log_box(next(), 1e-3 * data_.sd[0], box_.sigma_hi[0]);
          const double b = box_.sigma_hi[1] * std::tanh(0.5 * next());
          const double c = in_log_box(next(), 1e-3 * data_.sd[1], box_.sigma_hi[1]);
          bk << a * a, a * b, a * b, b * b + c * c;
        }
        const double s1 = scale(), s2 = scale();
        out.spec = to_spec(LmcBivariate(bs[0], CorrelationFamily::stable(1.0, s1), bs[1],
                                        CorrelationFamily::stable(1.0, s2)));
        break;
      }
      default:
        break;
    }
    if (opt_.free_nugget) {
      out.nugget[0] = in_log_box(next(), box_.nugget_lo[0], box_.nugget_hi[0]);
      out.nugget[1] = in_log_box(next(), box_.nugget_lo[1], box_.nugget_hi[1]);
      v["nugget1"] = out.nugget[0];
      v["nugget2"] = out.nugget[1];
    } else {
      out.nugget = opt_.fixed_nugget;
      if (out.nugget[0] != 0.0 || out.nugget[1] != 0.0) {
        v["nugget1"] = out.nugget[0];
        v["nugget2"] = out.nugget[1];
      }
    }
    return out;
  }

  Eigen::MatrixXd covariance(const Decoded& d) const {
    std::array<double, 2> nug = d.nugget;
    for (int c = 0; c < 2; ++c) nug[c] += opt_.nugget_floor_rel * data_.var[c];
    if (kind_ == ModelKind::Matern) {
      const auto m = d.spec.matern();
      const double lo = data_.d_min * 0.5, hi = data_.d_max * 1.01;
      TabulatedMatern tab{m.sigma1, m.sigma2, m.rho,
                          {TabulatedCorrelation(CorrelationFamily::matern(m.nu1, m.s11), lo, hi, opt_.matern_nodes),
                           TabulatedCorrelation(CorrelationFamily::matern(m.nu12, m.s12), lo, hi, opt_.matern_nodes),
                           TabulatedCorrelation(CorrelationFamily::matern(m.nu2, m.s22), lo, hi, opt_.matern_nodes)}};
      return data_.covariance(tab, nug);
    }
    return data_.covariance(d.spec.covariance(), nug);
  }

 private:
  static double bound(const ValidityReport& rep) {
    return rep.decidability == Decidability::SufficientBound ? rep.rho_bound : 0.0;
  }

  ModelKind kind_;
  const LikelihoodData& data_;
  const FitOptions& opt_;
  Boxes box_;
  int core_ = 0;
};

// Inverse of in_box / in_log_box, clamped away from the saturated ends.
inline double from_box(double x, double lo, double hi) {
  const double u = std::clamp((x - lo) / (hi - lo), 1e-3, 1.0 - 1e-3);
  return std::log(u / (1.0 - u));
}
inline double from_log_box(double x, double lo, double hi) {
  return from_box(std::log(x), std::log(lo), std::log(hi));
}

// Separable member of a kind: one shared correlation for the marginals and the cross term.
// Fitted first in a few coordinates; its optimum is a point of the full parameter space
// (where the rho bound is 1) and serves as a start for the full fit.
class SeparableStage {
 public:
  struct Point {
    double sigma1, sigma2, rho, shape, beta, scale;
  };

  SeparableStage(ModelKind kind, const LikelihoodData& data, const FitOptions& opt)
      : kind_(kind), data_(data), opt_(opt), box_(make_boxes(data)) {}

  int dimension() const { return kind_ == ModelKind::Cauchy ? 6 : (kind_ == ModelKind::Lmc ? 4 : 5); }

  Point decode(const Eigen::VectorXd& z) const {
    Point p{};
    int i = 0;
    p.sigma1 = in_log_box(z(i++), box_.sigma_lo[0], box_.sigma_hi[0]);
    p.sigma2 = in_log_box(z(i++), box_.sigma_lo[1], box_.sigma_hi[1]);
    p.rho = std::tanh(0.5 * z(i++));
    p.scale = in_log_box(z(i++), box_.s_lo, box_.s_hi);
    p.shape = 1.0;
    p.beta = 1.0;
    if (kind_ == ModelKind::Stable || kind_ == ModelKind::Cauchy) p.shape = in_box(z(i++), kAlphaLo, 1.0);
    if (kind_ == ModelKind::Matern) p.shape = in_log_box(z(i++), kNuLo, kNuHi);
    if (kind_ == ModelKind::Cauchy) p.beta = in_log_box(z(i++), kBetaLo, kBetaHi);
    return p;
  }

  CorrelationFamily family(const Point& p) const {
    switch (kind_) {
      case ModelKind::Cauchy: return CorrelationFamily::cauchy(p.shape, p.beta, p.scale);
      case ModelKind::Matern: return CorrelationFamily::matern(p.shape, p.scale);
      default: return CorrelationFamily::stable(p.shape, p.scale);
    }
  }

  double nll(const Eigen::VectorXd& z) const {
    const Point p = decode(z);
    std::array<double, 2> nug = opt_.fixed_nugget;
    if (opt_.free_nugget) nug = {box_.nugget_lo[0], box_.nugget_lo[1]};
    for (int c = 0; c < 2; ++c) nug[c] += opt_.nugget_floor_rel * data_.var[c];
    if (kind_ == ModelKind::Matern) {
      const double lo = data_.d_min * 0.5, hi = data_.d_max * 1.01;
      const TabulatedCorrelation t(family(p), lo, hi, opt_.matern_nodes);
      const TabulatedMatern tab{p.sigma1, p.sigma2, p.rho, {t, t, t}};
      return data_.evaluate(data_.covariance(tab, nug)).nll;
    }
    const auto f = family(p);
    return data_.evaluate(data_.covariance(BivariateModel(p.sigma1, p.sigma2, p.rho, f, f, f), nug)).nll;
  }

  // Coordinates of p in the full parameterization (the layout of Parameterization::decode).
  Eigen::VectorXd full_coordinates(const Point& p, int full_dim) const {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(full_dim);
    int i = 0;
    const double rho = std::clamp(p.rho, -0.95, 0.95);
    auto put_sigmas = [&] {
      z(i++) = from_log_box(p.sigma1, box_.sigma_lo[0], box_.sigma_hi[0]);
      z(i++) = from_log_box(p.sigma2, box_.sigma_lo[1], box_.sigma_hi[1]);
    };
    auto put_scales = [&](int count) {
      for (int k = 0; k < count; ++k) z(i++) = from_log_box(p.scale, box_.s_lo, box_.s_hi);
    };
    switch (kind_) {
      case ModelKind::Stable:
      case ModelKind::Cauchy:
        put_sigmas();
        for (int k = 0; k < 3; ++k) z(i++) = from_box(p.shape, kAlphaLo, k == 2 ? 2.0 : 1.0);
        if (kind_ == ModelKind::Cauchy) {
          for (int k = 0; k < 3; ++k) z(i++) = from_log_box(p.beta, kBetaLo, kBetaHi);
        }
        put_scales(3);
        z(i++) = 2.0 * std::atanh(rho);  // the bound is 1 at the separable point
        break;
      case ModelKind::Matern:
        put_sigmas();
        for (int k = 0; k < 3; ++k) z(i++) = from_log_box(p.shape, kNuLo, kNuHi);
        put_scales(3);
        z(i++) = 2.0 * std::atanh(rho);
        break;
      case ModelKind::Lmc: {
        // Split Sigma = 0.7 Sigma + 0.3 Sigma over two identical exponential terms.
        for (double w : {0.7, 0.3}) {
          const double a = std::sqrt(w) * p.sigma1, b = std::sqrt(w) * rho * p.sigma2;
          const double c = std::sqrt(w * (1.0 - rho * rho)) * p.sigma2;
          z(i++) = from_log_box(a, 1e-3 * data_.sd[0], box_.sigma_hi[0]);
          z(i++) = 2.0 * std::atanh(std::clamp(b / box_.sigma_hi[1], -0.999, 0.999));
          z(i++) = from_log_box(c, 1e-3 * data_.sd[1], box_.sigma_hi[1]);
        }
        put_scales(2);
        break;
      }
      default:
        break;
    }
    if (opt_.free_nugget) {
      z(i++) = from_log_box(box_.nugget_lo[0] * 10.0, box_.nugget_lo[0], box_.nugget_hi[0]);
      z(i++) = from_log_box(box_.nugget_lo[1] * 10.0, box_.nugget_lo[1], box_.nugget_hi[1]);
    }
    return z;
  }

 private:
  ModelKind kind_;
  const LikelihoodData& data_;
  const FitOptions& opt_;
  Boxes box_;
};

// Latin hypercube in (0.1, 0.9)^d mapped to the unconstrained coordinates, after the centre
// of every box.
inline std::vector<Eigen::VectorXd> start_points(int dim, int count, std::uint64_t seed) {
  std::vector<Eigen::VectorXd> out;
  out.push_back(Eigen::VectorXd::Zero(dim));
  const int m = count - 1;
  if (m <= 0) return out;
  const CounterRng rng(seed);
  std::uint64_t k = 0;
  std::vector<std::vector<int>> perm(static_cast<std::size_t>(dim));
  for (auto& p : perm) {
    p.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) p[static_cast<std::size_t>(i)] = i;
    for (int i = m - 1; i > 0; --i) {
      const auto j = static_cast<int>(rng.bits(k++) % static_cast<std::uint64_t>(i + 1));
      std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
    }
  }
  for (int s = 0; s < m; ++s) {
    Eigen::VectorXd z(dim);
    for (int j = 0; j < dim; ++j) {
      const double u = 0.1 + 0.8 * (perm[static_cast<std::size_t>(j)][static_cast<std::size_t>(s)] + rng.uniform(k++)) / m;
      z(j) = std::log(u / (1.0 - u));
    }
    out.push_back(z);
  }
  return out;
}

}  // namespace detail

/// Leave-one-out residuals of the simple-kriging predictor with covariance k and known means:
/// e_i = [K^-1 r]_i / [K^-1]_ii.
inline Eigen::VectorXd loo_residuals(const Eigen::MatrixXd& k, const Eigen::VectorXd& residual) {
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k, Eigen::EigenvaluesOnly);
    throw FactorizationError("leave-one-out: covariance not positive definite", es.eigenvalues().minCoeff());
  }
  const Eigen::MatrixXd kinv = llt.solve(Eigen::MatrixXd::Identity(k.rows(), k.cols()));
  return (kinv * residual).cwiseQuotient(kinv.diagonal());
}

inline FitResult fit_ml(const FieldSample& data, ModelKind kind, const FitOptions& opt = {}) {
  data.validate(true);
  for (int c = 0; c < 2; ++c) {
    if (data.count(c) < 10) {
      throw DegenerateInput("component " + std::to_string(c + 1) + " has fewer than 10 observations");
    }
  }
  const detail::LikelihoodData ld(data);
  for (int c = 0; c < 2; ++c) {
    if (!(ld.var[c] > 0.0) || !std::isfinite(ld.var[c])) {
      throw DegenerateInput("component " + std::to_string(c + 1) + " has zero sample variance");
    }
  }
  if (!(ld.d_max > 0.0)) throw DegenerateInput("all observations share one location");

  const detail::Parameterization param(kind, ld, opt);
  const int dim = param.dimension();
  auto objective = [&](const Eigen::VectorXd& z) {
    try {
      const auto d = param.decode(z);
      return ld.evaluate(param.covariance(d)).nll;
    } catch (const std::exception&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  FitResult best;
  Eigen::VectorXd best_z;
  // Start 0 is the separable optimum; the rest are the box centre and a Latin hypercube.
  std::vector<Eigen::VectorXd> starts;
  {
    const detail::SeparableStage sep(kind, ld, opt);
    auto sep_objective = [&](const Eigen::VectorXd& z) {
      try {
        return sep.nll(z);
      } catch (const std::exception&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    NelderMeadOptions sep_opt = opt.simplex;
    sep_opt.max_evaluations = std::max(opt.simplex.max_evaluations / 2, 200);
    const auto r0 = nelder_mead(sep_objective, Eigen::VectorXd::Zero(sep.dimension()), sep_opt);
    const auto r = nelder_mead(sep_objective, r0.x, sep_opt);
    best.evaluations += r0.evaluations + r.evaluations;
    if (opt.log) opt.log("separable stage: nll " + format_double(r.value));
    starts.push_back(sep.full_coordinates(sep.decode(r.x), dim));
  }
  if (opt.starts > 1) {
    auto more = detail::start_points(dim, opt.starts - 1, opt.seed);
    starts.insert(starts.end(), more.begin(), more.end());
  }
  for (std::size_t s = 0; s < starts.size(); ++s) {
    auto r = nelder_mead(objective, starts[s], opt.simplex);
    // One restart from the end point guards against a collapsed simplex.
    NelderMeadOptions again = opt.simplex;
    again.initial_step = 0.3;
    again.max_evaluations = std::max(opt.simplex.max_evaluations / 4, 200);
    auto r2 = nelder_mead(objective, r.x, again);
    const int evals = r.evaluations + r2.evaluations;
    if (r2.value <= r.value) r = r2;
    best.evaluations += evals;
    if (opt.log) {
      opt.log("start " + std::to_string(s) + ": nll " + format_double(r.value) + " after " + std::to_string(evals) +
              " evaluations" + (r2.converged ? "" : " (not converged)"));
    }
    if (r.value < best.nll) {
      best.nll = r.value;
      best.converged = r2.converged;
      best.best_start = static_cast<int>(s);
      best_z = r.x;
    }
  }
  if (!std::isfinite(best.nll)) throw DegenerateInput("likelihood could not be evaluated at any start");

  const auto decoded = param.decode(best_z);
  const Eigen::MatrixXd k = param.covariance(decoded);
  const auto ev = ld.evaluate(k);
  best.model = decoded.spec;
  best.model.values["mean1"] = ev.mean[0];
  best.model.values["mean2"] = ev.mean[1];
  best.parameters = dim + 2;
  best.aic = 2.0 * best.parameters + 2.0 * best.nll;

  Eigen::VectorXd resid = ld.z;
  for (Eigen::Index i = 0; i < ld.n; ++i) resid(i) -= ev.mean[static_cast<std::size_t>(ld.comp[i])];
  const Eigen::VectorXd e = loo_residuals(k, resid);
  std::array<double, 2> sum{0.0, 0.0}, cnt{0.0, 0.0};
  for (Eigen::Index i = 0; i < ld.n; ++i) {
    sum[ld.comp[i]] += e(i) * e(i);
    cnt[ld.comp[i]] += 1.0;
  }
  for (int c = 0; c < 2; ++c) best.loo_rmse[c] = std::sqrt(sum[c] / cnt[c]);
  best.loo_score = 0.5 * (best.loo_rmse[0] / ld.sd[0] + best.loo_rmse[1] / ld.sd[1]);
  return best;
}

}  // namespace bivcov
