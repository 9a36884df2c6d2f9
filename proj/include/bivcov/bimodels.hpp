#pragma once

// Bivariate models of the form
//
//   C(r) = [ sigma1^2 psi11(r)            rho sigma1 sigma2 psi12(r) ]
//          [ rho sigma1 sigma2 psi12(r)   sigma2^2 psi22(r)          ]
//
// plus a two-structure linear model of coregionalization. Construction enforces only the
// parameter boxes; whether a given rho yields a valid covariance is decided in validity.hpp.

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "bivcov/corrfn.hpp"
#include "bivcov/errors.hpp"

namespace bivcov {

using Matrix2 = Eigen::Matrix2d;

class BivariateModel {
 public:
  BivariateModel(double sigma1, double sigma2, double rho, CorrelationFamily psi11,
                 CorrelationFamily psi22, CorrelationFamily psi12)
      : sigma1_(sigma1), sigma2_(sigma2), rho_(rho), psi_{psi11, psi12, psi22} {
    if (!(sigma1 > 0.0) || !(sigma2 > 0.0) || !std::isfinite(sigma1) || !std::isfinite(sigma2)) {
      throw ParameterError("marginal standard deviations must be > 0");
    }
    if (!(std::abs(rho) <= 1.0)) throw ParameterError("|rho| must not exceed 1");
  }

  double sigma1() const { return sigma1_; }
  double sigma2() const { return sigma2_; }
  double rho() const { return rho_; }
  const CorrelationFamily& psi11() const { return psi_[0]; }
  const CorrelationFamily& psi12() const { return psi_[1]; }
  const CorrelationFamily& psi22() const { return psi_[2]; }

  /// Family for entry (i, j), 0-based; psi12 serves both off-diagonal entries.
  const CorrelationFamily& psi(int i, int j) const { return psi_[i + j]; }

  BivariateModel with_rho(double rho) const {
    return BivariateModel(sigma1_, sigma2_, rho, psi_[0], psi_[2], psi_[1]);
  }

  /// Entry C_ij(r) with 0-based component indices.
  double cov(int i, int j, double r) const {
    const double value = eval(psi(i, j), r);
    if (i != j) return rho_ * sigma1_ * sigma2_ * value;
    const double s = i == 0 ? sigma1_ : sigma2_;
    return s * s * value;
  }

  Matrix2 variance_matrix() const {
    Matrix2 m;
    m << sigma1_ * sigma1_, rho_ * sigma1_ * sigma2_, rho_ * sigma1_ * sigma2_, sigma2_ * sigma2_;
    return m;
  }

 private:
  double sigma1_, sigma2_, rho_;
  std::array<CorrelationFamily, 3> psi_;  // 11, 12, 22
};

/// C(r) as a symmetric 2x2 matrix.
inline Matrix2 eval_matrix(const BivariateModel& model, double r) {
  const double c12 = model.cov(0, 1, r);
  Matrix2 m;
  m << model.cov(0, 0, r), c12, c12, model.cov(1, 1, r);
  return m;
}

// Parameter records of the concrete members. Marginal smoothness is capped at 1 and cross
// smoothness at 2 for the stable and Cauchy models.

struct StableBivariate {
  double sigma1 = 1.0, sigma2 = 1.0, rho = 0.0;
  double alpha11 = 1.0, alpha22 = 1.0, alpha12 = 1.0;
  double s11 = 1.0, s22 = 1.0, s12 = 1.0;

  void validate() const {
    if (!(alpha11 > 0.0 && alpha11 <= 1.0) || !(alpha22 > 0.0 && alpha22 <= 1.0)) {
      throw ParameterError("stable bivariate: alpha11, alpha22 must lie in (0, 1]");
    }
    if (!(alpha12 > 0.0 && alpha12 <= 2.0)) throw ParameterError("stable bivariate: alpha12 must lie in (0, 2]");
    if (!(s11 > 0.0 && s22 > 0.0 && s12 > 0.0)) throw ParameterError("stable bivariate: scales must be > 0");
  }

  BivariateModel model() const {
    validate();
    return BivariateModel(sigma1, sigma2, rho, CorrelationFamily::stable(alpha11, s11),
                          CorrelationFamily::stable(alpha22, s22), CorrelationFamily::stable(alpha12, s12));
  }
};

struct CauchyBivariate {
  double sigma1 = 1.0, sigma2 = 1.0, rho = 0.0;
  double alpha11 = 1.0, alpha22 = 1.0, alpha12 = 1.0;
  double beta11 = 1.0, beta22 = 1.0, beta12 = 1.0;
  double s11 = 1.0, s22 = 1.0, s12 = 1.0;

  void validate() const {
    if (!(alpha11 > 0.0 && alpha11 <= 1.0) || !(alpha22 > 0.0 && alpha22 <= 1.0)) {
      throw ParameterError("cauchy bivariate: alpha11, alpha22 must lie in (0, 1]");
    }
    if (!(alpha12 > 0.0 && alpha12 <= 2.0)) throw ParameterError("cauchy bivariate: alpha12 must lie in (0, 2]");
    if (!(beta11 > 0.0 && beta22 > 0.0 && beta12 > 0.0)) throw ParameterError("cauchy bivariate: betas must be > 0");
    if (!(s11 > 0.0 && s22 > 0.0 && s12 > 0.0)) throw ParameterError("cauchy bivariate: scales must be > 0");
  }

  BivariateModel model() const {
    validate();
    return BivariateModel(sigma1, sigma2, rho, CorrelationFamily::cauchy(alpha11, beta11, s11),
                          CorrelationFamily::cauchy(alpha22, beta22, s22),
                          CorrelationFamily::cauchy(alpha12, beta12, s12));
  }
};

struct SphericalBivariate {
  double sigma1 = 1.0, sigma2 = 1.0, rho = 0.0;
  double s11 = 1.0, s22 = 1.0, s12 = 1.0;

  void validate() const {
    if (!(s11 > 0.0 && s22 > 0.0 && s12 > 0.0)) throw ParameterError("spherical bivariate: scales must be > 0");
  }

  BivariateModel model() const {
    validate();
    return BivariateModel(sigma1, sigma2, rho, CorrelationFamily::spherical(s11),
                          CorrelationFamily::spherical(s22), CorrelationFamily::spherical(s12));
  }
};

/// Full bivariate Matern. Its own validity constraints on (nu, s, rho) are a caller
/// precondition and are not checked here.
struct MaternBivariate {
  double sigma1 = 1.0, sigma2 = 1.0, rho = 0.0;
  double nu1 = 0.5, nu2 = 0.5, nu12 = 0.5;
  double s11 = 1.0, s22 = 1.0, s12 = 1.0;

  BivariateModel model() const {
    return BivariateModel(sigma1, sigma2, rho, CorrelationFamily::matern(nu1, s11),
                          CorrelationFamily::matern(nu2, s22), CorrelationFamily::matern(nu12, s12));
  }
};

/// B1 psi1(r) + B2 psi2(r) with symmetric positive semidefinite B1, B2.
class LmcBivariate {
 public:
  LmcBivariate(Matrix2 b1, CorrelationFamily psi1, Matrix2 b2, CorrelationFamily psi2)
      : b_{b1, b2}, psi_{psi1, psi2} {
    for (const auto& b : b_) {
      if (std::abs(b(0, 1) - b(1, 0)) > 1e-12 * (1.0 + b.cwiseAbs().maxCoeff())) {
        throw ParameterError("coregionalization matrix is not symmetric");
      }
      Eigen::SelfAdjointEigenSolver<Matrix2> es(b, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -1e-12 * (1.0 + b.cwiseAbs().maxCoeff())) {
        throw ParameterError("coregionalization matrix is not positive semidefinite");
      }
    }
  }

  const Matrix2& b1() const { return b_[0]; }
  const Matrix2& b2() const { return b_[1]; }
  const CorrelationFamily& psi1() const { return psi_[0]; }
  const CorrelationFamily& psi2() const { return psi_[1]; }

  double cov(int i, int j, double r) const {
    return b_[0](i, j) * eval(psi_[0], r) + b_[1](i, j) * eval(psi_[1], r);
  }

 private:
  std::array<Matrix2, 2> b_;
  std::array<CorrelationFamily, 2> psi_;
};

inline Matrix2 eval_lmc(const LmcBivariate& model, double r) {
  return model.b1() * eval(model.psi1(), r) + model.b2() * eval(model.psi2(), r);
}

}  // namespace bivcov
