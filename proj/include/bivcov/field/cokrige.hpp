#pragma once

#include <Eigen/Dense>

#include <array>
#include <vector>

#include "bivcov/errors.hpp"
#include "bivcov/field/gram.hpp"
#include "bivcov/field/sample.hpp"

namespace bivcov {

struct KrigingResult {
  std::vector<double> prediction;
  std::vector<double> variance;
  /// Weight matrix, one column per target (rows follow the data rows).
  Eigen::MatrixXd weights;
};

/// Generalized least squares estimate of the two constant means.
template <class Model>
std::array<double, 2> gls_means(const Model& model, const FieldSample& data, const std::array<double, 2>& nugget = {0.0, 0.0}) {
  data.validate(true);
  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd k = gram(model, data);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) += nugget[static_cast<std::size_t>(data.component[i])];
    x(i, data.component[i]) = 1.0;
  }
  if (data.count(0) == 0 || data.count(1) == 0) throw DegenerateInput("both components are needed to estimate means");
  Eigen::LDLT<Eigen::MatrixXd> ldlt(k);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k, Eigen::EigenvaluesOnly);
    throw FactorizationError("covariance matrix is not positive definite", es.eigenvalues().minCoeff());
  }
  const Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(data.value.data(), n);
  const Eigen::MatrixXd kx = ldlt.solve(x);
  const Eigen::Vector2d mu = (x.transpose() * kx).ldlt().solve(kx.transpose() * z);
  return {mu(0), mu(1)};
}

/// Simple cokriging of component `target_component` (0-based) at `targets` with known constant
/// means. Nuggets are measurement error: they enter the data covariance only, so predictions
/// target the noise-free field.
template <class Model>
KrigingResult cokrige(const Model& model, const FieldSample& data, const PointSet& targets, int target_component,
                      const std::array<double, 2>& means, const std::array<double, 2>& nugget = {0.0, 0.0}) {
  data.validate(true);
  if (target_component != 0 && target_component != 1) throw ParameterError("target component out of range");
  Eigen::MatrixXd k = gram(model, data);
  for (std::size_t i = 0; i < data.size(); ++i) {
    k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += nugget[static_cast<std::size_t>(data.component[i])];
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(k);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k, Eigen::EigenvaluesOnly);
    throw FactorizationError("cokriging system is not positive definite", es.eigenvalues().minCoeff());
  }
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto m = static_cast<Eigen::Index>(targets.size());
  Eigen::MatrixXd c0(n, m);
  for (Eigen::Index t = 0; t < m; ++t) c0.col(t) = cross_covariance(model, data, targets.coords[t], target_component);

  KrigingResult out;
  out.weights = ldlt.solve(c0);
  if (!out.weights.allFinite()) throw FactorizationError("cokriging solve produced non-finite weights", 0.0);
  Eigen::VectorXd resid(n);
  for (Eigen::Index i = 0; i < n; ++i) resid(i) = data.value[i] - means[static_cast<std::size_t>(data.component[i])];
  const double c00 = model.cov(target_component, target_component, 0.0);
  out.prediction.resize(static_cast<std::size_t>(m));
  out.variance.resize(static_cast<std::size_t>(m));
  for (Eigen::Index t = 0; t < m; ++t) {
    out.prediction[t] = means[static_cast<std::size_t>(target_component)] + out.weights.col(t).dot(resid);
    out.variance[t] = c00 - out.weights.col(t).dot(c0.col(t));
  }
  return out;
}

}  // namespace bivcov
