#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "bivcov/errors.hpp"
#include "bivcov/field/sample.hpp"

namespace bivcov {

/// Block covariance over the rows of `sample`: entry (k, l) = C_{c_k c_l}(|x_k - x_l|). Each
/// unordered pair is evaluated once and mirrored, so the result is exactly symmetric.
/// `Model` is anything with cov(i, j, r) taking 0-based component indices.
template <class Model>
Eigen::MatrixXd gram(const Model& model, const FieldSample& sample) {
  const auto n = static_cast<Eigen::Index>(sample.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b <= a; ++b) {
      const double v = model.cov(sample.component[a], sample.component[b], sample.points.distance(a, b));
      k(a, b) = v;
      k(b, a) = v;
    }
  }
  return k;
}

/// Covariances between the sample rows and component `target_component` at location `x`.
template <class Model>
Eigen::VectorXd cross_covariance(const Model& model, const FieldSample& sample, const std::array<double, 3>& x,
                                 int target_component) {
  Eigen::VectorXd c(static_cast<Eigen::Index>(sample.size()));
  for (std::size_t a = 0; a < sample.size(); ++a) {
    c(static_cast<Eigen::Index>(a)) =
        model.cov(sample.component[a], target_component, PointSet::distance(sample.points.coords[a], x));
  }
  return c;
}

struct PdCheck {
  double min_eigenvalue = 0.0;
  double max_diagonal = 0.0;
  bool pass = false;
};

/// Smallest eigenvalue by a symmetric eigensolver; passes iff it is at least
/// -tol_rel * (largest diagonal entry).
inline PdCheck check_pd(const Eigen::MatrixXd& m, double tol_rel = 1e-8) {
  if (m.rows() != m.cols()) throw ParameterError("check_pd: matrix is not square");
  const double scale = m.cwiseAbs().maxCoeff();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1e-300)) {
    throw ParameterError("check_pd: matrix is not symmetric");
  }
  PdCheck out;
  if (m.size() == 0) {
    out.pass = true;
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  out.min_eigenvalue = es.eigenvalues().minCoeff();
  out.max_diagonal = m.diagonal().maxCoeff();
  out.pass = out.min_eigenvalue >= -tol_rel * out.max_diagonal;
  return out;
}

}  // namespace bivcov
