#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>

#include "bivcov/errors.hpp"
#include "bivcov/field/gram.hpp"
#include "bivcov/field/random.hpp"
#include "bivcov/field/sample.hpp"

namespace bivcov {

struct SimulationOptions {
  /// Diagonal jitter, relative to the mean diagonal, tried in turn until Cholesky succeeds.
  double jitter_start = 1e-12;
  double jitter_max = 1e-6;
  /// Per-component white-noise variance added to the diagonal.
  std::array<double, 2> nugget{0.0, 0.0};
};

struct SimulationResult {
  FieldSample sample;
  /// Relative jitter that was needed (0 when the plain factorization succeeded).
  double jitter = 0.0;
};

/// Lower Cholesky factor of k + jitter*I, escalating the jitter by factors of 10.
inline Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& k, const SimulationOptions& opt, double* used) {
  const double mean_diag = k.rows() ? k.diagonal().mean() : 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() == Eigen::Success) {
    *used = 0.0;
    return llt.matrixL();
  }
  for (double j = opt.jitter_start; j <= opt.jitter_max * (1.0 + 1e-9); j *= 10.0) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += j * mean_diag;
    llt.compute(kj);
    if (llt.info() == Eigen::Success) {
      *used = j;
      return llt.matrixL();
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k, Eigen::EigenvaluesOnly);
  throw FactorizationError("covariance matrix is not positive definite even with maximal jitter",
                           es.eigenvalues().minCoeff());
}

/// Zero-mean Gaussian field at the rows of `rows` (values ignored): z = L eps.
template <class Model>
SimulationResult simulate(const Model& model, const FieldSample& rows, std::uint64_t seed,
                          const SimulationOptions& opt = {}) {
  rows.validate(false);
  SimulationResult out;
  out.sample.points = rows.points;
  out.sample.component = rows.component;
  Eigen::MatrixXd k = gram(model, rows);
  for (Eigen::Index i = 0; i < k.rows(); ++i) k(i, i) += opt.nugget[static_cast<std::size_t>(rows.component[i])];
  const Eigen::MatrixXd l = jittered_cholesky(k, opt, &out.jitter);
  const CounterRng rng(seed);
  Eigen::VectorXd eps(k.rows());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = rng.normal(static_cast<std::uint64_t>(i));
  const Eigen::VectorXd z = l.triangularView<Eigen::Lower>() * eps;
  out.sample.value.assign(z.data(), z.data() + z.size());
  return out;
}

}  // namespace bivcov
