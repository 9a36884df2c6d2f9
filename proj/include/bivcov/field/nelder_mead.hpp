#pragma once

// Nelder-Mead simplex minimization on R^d with the standard coefficients
// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace bivcov {

struct NelderMeadOptions {
  int max_evaluations = 2000;
  /// Stop when the spread of simplex values falls below f_tol and its diameter below x_tol.
  double f_tol = 1e-7;
  double x_tol = 1e-6;
  double initial_step = 1.0;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

template <class F>
NelderMeadResult nelder_mead(const F& f, const Eigen::VectorXd& x0, const NelderMeadOptions& opt = {}) {
  const Eigen::Index d = x0.size();
  std::vector<Eigen::VectorXd> pts(d + 1, x0);
  std::vector<double> vals(d + 1);
  int evals = 0;
  auto call = [&](const Eigen::VectorXd& x) {
    ++evals;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };
  for (Eigen::Index i = 0; i < d; ++i) pts[i + 1](i) += opt.initial_step;
  for (Eigen::Index i = 0; i <= d; ++i) vals[i] = call(pts[i]);

  std::vector<int> order(d + 1);
  NelderMeadResult out;
  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
    const int best = order.front(), worst = order.back(), second = order[d - 1];

    double diameter = 0.0;
    for (Eigen::Index i = 0; i <= d; ++i) diameter = std::max(diameter, (pts[i] - pts[best]).cwiseAbs().maxCoeff());
    if (std::abs(vals[worst] - vals[best]) <= opt.f_tol && diameter <= opt.x_tol) {
      out.converged = true;
      break;
    }
    if (evals >= opt.max_evaluations) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (Eigen::Index i = 0; i <= d; ++i) {
      if (i != worst) centroid += pts[i];
    }
    centroid /= static_cast<double>(d);

    const Eigen::VectorXd xr = centroid + (centroid - pts[worst]);
    const double fr = call(xr);
    if (fr < vals[best]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = call(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const Eigen::VectorXd xc =
        outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid)) : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = call(xc);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (Eigen::Index i = 0; i <= d; ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      vals[i] = call(pts[i]);
    }
  }
  const auto best = std::min_element(vals.begin(), vals.end()) - vals.begin();
  out.x = pts[best];
  out.value = vals[best];
  out.evaluations = evals;
  return out;
}

}  // namespace bivcov
