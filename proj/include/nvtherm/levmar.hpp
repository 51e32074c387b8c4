#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "nvtherm/units.hpp"

namespace nvtherm {

struct FitFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LeastSquaresResult {
  Eigen::VectorXd params;
  Eigen::VectorXd sigma;  // 1-sigma uncertainties from the covariance
  Eigen::MatrixXd covariance;
  double chi2 = 0;
  int iterations = 0;
  bool converged = false;
};

struct LeastSquaresOptions {
  int max_iterations = 200;
  double ftol = 1e-10;  // relative chi2 improvement
  double xtol = 1e-12;  // relative step size
  double lambda0 = 1e-3;
  double plateau_ftol = 1e-5;  // accept as converged at iteration cap
};

// Levenberg-Marquardt with numeric (central-difference) Jacobian and box
// constraints. residual(x) returns the residual vector; chi2 = |r|^2.
// Uncertainties are scaled by the reduced chi2 so callers may pass
// unweighted residuals.
inline LeastSquaresResult levenberg_marquardt(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
    Eigen::VectorXd x, Eigen::VectorXd lower, Eigen::VectorXd upper,
    const LeastSquaresOptions& opt = {}) {
  const Eigen::Index np = x.size();
  if (lower.size() != np || upper.size() != np)
    throw std::invalid_argument("levenberg_marquardt: bound size mismatch");

  auto clamp = [&](Eigen::VectorXd v) {
    for (Eigen::Index i = 0; i < np; ++i) v(i) = std::min(std::max(v(i), lower(i)), upper(i));
    return v;
  };

  x = clamp(x);
  Eigen::VectorXd r = residual(x);
  const Eigen::Index nr = r.size();
  double chi2 = r.squaredNorm();
  const double chi2_start = chi2;
  double lambda = opt.lambda0;

  LeastSquaresResult out;
  out.iterations = 0;

  Eigen::MatrixXd jac(nr, np);
  double last_rel_impr = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_iterations; ++it) {
    out.iterations = it + 1;
    for (Eigen::Index j = 0; j < np; ++j) {
      const double h = std::max(1e-7 * std::abs(x(j)), 1e-9);
      Eigen::VectorXd xp = x, xm = x;
      xp(j) = std::min(x(j) + h, upper(j));
      xm(j) = std::max(x(j) - h, lower(j));
      const double dx = xp(j) - xm(j);
      if (dx <= 0) {
        jac.col(j).setZero();
        continue;
      }
      jac.col(j) = (residual(xp) - residual(xm)) / dx;
    }

    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;

    bool stepped = false;
    for (int tries = 0; tries < 12; ++tries) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd step = a.ldlt().solve(-jtr);
      const Eigen::VectorXd x_new = clamp(x + step);
      const Eigen::VectorXd r_new = residual(x_new);
      const double chi2_new = r_new.squaredNorm();
      if (chi2_new < chi2) {
        last_rel_impr = (chi2 - chi2_new) / std::max(chi2, 1e-300);
        const double rel_step = (x_new - x).norm() / std::max(x.norm(), 1e-300);
        x = x_new;
        r = r_new;
        chi2 = chi2_new;
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
        // near-exact data: chi2 underflows toward machine precision while
        // relative improvements stay large
        if (last_rel_impr < opt.ftol || rel_step < opt.xtol ||
            chi2 < 1e-12 * chi2_start)
          out.converged = true;
        break;
      }
      lambda *= 10;
    }
    if (!stepped) {
      out.converged = true;  // no downhill step available: at a (local) minimum
      break;
    }
    if (out.converged) break;
  }
  if (last_rel_impr < opt.plateau_ftol) out.converged = true;

  out.params = x;
  out.chi2 = chi2;

  // covariance from the final Jacobian, scaled by reduced chi2; a
  // pseudo-inverse keeps well-determined parameters finite when a
  // degenerate direction (e.g. an unconstrained stretch exponent) makes
  // JtJ rank deficient
  const double dof = static_cast<double>(nr - np);
  const double s2 = dof > 0 ? chi2 / dof : 0.0;
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jtj);
  const double tol = 1e-12 * es.eigenvalues().cwiseAbs().maxCoeff();
  Eigen::VectorXd inv_ev = Eigen::VectorXd::Zero(np);
  for (Eigen::Index k = 0; k < np; ++k)
    if (es.eigenvalues()(k) > tol) inv_ev(k) = 1.0 / es.eigenvalues()(k);
  out.covariance =
      s2 * es.eigenvectors() * inv_ev.asDiagonal() * es.eigenvectors().transpose();
  out.sigma = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

}  // namespace nvtherm
