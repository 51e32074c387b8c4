#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "nvtherm/cce.hpp"
#include "nvtherm/levmar.hpp"

namespace nvtherm {

struct FitRangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DecayFit {
  double t_d_us = 0;
  double t_d_sigma_us = 0;
  double stretch = 1;
  double stretch_sigma = 0;
};

// Least-squares fit of exp(-(tau/T_D)^p) to a coherence curve. The curve
// must decay below 1/e within the grid unless extrapolation is allowed; a
// flat curve under extrapolation returns T_D = infinity.
inline DecayFit estimate_t_d(const CoherenceCurve& curve, bool allow_extrapolation = false) {
  const auto& tau = curve.tau_grid_us;
  const auto& l = curve.l_values;
  if (tau.size() != l.size() || tau.size() < 4)
    throw std::invalid_argument("estimate_t_d: need >= 4 matching samples");

  const double l_min = *std::min_element(l.begin(), l.end());
  const double inv_e = std::exp(-1.0);
  if (l_min > inv_e && !allow_extrapolation)
    throw FitRangeError("estimate_t_d: curve does not decay below 1/e within the grid");

  if (l_min > 0.99) {
    DecayFit flat;
    flat.t_d_us = std::numeric_limits<double>::infinity();
    flat.t_d_sigma_us = std::numeric_limits<double>::infinity();
    return flat;
  }

  // initial T_D: first crossing of 1/e, else extrapolate from the last point
  double t0 = tau.back();
  for (std::size_t k = 0; k < l.size(); ++k) {
    if (l[k] <= inv_e) {
      t0 = tau[k];
      break;
    }
  }
  if (l_min > inv_e) {
    const double lb = std::clamp(l.back(), 1e-6, 1.0 - 1e-9);
    t0 = tau.back() / std::pow(-std::log(lb), 1.0);
  }

  auto residual = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(tau.size()));
    for (std::size_t k = 0; k < tau.size(); ++k)
      r(static_cast<Eigen::Index>(k)) = std::exp(-std::pow(tau[k] / x(0), x(1))) - l[k];
    return r;
  };

  Eigen::VectorXd x0(2), lo(2), hi(2);
  x0 << t0, 1.0;
  lo << 1e-6 * tau.back(), 0.3;
  hi << 1e6 * tau.back(), 5.0;
  const LeastSquaresResult fit = levenberg_marquardt(residual, x0, lo, hi);

  DecayFit out;
  out.t_d_us = fit.params(0);
  out.stretch = fit.params(1);
  out.t_d_sigma_us = fit.sigma(0);
  out.stretch_sigma = fit.sigma(1);
  return out;
}

}  // namespace nvtherm
