#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "nvtherm/levmar.hpp"
#include "nvtherm/readout.hpp"

namespace nvtherm {

struct NoSignalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FringeFit {
  double frequency_khz = 0;
  double frequency_sigma_khz = 0;
  double decay_us = 0;
  double decay_sigma_us = 0;
  double stretch = 1;
  double phase_rad = 0;
  double offset = 0;
  double amplitude = 0;
  double chi2 = 0;
};

struct FringeFitOptions {
  bool fit_envelope = true;
  double stretch_min = 0.5;
  double stretch_max = 3.0;
  double peak_snr_threshold = 5.0;  // spectral peak vs mean background power
};

namespace detail {

struct Spectrum {
  double peak_freq_mhz;
  double peak_re;
  double peak_im;
  double peak_power;
  double background_power;
};

// Direct DFT over candidate frequencies k/(N dt); works for any grid but
// assumes roughly uniform spacing for the frequency ladder.
inline Spectrum spectrum_peak(const std::vector<double>& t, const std::vector<double>& y) {
  const std::size_t n = t.size();
  double mean = 0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  const double span = t.back() - t.front();

  std::size_t best = 0;
  double best_power = -1, best_re = 0, best_im = 0, total = 0;
  const std::size_t nf = n / 2;
  for (std::size_t k = 1; k < nf; ++k) {
    const double f = static_cast<double>(k) / span * (static_cast<double>(n - 1) / n);
    double re = 0, im = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double arg = two_pi * f * (t[j] - t.front());
      re += (y[j] - mean) * std::cos(arg);
      im += (y[j] - mean) * std::sin(arg);
    }
    const double p = re * re + im * im;
    total += p;
    if (p > best_power) {
      best_power = p;
      best = k;
      best_re = re;
      best_im = im;
    }
  }
  Spectrum s;
  s.peak_freq_mhz = static_cast<double>(best) / span * (static_cast<double>(n - 1) / n);
  s.peak_power = best_power;
  s.peak_re = best_re;
  s.peak_im = best_im;
  s.background_power = (total - best_power) / std::max<std::size_t>(nf - 2, 1);

  // refine within +-1 bin: a one-bin error accumulates a full turn of phase
  // across the trace and strands the nonlinear fit in a local minimum
  const double bin = 1.0 / span;
  for (int k = -40; k <= 40; ++k) {
    const double f = s.peak_freq_mhz + bin * k / 40.0;
    if (f <= 0) continue;
    double re = 0, im = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double arg = two_pi * f * (t[j] - t.front());
      re += (y[j] - mean) * std::cos(arg);
      im += (y[j] - mean) * std::sin(arg);
    }
    const double p = re * re + im * im;
    if (p > s.peak_power) {
      s.peak_power = p;
      s.peak_freq_mhz = f;
      s.peak_re = re;
      s.peak_im = im;
    }
  }
  return s;
}

}  // namespace detail

// Least-squares fit of a + b exp(-(tau/T)^p) cos(2 pi f tau + phi) to a
// trace, initialized from the discrete spectrum of the mean-subtracted
// data. Works on counts when present, otherwise on the mean signal.
inline FringeFit fit_fringe(const SignalTrace& trace, const FringeFitOptions& opt = {}) {
  trace.validate();
  const auto& t = trace.tau_grid_us;
  if (t.size() < 8)
    throw std::invalid_argument("fit_fringe: need >= 8 points (or use phase readout mode)");

  std::vector<double> y;
  if (!trace.counts.empty())
    y.assign(trace.counts.begin(), trace.counts.end());
  else
    y = trace.mean_signal;

  const detail::Spectrum spec = detail::spectrum_peak(t, y);
  if (spec.peak_power < opt.peak_snr_threshold * std::max(spec.background_power, 1e-300))
    throw NoSignalError("fit_fringe: no spectral peak above the noise floor");

  double mean = 0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());

  const double n = static_cast<double>(y.size());
  const double amp0 = 2.0 * std::sqrt(spec.peak_power) / n;
  // the spectrum references phase to t.front(); the model references t = 0
  const double phase0 = std::remainder(
      std::atan2(-spec.peak_im, spec.peak_re) - two_pi * spec.peak_freq_mhz * t.front(),
      two_pi);
  const double span = t.back() - t.front();

  const bool env = opt.fit_envelope;
  const Eigen::Index np = env ? 6 : 4;
  Eigen::VectorXd x0(np), lo(np), hi(np);
  // params: offset, amplitude, f (MHz), phase, [T_D (us), p]
  x0(0) = mean;
  x0(1) = amp0;
  x0(2) = spec.peak_freq_mhz;
  x0(3) = phase0;
  lo(0) = mean - 10 * std::abs(amp0) - 1;
  hi(0) = mean + 10 * std::abs(amp0) + 1;
  lo(1) = 0;
  hi(1) = 20 * std::abs(amp0) + 1;
  lo(2) = 0.25 / span;
  hi(2) = 2.0 * static_cast<double>(y.size()) / span;  // beyond Nyquist margin
  lo(3) = -2 * two_pi;
  hi(3) = 2 * two_pi;
  if (env) {
    x0(4) = 2.0 * span;
    x0(5) = 1.0;
    lo(4) = 0.05 * span;
    hi(4) = 1e4 * span;
    lo(5) = opt.stretch_min;
    hi(5) = opt.stretch_max;
  }

  auto residual = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(y.size()));
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double envelope = env ? std::exp(-std::pow(t[k] / x(4), x(5))) : 1.0;
      const double model =
          x(0) + x(1) * envelope * std::cos(two_pi * x(2) * t[k] + x(3));
      r(static_cast<Eigen::Index>(k)) = model - y[k];
    }
    return r;
  };

  const LeastSquaresResult fit = levenberg_marquardt(residual, x0, lo, hi);
  if (!fit.converged)
    throw FitFailure("fit_fringe: no convergence after " + std::to_string(fit.iterations) +
                     " iterations (chi2 " + std::to_string(fit.chi2) + ")");

  FringeFit out;
  out.offset = fit.params(0);
  out.amplitude = fit.params(1);
  out.frequency_khz = 1e3 * fit.params(2);
  out.frequency_sigma_khz = 1e3 * fit.sigma(2);
  out.phase_rad = fit.params(3);
  if (env) {
    out.decay_us = fit.params(4);
    out.decay_sigma_us = fit.sigma(4);
    out.stretch = fit.params(5);
  }
  out.chi2 = fit.chi2;
  return out;
}

// Fixed-tau phase readout: operate on the fringe slope at tau_op where the
// signal responds linearly to small crystal-field changes. The D-Ramsey
// fringe s = 1/2 + (C/2) E cos(2 pi dD tau) is inverted around the
// half-fringe point; delta_d_bias shifts the operating point onto the slope.
struct PhaseReadout {
  double delta_d_khz = 0;
  double delta_d_sigma_khz = 0;
};

inline PhaseReadout phase_readout_delta_d(double signal, double signal_sigma, double tau_op_us,
                                          double contrast_envelope, double delta_d_bias_khz) {
  if (tau_op_us <= 0) throw std::invalid_argument("phase_readout: tau_op must be > 0");
  if (contrast_envelope <= 0)
    throw std::invalid_argument("phase_readout: contrast must be > 0");
  // s = 1/2 + (c/2) cos(2 pi (dD - bias) tau + pi/2) = 1/2 - (c/2) sin(...)
  const double u = std::clamp((2.0 * signal - 1.0) / contrast_envelope, -1.0, 1.0);
  const double phase = -std::asin(u);
  PhaseReadout out;
  out.delta_d_khz = delta_d_bias_khz + 1e3 * phase / (two_pi * tau_op_us);
  const double denom = std::sqrt(std::max(1.0 - u * u, 1e-6));
  out.delta_d_sigma_khz =
      1e3 * (2.0 * signal_sigma / contrast_envelope) / denom / (two_pi * tau_op_us);
  return out;
}

}  // namespace nvtherm
