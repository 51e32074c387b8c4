#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nvtherm/fringe.hpp"
#include "nvtherm/units.hpp"

namespace nvtherm {

struct CalibrationSpec {
  double c_t_khz_per_k = constants::c_t_ambient;  // dD/dT, negative near ambient
  double d_ref_mhz = constants::d_zfs_reference;  // D at the reference temperature
  double t_ref_k = 295.0;
  double laser_heating_mk = 3.0;      // constant offsets, see heating bounds
  double microwave_heating_mk = 0.0;

  void validate() const {
    if (c_t_khz_per_k == 0)
      throw std::invalid_argument("CalibrationSpec: c_T must be nonzero");
  }
};

// Delta T = delta D / c_T; absolute temperature adds the reference point and
// any constant heating offsets.
inline double delta_d_to_temperature(double delta_d_khz, const CalibrationSpec& cal) {
  cal.validate();
  return cal.t_ref_k + delta_d_khz / cal.c_t_khz_per_k +
         1e-3 * (cal.laser_heating_mk + cal.microwave_heating_mk);
}

struct SensitivityReport {
  double delta_d_hat_khz = 0;
  double delta_d_sigma_khz = 0;
  double temperature_hat_k = 0;
  double temperature_sigma_k = 0;
  double noise_floor_mk_sqrt_hz = 0;  // n_T
  double rate_hz = 0;                 // r
  double sigma_t_mk = 0;              // per-point sigma_T = n_T sqrt(r)
};

// sigma_T = f_uncertainty / |c_T|, r = 1 / measurement_time,
// n_T = sigma_T / sqrt(r); the report satisfies sigma_T = n_T sqrt(r) by
// construction.
inline SensitivityReport sensitivity_report(double f_uncertainty_khz, double measurement_time_s,
                                            const CalibrationSpec& cal) {
  cal.validate();
  if (measurement_time_s <= 0)
    throw std::invalid_argument("sensitivity_report: measurement time must be > 0");
  SensitivityReport rep;
  rep.delta_d_sigma_khz = f_uncertainty_khz;
  rep.rate_hz = 1.0 / measurement_time_s;
  rep.sigma_t_mk = 1e3 * f_uncertainty_khz / std::abs(cal.c_t_khz_per_k);
  rep.noise_floor_mk_sqrt_hz = rep.sigma_t_mk / std::sqrt(rep.rate_hz);
  rep.temperature_sigma_k = 1e-3 * rep.sigma_t_mk;
  return rep;
}

struct TimedTrace {
  double timestamp_s = 0;
  SignalTrace trace;
};

struct ReferenceSample {
  double timestamp_s = 0;
  double temperature_k = 0;
};

struct DriftPoint {
  double timestamp_s = 0;
  double d_mhz = 0;
  double d_sigma_khz = 0;
  double temperature_k = 0;
  double temperature_sigma_mk = 0;
  bool fit_ok = true;
  std::string fit_error;
};

struct DriftResult {
  std::vector<DriftPoint> points;
  std::vector<double> residuals_mk;  // vs. reference series, fit-ok points only
  double residual_std_mk = 0;
  double mean_sigma_mk = 0;  // average per-point fit uncertainty
};

inline double interpolate_reference(const std::vector<ReferenceSample>& ref, double t) {
  if (ref.empty()) throw std::invalid_argument("interpolate_reference: empty series");
  if (t <= ref.front().timestamp_s) return ref.front().temperature_k;
  if (t >= ref.back().timestamp_s) return ref.back().temperature_k;
  for (std::size_t k = 1; k < ref.size(); ++k) {
    if (t <= ref[k].timestamp_s) {
      const double w = (t - ref[k - 1].timestamp_s) /
                       (ref[k].timestamp_s - ref[k - 1].timestamp_s);
      return ref[k - 1].temperature_k +
             w * (ref[k].temperature_k - ref[k - 1].temperature_k);
    }
  }
  return ref.back().temperature_k;
}

// Per-interval D and temperature estimates from consecutive traces; when a
// reference thermometer series is given, also the difference series and its
// standard deviation. Fit failures are flagged per interval, never fatal.
inline DriftResult track_drift(const std::vector<TimedTrace>& series, const CalibrationSpec& cal,
                               const std::vector<ReferenceSample>& reference = {},
                               const FringeFitOptions& fit_opt = {}) {
  cal.validate();
  DriftResult out;
  out.points.reserve(series.size());
  double sigma_sum = 0;
  std::size_t n_ok = 0;

  for (const auto& timed : series) {
    DriftPoint p;
    p.timestamp_s = timed.timestamp_s;
    try {
      const FringeFit fit = fit_fringe(timed.trace, fit_opt);
      // fringe frequency measures |delta D|; recover the sign from c_T-side
      // convention: the runner operates at small positive programmed offsets
      p.d_mhz = cal.d_ref_mhz + 1e-3 * fit.frequency_khz;
      p.d_sigma_khz = fit.frequency_sigma_khz;
      p.temperature_k = delta_d_to_temperature(fit.frequency_khz, cal);
      p.temperature_sigma_mk = 1e3 * fit.frequency_sigma_khz / std::abs(cal.c_t_khz_per_k);
      sigma_sum += p.temperature_sigma_mk;
      ++n_ok;
    } catch (const std::exception& e) {
      p.fit_ok = false;
      p.fit_error = e.what();
    }
    out.points.push_back(std::move(p));
  }
  if (n_ok) out.mean_sigma_mk = sigma_sum / static_cast<double>(n_ok);

  if (!reference.empty()) {
    double sum = 0, sum2 = 0;
    for (const auto& p : out.points) {
      if (!p.fit_ok) continue;
      const double res_mk =
          1e3 * (p.temperature_k - interpolate_reference(reference, p.timestamp_s));
      out.residuals_mk.push_back(res_mk);
      sum += res_mk;
      sum2 += res_mk * res_mk;
    }
    const double n = static_cast<double>(out.residuals_mk.size());
    if (n > 1) {
      const double mean = sum / n;
      out.residual_std_mk = std::sqrt(std::max(0.0, (sum2 - n * mean * mean) / (n - 1)));
    }
  }
  return out;
}

}  // namespace nvtherm
