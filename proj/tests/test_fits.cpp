#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <random>

#include "nvtherm/fringe.hpp"

using namespace nvtherm;

namespace {

SignalTrace synthetic_trace(double f_khz, double t_d_us, double tau_max_us, std::size_t n,
                            double offset = 0.5, double amp = 0.45, double phase = 0.0) {
  SignalTrace tr;
  for (std::size_t k = 0; k < n; ++k) {
    const double tau = tau_max_us * static_cast<double>(k + 1) / static_cast<double>(n);
    tr.tau_grid_us.push_back(tau);
    const double env = std::exp(-std::pow(tau / t_d_us, 1.0));
    tr.mean_signal.push_back(offset + amp * env * std::cos(two_pi * 1e-3 * f_khz * tau + phase));
  }
  return tr;
}

EvolutionContext fringe_ctx(double delta_d_khz) {
  EvolutionContext ctx;
  ctx.spec.d_zfs_mhz = 2870.0;
  ctx.spec.b_field_mt = {0, 0, 50.0};
  ctx.delta_d_khz = delta_d_khz;
  return ctx;
}

}  // namespace

TEST_CASE("noiseless fringe is recovered to 1e-6 relative") {
  const SignalTrace tr = synthetic_trace(50.0, 600.0, 400.0, 160);
  const FringeFit fit = fit_fringe(tr);
  REQUIRE(fit.frequency_khz == Catch::Approx(50.0).epsilon(1e-6));
  REQUIRE(fit.decay_us == Catch::Approx(600.0).epsilon(1e-3));
}

TEST_CASE("fit works without envelope fitting") {
  SignalTrace tr = synthetic_trace(80.0, 1e9, 200.0, 100);
  FringeFitOptions opt;
  opt.fit_envelope = false;
  const FringeFit fit = fit_fringe(tr, opt);
  REQUIRE(fit.frequency_khz == Catch::Approx(80.0).epsilon(1e-6));
}

TEST_CASE("flat traces raise no-signal") {
  SignalTrace tr;
  for (int k = 0; k < 32; ++k) {
    tr.tau_grid_us.push_back(k + 1.0);
    tr.mean_signal.push_back(0.5);
  }
  REQUIRE_THROWS_AS(fit_fringe(tr), NoSignalError);
}

TEST_CASE("too few points are rejected") {
  const SignalTrace tr = synthetic_trace(50.0, 600.0, 100.0, 6);
  REQUIRE_THROWS_AS(fit_fringe(tr), std::invalid_argument);
}

TEST_CASE("reported frequency uncertainty matches the Monte-Carlo spread") {
  const double f_true = 50.0;
  EvolutionContext ctx = fringe_ctx(f_true);
  ReadoutModel model;
  model.readouts_per_point = 30000;

  std::vector<double> tau(120);
  for (std::size_t k = 0; k < tau.size(); ++k)
    tau[k] = 400.0 * static_cast<double>(k + 1) / static_cast<double>(tau.size());

  const int reps = 200;
  std::vector<double> freqs;
  double sigma_sum = 0;
  for (int r = 0; r < reps; ++r) {
    const SignalTrace tr =
        simulate_d_ramsey_trace(ctx, tau, 900.0, 1.0, model, 1000 + static_cast<std::uint64_t>(r));
    const FringeFit fit = fit_fringe(tr);
    freqs.push_back(fit.frequency_khz);
    sigma_sum += fit.frequency_sigma_khz;
  }
  const double mean = std::accumulate(freqs.begin(), freqs.end(), 0.0) / reps;
  double var = 0;
  for (double f : freqs) var += (f - mean) * (f - mean);
  var /= (reps - 1);
  const double empirical = std::sqrt(var);
  const double reported = sigma_sum / reps;

  INFO("empirical " << empirical << " reported " << reported);
  REQUIRE(reported == Catch::Approx(empirical).epsilon(0.20));

  // unbiasedness: mean within 2 standard errors of truth
  const double se = empirical / std::sqrt(static_cast<double>(reps));
  REQUIRE(std::abs(mean - f_true) < 2.0 * se + 1e-3);
}

TEST_CASE("estimator stays unbiased across SNR regimes") {
  EvolutionContext ctx = fringe_ctx(40.0);
  std::vector<double> tau(100);
  for (std::size_t k = 0; k < tau.size(); ++k)
    tau[k] = 300.0 * static_cast<double>(k + 1) / static_cast<double>(tau.size());

  for (long readouts : {200000L, 20000L, 3000L}) {
    ReadoutModel model;
    model.readouts_per_point = readouts;
    const int reps = 120;
    double sum = 0, sum2 = 0;
    for (int r = 0; r < reps; ++r) {
      const SignalTrace tr = simulate_d_ramsey_trace(
          ctx, tau, 800.0, 1.0, model, 77000 + static_cast<std::uint64_t>(r));
      const double f = fit_fringe(tr).frequency_khz;
      sum += f;
      sum2 += f * f;
    }
    const double mean = sum / reps;
    const double sd = std::sqrt(std::max(0.0, (sum2 - reps * mean * mean) / (reps - 1)));
    const double se = sd / std::sqrt(static_cast<double>(reps));
    INFO("readouts " << readouts << " mean " << mean << " se " << se);
    REQUIRE(std::abs(mean - 40.0) < 2.5 * se + 1e-3);
  }
}

TEST_CASE("phase readout inverts the fringe slope") {
  const double tau_op = 800.0;
  const double contrast = 0.8;
  for (double dd_khz : {-0.2, 0.0, 0.1, 0.3}) {
    // signal on the slope: s = 1/2 - (c/2) sin(2 pi dd tau)
    const double s = 0.5 - 0.5 * contrast * std::sin(two_pi * 1e-3 * dd_khz * tau_op);
    const PhaseReadout pr = phase_readout_delta_d(s, 0.0, tau_op, contrast, 0.0);
    REQUIRE(pr.delta_d_khz == Catch::Approx(dd_khz).margin(1e-9));
  }
  const PhaseReadout noisy = phase_readout_delta_d(0.5, 0.02, tau_op, contrast, 0.0);
  REQUIRE(noisy.delta_d_sigma_khz == Catch::Approx(1e3 * 0.05 / (two_pi * tau_op)).epsilon(1e-6));
}
