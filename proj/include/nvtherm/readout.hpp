#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "nvtherm/pulse.hpp"

namespace nvtherm {

// Photon statistics of the spin-dependent fluorescence readout: two mean
// count rates stand in for the full optical physics.
struct ReadoutModel {
  double counts_bright = 0.03;   // mean photons/readout in |0>
  double counts_dark = 0.021;    // mean photons/readout in |+->  (30% contrast)
  long readouts_per_point = 100000;
  double sequence_overhead_us = 1.3;  // init + readout dead time

  void validate() const {
    if (!(counts_bright > counts_dark) || counts_dark < 0)
      throw std::invalid_argument("ReadoutModel: need counts_bright > counts_dark >= 0");
    if (readouts_per_point <= 0)
      throw std::invalid_argument("ReadoutModel: readouts_per_point must be > 0");
  }

  double mean_counts(double signal) const {
    return static_cast<double>(readouts_per_point) *
           (counts_dark + signal * (counts_bright - counts_dark));
  }
};

struct SignalTrace {
  std::vector<double> tau_grid_us;
  std::vector<double> mean_signal;
  std::vector<long> counts;  // empty when noiseless
  // generator truth, when synthetic
  std::optional<double> truth_delta_d_khz;
  std::optional<double> truth_t_d_us;

  void validate() const {
    if (tau_grid_us.size() != mean_signal.size())
      throw std::invalid_argument("SignalTrace: column length mismatch");
    if (!counts.empty() && counts.size() != tau_grid_us.size())
      throw std::invalid_argument("SignalTrace: counts length mismatch");
    for (long c : counts)
      if (c < 0) throw std::invalid_argument("SignalTrace: negative counts");
  }
};

// Poisson photon counts for one point; deterministic for a given seed.
inline long sample_counts(double mean_signal, const ReadoutModel& model, std::uint64_t rng_seed) {
  model.validate();
  std::mt19937_64 rng(rng_seed);
  std::poisson_distribution<long> poisson(model.mean_counts(mean_signal));
  return poisson(rng);
}

// D-Ramsey trace generator backed by the unitary pulse engine, with a
// stretched-exponential coherence envelope applied around the 1/2 baseline.
// Counts are derived per point from seed + point index.
inline SignalTrace simulate_d_ramsey_trace(const EvolutionContext& ctx,
                                           const std::vector<double>& tau_grid,
                                           double t_d_us, double stretch,
                                           const ReadoutModel& model, std::uint64_t seed,
                                           bool with_noise = true) {
  SignalTrace trace;
  trace.tau_grid_us = tau_grid;
  trace.truth_delta_d_khz = ctx.spec.delta_d_khz + ctx.delta_d_khz;
  trace.truth_t_d_us = t_d_us;
  trace.mean_signal.reserve(tau_grid.size());
  for (double tau : tau_grid) {
    const double bare = run_sequence(ctx, d_ramsey_sequence(tau));
    const double env = std::exp(-std::pow(tau / t_d_us, stretch));
    trace.mean_signal.push_back(0.5 + (bare - 0.5) * env);
  }
  if (with_noise) {
    trace.counts.reserve(tau_grid.size());
    for (std::size_t k = 0; k < tau_grid.size(); ++k)
      trace.counts.push_back(
          sample_counts(trace.mean_signal[k], model, seed * 0x9e3779b97f4a7c15ULL + k));
  }
  return trace;
}

// Normalized signal estimate from counts: inverts the two-level count model.
inline std::vector<double> normalized_signal(const SignalTrace& trace, const ReadoutModel& model) {
  model.validate();
  trace.validate();
  if (trace.counts.empty()) return trace.mean_signal;
  std::vector<double> y(trace.counts.size());
  const double span = static_cast<double>(model.readouts_per_point) *
                      (model.counts_bright - model.counts_dark);
  const double base = static_cast<double>(model.readouts_per_point) * model.counts_dark;
  for (std::size_t k = 0; k < y.size(); ++k)
    y[k] = (static_cast<double>(trace.counts[k]) - base) / span;
  return y;
}

}  // namespace nvtherm
