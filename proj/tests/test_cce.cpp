#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "nvtherm/cce.hpp"
#include "nvtherm/decay_fit.hpp"

#include "cce_oracle.hpp"

using namespace nvtherm;

namespace {

SpinSystemSpec bath_spec(double bz_mt) {
  SpinSystemSpec s;
  s.d_zfs_mhz = 2870.0;
  s.b_field_mt = {0, 0, bz_mt};
  return s;
}

std::vector<double> linear_grid(double tau_max, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k)
    g[k] = tau_max * static_cast<double>(k) / static_cast<double>(n - 1);
  g[0] = 1e-6;
  return g;
}

}  // namespace

TEST_CASE("empty bath gives L == 1") {
  const auto grid = linear_grid(100.0, 8);
  const auto curve = cce_coherence(bath_spec(50.0), {}, d_ramsey_sequence(1.0), grid);
  for (double l : curve.l_values) REQUIRE(l == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("CCE-2 matches the exact oracle for 1- and 2-spin baths") {
  const SpinSystemSpec spec = bath_spec(5.0);
  const auto grid = linear_grid(40.0, 9);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (std::size_t n : {std::size_t{1}, std::size_t{2}}) {
      const auto bath = oracle::random_bath(n, seed * 101 + n);
      for (const auto& seq : {d_ramsey_sequence(1.0), hahn_echo_sequence(1.0),
                              ramsey_sequence(1.0)}) {
        const auto curve = cce_coherence(spec, bath, seq, grid);
        for (std::size_t t = 0; t < grid.size(); ++t) {
          PulseSequence scaled = seq;
          for (auto& el : scaled.elements)
            if (el.kind == PulseElement::Kind::free_evolution)
              el.duration_us *= grid[t];  // template has unit tau
          const double l_exact = 2.0 * oracle::exact_signal(spec, bath, scaled) - 1.0;
          INFO("seed " << seed << " n " << n << " tau " << grid[t]);
          REQUIRE(curve.l_values[t] == Catch::Approx(l_exact).margin(1e-6));
        }
      }
    }
  }
}

TEST_CASE("CCE-2 tracks the exact oracle within 2% for 3-4 spin baths") {
  const SpinSystemSpec spec = bath_spec(5.0);
  const auto grid = linear_grid(40.0, 7);
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    for (std::size_t n : {std::size_t{3}, std::size_t{4}}) {
      const auto bath = oracle::random_bath(n, seed * 77 + n);
      const auto curve = cce_coherence(spec, bath, d_ramsey_sequence(1.0), grid);
      for (std::size_t t = 0; t < grid.size(); ++t) {
        PulseSequence scaled = d_ramsey_sequence(grid[t]);
        const double l_exact = 2.0 * oracle::exact_signal(spec, bath, scaled) - 1.0;
        INFO("seed " << seed << " n " << n << " tau " << grid[t]);
        REQUIRE(curve.l_values[t] == Catch::Approx(l_exact).margin(0.02));
      }
    }
  }
}

TEST_CASE("|L| <= 1 and L(0) = 1 for sampled baths") {
  BathConfig cfg;
  cfg.concentration = 0.01;
  cfg.cutoff_radius_nm = 1.6;
  cfg.seed = 5;
  const auto bath = sample_bath(cfg);
  const auto grid = linear_grid(200.0, 16);
  const auto curve = cce_coherence(bath_spec(5.0), bath, d_ramsey_sequence(1.0), grid);
  REQUIRE(curve.l_values.front() == Catch::Approx(1.0).margin(1e-9));
  for (double l : curve.l_values) {
    REQUIRE(l <= 1.0 + 1e-12);
    REQUIRE(l >= -1.0 - 1e-12);
  }
}

TEST_CASE("unsupported sequences raise not-implemented") {
  PulseSequence odd;
  odd.elements = {PulseElement::mw(Transition::minus, 1.0, 0.0), PulseElement::free(1.0)};
  REQUIRE_THROWS_AS(
      cce_coherence(bath_spec(5.0), {}, odd, std::vector<double>{1.0}),
      NotImplementedError);
}

TEST_CASE("estimate_t_d recovers synthetic stretched exponentials") {
  auto synth = [](double t_d, double p) {
    CoherenceCurve c;
    for (int k = 0; k < 40; ++k) {
      const double tau = 5.0 * (k + 1);
      c.tau_grid_us.push_back(tau);
      c.l_values.push_back(std::exp(-std::pow(tau / t_d, p)));
    }
    return c;
  };

  const DecayFit f1 = estimate_t_d(synth(100.0, 1.0));
  REQUIRE(f1.t_d_us == Catch::Approx(100.0).epsilon(0.01));
  REQUIRE(f1.stretch == Catch::Approx(1.0).epsilon(0.01));

  const DecayFit f2 = estimate_t_d(synth(50.0, 2.0));
  REQUIRE(f2.t_d_us == Catch::Approx(50.0).epsilon(0.01));
  REQUIRE(f2.stretch == Catch::Approx(2.0).epsilon(0.01));
}

TEST_CASE("flat curves need the extrapolation flag") {
  CoherenceCurve flat;
  for (int k = 0; k < 10; ++k) {
    flat.tau_grid_us.push_back(10.0 * (k + 1));
    flat.l_values.push_back(1.0);
  }
  REQUIRE_THROWS_AS(estimate_t_d(flat), FitRangeError);
  const DecayFit f = estimate_t_d(flat, true);
  REQUIRE(std::isinf(f.t_d_us));
}

TEST_CASE("shallow decays can be fit under extrapolation") {
  CoherenceCurve c;
  for (int k = 0; k < 30; ++k) {
    const double tau = 2.0 * (k + 1);
    c.tau_grid_us.push_back(tau);
    c.l_values.push_back(std::exp(-std::pow(tau / 200.0, 1.5)));
  }
  REQUIRE_THROWS_AS(estimate_t_d(c), FitRangeError);  // min l ~ 0.85
  const DecayFit f = estimate_t_d(c, true);
  REQUIRE(f.t_d_us == Catch::Approx(200.0).epsilon(0.05));
}
