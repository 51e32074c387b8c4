#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nvtherm/pulse.hpp"

using namespace nvtherm;

namespace {

SpinSystemSpec field_spec(double bz_mt) {
  SpinSystemSpec s;
  s.d_zfs_mhz = 2870.0;
  s.b_field_mt = {0, 0, bz_mt};
  return s;
}

// Fringe frequency from a uniformly sampled signal by discrete spectrum
// peak plus quadratic interpolation. Independent of the fitting module.
double dominant_frequency(const std::vector<double>& t, const std::vector<double>& y) {
  const std::size_t n = t.size();
  double mean = 0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);

  const double dt = t[1] - t[0];
  const std::size_t nf = n / 2;
  std::vector<double> power(nf, 0.0);
  for (std::size_t k = 1; k < nf; ++k) {
    double re = 0, im = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double arg = two_pi * static_cast<double>(k) * static_cast<double>(j) /
                         static_cast<double>(n);
      re += (y[j] - mean) * std::cos(arg);
      im += (y[j] - mean) * std::sin(arg);
    }
    power[k] = re * re + im * im;
  }
  std::size_t peak = 1;
  for (std::size_t k = 2; k < nf; ++k)
    if (power[k] > power[peak]) peak = k;

  double delta = 0;
  if (peak + 1 < nf && peak > 1) {
    const double pm = power[peak - 1], p0 = power[peak], pp = power[peak + 1];
    const double denom = pm - 2 * p0 + pp;
    if (std::abs(denom) > 1e-300) delta = 0.5 * (pm - pp) / denom;
  }
  return (static_cast<double>(peak) + delta) / (static_cast<double>(n) * dt);
}

double fringe_frequency_mhz(const EvolutionContext& ctx, bool d_ramsey, double tau_max,
                            std::size_t n = 256) {
  std::vector<double> taus(n), sig(n);
  for (std::size_t k = 0; k < n; ++k) {
    taus[k] = tau_max * static_cast<double>(k + 1) / static_cast<double>(n);
    sig[k] = run_sequence(ctx, d_ramsey ? d_ramsey_sequence(taus[k])
                                        : ramsey_sequence(taus[k]));
  }
  return dominant_frequency(taus, sig);
}

}  // namespace

TEST_CASE("mw pulse unitaries compose as rotations") {
  const SpinSystemSpec s = field_spec(50.0);

  const MatrixXcd full = mw_pulse_unitary(s, Transition::minus, two_pi, 0.0);
  // identity up to a global phase on the subspace (2pi rotation flips sign)
  REQUIRE((full + MatrixXcd::Identity(3, 3)).cwiseAbs().maxCoeff() ==
          Catch::Approx(2.0).margin(1e-12));

  const MatrixXcd half = mw_pulse_unitary(s, Transition::minus, 0.5 * pi, 0.3);
  const MatrixXcd pi_pulse = mw_pulse_unitary(s, Transition::minus, pi, 0.3);
  REQUIRE((half * half - pi_pulse).cwiseAbs().maxCoeff() < 1e-12);

  const MatrixXcd u = mw_pulse_unitary(s, Transition::plus, 1.1, 0.7);
  REQUIRE((u.adjoint() * u - MatrixXcd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pi pulse on minus transfers |0> to |->") {
  const SpinSystemSpec s = field_spec(50.0);
  const MatrixXcd u = mw_pulse_unitary(s, Transition::minus, pi, 0.0);
  VectorXcd psi = VectorXcd::Zero(3);
  psi(idx_zero) = 1.0;
  psi = u * psi;
  REQUIRE(std::norm(psi(idx_minus)) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("unresolved transitions raise a selectivity error") {
  REQUIRE_THROWS_AS(mw_pulse_unitary(field_spec(0.0), Transition::minus, pi, 0.0),
                    SelectivityError);
}

TEST_CASE("D-Ramsey at tau->0 sits at the fringe maximum") {
  EvolutionContext ctx;
  ctx.spec = field_spec(50.0);
  ctx.delta_d_khz = 50.0;
  REQUIRE(run_sequence(ctx, d_ramsey_sequence(1e-9)) == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("plain Ramsey fringe oscillates at the detuning") {
  EvolutionContext ctx;
  ctx.spec = field_spec(50.0);
  ctx.delta_d_khz = 80.0;  // 80 kHz detuning of the minus transition
  const double f = fringe_frequency_mhz(ctx, false, 200.0);
  REQUIRE(f == Catch::Approx(80e-3).epsilon(0.01));
}

TEST_CASE("D-Ramsey fringe frequency equals the programmed delta D") {
  EvolutionContext ctx;
  ctx.spec = field_spec(50.0);
  ctx.delta_d_khz = 50.0;
  const double f = fringe_frequency_mhz(ctx, true, 320.0);
  REQUIRE(f == Catch::Approx(50e-3).epsilon(0.01));
}

TEST_CASE("D-Ramsey is of echo type for static axial field offsets") {
  EvolutionContext ctx;
  ctx.spec = field_spec(50.0);
  ctx.delta_d_khz = 0.0;
  ctx.static_b_offset_mt = {0, 0, 0.1};
  for (double tau : {10.0, 50.0, 200.0, 801.0}) {
    const double with_db = run_sequence(ctx, d_ramsey_sequence(tau));
    EvolutionContext clean = ctx;
    clean.static_b_offset_mt.setZero();
    const double without = run_sequence(clean, d_ramsey_sequence(tau));
    REQUIRE(with_db == Catch::Approx(without).margin(1e-6));
  }
}

TEST_CASE("phi_B diagnostic cancels over the full D-Ramsey") {
  EvolutionContext ctx;
  ctx.spec = field_spec(50.0);
  ctx.static_b_offset_mt = {0, 0, 0.2};
  ctx.delta_d_khz = 25.0;
  run_sequence(ctx, d_ramsey_sequence(100.0));
  REQUIRE(ctx.phi_b == Catch::Approx(0.0).margin(1e-9));
  // -2 phi_D = 2 pi * delta_d * tau
  REQUIRE(-2.0 * ctx.phi_d == Catch::Approx(two_pi * 25e-3 * 100.0).epsilon(1e-9));
}

TEST_CASE("swapped branch order leaves the |delta D| fringe frequency unchanged") {
  EvolutionContext ctx;
  ctx.spec = field_spec(50.0);
  ctx.delta_d_khz = 40.0;
  const std::size_t n = 256;
  const double tau_max = 300.0;
  std::vector<double> taus(n), a(n), b(n);
  for (std::size_t k = 0; k < n; ++k) {
    taus[k] = tau_max * static_cast<double>(k + 1) / static_cast<double>(n);
    a[k] = run_sequence(ctx, d_ramsey_sequence(taus[k]));
    b[k] = run_sequence(ctx, d_ramsey_sequence_swapped(taus[k]));
  }
  const double fa = dominant_frequency(taus, a);
  const double fb = dominant_frequency(taus, b);
  REQUIRE(fa == Catch::Approx(fb).epsilon(1e-3));
}

TEST_CASE("Hahn echo refocuses both static field offsets and delta D") {
  EvolutionContext base;
  base.spec = field_spec(50.0);
  for (double tau : {0.0, 7.0, 120.0}) {
    const double clean = run_sequence(base, tau == 0.0
                                                ? hahn_echo_sequence(1e-12)
                                                : hahn_echo_sequence(tau));
    EvolutionContext db = base;
    db.static_b_offset_mt = {0, 0, 0.3};
    EvolutionContext dd = base;
    dd.delta_d_khz = 150.0;
    const auto seq = tau == 0.0 ? hahn_echo_sequence(1e-12) : hahn_echo_sequence(tau);
    REQUIRE(run_sequence(db, seq) == Catch::Approx(clean).margin(1e-6));
    REQUIRE(run_sequence(dd, seq) == Catch::Approx(clean).margin(1e-6));
  }
  // tau = 0 gives full recovery
  REQUIRE(run_sequence(base, hahn_echo_sequence(1e-12)) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("signal stays in [0,1] and norm survives long sequences") {
  EvolutionContext ctx;
  ctx.spec = field_spec(50.0);
  ctx.delta_d_khz = 11.0;
  ctx.static_b_offset_mt = {0.01, 0.0, 0.05};

  PulseSequence seq;
  for (int k = 0; k < 300; ++k) {
    seq.elements.push_back(PulseElement::mw(k % 2 ? Transition::minus : Transition::plus,
                                            0.5 * pi, 0.1 * k));
    seq.elements.push_back(PulseElement::free(0.37));
    seq.elements.push_back(PulseElement::mw(Transition::minus, pi, 0.0));
    seq.elements.push_back(PulseElement::free(0.11));
  }
  const double sig = run_sequence(ctx, seq);
  REQUIRE(sig >= 0.0);
  REQUIRE(sig <= 1.0 + 1e-9);
}

TEST_CASE("sequence text round trip preserves the program") {
  const PulseSequence seq = d_ramsey_sequence(123.5);
  const PulseSequence back = sequence_from_text(sequence_to_text(seq));
  REQUIRE(back.elements.size() == seq.elements.size());
  for (std::size_t k = 0; k < seq.elements.size(); ++k) {
    CHECK(back.elements[k].kind == seq.elements[k].kind);
    CHECK(back.elements[k].transition == seq.elements[k].transition);
    CHECK(back.elements[k].rotation_angle == Catch::Approx(seq.elements[k].rotation_angle));
    CHECK(back.elements[k].duration_us == Catch::Approx(seq.elements[k].duration_us).margin(0));
  }
  REQUIRE_THROWS_AS(sequence_from_text("warp 1 2 3\n"), std::invalid_argument);
}

TEST_CASE("pulse element validation") {
  REQUIRE_THROWS_AS(PulseElement::mw(Transition::minus, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(PulseElement::mw(Transition::minus, 7.0), std::invalid_argument);
  REQUIRE_THROWS_AS(PulseElement::free(-1.0), std::invalid_argument);
  EvolutionContext ctx;
  ctx.spec = field_spec(50.0);
  REQUIRE_THROWS_AS(run_sequence(ctx, PulseSequence{}), std::invalid_argument);
}
