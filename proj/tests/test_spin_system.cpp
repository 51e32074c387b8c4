#include <catch2/catch_amalgamated.hpp>

#include "nvtherm/spin_system.hpp"

using namespace nvtherm;

namespace {

SpinSystemSpec bare_spec(double d = 2870.0, double bz = 0.0) {
  SpinSystemSpec s;
  s.d_zfs_mhz = d;
  s.b_field_mt = {0, 0, bz};
  return s;
}

std::vector<double> sorted_eigenvalues(const MatrixXcd& h) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h);
  std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  return v;
}

}  // namespace

TEST_CASE("zero-field Hamiltonian has eigenvalues {0, D, D}") {
  const auto ev = sorted_eigenvalues(build_hamiltonian(bare_spec(2870.0)));
  REQUIRE(ev[0] == Catch::Approx(0.0).margin(1e-9));
  REQUIRE(ev[1] == Catch::Approx(2870.0).epsilon(1e-12));
  REQUIRE(ev[2] == Catch::Approx(2870.0).epsilon(1e-12));
}

TEST_CASE("axial field splits by gamma_e Bz") {
  SpinSystemSpec s = bare_spec(2870.0, 5.0);
  s.gamma_e = 28.024;
  const auto ev = sorted_eigenvalues(build_hamiltonian(s));
  REQUIRE(ev[0] == Catch::Approx(0.0).margin(1e-9));
  REQUIRE(ev[1] == Catch::Approx(2870.0 - 140.12).epsilon(1e-9));
  REQUIRE(ev[2] == Catch::Approx(2870.0 + 140.12).epsilon(1e-9));
}

TEST_CASE("transverse field shifts agree with second-order perturbation theory") {
  SpinSystemSpec s = bare_spec(2870.0);
  s.b_field_mt = {1.0, 0, 0};
  const auto ev = sorted_eigenvalues(build_hamiltonian(s));

  // perturbation-theory oracle: couplings <0|gamma Bx Sx|+-> = gamma Bx / sqrt(2)
  // shift the |0> level down by 2 (gamma Bx)^2 / (2 D) and the upper doublet
  // splits/shifts accordingly at second order.
  const double g = s.gamma_e * 1.0;
  const double eps0 = -g * g / 2870.0;  // two levels, each (g/sqrt2)^2 / D
  REQUIRE(ev[0] == Catch::Approx(eps0).epsilon(0.01));
  // trace identity pins the upper doublet once the |0> shift is known
  REQUIRE(ev[1] + ev[2] == Catch::Approx(2.0 * 2870.0 - ev[0]).epsilon(1e-9));
  // upper levels shift upward relative to D
  REQUIRE(ev[2] > 2870.0);
}

TEST_CASE("Hamiltonian is Hermitian, with and without nitrogen") {
  SpinSystemSpec s = bare_spec(2870.0, 3.0);
  s.b_field_mt = {0.2, -0.1, 3.0};
  auto check = [](const MatrixXcd& h) {
    REQUIRE((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  };
  check(build_hamiltonian(s));
  s.nitrogen = NitrogenSpec{};
  check(build_hamiltonian(s));
  s.nitrogen = NitrogenSpec::n15_defaults();
  check(build_hamiltonian(s));
}

TEST_CASE("nitrogen isotope fixes the Hilbert space dimension") {
  SpinSystemSpec s = bare_spec();
  REQUIRE(s.dimension() == 3);
  s.nitrogen = NitrogenSpec{};
  REQUIRE(s.dimension() == 9);
  s.nitrogen = NitrogenSpec::n15_defaults();
  REQUIRE(s.dimension() == 6);
}

TEST_CASE("transition frequencies: degenerate zero-field case") {
  const auto [fm, fp] = transition_frequencies(bare_spec(2870.0));
  REQUIRE(fm == Catch::Approx(2870.0).epsilon(1e-12));
  REQUIRE(fp == Catch::Approx(2870.0).epsilon(1e-12));
}

TEST_CASE("transition frequencies: axial splitting and delta_d shift") {
  SpinSystemSpec s = bare_spec(2870.0, 5.0);
  auto [fm, fp] = transition_frequencies(s);
  REQUIRE(fm == Catch::Approx(2870.0 - 140.12).epsilon(1e-9));
  REQUIRE(fp == Catch::Approx(2870.0 + 140.12).epsilon(1e-9));

  // a -74.2 kHz crystal-field change shifts both lines equally
  s.delta_d_khz = -74.2;
  auto [fm2, fp2] = transition_frequencies(s);
  REQUIRE(fm2 - fm == Catch::Approx(-74.2e-3).epsilon(1e-6));
  REQUIRE(fp2 - fp == Catch::Approx(-74.2e-3).epsilon(1e-6));
}

TEST_CASE("eigenvalue assignment is stable under delta_d perturbations") {
  SpinSystemSpec s = bare_spec(2870.0, 1.0);
  for (double dd : {-1000.0, -100.0, 0.0, 100.0, 1000.0}) {
    s.delta_d_khz = dd;
    auto [fm, fp] = transition_frequencies(s);
    REQUIRE(fp - fm == Catch::Approx(2.0 * 28.024).epsilon(1e-6));
  }
}

TEST_CASE("invalid specs are rejected") {
  SpinSystemSpec s = bare_spec();
  s.d_zfs_mhz = -1;
  REQUIRE_THROWS_AS(build_hamiltonian(s), std::invalid_argument);
  s = bare_spec();
  s.gamma_e = 0;
  REQUIRE_THROWS_AS(build_hamiltonian(s), std::invalid_argument);
}

TEST_CASE("evolve: identity at t=0 and stationary eigenstates") {
  SpinSystemSpec s = bare_spec(2870.0, 5.0);
  const MatrixXcd h = build_hamiltonian(s);
  QuantumState psi = make_basis_state(s, idx_zero);
  psi.amplitudes(idx_zero) = Complex(1 / std::sqrt(2.0), 0);
  psi.amplitudes(idx_minus) = Complex(0, 1 / std::sqrt(2.0));

  const QuantumState same = evolve(psi, h, 0.0);
  REQUIRE((same.amplitudes - psi.amplitudes).norm() < 1e-12);

  // eigenstate picks up a pure phase
  QuantumState eig = make_basis_state(s, idx_minus);
  const double e_minus = 2870.0 - 5.0 * 28.024;
  const QuantumState evolved = evolve(eig, h, 0.123);
  const Complex expected = std::exp(Complex(0, -two_pi * e_minus * 0.123));
  REQUIRE(std::abs(evolved.amplitudes(idx_minus) - expected) < 1e-10);
}

TEST_CASE("evolve: group property and norm/energy conservation") {
  SpinSystemSpec s = bare_spec(2870.0, 2.0);
  s.b_field_mt = {0.3, 0.1, 2.0};
  const MatrixXcd h = build_hamiltonian(s);

  QuantumState psi = make_basis_state(s, idx_zero);
  psi.amplitudes << Complex(0.2, 0.1), Complex(0.5, -0.3), Complex(0.1, 0.7);
  psi.amplitudes.normalize();

  const QuantumState a = evolve(evolve(psi, h, 0.37), h, 0.81);
  const QuantumState b = evolve(psi, h, 0.37 + 0.81);
  REQUIRE((a.amplitudes - b.amplitudes).norm() < 1e-9);
  REQUIRE(a.norm() == Catch::Approx(1.0).margin(1e-10));

  const double e0 = (psi.amplitudes.adjoint() * h * psi.amplitudes)(0).real();
  const double e1 = (a.amplitudes.adjoint() * h * a.amplitudes)(0).real();
  REQUIRE(e1 == Catch::Approx(e0).epsilon(1e-9));
}

TEST_CASE("evolve rejects dimension mismatch and negative times") {
  SpinSystemSpec s = bare_spec();
  const MatrixXcd h = build_hamiltonian(s);
  QuantumState psi = make_basis_state(s, idx_zero);
  REQUIRE_THROWS_AS(evolve(psi, MatrixXcd::Identity(4, 4), 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(evolve(psi, h, -1.0), std::invalid_argument);
}

TEST_CASE("analytic eigenvalues match eigensolver over a (D, Bz) grid") {
  for (double d = 2800; d <= 2940; d += 20)
    for (double bz = 0.5; bz <= 60; bz += 10) {
      SpinSystemSpec s = bare_spec(d, bz);
      const auto ev = sorted_eigenvalues(build_hamiltonian(s));
      const double split = s.gamma_e * bz;
      REQUIRE(std::abs(ev[0]) < 1e-9 * d);
      REQUIRE(ev[1] == Catch::Approx(d - split).epsilon(1e-9));
      REQUIRE(ev[2] == Catch::Approx(d + split).epsilon(1e-9));
    }
}
