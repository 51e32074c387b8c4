#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nvtherm/spin_system.hpp"

namespace nvtherm {

struct SelectivityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Transition { minus, plus };

struct PulseElement {
  enum class Kind { mw_pulse, free_evolution };
  Kind kind = Kind::free_evolution;
  Transition transition = Transition::minus;  // mw only
  double rotation_angle = 0;                  // rad, mw only, in (0, 2pi]
  double pulse_phase = 0;                     // rad, mw only
  double duration_us = 0;                     // free evolution only

  static PulseElement mw(Transition t, double angle, double phase = 0) {
    PulseElement e;
    e.kind = Kind::mw_pulse;
    e.transition = t;
    e.rotation_angle = angle;
    e.pulse_phase = phase;
    if (angle <= 0 || angle > two_pi)
      throw std::invalid_argument("PulseElement: rotation angle must be in (0, 2pi]");
    return e;
  }

  static PulseElement free(double duration_us) {
    PulseElement e;
    e.kind = Kind::free_evolution;
    e.duration_us = duration_us;
    if (duration_us < 0)
      throw std::invalid_argument("PulseElement: duration must be >= 0");
    return e;
  }
};

struct PulseSequence {
  std::vector<PulseElement> elements;
  // readout basis: population of |0> (the only supported basis)

  double total_free_time() const {
    double t = 0;
    for (const auto& e : elements)
      if (e.kind == PulseElement::Kind::free_evolution) t += e.duration_us;
    return t;
  }
};

// Quasi-static perturbations applied during free evolution plus phase
// diagnostics filled in by run_sequence.
struct EvolutionContext {
  SpinSystemSpec spec;
  Eigen::Vector3d static_b_offset_mt = Eigen::Vector3d::Zero();
  double delta_d_khz = 0;

  // diagnostic outputs, recomputed per run
  mutable double phi_d = 0;
  mutable double phi_b = 0;
};

// Ideal instantaneous rotation on the {|0>, |target>} subspace of the
// unperturbed eigenbasis, identity elsewhere. Electron space only (3x3).
inline MatrixXcd mw_pulse_unitary(const SpinSystemSpec& spec, Transition transition,
                                  double rotation_angle, double pulse_phase) {
  SpinSystemSpec ref = spec;
  ref.delta_d_khz = 0;
  ref.nitrogen.reset();
  const auto [f_minus, f_plus] = transition_frequencies(ref);
  if (std::abs(f_plus - f_minus) < 1.0)
    throw SelectivityError("mw_pulse_unitary: transitions closer than 1 MHz cannot be addressed");

  const int target = transition == Transition::minus ? idx_minus : idx_plus;
  const Complex c = std::cos(0.5 * rotation_angle);
  const Complex s01 = Complex(0, -1) * std::sin(0.5 * rotation_angle) *
                      std::exp(Complex(0, -pulse_phase));
  const Complex s10 = Complex(0, -1) * std::sin(0.5 * rotation_angle) *
                      std::exp(Complex(0, pulse_phase));

  MatrixXcd r = MatrixXcd::Identity(3, 3);
  r(idx_zero, idx_zero) = c;
  r(target, target) = c;
  r(idx_zero, target) = s01;
  r(target, idx_zero) = s10;

  // rotate into the eigenbasis of the unperturbed Hamiltonian
  const MatrixXcd h0 = build_hamiltonian(ref);
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h0);
  MatrixXcd v = MatrixXcd::Zero(3, 3);  // columns ordered by basis pairing
  std::vector<bool> taken(3, false);
  for (int b = 0; b < 3; ++b) {
    int best = -1;
    double best_ov = -1;
    for (int k = 0; k < 3; ++k) {
      if (taken[k]) continue;
      const double ov = std::norm(es.eigenvectors()(b, k));
      if (ov > best_ov + 1e-15) {
        best_ov = ov;
        best = k;
      }
    }
    taken[best] = true;
    v.col(b) = es.eigenvectors().col(best);
  }
  return v * r * v.adjoint();
}

namespace detail {

struct EigenDecomp {
  MatrixXcd v;
  Eigen::VectorXd e;

  explicit EigenDecomp(const MatrixXcd& h) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h);
    v = es.eigenvectors();
    e = es.eigenvalues();
  }

  MatrixXcd exp_at(double t) const {  // exp(-2 pi i H t)
    VectorXcd ph(e.size());
    for (Eigen::Index k = 0; k < e.size(); ++k)
      ph(k) = std::exp(Complex(0, -two_pi * e(k) * t));
    return v * ph.asDiagonal() * v.adjoint();
  }
};

// Dominant coherence branch of the current state: which of |->, |+> carries
// more population alongside |0>. Drives the phi_B sign bookkeeping only.
inline int branch_sign(const VectorXcd& amps, int nuclear_dim) {
  double p_minus = 0, p_plus = 0;
  for (int k = 0; k < nuclear_dim; ++k) {
    p_minus += std::norm(amps(idx_minus * nuclear_dim + k));
    p_plus += std::norm(amps(idx_plus * nuclear_dim + k));
  }
  return p_plus > p_minus ? -1 : +1;
}

}  // namespace detail

// Execute a pulse sequence starting from |0> and return the |0> population.
// Free evolution uses the full Hamiltonian (including delta_d and the static
// field offset) in the interaction picture of the unperturbed Hamiltonian,
// i.e. the rotating frame referenced to the unperturbed f-/f+ transitions.
inline double run_sequence(const EvolutionContext& ctx, const PulseSequence& seq) {
  if (seq.elements.empty())
    throw std::invalid_argument("run_sequence: sequence must contain at least one element");
  ctx.spec.validate();

  SpinSystemSpec ref = ctx.spec;
  ref.delta_d_khz = 0;

  SpinSystemSpec pert = ctx.spec;
  pert.delta_d_khz = ctx.spec.delta_d_khz + ctx.delta_d_khz;
  pert.b_field_mt = ctx.spec.b_field_mt + ctx.static_b_offset_mt;

  const detail::EigenDecomp h0(build_hamiltonian(ref));
  const detail::EigenDecomp h1(build_hamiltonian(pert));

  const int nuclear_dim = ctx.spec.nitrogen ? ctx.spec.nitrogen->multiplicity() : 1;
  const MatrixXcd id_n = MatrixXcd::Identity(nuclear_dim, nuclear_dim);

  QuantumState state = make_basis_state(ctx.spec, idx_zero * nuclear_dim);
  const double dd_mhz = 1e-3 * (ctx.spec.delta_d_khz + ctx.delta_d_khz);
  const double db_axial = ctx.static_b_offset_mt.z();

  ctx.phi_d = 0;
  ctx.phi_b = 0;

  double t = 0;
  for (const auto& el : seq.elements) {
    if (el.kind == PulseElement::Kind::mw_pulse) {
      MatrixXcd u = mw_pulse_unitary(ref, el.transition, el.rotation_angle, el.pulse_phase);
      if (nuclear_dim > 1) u = kron(u, id_n);
      state.amplitudes = u * state.amplitudes;
    } else {
      const double d = el.duration_us;
      if (d > 0) {
        const int sign = detail::branch_sign(state.amplitudes, nuclear_dim);
        ctx.phi_b += sign * two_pi * ctx.spec.gamma_e * db_axial * d;
        ctx.phi_d += -pi * dd_mhz * d;
        state.amplitudes = h0.exp_at(-(t + d)) * (h1.exp_at(d) * (h0.exp_at(t) * state.amplitudes));
        t += d;
      }
    }
  }

  double p0 = 0;
  for (int k = 0; k < nuclear_dim; ++k)
    p0 += std::norm(state.amplitudes(idx_zero * nuclear_dim + k));
  return p0;
}

// pi/2 - tau - pi/2 on a single transition; fringe maximum at zero detuning.
inline PulseSequence ramsey_sequence(double tau, Transition t = Transition::minus) {
  PulseSequence s;
  s.elements = {PulseElement::mw(t, 0.5 * pi, 0), PulseElement::free(tau),
                PulseElement::mw(t, 0.5 * pi, pi)};
  return s;
}

// pi/2 - tau/2 - pi - tau/2 - pi/2 on a single transition.
inline PulseSequence hahn_echo_sequence(double tau, Transition t = Transition::minus) {
  PulseSequence s;
  s.elements = {PulseElement::mw(t, 0.5 * pi, 0), PulseElement::free(0.5 * tau),
                PulseElement::mw(t, pi, 0), PulseElement::free(0.5 * tau),
                PulseElement::mw(t, 0.5 * pi, 0)};
  return s;
}

// The D-Ramsey sequence: superpose |0> and |->, accumulate tau/2, swap the
// coherence onto the |0>/|+> branch with a composite double-quantum block,
// accumulate another tau/2, read out on the plus transition. Magnetic
// detuning phases cancel between the halves while crystal-field phases add.
// The swap block needs three pi pulses: any two-pulse minus/plus composite
// moves the |0> amplitude away and destroys the phase bookkeeping; the
// minus-plus-minus composite maps a|0> + b|-> onto -(a|0> + b|+>).
inline PulseSequence d_ramsey_sequence(double tau) {
  if (tau <= 0) throw std::invalid_argument("d_ramsey_sequence: tau must be > 0");
  PulseSequence s;
  s.elements = {PulseElement::mw(Transition::minus, 0.5 * pi, 0),
                PulseElement::free(0.5 * tau),
                PulseElement::mw(Transition::minus, pi, 0),
                PulseElement::mw(Transition::plus, pi, 0),
                PulseElement::mw(Transition::minus, pi, 0),
                PulseElement::free(0.5 * tau),
                PulseElement::mw(Transition::plus, 0.5 * pi, pi)};
  return s;
}

// Swap-order variant (plus branch first); |delta D| fringe frequency is
// unchanged, only the fringe phase convention flips.
inline PulseSequence d_ramsey_sequence_swapped(double tau) {
  if (tau <= 0) throw std::invalid_argument("d_ramsey_sequence_swapped: tau must be > 0");
  PulseSequence s;
  s.elements = {PulseElement::mw(Transition::plus, 0.5 * pi, 0),
                PulseElement::free(0.5 * tau),
                PulseElement::mw(Transition::plus, pi, 0),
                PulseElement::mw(Transition::minus, pi, 0),
                PulseElement::mw(Transition::plus, pi, 0),
                PulseElement::free(0.5 * tau),
                PulseElement::mw(Transition::minus, 0.5 * pi, pi)};
  return s;
}

// --- ordered-record text serialization -------------------------------------

inline std::string sequence_to_text(const PulseSequence& seq) {
  std::ostringstream os;
  os << "# pulse sequence: one element per line\n";
  os.precision(17);
  for (const auto& e : seq.elements) {
    if (e.kind == PulseElement::Kind::mw_pulse)
      os << "mw " << (e.transition == Transition::minus ? "minus" : "plus") << " "
         << e.rotation_angle << " " << e.pulse_phase << "\n";
    else
      os << "free " << e.duration_us << "\n";
  }
  return os.str();
}

inline PulseSequence sequence_from_text(const std::string& text) {
  PulseSequence seq;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "mw") {
      std::string tr;
      double angle, phase;
      if (!(ls >> tr >> angle >> phase) || (tr != "minus" && tr != "plus"))
        throw std::invalid_argument("sequence_from_text: bad mw record at line " +
                                    std::to_string(lineno));
      seq.elements.push_back(PulseElement::mw(
          tr == "minus" ? Transition::minus : Transition::plus, angle, phase));
    } else if (kind == "free") {
      double d;
      if (!(ls >> d))
        throw std::invalid_argument("sequence_from_text: bad free record at line " +
                                    std::to_string(lineno));
      seq.elements.push_back(PulseElement::free(d));
    } else {
      throw std::invalid_argument("sequence_from_text: unknown element '" + kind +
                                  "' at line " + std::to_string(lineno));
    }
  }
  if (seq.elements.empty())
    throw std::invalid_argument("sequence_from_text: no elements");
  return seq;
}

}  // namespace nvtherm
