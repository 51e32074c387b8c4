#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nvtherm/spin_ops.hpp"
#include "nvtherm/units.hpp"

namespace nvtherm {

struct DegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class NitrogenIsotope { n14, n15 };

struct NitrogenSpec {
  NitrogenIsotope isotope = NitrogenIsotope::n14;
  double a_par_mhz = -2.16;    // axial hyperfine A_zz
  double a_perp_mhz = -2.7;    // transverse secular magnitude (A_zx)
  double gamma_n = constants::gamma_n14;  // MHz/mT
  double quadrupole_mhz = -4.96;          // P * Iz^2, N14 only

  int multiplicity() const { return isotope == NitrogenIsotope::n14 ? 3 : 2; }

  static NitrogenSpec n15_defaults() {
    NitrogenSpec n;
    n.isotope = NitrogenIsotope::n15;
    n.a_par_mhz = 3.03;
    n.a_perp_mhz = 3.65;
    n.gamma_n = constants::gamma_n15;
    n.quadrupole_mhz = 0.0;
    return n;
  }
};

// Static parameters of the central NV spin system. Units: MHz, mT, kHz for
// the crystal-field offset delta_d.
struct SpinSystemSpec {
  double d_zfs_mhz = constants::d_zfs_reference;
  double gamma_e = constants::gamma_e;  // MHz/mT
  Eigen::Vector3d b_field_mt = Eigen::Vector3d::Zero();
  std::optional<NitrogenSpec> nitrogen;
  double delta_d_khz = 0.0;

  void validate() const {
    if (d_zfs_mhz <= 0) throw std::invalid_argument("SpinSystemSpec: d_zfs must be > 0");
    if (gamma_e <= 0) throw std::invalid_argument("SpinSystemSpec: gamma_e must be > 0");
  }

  int dimension() const { return nitrogen ? 3 * nitrogen->multiplicity() : 3; }
};

// State vector over the (electron x nuclear) product basis. Basis ordering
// follows the spin operators: electron m_S = +1, 0, -1; nuclear m_I
// descending.
struct QuantumState {
  VectorXcd amplitudes;
  std::vector<std::pair<double, double>> basis_labels;  // (m_S, m_I); m_I = 0 if absent

  double norm() const { return amplitudes.norm(); }
};

// Electron basis indices with sz = diag(+1, 0, -1).
inline constexpr int idx_plus = 0;
inline constexpr int idx_zero = 1;
inline constexpr int idx_minus = 2;

inline std::vector<std::pair<double, double>> basis_labels_for(const SpinSystemSpec& spec) {
  std::vector<std::pair<double, double>> labels;
  const int nn = spec.nitrogen ? spec.nitrogen->multiplicity() : 1;
  const double in = 0.5 * (nn - 1);
  for (int e = 0; e < 3; ++e)
    for (int k = 0; k < nn; ++k)
      labels.emplace_back(1.0 - e, spec.nitrogen ? in - k : 0.0);
  return labels;
}

// H = (D + dD) Sz^2 + gamma_e B.S + Sz (A_par Iz + A_perp Ix)
//     - gamma_n B.I + P Iz^2, in MHz.
inline MatrixXcd build_hamiltonian(const SpinSystemSpec& spec) {
  spec.validate();
  const SpinOperatorSet e = build_spin_operators(3);
  const Eigen::Vector3d& b = spec.b_field_mt;
  const double d_eff = spec.d_zfs_mhz + 1e-3 * spec.delta_d_khz;

  MatrixXcd h_e = d_eff * (e.sz * e.sz) +
                  spec.gamma_e * (b.x() * e.sx + b.y() * e.sy + b.z() * e.sz);
  if (!spec.nitrogen) return h_e;

  const NitrogenSpec& nit = *spec.nitrogen;
  const SpinOperatorSet n = build_spin_operators(nit.multiplicity());
  const MatrixXcd id_n = MatrixXcd::Identity(n.multiplicity, n.multiplicity);
  const MatrixXcd id_e = MatrixXcd::Identity(3, 3);

  MatrixXcd h = kron(h_e, id_n);
  h += kron(e.sz, nit.a_par_mhz * n.sz + nit.a_perp_mhz * n.sx);
  h -= nit.gamma_n * kron(id_e, b.x() * n.sx + b.y() * n.sy + b.z() * n.sz);
  if (nit.isotope == NitrogenIsotope::n14)
    h += nit.quadrupole_mhz * kron(id_e, n.sz * n.sz);
  return h;
}

// Pair each basis state with the eigenvector of maximal overlap. Greedy over
// basis indices in order; ties broken by lowest eigenvector index.
// Returns energies indexed like the basis. Throws DegeneracyError when the
// best squared overlap drops below the threshold.
inline Eigen::VectorXd paired_eigenvalues(const MatrixXcd& h,
                                          double overlap_threshold = 0.6) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h);
  const auto& vecs = es.eigenvectors();
  const auto& vals = es.eigenvalues();
  const Eigen::Index dim = h.rows();

  Eigen::VectorXd energies(dim);
  std::vector<bool> taken(static_cast<size_t>(dim), false);
  for (Eigen::Index b = 0; b < dim; ++b) {
    Eigen::Index best = -1;
    double best_ov = -1.0;
    for (Eigen::Index k = 0; k < dim; ++k) {
      if (taken[static_cast<size_t>(k)]) continue;
      const double ov = std::norm(vecs(b, k));
      if (ov > best_ov + 1e-15) {
        best_ov = ov;
        best = k;
      }
    }
    if (best_ov < overlap_threshold)
      throw DegeneracyError("paired_eigenvalues: eigenvector assignment ambiguous (overlap " +
                            std::to_string(best_ov) + " < " + std::to_string(overlap_threshold) + ")");
    taken[static_cast<size_t>(best)] = true;
    energies(b) = vals(best);
  }
  return energies;
}

// Frequencies of the |0> <-> |-> and |0> <-> |+> transitions in MHz.
// With nitrogen present the hyperfine-split lines are averaged over m_I.
inline std::pair<double, double> transition_frequencies(const SpinSystemSpec& spec) {
  const MatrixXcd h = build_hamiltonian(spec);
  const Eigen::VectorXd e = paired_eigenvalues(h);
  const int nn = spec.nitrogen ? spec.nitrogen->multiplicity() : 1;
  double f_minus = 0, f_plus = 0;
  for (int k = 0; k < nn; ++k) {
    f_plus += e(idx_plus * nn + k) - e(idx_zero * nn + k);
    f_minus += e(idx_minus * nn + k) - e(idx_zero * nn + k);
  }
  return {f_minus / nn, f_plus / nn};
}

inline QuantumState make_basis_state(const SpinSystemSpec& spec, int index) {
  QuantumState st;
  st.basis_labels = basis_labels_for(spec);
  st.amplitudes = VectorXcd::Zero(spec.dimension());
  st.amplitudes(index) = 1.0;
  return st;
}

// Exact propagation under a time-independent Hamiltonian:
// psi -> exp(-2 pi i H t) psi, H in MHz, t in us.
inline QuantumState evolve(const QuantumState& state, const MatrixXcd& h, double t) {
  if (t < 0) throw std::invalid_argument("evolve: t must be >= 0");
  if (h.rows() != state.amplitudes.size())
    throw std::invalid_argument("evolve: dimension mismatch");
  QuantumState out = state;
  out.amplitudes = propagator(h, t) * state.amplitudes;
  return out;
}

}  // namespace nvtherm
