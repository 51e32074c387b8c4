#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "nvtherm/bath.hpp"
#include "nvtherm/pulse.hpp"
#include "nvtherm/spin_system.hpp"

namespace nvtherm {

struct NotImplementedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CoherenceCurve {
  std::vector<double> tau_grid_us;
  std::vector<double> l_values;
  double t_d_estimate_us = std::numeric_limits<double>::quiet_NaN();
};

enum class SequenceFamily { ramsey, hahn_echo, d_ramsey };

// The bath-filter view of a sequence: during each free-evolution interval
// (a fixed fraction of tau) the two interfering electron amplitudes sit on
// levels m_a and m_b, conditioning the bath evolution.
struct SequenceFilter {
  SequenceFamily family;
  struct Interval {
    double fraction;
    int m_a;  // |0>-side path
    int m_b;  // |-> / |+> side path
  };
  std::vector<Interval> intervals;
};

inline SequenceFilter classify_sequence(const PulseSequence& seq) {
  auto is_mw = [](const PulseElement& e, double angle) {
    return e.kind == PulseElement::Kind::mw_pulse && std::abs(e.rotation_angle - angle) < 1e-9;
  };
  auto is_free = [](const PulseElement& e) {
    return e.kind == PulseElement::Kind::free_evolution;
  };
  auto level = [](Transition t) { return t == Transition::minus ? -1 : +1; };
  const auto& el = seq.elements;

  if (el.size() == 3 && is_mw(el[0], 0.5 * pi) && is_free(el[1]) && is_mw(el[2], 0.5 * pi) &&
      el[0].transition == el[2].transition) {
    SequenceFilter f{SequenceFamily::ramsey, {{1.0, 0, level(el[0].transition)}}};
    return f;
  }
  if (el.size() == 5 && is_mw(el[0], 0.5 * pi) && is_free(el[1]) && is_mw(el[2], pi) &&
      is_free(el[3]) && is_mw(el[4], 0.5 * pi) && el[0].transition == el[2].transition &&
      el[0].transition == el[4].transition) {
    const int m = level(el[0].transition);
    SequenceFilter f{SequenceFamily::hahn_echo, {{0.5, 0, m}, {0.5, m, 0}}};
    return f;
  }
  if (el.size() == 7 && is_mw(el[0], 0.5 * pi) && is_free(el[1]) && is_mw(el[2], pi) &&
      is_mw(el[3], pi) && is_mw(el[4], pi) && is_free(el[5]) && is_mw(el[6], 0.5 * pi) &&
      el[2].transition == el[0].transition && el[3].transition != el[0].transition &&
      el[4].transition == el[0].transition && el[6].transition != el[0].transition) {
    const int m1 = level(el[0].transition);
    SequenceFilter f{SequenceFamily::d_ramsey, {{0.5, 0, m1}, {0.5, 0, -m1}}};
    return f;
  }
  throw NotImplementedError("classify_sequence: unsupported sequence family");
}

struct CceOptions {
  // Pairs farther apart than this contribute no intra-pair dynamics and are
  // skipped. Infinite by default (all pairs kept).
  double pair_separation_cutoff_nm = std::numeric_limits<double>::infinity();
  // Skip pairs whose intra-pair coupling satisfies 2 pi |b| tau_max below
  // this phase threshold. 0 keeps every pair.
  double min_pair_phase_rad = 0.0;
};

namespace detail {

// Conditional bath Hamiltonian of a cluster at electron level m, in MHz.
// Secular hyperfine only; intra-pair nuclear dipolar coupling included.
inline MatrixXcd cluster_hamiltonian(const std::vector<BathSpin>& cluster, int m, double b_z_mt) {
  const SpinOperatorSet half = build_spin_operators(2);
  const std::size_t n = cluster.size();
  const Eigen::Index dim = Eigen::Index(1) << n;
  MatrixXcd h = MatrixXcd::Zero(dim, dim);

  auto embed = [&](const MatrixXcd& op, std::size_t j) {
    MatrixXcd out = MatrixXcd::Identity(1, 1);
    for (std::size_t k = 0; k < n; ++k)
      out = kron(out, k == j ? op : MatrixXcd::Identity(2, 2));
    return out;
  };

  for (std::size_t j = 0; j < n; ++j) {
    const BathSpin& s = cluster[j];
    MatrixXcd hj = 1e-3 * m *
                   (s.a_zz_khz * half.sz + s.a_zx_khz * half.sx + s.a_zy_khz * half.sy);
    hj -= s.gamma_n * b_z_mt * half.sz;
    h += embed(hj, j);
  }

  if (n == 2) {
    const Eigen::Vector3d d = cluster[0].position_nm - cluster[1].position_nm;
    const double r = d.norm();
    if (r > 0) {
      const Eigen::Vector3d u = d / r;
      const double b = 1e-3 * constants::dipolar_prefactor_c13_c13_khz_nm3 / (r * r * r);
      const MatrixXcd ix0 = embed(half.sx, 0), iy0 = embed(half.sy, 0), iz0 = embed(half.sz, 0);
      const MatrixXcd ix1 = embed(half.sx, 1), iy1 = embed(half.sy, 1), iz1 = embed(half.sz, 1);
      const MatrixXcd in0 = u.x() * ix0 + u.y() * iy0 + u.z() * iz0;
      const MatrixXcd in1 = u.x() * ix1 + u.y() * iy1 + u.z() * iz1;
      h += b * (ix0 * ix1 + iy0 * iy1 + iz0 * iz1 - 3.0 * in0 * in1);
    }
  }
  return h;
}

struct ClusterPropagators {
  std::vector<EigenDecomp> decomps;  // indexed by m + 1
  Eigen::Index dim;

  ClusterPropagators(const std::vector<BathSpin>& cluster, double b_z_mt)
      : decomps{EigenDecomp(cluster_hamiltonian(cluster, -1, b_z_mt)),
                EigenDecomp(cluster_hamiltonian(cluster, 0, b_z_mt)),
                EigenDecomp(cluster_hamiltonian(cluster, +1, b_z_mt))},
        dim(decomps[0].v.rows()) {}

  // L(tau) = Tr[U_a^dag U_b] / dim along the two electron paths.
  Complex coherence(const SequenceFilter& filter, double tau) const {
    MatrixXcd u_a = MatrixXcd::Identity(dim, dim);
    MatrixXcd u_b = u_a;
    for (const auto& iv : filter.intervals) {
      u_a = decomps[static_cast<std::size_t>(iv.m_a + 1)].exp_at(iv.fraction * tau) * u_a;
      u_b = decomps[static_cast<std::size_t>(iv.m_b + 1)].exp_at(iv.fraction * tau) * u_b;
    }
    return (u_a.adjoint() * u_b).trace() / static_cast<double>(dim);
  }
};

}  // namespace detail

// Cluster-correlation expansion at pair order: L(tau) is the product of all
// single-spin factors and all pair correlation corrections
// L_ij / (L_i L_j). Exact for baths of one or two spins. The unpolarized
// bath state (identity density matrix) is assumed.
inline CoherenceCurve cce_coherence(const SpinSystemSpec& spec, const std::vector<BathSpin>& bath,
                                    const PulseSequence& seq, const std::vector<double>& tau_grid,
                                    const CceOptions& opt = {}) {
  spec.validate();
  const SequenceFilter filter = classify_sequence(seq);
  const double b_z = spec.b_field_mt.z();
  const std::size_t n_tau = tau_grid.size();
  const double tau_max = n_tau ? *std::max_element(tau_grid.begin(), tau_grid.end()) : 0.0;

  std::vector<Complex> total(n_tau, Complex(1.0, 0.0));
  std::vector<std::vector<Complex>> singles(bath.size(), std::vector<Complex>(n_tau));

  for (std::size_t i = 0; i < bath.size(); ++i) {
    detail::ClusterPropagators prop({bath[i]}, b_z);
    for (std::size_t t = 0; t < n_tau; ++t) {
      singles[i][t] = prop.coherence(filter, tau_grid[t]);
      total[t] *= singles[i][t];
    }
  }

  for (std::size_t i = 0; i < bath.size(); ++i) {
    for (std::size_t j = i + 1; j < bath.size(); ++j) {
      const double sep = (bath[i].position_nm - bath[j].position_nm).norm();
      if (sep > opt.pair_separation_cutoff_nm) continue;
      if (opt.min_pair_phase_rad > 0 && sep > 0) {
        const double b_khz = constants::dipolar_prefactor_c13_c13_khz_nm3 / (sep * sep * sep);
        if (two_pi * 1e-3 * b_khz * tau_max < opt.min_pair_phase_rad) continue;
      }
      detail::ClusterPropagators prop({bath[i], bath[j]}, b_z);
      for (std::size_t t = 0; t < n_tau; ++t) {
        const Complex denom = singles[i][t] * singles[j][t];
        if (std::abs(denom) < 1e-12) continue;  // factor ill-defined, skip
        total[t] *= prop.coherence(filter, tau_grid[t]) / denom;
      }
    }
  }

  CoherenceCurve curve;
  curve.tau_grid_us = tau_grid;
  curve.l_values.resize(n_tau);
  for (std::size_t t = 0; t < n_tau; ++t)
    curve.l_values[t] = std::clamp(total[t].real(), -1.0, 1.0);
  return curve;
}

// Log-spaced tau grid, capped at 64 points per decade.
inline std::vector<double> log_tau_grid(double tau_min, double tau_max, int points) {
  if (tau_min <= 0 || tau_max <= tau_min || points < 2)
    throw std::invalid_argument("log_tau_grid: need 0 < tau_min < tau_max, points >= 2");
  const double decades = std::log10(tau_max / tau_min);
  points = std::min(points, std::max(2, static_cast<int>(64 * decades)));
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k)
    grid[static_cast<std::size_t>(k)] =
        tau_min * std::pow(10.0, decades * k / (points - 1));
  return grid;
}

}  // namespace nvtherm
