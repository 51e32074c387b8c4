#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "nvtherm/units.hpp"

namespace nvtherm {

struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Randomly occupied 13C environment on the diamond lattice.
struct BathConfig {
  double concentration = 0.011;  // 13C fraction
  double cutoff_radius_nm = 3.0;
  double b_z_mt = 50.0;
  std::uint64_t seed = 1;
  double lattice_constant_nm = constants::diamond_lattice_constant;
  double exclusion_radius_nm = 0.25;  // vacancy plus nearest neighbors
  std::size_t max_expected_spins = 4000;

  void validate() const {
    if (concentration < 0 || concentration > 1)
      throw std::invalid_argument("BathConfig: concentration must be in [0, 1]");
    if (cutoff_radius_nm <= 0)
      throw std::invalid_argument("BathConfig: cutoff radius must be > 0");
    if (lattice_constant_nm <= 0)
      throw std::invalid_argument("BathConfig: lattice constant must be > 0");
  }
};

struct BathSpin {
  Eigen::Vector3d position_nm;  // NV at origin, z along the NV axis
  double a_zz_khz = 0;
  double a_zx_khz = 0;
  double a_zy_khz = 0;
  double gamma_n = constants::gamma_c13;  // MHz/mT
};

// Secular point-dipole hyperfine components A_z{z,x,y} in kHz for a 13C at
// the given position (nm). A_zi = (C/r^3)(3 n_z n_i - delta_zi).
inline Eigen::Vector3d dipolar_hyperfine(const Eigen::Vector3d& position_nm) {
  const double r = position_nm.norm();
  if (r <= 0) throw std::invalid_argument("dipolar_hyperfine: zero-length position");
  const Eigen::Vector3d n = position_nm / r;
  const double c = constants::dipolar_prefactor_e_c13_khz_nm3 / (r * r * r);
  return {c * 3.0 * n.z() * n.x(),          // a_zx
          c * 3.0 * n.z() * n.y(),          // a_zy
          c * (3.0 * n.z() * n.z() - 1.0)}; // a_zz
}

namespace detail {

// Rotation taking the crystal [111] direction onto +z: positions are
// generated in conventional-cell coordinates and reported in the NV frame.
inline Eigen::Matrix3d nv_frame_rotation() {
  const Eigen::Vector3d zhat = Eigen::Vector3d(1, 1, 1).normalized();
  const Eigen::Vector3d xhat = Eigen::Vector3d(1, -1, 0).normalized();
  const Eigen::Vector3d yhat = zhat.cross(xhat);
  Eigen::Matrix3d r;
  r.row(0) = xhat;
  r.row(1) = yhat;
  r.row(2) = zhat;
  return r;
}

// Carbon sites of the diamond conventional cell, in units of the lattice
// constant (8 sites: fcc plus the (1/4,1/4,1/4)-shifted basis).
inline const std::vector<Eigen::Vector3d>& diamond_cell_sites() {
  static const std::vector<Eigen::Vector3d> sites = [] {
    std::vector<Eigen::Vector3d> s;
    const double fcc[4][3] = {{0, 0, 0}, {0, 0.5, 0.5}, {0.5, 0, 0.5}, {0.5, 0.5, 0}};
    for (const auto& f : fcc) {
      s.emplace_back(f[0], f[1], f[2]);
      s.emplace_back(f[0] + 0.25, f[1] + 0.25, f[2] + 0.25);
    }
    return s;
  }();
  return sites;
}

}  // namespace detail

// Number of candidate carbon sites within the cutoff shell.
inline std::size_t lattice_sites_within(const BathConfig& config) {
  config.validate();
  const double a = config.lattice_constant_nm;
  const int nmax = static_cast<int>(std::ceil(config.cutoff_radius_nm / a)) + 1;
  const double r2_max = config.cutoff_radius_nm * config.cutoff_radius_nm;
  const double r2_min = config.exclusion_radius_nm * config.exclusion_radius_nm;
  std::size_t count = 0;
  for (int i = -nmax; i <= nmax; ++i)
    for (int j = -nmax; j <= nmax; ++j)
      for (int k = -nmax; k <= nmax; ++k)
        for (const auto& site : detail::diamond_cell_sites()) {
          const Eigen::Vector3d p = a * (Eigen::Vector3d(i, j, k) + site);
          const double r2 = p.squaredNorm();
          if (r2 > r2_min && r2 <= r2_max) ++count;
        }
  return count;
}

// Occupy each lattice site independently with probability c, deterministic
// for a given seed. Site visit order is fixed by the cell loop.
inline std::vector<BathSpin> sample_bath(const BathConfig& config) {
  config.validate();
  const std::size_t n_sites = lattice_sites_within(config);
  if (config.concentration * static_cast<double>(n_sites) >
      static_cast<double>(config.max_expected_spins))
    throw ResourceError("sample_bath: expected spin count " +
                        std::to_string(config.concentration * n_sites) +
                        " exceeds cap " + std::to_string(config.max_expected_spins));

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const Eigen::Matrix3d frame = detail::nv_frame_rotation();

  const double a = config.lattice_constant_nm;
  const int nmax = static_cast<int>(std::ceil(config.cutoff_radius_nm / a)) + 1;
  const double r2_max = config.cutoff_radius_nm * config.cutoff_radius_nm;
  const double r2_min = config.exclusion_radius_nm * config.exclusion_radius_nm;

  std::vector<BathSpin> bath;
  for (int i = -nmax; i <= nmax; ++i)
    for (int j = -nmax; j <= nmax; ++j)
      for (int k = -nmax; k <= nmax; ++k)
        for (const auto& site : detail::diamond_cell_sites()) {
          const Eigen::Vector3d p_cell = a * (Eigen::Vector3d(i, j, k) + site);
          const double r2 = p_cell.squaredNorm();
          if (r2 <= r2_min || r2 > r2_max) continue;
          if (uni(rng) >= config.concentration) continue;
          BathSpin spin;
          spin.position_nm = frame * p_cell;
          const Eigen::Vector3d hf = dipolar_hyperfine(spin.position_nm);
          spin.a_zx_khz = hf(0);
          spin.a_zy_khz = hf(1);
          spin.a_zz_khz = hf(2);
          bath.push_back(spin);
        }
  return bath;
}

}  // namespace nvtherm
