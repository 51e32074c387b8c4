#pragma once

// Unit conventions used throughout: energies/frequencies in MHz, magnetic
// fields in mT, times in microseconds, lengths in nm. Angular 2*pi factors
// are applied only inside propagators.

namespace nvtherm {

namespace constants {

// Electron gyromagnetic ratio of the NV center, MHz/mT.
inline constexpr double gamma_e = 28.024;

// 13C nuclear gyromagnetic ratio, MHz/mT.
inline constexpr double gamma_c13 = 0.010705;

// 14N / 15N nuclear gyromagnetic ratios, MHz/mT.
inline constexpr double gamma_n14 = 0.003077;
inline constexpr double gamma_n15 = -0.004316;

// Zero-field splitting at the reference resonance condition, MHz.
inline constexpr double d_zfs_reference = 2870.685;

// Diamond conventional lattice constant, nm (8 carbon sites per cell).
inline constexpr double diamond_lattice_constant = 0.357;

// Point-dipole electron-13C coupling prefactor, kHz * nm^3:
// (mu0 / 4 pi) * h * gamma_e * gamma_n / r^3 expressed in kHz with r in nm.
// a_zz on the NV axis equals 2 * prefactor / r^3.
inline constexpr double dipolar_prefactor_e_c13_khz_nm3 = 19.878;

// Intra-bath 13C-13C dipolar prefactor, kHz * nm^3.
inline constexpr double dipolar_prefactor_c13_c13_khz_nm3 = 7.593e-3;

// Temperature coefficient dD/dT under ambient conditions, kHz/K.
inline constexpr double c_t_ambient = -74.2;

}  // namespace constants

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

}  // namespace nvtherm
