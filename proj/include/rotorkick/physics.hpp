#pragma once

// CODATA 2018 values, SI units throughout.

namespace rotorkick {
namespace si {

inline constexpr double hbar    = 1.054571817e-34;   // J s
inline constexpr double planck  = 6.62607015e-34;    // J s
inline constexpr double c_light = 2.99792458e8;      // m/s
inline constexpr double k_B     = 1.380649e-23;      // J/K
inline constexpr double eps0    = 8.8541878128e-12;  // F/m
inline constexpr double bohr    = 0.529177210903e-10; // m

// 1 cm^-1 expressed in joules: h c * 100.
inline constexpr double wavenumber_J = planck * c_light * 100.0;

} // namespace si
} // namespace rotorkick
