#pragma once

// Physical constants (CODATA 2018) and unit conversions. All library code is
// strict SI; the conversions below are only used at configuration boundaries.

#include <numbers>

namespace sympcool::constants {

inline constexpr double pi = std::numbers::pi;

/// Bohr magneton [J/T].
inline constexpr double bohr_magneton = 9.2740100783e-24;
/// Boltzmann constant [J/K] (exact).
inline constexpr double boltzmann = 1.380649e-23;
/// Planck constant [J s] (exact).
inline constexpr double planck = 6.62607015e-34;
/// Reduced Planck constant [J s].
inline constexpr double hbar = planck / (2.0 * pi);
/// Unified atomic mass unit [kg].
inline constexpr double atomic_mass_unit = 1.66053906660e-27;
/// Bohr radius [m].
inline constexpr double bohr_radius = 5.29177210903e-11;
/// Standard acceleration of gravity [m/s^2] (exact).
inline constexpr double standard_gravity = 9.80665;

/// Atomic masses [u].
inline constexpr double rb87_mass_u = 86.909180531;
inline constexpr double li6_mass_u = 6.0151228874;

/// Peak phase-space density at the ideal-gas condensation point, zeta(3/2).
inline constexpr double bec_threshold = 2.612;

}  // namespace sympcool::constants

namespace sympcool::units {

inline constexpr double gauss = 1e-4;             // T
inline constexpr double kilogauss_per_cm = 10.0;  // T/m
inline constexpr double gauss_per_cm2 = 1.0;      // T/m^2
inline constexpr double cm2 = 1e-4;               // m^2
inline constexpr double microkelvin = 1e-6;       // K
inline constexpr double nanokelvin = 1e-9;        // K
inline constexpr double micrometre = 1e-6;        // m

}  // namespace sympcool::units
