#pragma once

// Species description and the Ioffe-Pritchard harmonic trap model.

#include <string>

#include <nlohmann/json_fwd.hpp>

namespace sympcool::physics {

/// One trapped hyperfine state.
struct SpeciesState {
    std::string label;
    int F = 1;
    int mF = -1;
    double mass = 0.0;         ///< kg
    double sigma_self = 0.0;   ///< intraspecies elastic cross-section [m^2]
    double sigma_cross = 0.0;  ///< interspecies cross-section sigma_12 [m^2]

    /// (-1)^F mF; the magnetic moment in units of mu_B/2.
    [[nodiscard]] int trap_sign() const noexcept { return (F % 2 == 0 ? 1 : -1) * mF; }

    /// Throws DomainError / AntiTrapped.
    void validate() const;
};

struct TrapConfig {
    double B0 = 0.0;  ///< bias field [T]
    double G = 0.0;   ///< quadrupole gradient [T/m]
    double C = 0.0;   ///< dipole-axis curvature [T/m^2]
    double gravity = 9.80665;

    /// G^2/B0 - C, the net radial curvature [T/m^2].
    [[nodiscard]] double radial_curvature() const noexcept { return G * G / B0 - C; }

    void validate() const;
};

/// Per-species harmonic frequencies. x is the dipole (weak) axis, z is vertical.
struct TrapFrequencies {
    double omega_x = 0.0;
    double omega_y = 0.0;
    double omega_z = 0.0;
    double omega_bar = 0.0;  ///< (wx wy wz)^(1/3)
    double sag = 0.0;        ///< gravity / wz^2 [m]

    /// Builds a consistent record from the three axis frequencies.
    static TrapFrequencies from_axes(double wx, double wy, double wz,
                                     double gravity = 9.80665);
    static TrapFrequencies isotropic(double omega, double gravity = 9.80665) {
        return from_axes(omega, omega, omega, gravity);
    }
};

/// Radial (y = z) and dipole-axis (x) frequencies for `species` in `trap`:
///   w_z^2 = (-1)^F mF mu_B (G^2/B0 - C) / 2M,   w_x^2 = (-1)^F mF mu_B C / 2M.
/// Throws AntiTrapped or RadialUnconfined.
TrapFrequencies trap_frequencies(const TrapConfig& trap, const SpeciesState& species);

/// Differential gravitational sag g/w1z^2 - g/w2z^2 [m]; negative when
/// species 2 hangs lower.
double relative_sag(const TrapFrequencies& f1, const TrapFrequencies& f2) noexcept;

/// s-wave cross-section 8 pi a^2 for identical bosons with scattering length a [m].
double boson_cross_section(double scattering_length) noexcept;

/// The two 87Rb states of the dual-condensate experiment. Cross-sections
/// default to 8 pi a^2 with a = 100 a0 for all channels; callers override.
SpeciesState rb87_f1_m1();
SpeciesState rb87_f2_m2();

/// B0 / C = 1 cm^2 iron-core trap with a 1 kG/cm gradient.
TrapConfig iron_core_trap(double B0_gauss);

/// The constants table as a self-describing JSON document.
nlohmann::json constants_table();

}  // namespace sympcool::physics
