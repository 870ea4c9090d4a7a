#pragma once

// Thermal contact between two harmonically trapped Boltzmann clouds.
//
// For Gaussian clouds displaced vertically by delta, the interspecies
// collision rate is
//
//     Gamma = N1 N2 sigma12 V / (pi^2 rho_x rho_y rho_z) exp(-delta^2 / 2 rho_z^2)
//
// with rho_i^2 = k_B T1/(M1 w1i^2) + k_B T2/(M2 w2i^2) and
// V^2 = k_B T1/M1 + k_B T2/M2. Each collision moves on average
// xi k_B (T2 - T1) into the buffer, xi = 4 M1 M2/(M1 + M2)^2, which gives the
// equivalent mass 8 (M1 M2)^2/(M1 + M2)^3 in the thermalization rate.

#include <nlohmann/json_fwd.hpp>

#include "sympcool/physics.hpp"

namespace sympcool::contact {

using physics::TrapFrequencies;

struct TwoGasState {
    double N1 = 0.0;
    double N2 = 0.0;
    double T1 = 0.0;
    double T2 = 0.0;
    TrapFrequencies f1;
    TrapFrequencies f2;
    double M1 = 0.0;
    double M2 = 0.0;
    double sigma12 = 0.0;
    double delta = 0.0;  ///< relative vertical displacement of the clouds [m]

    void validate() const;
    /// True when the two masses differ; the generalized V and rho are then used.
    [[nodiscard]] bool unequal_masses() const noexcept { return M1 != M2; }
};

struct RmsSizes {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

RmsSizes rms_sizes(const TwoGasState& s);

/// RMS sum of thermal velocities, sqrt(k_B T1/M1 + k_B T2/M2).
double thermal_velocity_sum(const TwoGasState& s);

/// exp(-delta^2 / 2 rho_z^2), in (0, 1].
double overlap_factor(const TwoGasState& s);

/// Gamma / (N1 N2): collision rate per pair of atoms [1/s].
double pair_collision_rate(const TwoGasState& s);

/// Interspecies collisions per second.
double interspecies_collision_rate(const TwoGasState& s);

/// Mean fraction xi of k_B (T2 - T1) transferred per collision; 1 for equal masses.
double transfer_efficiency(double M1, double M2);

/// Power flowing into the buffer, W = xi k_B (T2 - T1) Gamma [W].
double energy_exchange_rate(const TwoGasState& s);

/// 8 (M1 M2)^2 / (M1 + M2)^3.
double equivalent_mass(double M1, double M2);

/// -d ln(T1 - T2)/dt for the two-temperature relaxation,
///   1/tau = xi Gamma (N1 + N2) / (3 N1 N2).
/// For equal trap frequencies this reduces to the closed form below.
double interspecies_thermalization_rate(const TwoGasState& s);

/// (N1 + N2) w^3 sigma12 M_eq / (6 pi^2 k_B T), T the mean temperature.
double thermalization_rate_equal_frequencies(double N_total, double T, double omega_bar,
                                             double sigma12, double mass_eq);

/// Mean elastic collision rate per atom, N w^3 sigma M / (2 pi^2 k_B T).
double single_species_collision_rate(double N, double T, double omega_bar, double sigma,
                                     double M);

/// All contact observables of one state.
struct ContactReport {
    RmsSizes rho;
    double V = 0.0;
    double overlap = 0.0;
    double Gamma = 0.0;
    double W = 0.0;
    double rate = 0.0;
    double tau = 0.0;
    bool extrapolated = false;  ///< unequal masses
};

ContactReport report(const TwoGasState& s);

nlohmann::json to_json(const ContactReport& r);

}  // namespace sympcool::contact
