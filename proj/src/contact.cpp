#include "sympcool/contact.hpp"

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "sympcool/constants.hpp"
#include "sympcool/errors.hpp"

namespace sympcool::contact {

using constants::boltzmann;
using constants::pi;

namespace {

double axis_size_squared(double T1, double M1, double w1, double T2, double M2, double w2) {
    return boltzmann * (T1 / (M1 * w1 * w1) + T2 / (M2 * w2 * w2));
}

}  // namespace

void TwoGasState::validate() const {
    if (!(T1 > 0.0) || !(T2 > 0.0)) throw DomainError("contact: temperatures must be positive");
    if (!(N1 >= 0.0) || !(N2 >= 0.0)) throw DomainError("contact: atom numbers must be >= 0");
    if (!(M1 > 0.0) || !(M2 > 0.0)) throw DomainError("contact: masses must be positive");
    if (!(sigma12 >= 0.0)) throw DomainError("contact: sigma12 must be >= 0");
    if (!std::isfinite(delta)) throw DomainError("contact: delta must be finite");
    for (const auto* f : {&f1, &f2})
        if (!(f->omega_x > 0.0) || !(f->omega_y > 0.0) || !(f->omega_z > 0.0))
            throw DomainError("contact: trap frequencies must be positive");
}

RmsSizes rms_sizes(const TwoGasState& s) {
    return {std::sqrt(axis_size_squared(s.T1, s.M1, s.f1.omega_x, s.T2, s.M2, s.f2.omega_x)),
            std::sqrt(axis_size_squared(s.T1, s.M1, s.f1.omega_y, s.T2, s.M2, s.f2.omega_y)),
            std::sqrt(axis_size_squared(s.T1, s.M1, s.f1.omega_z, s.T2, s.M2, s.f2.omega_z))};
}

double thermal_velocity_sum(const TwoGasState& s) {
    return std::sqrt(boltzmann * (s.T1 / s.M1 + s.T2 / s.M2));
}

double overlap_factor(const TwoGasState& s) {
    const double rz = rms_sizes(s).z;
    return std::exp(-s.delta * s.delta / (2.0 * rz * rz));
}

double pair_collision_rate(const TwoGasState& s) {
    const RmsSizes r = rms_sizes(s);
    return s.sigma12 * thermal_velocity_sum(s) / (pi * pi * r.x * r.y * r.z) *
           std::exp(-s.delta * s.delta / (2.0 * r.z * r.z));
}

double interspecies_collision_rate(const TwoGasState& s) {
    return s.N1 * s.N2 * pair_collision_rate(s);
}

double transfer_efficiency(double M1, double M2) {
    return 4.0 * M1 * M2 / ((M1 + M2) * (M1 + M2));
}

double energy_exchange_rate(const TwoGasState& s) {
    return transfer_efficiency(s.M1, s.M2) * boltzmann * (s.T2 - s.T1) *
           interspecies_collision_rate(s);
}

double equivalent_mass(double M1, double M2) {
    if (!(M1 > 0.0) || !(M2 > 0.0)) throw DomainError("equivalent_mass: masses must be positive");
    const double p = M1 * M2;
    const double s = M1 + M2;
    return 8.0 * p * p / (s * s * s);
}

double interspecies_thermalization_rate(const TwoGasState& s) {
    return transfer_efficiency(s.M1, s.M2) * pair_collision_rate(s) * (s.N1 + s.N2) / 3.0;
}

double thermalization_rate_equal_frequencies(double N_total, double T, double omega_bar,
                                             double sigma12, double mass_eq) {
    const double w3 = omega_bar * omega_bar * omega_bar;
    return N_total / (3.0 * boltzmann * T) * w3 * sigma12 * mass_eq / (2.0 * pi * pi);
}

double single_species_collision_rate(double N, double T, double omega_bar, double sigma,
                                     double M) {
    if (!(N > 0.0) || !(T > 0.0) || !(omega_bar > 0.0) || !(sigma > 0.0) || !(M > 0.0))
        throw DomainError("single_species_collision_rate: arguments must be positive");
    return N * omega_bar * omega_bar * omega_bar * sigma * M / (2.0 * pi * pi * boltzmann * T);
}

ContactReport report(const TwoGasState& s) {
    s.validate();
    ContactReport r;
    r.rho = rms_sizes(s);
    r.V = thermal_velocity_sum(s);
    r.overlap = overlap_factor(s);
    r.Gamma = interspecies_collision_rate(s);
    r.W = energy_exchange_rate(s);
    r.rate = interspecies_thermalization_rate(s);
    r.tau = r.rate > 0.0 ? 1.0 / r.rate : std::numeric_limits<double>::infinity();
    r.extrapolated = s.unequal_masses();
    return r;
}

nlohmann::json to_json(const ContactReport& r) {
    nlohmann::json j{
        {"rho_x_m", r.rho.x}, {"rho_y_m", r.rho.y}, {"rho_z_m", r.rho.z},
        {"V_m_per_s", r.V},   {"overlap", r.overlap}, {"Gamma_per_s", r.Gamma},
        {"W_watt", r.W},      {"rate_per_s", r.rate}, {"extrapolated", r.extrapolated},
    };
    j["tau_s"] = std::isfinite(r.tau) ? nlohmann::json(r.tau) : nlohmann::json(nullptr);
    return j;
}

}  // namespace sympcool::contact
