#include "sympcool/physics.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "sympcool/constants.hpp"
#include "sympcool/errors.hpp"

namespace sympcool::physics {

namespace {

std::string describe(const SpeciesState& s) {
    return (s.label.empty() ? std::string{"species"} : s.label) + " (F=" + std::to_string(s.F) +
           ", mF=" + std::to_string(s.mF) + ")";
}

}  // namespace

void SpeciesState::validate() const {
    if (!(mass > 0.0)) throw DomainError(describe(*this) + ": mass must be positive");
    if (!(sigma_self >= 0.0) || !(sigma_cross >= 0.0))
        throw DomainError(describe(*this) + ": cross-sections must be non-negative");
    if (trap_sign() <= 0) throw AntiTrapped(describe(*this) + " is not a low-field seeker");
}

void TrapConfig::validate() const {
    if (!(B0 > 0.0)) throw DomainError("trap: B0 must be positive");
    if (!(G >= 0.0) || !(C >= 0.0)) throw DomainError("trap: G and C must be non-negative");
    if (!(gravity >= 0.0)) throw DomainError("trap: gravity must be non-negative");
    if (!(radial_curvature() > 0.0))
        throw RadialUnconfined("trap: G^2/B0 <= C, no radial confinement");
}

TrapFrequencies TrapFrequencies::from_axes(double wx, double wy, double wz, double gravity) {
    if (!(wx > 0.0) || !(wy > 0.0) || !(wz > 0.0))
        throw DomainError("trap frequencies must be positive");
    TrapFrequencies f;
    f.omega_x = wx;
    f.omega_y = wy;
    f.omega_z = wz;
    f.omega_bar = std::cbrt(wx * wy * wz);
    f.sag = gravity / (wz * wz);
    return f;
}

TrapFrequencies trap_frequencies(const TrapConfig& trap, const SpeciesState& species) {
    species.validate();
    trap.validate();
    if (!(trap.C > 0.0)) throw DomainError("trap: C must be positive for axial confinement");
    const double moment = species.trap_sign() * constants::bohr_magneton;
    const double radial = std::sqrt(moment * trap.radial_curvature() / (2.0 * species.mass));
    const double axial = std::sqrt(moment * trap.C / (2.0 * species.mass));
    return TrapFrequencies::from_axes(axial, radial, radial, trap.gravity);
}

double relative_sag(const TrapFrequencies& f1, const TrapFrequencies& f2) noexcept {
    return f1.sag - f2.sag;
}

double boson_cross_section(double scattering_length) noexcept {
    return 8.0 * constants::pi * scattering_length * scattering_length;
}

SpeciesState rb87_f1_m1() {
    const double sigma = boson_cross_section(100.0 * constants::bohr_radius);
    return {"Rb87 |1,-1>", 1, -1, constants::rb87_mass_u * constants::atomic_mass_unit, sigma,
            sigma};
}

SpeciesState rb87_f2_m2() {
    const double sigma = boson_cross_section(100.0 * constants::bohr_radius);
    return {"Rb87 |2,2>", 2, 2, constants::rb87_mass_u * constants::atomic_mass_unit, sigma,
            sigma};
}

TrapConfig iron_core_trap(double B0_gauss) {
    TrapConfig t;
    t.B0 = B0_gauss * units::gauss;
    t.G = 1.0 * units::kilogauss_per_cm;
    t.C = t.B0 / (1.0 * units::cm2);
    t.gravity = constants::standard_gravity;
    return t;
}

nlohmann::json constants_table() {
    using nlohmann::json;
    auto entry = [](double value, const char* unit, const char* what) {
        return json{{"value", value}, {"unit", unit}, {"description", what}};
    };
    return json{
        {"source", "CODATA 2018 recommended values; atomic masses from AME2016"},
        {"constants",
         {
             {"bohr_magneton", entry(constants::bohr_magneton, "J/T", "Bohr magneton")},
             {"boltzmann", entry(constants::boltzmann, "J/K", "Boltzmann constant (exact)")},
             {"planck", entry(constants::planck, "J s", "Planck constant (exact)")},
             {"hbar", entry(constants::hbar, "J s", "reduced Planck constant")},
             {"atomic_mass_unit", entry(constants::atomic_mass_unit, "kg", "unified atomic mass unit")},
             {"bohr_radius", entry(constants::bohr_radius, "m", "Bohr radius")},
             {"standard_gravity", entry(constants::standard_gravity, "m/s^2", "default gravity (exact)")},
             {"rb87_mass", entry(constants::rb87_mass_u, "u", "87Rb atomic mass")},
             {"li6_mass", entry(constants::li6_mass_u, "u", "6Li atomic mass")},
             {"bec_threshold", entry(constants::bec_threshold, "1", "condensation phase-space density, zeta(3/2)")},
         }},
        {"unit_conversions",
         {
             {"gauss", entry(units::gauss, "T", "1 G")},
             {"kilogauss_per_cm", entry(units::kilogauss_per_cm, "T/m", "1 kG/cm")},
             {"gauss_per_cm2", entry(units::gauss_per_cm2, "T/m^2", "1 G/cm^2")},
             {"cm2", entry(units::cm2, "m^2", "1 cm^2")},
             {"microkelvin", entry(units::microkelvin, "K", "1 uK")},
             {"nanokelvin", entry(units::nanokelvin, "K", "1 nK")},
             {"micrometre", entry(units::micrometre, "m", "1 um")},
         }},
    };
}

}  // namespace sympcool::physics
