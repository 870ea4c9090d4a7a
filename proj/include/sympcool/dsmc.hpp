#pragma once

// Direct simulation Monte Carlo of one or two trapped classical gases.
//
// Test particles move in the harmonic potential of their species (exact
// harmonic flow, centred at z = -sag) and collide as velocity-independent
// hard spheres. Collision partners are drawn inside cubic cells with the
// majorant-frequency (no-time-counter) rule: a cell holding n_a and n_b test
// particles tries
//
//     n_a n_b w (sigma v_rel)_max dt / V_cell        (distinct species)
//     n_a (n_a - 1)/2 w (sigma v_rel)_max dt / V_cell (same species)
//
// candidate pairs, each accepted with probability sigma v_rel/(sigma v_rel)_max.
// Every test particle stands for w physical atoms, so collision frequencies per
// test particle equal the physical per-atom rates of a gas of w * n_test atoms.
//
// Random numbers come from a counter-based stream keyed by (seed, step, cell),
// so the result does not depend on how cells are distributed over threads.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "sympcool/physics.hpp"

namespace sympcool::dsmc {

using Vec3 = std::array<double, 3>;
using physics::SpeciesState;
using physics::TrapFrequencies;

/// SplitMix64 stream; cheap to key per (seed, step, cell).
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0) noexcept;
    std::uint64_t next() noexcept;
    /// Uniform on [0, 1).
    double uniform() noexcept { return double(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

struct ParticleEnsemble {
    SpeciesState species;
    std::vector<Vec3> positions;
    std::vector<Vec3> velocities;
    double weight = 1.0;

    void validate() const;
    [[nodiscard]] std::size_t size() const noexcept { return positions.size(); }
};

/// Boltzmann equilibrium in `trap`: Gaussian positions with per-axis width
/// sqrt(k_B T / M w^2) around (0, 0, -sag) and Maxwellian velocities.
ParticleEnsemble sample_equilibrium(std::size_t n, double T, const TrapFrequencies& trap,
                                    const SpeciesState& species, std::uint64_t seed,
                                    double weight = 1.0);

/// Kinetic temperature M <|v - <v>|^2> / 3 k_B (unbiased variance).
double kinetic_temperature(const ParticleEnsemble& e);

/// Total (kinetic + trap) energy per particle over 3 k_B.
double energy_temperature(const ParticleEnsemble& e, const TrapFrequencies& trap);

/// Isotropic s-wave scattering: the relative velocity is redirected uniformly
/// on the sphere in the centre-of-mass frame, |v'_rel| = |v_rel|.
std::pair<Vec3, Vec3> collide_pair(const Vec3& v1, const Vec3& v2, double M1, double M2,
                                   CounterRng& rng);

struct SpeciesSpec {
    SpeciesState species;
    std::size_t n_test = 0;
    double T_init = 0.0;
    TrapFrequencies trap;  ///< `sag` sets the vertical centre at z = -sag
};

struct DsmcConfig {
    std::vector<SpeciesSpec> species;  ///< one or two
    double weight = 1.0;
    double dt = 0.0;
    double t_end = 0.0;
    double cell_size = 0.0;
    std::uint64_t rng_seed = 1;
    double sample_interval = 0.0;  ///< 0: every step
    unsigned threads = 1;

    /// Rejects dt >= 0.05 * 2 pi / w_max and cell_size > (smallest cloud width)/4.
    void validate() const;
};

struct Sample {
    double t = 0.0;
    std::array<double, 2> T_kin{};     ///< NaN for an absent species
    std::array<double, 2> T_energy{};  ///< NaN for an absent species
    double energy = 0.0;               ///< total energy of the test particles [J]
    std::uint64_t collisions_cum = 0;
    std::array<std::uint64_t, 3> pair_collisions{};  ///< 11, 22, 12
};

struct DsmcResult {
    std::vector<Sample> series;
    /// More than half the particles sat alone in their cell on average.
    bool cell_underflow = false;
    double mean_lonely_fraction = 0.0;
    std::vector<std::string> warnings;
};

/// Samples the initial ensembles from the config and runs.
DsmcResult run(const DsmcConfig& cfg);

/// Runs from explicit initial ensembles (same order as cfg.species).
DsmcResult run(const DsmcConfig& cfg, std::vector<ParticleEnsemble> ensembles);

/// Header `t,T1_kin,T2_kin,collisions_cum`.
void write_csv(const DsmcResult& r, std::ostream& os);

struct RelaxationFit {
    double rate = 0.0;
    double stderr_rate = 0.0;
    double efolds = 0.0;
    std::size_t points = 0;
};

/// Log-linear least squares of |dT(t)| up to the first sign change.
/// Throws DomainError for fewer than 10 usable points and InsufficientDecay
/// when the fitted decay spans fewer than two e-folds.
RelaxationFit fit_relaxation(const std::vector<double>& t, const std::vector<double>& delta_T);

}  // namespace sympcool::dsmc
