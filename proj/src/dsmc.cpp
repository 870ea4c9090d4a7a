#include "sympcool/dsmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <thread>

#include "sympcool/constants.hpp"
#include "sympcool/errors.hpp"
#include "sympcool/io.hpp"

namespace sympcool::dsmc {

using constants::boltzmann;

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 centre_of(const TrapFrequencies& f) { return {0.0, 0.0, -f.sag}; }

Vec3 omegas_of(const TrapFrequencies& f) { return {f.omega_x, f.omega_y, f.omega_z}; }

// Runs fn(begin, end, worker) over [0, n) split into `threads` contiguous chunks.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    threads = std::max(1u, std::min<unsigned>(threads, unsigned(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        fn(std::size_t{0}, n, 0u);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
        const std::size_t b = n * w / threads, e = n * (w + 1) / threads;
        pool.emplace_back([&fn, b, e, w] { fn(b, e, w); });
    }
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept
    : state_(mix64(seed + 0x9E3779B97F4A7C15ULL * (1 + mix64(a + 0x632BE59BD9B4E019ULL * (1 + mix64(b)))))) {}

std::uint64_t CounterRng::next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
}

void ParticleEnsemble::validate() const {
    if (positions.size() != velocities.size())
        throw DomainError("ensemble: positions and velocities differ in length");
    if (!(weight > 0.0)) throw DomainError("ensemble: weight must be positive");
}

ParticleEnsemble sample_equilibrium(std::size_t n, double T, const TrapFrequencies& trap,
                                    const SpeciesState& species, std::uint64_t seed,
                                    double weight) {
    if (n < 2) throw DomainError("sample_equilibrium: need at least two particles");
    if (!(T >= 0.0)) throw DomainError("sample_equilibrium: T must be >= 0");
    if (!(species.mass > 0.0)) throw DomainError("sample_equilibrium: mass must be positive");
    ParticleEnsemble e;
    e.species = species;
    e.weight = weight;
    e.positions.resize(n);
    e.velocities.resize(n);
    const double sv = std::sqrt(boltzmann * T / species.mass);
    const Vec3 w = omegas_of(trap);
    const Vec3 c = centre_of(trap);
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal;
    for (std::size_t i = 0; i < n; ++i) {
        for (int a = 0; a < 3; ++a) e.positions[i][a] = c[a] + sv / w[a] * normal(gen);
        for (int a = 0; a < 3; ++a) e.velocities[i][a] = sv * normal(gen);
    }
    return e;
}

double kinetic_temperature(const ParticleEnsemble& e) {
    const std::size_t n = e.size();
    if (n < 2) return nan;
    Vec3 mean{};
    for (const auto& v : e.velocities)
        for (int a = 0; a < 3; ++a) mean[a] += v[a];
    for (auto& m : mean) m /= double(n);
    double ss = 0.0;
    for (const auto& v : e.velocities)
        for (int a = 0; a < 3; ++a) ss += (v[a] - mean[a]) * (v[a] - mean[a]);
    return e.species.mass * ss / (3.0 * boltzmann * double(n - 1));
}

double energy_temperature(const ParticleEnsemble& e, const TrapFrequencies& trap) {
    const Vec3 w = omegas_of(trap);
    const Vec3 c = centre_of(trap);
    double E = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i)
        for (int a = 0; a < 3; ++a) {
            const double d = e.positions[i][a] - c[a];
            E += e.velocities[i][a] * e.velocities[i][a] + w[a] * w[a] * d * d;
        }
    return 0.5 * e.species.mass * E / (3.0 * boltzmann * double(e.size()));
}

std::pair<Vec3, Vec3> collide_pair(const Vec3& v1, const Vec3& v2, double M1, double M2,
                                   CounterRng& rng) {
    const Vec3 vr{v1[0] - v2[0], v1[1] - v2[1], v1[2] - v2[2]};
    const double speed = std::sqrt(dot(vr, vr));
    if (speed == 0.0) return {v1, v2};
    const double Mt = M1 + M2;
    const double cos_t = 2.0 * rng.uniform() - 1.0;
    const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
    const double phi = 2.0 * constants::pi * rng.uniform();
    const Vec3 out{speed * sin_t * std::cos(phi), speed * sin_t * std::sin(phi), speed * cos_t};
    Vec3 a, b;
    for (int k = 0; k < 3; ++k) {
        const double vg = (M1 * v1[k] + M2 * v2[k]) / Mt;
        a[k] = vg + M2 / Mt * out[k];
        b[k] = vg - M1 / Mt * out[k];
    }
    return {a, b};
}

void DsmcConfig::validate() const {
    if (species.empty() || species.size() > 2) throw ConfigError("dsmc: need one or two species");
    if (!(weight > 0.0)) throw ConfigError("dsmc: weight must be positive");
    if (!(t_end > 0.0)) throw ConfigError("dsmc: t_end must be positive");
    if (!(dt > 0.0)) throw ConfigError("dsmc: dt must be positive");
    if (!(sample_interval >= 0.0)) throw ConfigError("dsmc: sample_interval must be >= 0");
    double w_max = 0.0;
    double width_min = std::numeric_limits<double>::infinity();
    for (const auto& s : species) {
        if (s.n_test < 2) throw ConfigError("dsmc: each species needs at least two test particles");
        if (!(s.T_init > 0.0)) throw ConfigError("dsmc: T_init must be positive");
        if (!(s.species.mass > 0.0)) throw ConfigError("dsmc: mass must be positive");
        if (!(s.species.sigma_self >= 0.0) || !(s.species.sigma_cross >= 0.0))
            throw ConfigError("dsmc: cross-sections must be >= 0");
        for (double w : omegas_of(s.trap)) {
            if (!(w > 0.0)) throw ConfigError("dsmc: trap frequencies must be positive");
            w_max = std::max(w_max, w);
            width_min = std::min(width_min, std::sqrt(boltzmann * s.T_init / s.species.mass) / w);
        }
    }
    if (species.size() == 2 && species[0].species.sigma_cross != species[1].species.sigma_cross)
        throw ConfigError("dsmc: species disagree on sigma_cross");
    if (!(dt < 0.05 * 2.0 * constants::pi / w_max))
        throw ConfigError("dsmc: dt does not resolve the fastest trap period (need dt < 0.05 T_trap)");
    if (!(cell_size > 0.0) || !(cell_size <= width_min / 4.0))
        throw ConfigError("dsmc: cell_size must be positive and <= smallest cloud width / 4");
}

DsmcResult run(const DsmcConfig& cfg) {
    cfg.validate();
    std::vector<ParticleEnsemble> ensembles;
    for (std::size_t s = 0; s < cfg.species.size(); ++s) {
        const auto& sp = cfg.species[s];
        ensembles.push_back(sample_equilibrium(sp.n_test, sp.T_init, sp.trap, sp.species,
                                               mix64(cfg.rng_seed + 0x1000 * (s + 1)), cfg.weight));
    }
    return run(cfg, std::move(ensembles));
}

DsmcResult run(const DsmcConfig& cfg, std::vector<ParticleEnsemble> ensembles) {
    cfg.validate();
    if (ensembles.size() != cfg.species.size())
        throw ConfigError("dsmc: one ensemble per configured species required");
    const std::size_t n_species = ensembles.size();

    // Flattened particle state, species-major.
    std::vector<Vec3> x, v;
    std::vector<std::uint8_t> kind;
    std::array<std::size_t, 3> offset{0, 0, 0};
    for (std::size_t s = 0; s < n_species; ++s) {
        ensembles[s].validate();
        x.insert(x.end(), ensembles[s].positions.begin(), ensembles[s].positions.end());
        v.insert(v.end(), ensembles[s].velocities.begin(), ensembles[s].velocities.end());
        kind.insert(kind.end(), ensembles[s].size(), std::uint8_t(s));
        offset[s + 1] = x.size();
    }
    const std::size_t n = x.size();

    std::array<double, 2> mass{}, sigma_self{};
    std::array<Vec3, 2> centre{}, omega{}, cos_w{}, sin_w{};
    for (std::size_t s = 0; s < n_species; ++s) {
        const auto& spec = cfg.species[s];
        mass[s] = spec.species.mass;
        sigma_self[s] = spec.species.sigma_self;
        centre[s] = centre_of(spec.trap);
        omega[s] = omegas_of(spec.trap);
        for (int a = 0; a < 3; ++a) {
            cos_w[s][a] = std::cos(omega[s][a] * cfg.dt);
            sin_w[s][a] = std::sin(omega[s][a] * cfg.dt);
        }
    }
    const double sigma12 = cfg.species[0].species.sigma_cross;
    const std::array<double, 3> sigma{sigma_self[0], n_species == 2 ? sigma_self[1] : 0.0,
                                      n_species == 2 ? sigma12 : 0.0};

    // Initial majorants: sigma times five RMS relative speeds.
    std::array<double, 3> majorant{};
    auto rms_rel = [&](std::size_t a, std::size_t b) {
        return std::sqrt(boltzmann * (cfg.species[a].T_init / mass[a] + cfg.species[b].T_init / mass[b]));
    };
    majorant[0] = sigma[0] * 5.0 * rms_rel(0, 0);
    if (n_species == 2) {
        majorant[1] = sigma[1] * 5.0 * rms_rel(1, 1);
        majorant[2] = sigma[2] * 5.0 * rms_rel(0, 1);
    }

    const double h = cfg.cell_size;
    const double cell_volume = h * h * h;
    const double pair_factor = cfg.weight * cfg.dt / cell_volume;
    const auto steps = static_cast<std::uint64_t>(std::llround(cfg.t_end / cfg.dt));
    const std::uint64_t sample_every =
        cfg.sample_interval > 0.0
            ? std::max<std::uint64_t>(1, std::uint64_t(std::llround(cfg.sample_interval / cfg.dt)))
            : 1;
    const unsigned threads = std::max(1u, cfg.threads);

    DsmcResult result;
    std::array<std::uint64_t, 3> pair_count{};
    double lonely_sum = 0.0;

    auto sample = [&](double t) {
        Sample smp;
        smp.t = t;
        smp.T_kin = {nan, nan};
        smp.T_energy = {nan, nan};
        for (std::size_t s = 0; s < n_species; ++s) {
            ParticleEnsemble view;
            view.species = cfg.species[s].species;
            view.positions.assign(x.begin() + offset[s], x.begin() + offset[s + 1]);
            view.velocities.assign(v.begin() + offset[s], v.begin() + offset[s + 1]);
            smp.T_kin[s] = kinetic_temperature(view);
            smp.T_energy[s] = energy_temperature(view, cfg.species[s].trap);
            smp.energy += 3.0 * boltzmann * smp.T_energy[s] * double(view.size());
        }
        smp.pair_collisions = pair_count;
        smp.collisions_cum = pair_count[0] + pair_count[1] + pair_count[2];
        result.series.push_back(smp);
    };

    struct Entry {
        std::uint64_t key;  // cell key << 1 | species
        std::uint32_t index;
        bool operator<(const Entry& o) const noexcept {
            return key != o.key ? key < o.key : index < o.index;
        }
    };
    std::vector<Entry> order(n);
    std::vector<std::size_t> cell_start;

    struct WorkerTally {
        std::array<std::uint64_t, 3> count{};
        std::array<double, 3> max_rate{};
        std::uint64_t lonely = 0;
    };
    std::vector<WorkerTally> tally(threads);

    auto cell_index = [h](double c) {
        const auto i = static_cast<std::int64_t>(std::floor(c / h)) + (std::int64_t(1) << 20);
        return static_cast<std::uint64_t>(std::clamp<std::int64_t>(i, 0, (std::int64_t(1) << 21) - 1));
    };

    sample(0.0);
    for (std::uint64_t step = 1; step <= steps; ++step) {
        // Free flight: exact harmonic rotation about each species' centre.
        parallel_for(n, threads, [&](std::size_t b, std::size_t e, unsigned) {
            for (std::size_t i = b; i < e; ++i) {
                const std::size_t s = kind[i];
                for (int a = 0; a < 3; ++a) {
                    const double d = x[i][a] - centre[s][a];
                    const double w = omega[s][a];
                    x[i][a] = centre[s][a] + d * cos_w[s][a] + v[i][a] * sin_w[s][a] / w;
                    v[i][a] = -d * w * sin_w[s][a] + v[i][a] * cos_w[s][a];
                }
            }
        });

        // Bin into cells.
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint64_t cell =
                (cell_index(x[i][0]) << 42) | (cell_index(x[i][1]) << 21) | cell_index(x[i][2]);
            order[i] = {(cell << 1) | kind[i], std::uint32_t(i)};
        }
        std::sort(order.begin(), order.end());
        cell_start.clear();
        for (std::size_t k = 0; k < n; ++k)
            if (k == 0 || (order[k].key >> 1) != (order[k - 1].key >> 1)) cell_start.push_back(k);
        cell_start.push_back(n);

        for (auto& t : tally) t = {};
        const auto maj = majorant;
        parallel_for(cell_start.size() - 1, threads, [&](std::size_t cb, std::size_t ce, unsigned w) {
            auto& my = tally[w];
            for (std::size_t c = cb; c < ce; ++c) {
                const std::size_t b = cell_start[c], e = cell_start[c + 1];
                if (e - b == 1) {
                    ++my.lonely;
                    continue;
                }
                std::size_t m = b;
                while (m < e && (order[m].key & 1) == 0) ++m;
                CounterRng rng(cfg.rng_seed, step, order[b].key >> 1);

                auto attempt = [&](int type, std::size_t i, std::size_t j) {
                    const Vec3& vi = v[i];
                    const Vec3& vj = v[j];
                    const Vec3 d{vi[0] - vj[0], vi[1] - vj[1], vi[2] - vj[2]};
                    const double rate = sigma[type] * std::sqrt(dot(d, d));
                    my.max_rate[type] = std::max(my.max_rate[type], rate);
                    if (rng.uniform() * maj[type] < rate) {
                        auto [a, bb] = collide_pair(vi, vj, mass[kind[i]], mass[kind[j]], rng);
                        v[i] = a;
                        v[j] = bb;
                        ++my.count[type];
                    }
                };
                auto candidates = [&](double pairs, int type) {
                    const double expected = pairs * maj[type] * pair_factor;
                    return static_cast<std::uint64_t>(std::floor(expected + rng.uniform()));
                };
                auto same_species = [&](std::size_t lo, std::size_t hi, int type) {
                    const std::size_t k = hi - lo;
                    if (k < 2 || sigma[type] <= 0.0) return;
                    const std::uint64_t tries = candidates(0.5 * double(k) * double(k - 1), type);
                    for (std::uint64_t t = 0; t < tries; ++t) {
                        const std::size_t p = std::min(k - 1, std::size_t(rng.uniform() * double(k)));
                        std::size_t q = std::min(k - 2, std::size_t(rng.uniform() * double(k - 1)));
                        if (q >= p) ++q;
                        attempt(type, order[lo + p].index, order[lo + q].index);
                    }
                };
                same_species(b, m, 0);
                same_species(m, e, 1);
                const std::size_t n0 = m - b, n1 = e - m;
                if (n0 > 0 && n1 > 0 && sigma[2] > 0.0) {
                    const std::uint64_t tries = candidates(double(n0) * double(n1), 2);
                    for (std::uint64_t t = 0; t < tries; ++t) {
                        const std::size_t p = std::min(n0 - 1, std::size_t(rng.uniform() * double(n0)));
                        const std::size_t q = std::min(n1 - 1, std::size_t(rng.uniform() * double(n1)));
                        attempt(2, order[b + p].index, order[m + q].index);
                    }
                }
            }
        });
        std::uint64_t lonely = 0;
        for (const auto& t : tally) {
            for (int k = 0; k < 3; ++k) {
                pair_count[k] += t.count[k];
                majorant[k] = std::max(majorant[k], t.max_rate[k]);
            }
            lonely += t.lonely;
        }
        lonely_sum += double(lonely) / double(n);

        if (step % sample_every == 0 || step == steps) sample(double(step) * cfg.dt);
    }

    result.mean_lonely_fraction = steps > 0 ? lonely_sum / double(steps) : 0.0;
    if (result.mean_lonely_fraction > 0.5) {
        result.cell_underflow = true;
        result.warnings.push_back(
            "CellUnderflow: most particles have no cell partner; collisions rely on rare pairs");
    }
    return result;
}

void write_csv(const DsmcResult& r, std::ostream& os) {
    using io::format_number;
    os << "t,T1_kin,T2_kin,collisions_cum\n";
    for (const auto& s : r.series)
        os << format_number(s.t) << ',' << format_number(s.T_kin[0]) << ','
           << format_number(s.T_kin[1]) << ',' << s.collisions_cum << '\n';
}

RelaxationFit fit_relaxation(const std::vector<double>& t, const std::vector<double>& delta_T) {
    if (t.size() != delta_T.size()) throw DomainError("fit_relaxation: length mismatch");
    std::size_t used = 0;
    const double sign = delta_T.empty() ? 0.0 : (delta_T[0] > 0.0 ? 1.0 : -1.0);
    while (used < t.size() && sign * delta_T[used] > 0.0) ++used;
    if (used < 10) throw DomainError("fit_relaxation: need at least 10 points before any sign change");

    double mt = 0.0, my = 0.0;
    for (std::size_t i = 0; i < used; ++i) {
        mt += t[i];
        my += std::log(sign * delta_T[i]);
    }
    mt /= double(used);
    my /= double(used);
    double stt = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < used; ++i) {
        stt += (t[i] - mt) * (t[i] - mt);
        sty += (t[i] - mt) * (std::log(sign * delta_T[i]) - my);
    }
    if (!(stt > 0.0)) throw DomainError("fit_relaxation: times must not all coincide");
    const double slope = sty / stt;
    double rss = 0.0;
    for (std::size_t i = 0; i < used; ++i) {
        const double r = std::log(sign * delta_T[i]) - (my + slope * (t[i] - mt));
        rss += r * r;
    }
    RelaxationFit fit;
    fit.rate = -slope;
    fit.stderr_rate = std::sqrt(rss / double(used - 2) / stt);
    fit.efolds = fit.rate * (t[used - 1] - t[0]);
    fit.points = used;
    if (!(fit.efolds >= 2.0))
        throw InsufficientDecay("fit_relaxation: fitted decay spans fewer than 2 e-folds");
    return fit;
}

}  // namespace sympcool::dsmc
