#include "sympcool/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "config.hpp"
#include "sympcool/budget.hpp"
#include "sympcool/constants.hpp"
#include "sympcool/contact.hpp"
#include "sympcool/dsmc.hpp"
#include "sympcool/errors.hpp"
#include "sympcool/io.hpp"
#include "sympcool/physics.hpp"
#include "sympcool/trajectory.hpp"

namespace sympcool::cli {

namespace fs = std::filesystem;
using io::format_number;

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

namespace {

constexpr double default_sigma() {
    // 8 pi (100 a0)^2
    return 8.0 * constants::pi * (100.0 * constants::bohr_radius) * (100.0 * constants::bohr_radius);
}

struct Options {
    std::string config;
    std::string out;
    std::uint64_t seed = 1;
    std::string format = "csv";
    std::optional<double> eta_min, eta_max, eta_step, ratio, n2_min, n2_max;
    std::optional<int> n2_points;
    std::string sweep;
};

// Where the files of one run go. `--out` naming a file (it has an extension)
// fixes the primary output; anything else is a directory.
class Outputs {
public:
    Outputs(const std::string& out, const std::string& stem, const std::string& ext) {
        fs::path p = out.empty() ? fs::path(".") : fs::path(out);
        if (!out.empty() && p.has_extension()) {
            dir_ = p.has_parent_path() ? p.parent_path() : fs::path(".");
            primary_ = p.filename().string();
        } else {
            dir_ = p;
            primary_ = stem + ext;
        }
        stem_ = fs::path(primary_).stem().string();
    }

    [[nodiscard]] const std::string& primary() const { return primary_; }
    /// `<stem><suffix>`, e.g. ".events.json" next to the primary output.
    [[nodiscard]] std::string sibling(const std::string& suffix) const { return stem_ + suffix; }

    void write(const std::string& name, const std::string& content) {
        fs::create_directories(dir_);
        const fs::path path = dir_ / name;
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os << content;
        os.close();
        if (!os) throw Error("cannot write " + path.string());
        written_.push_back(path.generic_string());
    }

    [[nodiscard]] const std::vector<std::string>& written() const { return written_; }

private:
    fs::path dir_;
    std::string primary_;
    std::string stem_;
    std::vector<std::string> written_;
};

struct Run {
    Options opt;
    std::string command_line;
    std::shared_ptr<ConfigSource> src;
    json canon = json::object();
    std::ostream& out;
    std::optional<Outputs> outs;

    Reader reader() { return Reader(src, &src->root(), &canon); }
    Outputs& outputs(const std::string& stem, const std::string& ext) {
        return outs.emplace(opt.out, stem, ext);
    }
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

template <class F>
auto configure(Run& run, F&& build) {
    try {
        auto result = build();
        reject_unknown(*run.src, run.canon);
        return result;
    } catch (const Error& e) {
        // a library precondition rejected a configured value
        throw ConfigFailure(run.src->locate("") + ": invalid configuration: " + e.what());
    }
}

// ---- shared readers -------------------------------------------------------

physics::TrapConfig read_trap(Reader r, double default_b0 = 207.0) {
    const double b0 = r.number("B0_gauss", default_b0);
    physics::TrapConfig t;
    t.B0 = b0 * units::gauss;
    t.G = r.number("G_kG_per_cm", 1.0) * units::kilogauss_per_cm;
    t.C = r.number("C_G_per_cm2", b0) * units::gauss_per_cm2;
    t.gravity = r.number("gravity_m_per_s2", constants::standard_gravity);
    t.validate();
    return t;
}

physics::SpeciesState read_species(Reader r, const physics::SpeciesState& def) {
    physics::SpeciesState s;
    s.label = r.text("label", def.label);
    s.F = static_cast<int>(r.integer("F", def.F));
    s.mF = static_cast<int>(r.integer("mF", def.mF));
    s.mass = r.number("mass_u", def.mass / constants::atomic_mass_unit) * constants::atomic_mass_unit;
    s.sigma_self = r.number("sigma_self_m2", def.sigma_self);
    s.sigma_cross = r.number("sigma_cross_m2", def.sigma_cross);
    s.validate();
    return s;
}

physics::TrapFrequencies read_axes(Reader& r, const std::string& key, double gravity,
                                   std::optional<double> fallback = std::nullopt) {
    auto w = fallback ? r.numbers(key, std::vector<double>(3, *fallback)) : r.numbers(key);
    if (w.size() != 3) r.fail(key, "expected three angular frequencies [x, y, z]");
    for (double x : w)
        if (!(x > 0.0)) r.fail(key, "angular frequencies must be positive");
    return physics::TrapFrequencies::from_axes(w[0], w[1], w[2], gravity);
}

// Buffer |1,-1> and target |2,2> of 87Rb unless overridden.
contact::TwoGasState read_state(Reader r) {
    contact::TwoGasState s;
    s.N1 = r.number("N1", 1e6);
    s.N2 = r.number("N2", 3e4);
    s.T1 = r.number("T1_uK", 1.0) * units::microkelvin;
    s.T2 = r.number("T2_uK", 1.0) * units::microkelvin;
    s.M1 = r.number("mass1_u", constants::rb87_mass_u) * constants::atomic_mass_unit;
    s.M2 = r.number("mass2_u", constants::rb87_mass_u) * constants::atomic_mass_unit;
    s.sigma12 = r.number("sigma12_m2", default_sigma());
    const bool explicit_axes = r.has("omega1_rad_per_s") || r.has("omega2_rad_per_s");
    if (explicit_axes) {
        if (r.has("trap")) r.fail("trap", "give either a trap or explicit omega arrays, not both");
        const double g = r.number("gravity_m_per_s2", constants::standard_gravity);
        s.f1 = read_axes(r, "omega1_rad_per_s", g);
        s.f2 = read_axes(r, "omega2_rad_per_s", g);
    } else {
        Reader tr = r.object("trap");
        const auto trap = read_trap(tr);
        auto buf = physics::rb87_f1_m1();
        auto tgt = physics::rb87_f2_m2();
        buf.mass = s.M1;
        tgt.mass = s.M2;
        buf.F = static_cast<int>(tr.integer("F1", 1));
        buf.mF = static_cast<int>(tr.integer("mF1", -1));
        tgt.F = static_cast<int>(tr.integer("F2", 2));
        tgt.mF = static_cast<int>(tr.integer("mF2", 2));
        buf.validate();
        tgt.validate();
        s.f1 = physics::trap_frequencies(trap, buf);
        s.f2 = physics::trap_frequencies(trap, tgt);
    }
    s.delta = std::abs(physics::relative_sag(s.f1, s.f2));
    if (auto d = r.optional_number("delta_um")) s.delta = *d * units::micrometre;
    s.validate();
    return s;
}

// ---- trap -----------------------------------------------------------------

int cmd_trap(Run& run) {
    struct In {
        physics::TrapConfig trap;
        std::vector<physics::SpeciesState> species;
    };
    const In in = configure(run, [&] {
        Reader r = run.reader();
        In v;
        v.trap = read_trap(r);
        auto list = r.objects("species");
        if (list.empty()) {
            // echo the default pair so the canonical config is complete
            run.canon["species"] = json::array();
            for (const auto& s : {physics::rb87_f1_m1(), physics::rb87_f2_m2()}) {
                v.species.push_back(s);
                run.canon["species"].push_back(
                    {{"label", s.label}, {"F", s.F}, {"mF", s.mF},
                     {"mass_u", s.mass / constants::atomic_mass_unit},
                     {"sigma_self_m2", s.sigma_self}, {"sigma_cross_m2", s.sigma_cross}});
            }
        }
        for (auto& sr : list) v.species.push_back(read_species(sr, physics::rb87_f1_m1()));
        return v;
    });

    std::vector<physics::TrapFrequencies> freqs;
    for (const auto& s : in.species) freqs.push_back(physics::trap_frequencies(in.trap, s));

    Outputs& outs = run.outputs("trap", run.opt.format == "json" ? ".json" : ".csv");
    if (run.opt.format == "json") {
        json j{{"species", json::array()}};
        for (std::size_t i = 0; i < freqs.size(); ++i)
            j["species"].push_back({{"label", in.species[i].label},
                                    {"F", in.species[i].F},
                                    {"mF", in.species[i].mF},
                                    {"omega_x_rad_per_s", freqs[i].omega_x},
                                    {"omega_y_rad_per_s", freqs[i].omega_y},
                                    {"omega_z_rad_per_s", freqs[i].omega_z},
                                    {"omega_bar_rad_per_s", freqs[i].omega_bar},
                                    {"sag_m", freqs[i].sag}});
        if (freqs.size() >= 2) j["relative_sag_m"] = physics::relative_sag(freqs[0], freqs[1]);
        outs.write(outs.primary(), dump(j));
    } else {
        std::ostringstream os;
        os << "label,F,mF,omega_x,omega_y,omega_z,omega_bar,sag_m\n";
        for (std::size_t i = 0; i < freqs.size(); ++i)
            os << in.species[i].label << ',' << in.species[i].F << ',' << in.species[i].mF << ','
               << format_number(freqs[i].omega_x) << ',' << format_number(freqs[i].omega_y) << ','
               << format_number(freqs[i].omega_z) << ',' << format_number(freqs[i].omega_bar)
               << ',' << format_number(freqs[i].sag) << '\n';
        outs.write(outs.primary(), os.str());
    }
    outs.write("constants.json", dump(physics::constants_table()));

    for (std::size_t i = 0; i < freqs.size(); ++i)
        run.out << in.species[i].label << ": omega_z = " << format_number(freqs[i].omega_z)
                << " rad/s, sag = " << format_number(freqs[i].sag / units::micrometre) << " um\n";
    if (freqs.size() >= 2)
        run.out << "relative sag: "
                << format_number(std::abs(physics::relative_sag(freqs[0], freqs[1])) /
                                 units::micrometre)
                << " um\n";
    return 0;
}

// ---- budget ---------------------------------------------------------------

budget::BudgetParams read_budget(Reader& r, double& threshold) {
    budget::BudgetParams p;
    p.eta = r.number("eta", 6.5);
    p.N1_ini = r.number("N1_ini", 1e8);
    p.N2 = r.number("N2", 3e4);
    p.T_ini = r.number("T_ini_uK", 300.0) * units::microkelvin;
    p.psd_prefactor = r.number("psd_prefactor", 2.17);
    threshold = r.number("bec_threshold", constants::bec_threshold);
    if (!(p.eta >= 2.0)) r.fail("eta", "must be >= 2");
    if (!(p.N2 > 0.0)) r.fail("N2", "must be positive");
    if (!(p.N1_ini > p.N2)) r.fail("N1_ini", "must exceed N2");
    if (!(p.T_ini > 0.0)) r.fail("T_ini_uK", "must be positive");
    if (!(p.psd_prefactor > 0.0)) r.fail("psd_prefactor", "must be positive");
    if (r.has("omega1_bar_rad_per_s") || r.has("omega2_bar_rad_per_s")) {
        if (r.has("trap")) r.fail("trap", "give either a trap or explicit omega values, not both");
        p.omega1_bar = r.number("omega1_bar_rad_per_s");
        p.omega2_bar = r.number("omega2_bar_rad_per_s");
    } else {
        const auto trap = read_trap(r.object("trap"), 56.0);
        p.omega1_bar = physics::trap_frequencies(trap, physics::rb87_f1_m1()).omega_bar;
        p.omega2_bar = physics::trap_frequencies(trap, physics::rb87_f2_m2()).omega_bar;
    }
    if (!(threshold > 0.0)) r.fail("bec_threshold", "must be positive");
    p.validate();
    return p;
}

int cmd_budget(Run& run) {
    double threshold = constants::bec_threshold;
    std::int64_t curve_points = 200;
    const auto p = configure(run, [&] {
        Reader r = run.reader();
        auto v = read_budget(r, threshold);
        curve_points = r.integer("curve_points", 200);
        if (curve_points < 2) r.fail("curve_points", "need at least 2 points");
        return v;
    });

    const auto outcome = budget::classify(p, threshold);
    json summary{{"alpha", p.alpha()},
                 {"omega1_bar_rad_per_s", p.omega1_bar},
                 {"omega2_bar_rad_per_s", p.omega2_bar},
                 {"T_min_K", budget::minimum_temperature(p)}};
    try {
        const auto c = budget::critical_numbers(p, threshold);
        summary["critical_numbers"] = {{"N2_a", c.N2_a},         {"N2_b", c.N2_b},
                                       {"N2_c", c.N2_c},         {"ratio_a", c.ratio_a()},
                                       {"ratio_b", c.ratio_b()}};
    } catch (const NoInteriorPeak& e) {
        summary["critical_numbers"] = nullptr;
        summary["note"] = e.what();
    }
    summary["outcome"] = {{"region", budget::to_string(outcome.region)},
                          {"D1_max", outcome.D1_max},
                          {"D2_max", outcome.D2_max},
                          {"D_equal", outcome.D_equal},
                          {"N1_at_buffer_peak", outcome.N1_at_buffer_peak},
                          {"N1_buffer_bec", outcome.N1_buffer_bec},
                          {"N1_target_bec", outcome.N1_target_bec},
                          {"extrapolated", outcome.extrapolated}};

    const bool as_json = run.opt.format == "json";
    Outputs& outs = run.outputs("budget", as_json ? ".json" : ".csv");
    if (as_json) {
        outs.write(outs.primary(), dump(summary));
    } else {
        // evaporation path from N1_ini down to 1e-3 N2, then N1 = 0
        std::ostringstream os;
        os << "N1,T,D1,D2\n";
        const double lo = std::log(1e-3 * p.N2), hi = std::log(p.N1_ini);
        auto row = [&](double n1) {
            os << format_number(n1) << ',' << format_number(budget::temperature_of(n1, p)) << ','
               << format_number(budget::buffer_psd(n1, p)) << ','
               << format_number(budget::target_psd(n1, p)) << '\n';
        };
        for (std::int64_t i = 0; i < curve_points; ++i)
            row(std::exp(hi + (lo - hi) * double(i) / double(curve_points - 1)));
        row(0.0);
        outs.write(outs.primary(), os.str());
        outs.write(outs.sibling(".summary.json"), dump(summary));
    }
    run.out << "region: " << budget::to_string(outcome.region)
            << ", D2_max = " << format_number(outcome.D2_max) << '\n';
    return 0;
}

// ---- phase-diagram --------------------------------------------------------

int cmd_phase_diagram(Run& run) {
    auto& o = run.opt;
    if (o.eta_min) run.src->override_value("eta_min", *o.eta_min, "--eta-min");
    if (o.eta_max) run.src->override_value("eta_max", *o.eta_max, "--eta-max");
    if (o.eta_step) run.src->override_value("eta_step", *o.eta_step, "--eta-step");
    if (o.ratio) run.src->override_value("ratio", *o.ratio, "--ratio");
    if (o.n2_min) run.src->override_value("n2_min", *o.n2_min, "--n2-min");
    if (o.n2_max) run.src->override_value("n2_max", *o.n2_max, "--n2-max");
    if (o.n2_points) run.src->override_value("n2_points", *o.n2_points, "--n2-points");

    struct In {
        std::vector<double> etas, n2s;
        double ratio;
    };
    const In in = configure(run, [&] {
        Reader r = run.reader();
        In v;
        const double lo = r.number("eta_min", 4.0), hi = r.number("eta_max", 10.0);
        const double step = r.number("eta_step", 0.5);
        v.ratio = r.number("ratio", std::sqrt(2.0));
        const double nlo = r.number("n2_min", 0.01), nhi = r.number("n2_max", 2.0);
        const auto npts = r.integer("n2_points", 60);
        if (!(lo >= 2.0)) r.fail("eta_min", "eta must be at least 2");
        if (!(hi >= lo)) r.fail("eta_max", "must not be below eta_min");
        if (!(step > 0.0)) r.fail("eta_step", "must be positive");
        if (!(v.ratio > 0.0)) r.fail("ratio", "must be positive");
        if (!(nlo > 0.0)) r.fail("n2_min", "must be positive");
        if (!(nhi >= nlo)) r.fail("n2_max", "must not be below n2_min");
        if (npts < 1) r.fail("n2_points", "must be at least 1");
        const auto neta = static_cast<std::int64_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
        for (std::int64_t i = 0; i < neta; ++i) v.etas.push_back(lo + double(i) * step);
        for (std::int64_t i = 0; i < npts; ++i)
            v.n2s.push_back(npts == 1 ? nlo
                                      : std::exp(std::log(nlo) + (std::log(nhi) - std::log(nlo)) *
                                                                     double(i) / double(npts - 1)));
        return v;
    });

    const auto pd = budget::phase_diagram(in.etas, in.n2s, in.ratio);
    const bool as_json = run.opt.format == "json";
    Outputs& outs = run.outputs("phase_diagram", as_json ? ".json" : ".csv");
    if (as_json) {
        json rows = json::array();
        for (const auto& r : pd.rows)
            rows.push_back({{"eta", r.eta},       {"n2_over_n2c", r.n2_over_n2c},
                            {"region", budget::to_string(r.region)}, {"d1max", r.d1max},
                            {"d2max", r.d2max},   {"dequal", r.dequal}});
        outs.write(outs.primary(), dump(json{{"trap_ratio", pd.trap_ratio}, {"rows", rows}}));
    } else {
        std::ostringstream os;
        pd.write_csv(os);
        outs.write(outs.primary(), os.str());
    }
    outs.write(outs.sibling(".boundaries.json"), dump(pd.boundaries_json()));
    run.out << pd.rows.size() << " grid points, " << pd.boundaries.size() << " eta values\n";
    return 0;
}

// ---- contact --------------------------------------------------------------

struct Sweep {
    std::string var;
    double lo = 0.0, hi = 0.0;
    int n = 0;
};

Sweep parse_sweep(const std::string& spec, Reader& r) {
    Sweep s;
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
    if (parts.size() != 4) r.fail("sweep", "expected var:lo:hi:n");
    s.var = parts[0];
    static const std::vector<std::string> vars{"delta", "T1", "T2", "T", "N1", "N2"};
    if (std::find(vars.begin(), vars.end(), s.var) == vars.end())
        r.fail("sweep", "unknown sweep variable '" + s.var + "' (delta, T1, T2, T, N1, N2)");
    try {
        std::size_t used = 0;
        s.lo = std::stod(parts[1], &used);
        if (used != parts[1].size()) throw std::invalid_argument("lo");
        s.hi = std::stod(parts[2], &used);
        if (used != parts[2].size()) throw std::invalid_argument("hi");
        s.n = std::stoi(parts[3], &used);
        if (used != parts[3].size()) throw std::invalid_argument("n");
    } catch (const std::exception&) {
        r.fail("sweep", "malformed sweep '" + spec + "'");
    }
    if (s.n < 1) r.fail("sweep", "needs at least one point");
    return s;
}

json report_row(const contact::ContactReport& rep) { return contact::to_json(rep); }

int cmd_contact(Run& run) {
    if (!run.opt.sweep.empty()) run.src->override_value("sweep", run.opt.sweep, "--sweep");
    std::optional<Sweep> sweep;
    const auto state = configure(run, [&] {
        Reader r = run.reader();
        auto s = read_state(r);
        if (auto spec = r.optional_text("sweep")) sweep = parse_sweep(*spec, r);
        return s;
    });

    const bool as_json = run.opt.format == "json";
    Outputs& outs = run.outputs("contact", as_json ? ".json" : ".csv");
    static const std::vector<std::string> cols{"rho_x_m", "rho_y_m",     "rho_z_m",
                                               "V_m_per_s", "overlap",   "Gamma_per_s",
                                               "W_watt",  "rate_per_s", "tau_s"};
    auto csv_cells = [&](const json& j, std::ostream& os) {
        for (const auto& c : cols)
            os << ',' << (j[c].is_null() ? std::string("inf") : format_number(j[c].get<double>()));
        os << '\n';
    };

    if (!sweep) {
        const auto rep = contact::report(state);
        const json j = report_row(rep);
        if (as_json) {
            outs.write(outs.primary(), dump(j));
        } else {
            std::ostringstream os;
            os << "delta";
            for (const auto& c : cols) os << ',' << c;
            os << '\n' << format_number(state.delta);
            csv_cells(j, os);
            outs.write(outs.primary(), os.str());
        }
        run.out << "overlap = " << format_number(rep.overlap)
                << ", 1/tau = " << format_number(rep.rate) << " 1/s\n";
        return 0;
    }

    std::ostringstream os;
    json rows = json::array();
    os << sweep->var;
    for (const auto& c : cols) os << ',' << c;
    os << '\n';
    for (int i = 0; i < sweep->n; ++i) {
        const double x =
            sweep->n == 1 ? sweep->lo
                          : sweep->lo + (sweep->hi - sweep->lo) * double(i) / double(sweep->n - 1);
        auto s = state;
        if (sweep->var == "delta") s.delta = x;
        else if (sweep->var == "T1") s.T1 = x;
        else if (sweep->var == "T2") s.T2 = x;
        else if (sweep->var == "T") s.T1 = s.T2 = x;
        else if (sweep->var == "N1") s.N1 = x;
        else s.N2 = x;
        const json j = report_row(contact::report(s));
        os << format_number(x);
        csv_cells(j, os);
        json row = j;
        row[sweep->var] = x;
        rows.push_back(std::move(row));
    }
    outs.write(outs.primary(), as_json ? dump(rows) : os.str());
    run.out << sweep->n << " rows swept over " << sweep->var << '\n';
    return 0;
}

// ---- traj -----------------------------------------------------------------

int cmd_traj(Run& run) {
    bool plot = false;
    const auto cfg = configure(run, [&] {
        Reader r = run.reader();
        trajectory::TrajectoryConfig c;
        c.initial = read_state(r.object("state"));
        c.eta = r.number("eta", 6.5);
        Reader ev = r.object("evaporation");
        const auto model = ev.text("model", "rate");
        if (model == "rate") {
            c.evaporation = trajectory::RateDriven{ev.number("prefactor", 1.0),
                                                   ev.number("sigma_self_m2", default_sigma())};
        } else if (model == "ramp") {
            trajectory::RampSchedule rs;
            rs.t = ev.numbers("t_s");
            rs.N1 = ev.numbers("N1");
            try {
                rs.validate();
            } catch (const Error& e) {
                ev.fail("t_s", e.what());
            }
            c.evaporation = trajectory::RampDriven{rs};
        } else {
            ev.fail("model", "expected 'rate' or 'ramp'");
        }
        const auto mode = r.text("contact_mode", "finite");
        if (mode == "finite") c.contact_mode = trajectory::ContactMode::Finite;
        else if (mode == "instant") c.contact_mode = trajectory::ContactMode::Instant;
        else r.fail("contact_mode", "expected 'finite' or 'instant'");
        if (!(c.eta > 2.0)) r.fail("eta", "must exceed 2");
        c.t_end = r.number("t_end_s");
        if (!(c.t_end > 0.0)) r.fail("t_end_s", "must be positive");
        c.dt_max = r.number("dt_max_s", c.t_end / 100.0);
        if (!(c.dt_max > 0.0)) r.fail("dt_max_s", "must be positive");
        const auto halt = r.text("halt", "first");
        if (halt == "first") c.halt = trajectory::BecHalt::First;
        else if (halt == "both") c.halt = trajectory::BecHalt::Both;
        else if (halt == "never") c.halt = trajectory::BecHalt::Never;
        else r.fail("halt", "expected 'first', 'both' or 'never'");
        c.bec_threshold = r.number("bec_threshold", constants::bec_threshold);
        c.psd_prefactor = r.number("psd_prefactor", 2.17);
        c.stall_overlap = r.number("stall_overlap", 0.01);
        c.n1_floor = r.number("n1_floor", 1.0);
        c.tolerance = r.number("tolerance", 1e-8);
        plot = r.boolean("plot_script", false);
        c.validate();
        return c;
    });

    const auto traj = trajectory::simulate(cfg);
    const auto events = trajectory::detect_events(traj.points, cfg.bec_threshold, cfg.n1_floor);
    const bool as_json = run.opt.format == "json";
    Outputs& outs = run.outputs("trajectory", as_json ? ".json" : ".csv");
    if (as_json) {
        json pts = json::array();
        for (const auto& p : traj.points)
            pts.push_back({{"t", p.t},         {"N1", p.N1},           {"T1", p.T1},
                           {"T2", p.T2},       {"D1", p.D1},           {"D2", p.D2},
                           {"Gamma", p.Gamma}, {"overlap", p.overlap}, {"stalled", p.stalled},
                           {"bec1", p.bec1},   {"bec2", p.bec2}});
        outs.write(outs.primary(), dump(pts));
    } else {
        std::ostringstream os;
        trajectory::write_csv(traj.points, os);
        outs.write(outs.primary(), os.str());
    }
    outs.write(outs.sibling(".events.json"), dump(trajectory::events_json(traj, events)));
    if (plot) {
        std::ostringstream gp;
        trajectory::write_gnuplot(gp, outs.primary(), cfg.bec_threshold);
        outs.write(outs.sibling(".gp"), gp.str());
    }
    const auto& last = traj.points.back();
    run.out << traj.points.size() << " samples, final T2 = " << format_number(last.T2)
            << " K, " << events.size() << " events\n";
    return 0;
}

// ---- dsmc -----------------------------------------------------------------

int cmd_dsmc(Run& run) {
    double sigma12 = 0.0;
    const auto cfg = configure(run, [&] {
        Reader r = run.reader();
        dsmc::DsmcConfig c;
        const double g = r.number("gravity_m_per_s2", constants::standard_gravity);
        auto list = r.objects("species");
        if (list.empty() || list.size() > 2) r.fail("species", "expected one or two species");
        for (std::size_t i = 0; i < list.size(); ++i) {
            auto& sr = list[i];
            dsmc::SpeciesSpec spec;
            spec.species.label = sr.text("label", "species" + std::to_string(i + 1));
            spec.species.F = 1;
            spec.species.mF = -1;
            spec.species.mass =
                sr.number("mass_u", constants::rb87_mass_u) * constants::atomic_mass_unit;
            spec.species.sigma_self = sr.number("sigma_self_m2", default_sigma());
            const auto n = sr.integer("n_test", 10000);
            if (n < 2) sr.fail("n_test", "need at least two test particles");
            spec.n_test = static_cast<std::size_t>(n);
            spec.T_init = sr.number("T_init_uK", 1.0) * units::microkelvin;
            spec.trap = read_axes(sr, "omega_rad_per_s", g, 2.0 * constants::pi * 100.0);
            if (auto sag = sr.optional_number("sag_um")) spec.trap.sag = *sag * units::micrometre;
            c.species.push_back(spec);
        }
        sigma12 = r.number("sigma12_m2", c.species[0].species.sigma_self);
        for (auto& s : c.species) s.species.sigma_cross = sigma12;
        c.weight = r.number("weight", 1.0);
        if (!(c.weight > 0.0)) r.fail("weight", "must be positive");
        double wmax = 0.0, width = INFINITY;
        for (const auto& s : c.species) {
            wmax = std::max({wmax, s.trap.omega_x, s.trap.omega_y, s.trap.omega_z});
            for (double w : {s.trap.omega_x, s.trap.omega_y, s.trap.omega_z})
                width = std::min(width,
                                 std::sqrt(constants::boltzmann * s.T_init / s.species.mass) / w);
        }
        c.dt = r.number("dt_s", 0.02 * 2.0 * constants::pi / wmax);
        if (!(c.dt > 0.0 && c.dt < 0.05 * 2.0 * constants::pi / wmax))
            r.fail("dt_s", "must be positive and below 1/20 of the fastest trap period");
        c.t_end = r.number("t_end_s");
        if (!(c.t_end > 0.0)) r.fail("t_end_s", "must be positive");
        c.cell_size = r.number("cell_size_um", width / 4.0 / units::micrometre) * units::micrometre;
        if (!(c.cell_size > 0.0 && c.cell_size <= width / 4.0))
            r.fail("cell_size_um", "must be positive and at most a quarter of the smallest cloud width");
        c.sample_interval = r.number("sample_interval_s", 0.0);
        const auto threads = r.integer("threads", 1);
        if (threads < 1) r.fail("threads", "must be at least 1");
        c.threads = static_cast<unsigned>(threads);
        c.rng_seed = run.opt.seed;
        c.validate();
        return c;
    });

    const auto result = dsmc::run(cfg);
    const auto& sp = cfg.species;
    const auto& last = result.series.back();

    json summary = json::object();
    if (sp.size() == 2) {
        std::vector<double> t, dT;
        for (const auto& s : result.series) {
            t.push_back(s.t);
            dT.push_back(s.T_kin[0] - s.T_kin[1]);
        }
        try {
            const auto fit = dsmc::fit_relaxation(t, dT);
            summary["fit"] = {{"quantity", "T1_kin - T2_kin"}, {"rate_per_s", fit.rate},
                              {"stderr_per_s", fit.stderr_rate}, {"efolds", fit.efolds},
                              {"points", fit.points}};
        } catch (const Error& e) {
            summary["fit"] = {{"quantity", "T1_kin - T2_kin"}, {"error", e.what()}};
        }
    }

    // analytic rates at the equilibrium temperature the run relaxes to
    double n_tot = 0.0, tn = 0.0;
    for (const auto& s : sp) {
        n_tot += double(s.n_test);
        tn += double(s.n_test) * s.T_init;
    }
    const double T_eq = tn / n_tot;
    json analytic = json::object();
    json per_species = json::array();
    for (const auto& s : sp)
        per_species.push_back(contact::single_species_collision_rate(
            cfg.weight * double(s.n_test), T_eq, s.trap.omega_bar, s.species.sigma_self,
            s.species.mass));
    analytic["single_species_collision_rate_per_s"] = per_species;
    analytic["gamma_over_3_per_s"] =
        contact::single_species_collision_rate(cfg.weight * n_tot, T_eq, sp[0].trap.omega_bar,
                                               sp[0].species.sigma_self, sp[0].species.mass) /
        3.0;
    if (sp.size() == 2) {
        contact::TwoGasState st{cfg.weight * double(sp[0].n_test),
                                cfg.weight * double(sp[1].n_test),
                                T_eq,
                                T_eq,
                                sp[0].trap,
                                sp[1].trap,
                                sp[0].species.mass,
                                sp[1].species.mass,
                                sigma12,
                                std::abs(physics::relative_sag(sp[0].trap, sp[1].trap))};
        analytic["interspecies_rate_per_s"] = contact::interspecies_thermalization_rate(st);
        analytic["interspecies_collisions_per_s"] = contact::interspecies_collision_rate(st);
        analytic["overlap"] = contact::overlap_factor(st);
    }
    summary["analytic"] = analytic;

    json measured = json::object();
    if (last.t > 0.0) {
        json rates = json::array();
        for (std::size_t i = 0; i < sp.size(); ++i)
            rates.push_back(2.0 * double(last.pair_collisions[i]) / (double(sp[i].n_test) * last.t));
        measured["collision_rate_per_atom_per_s"] = rates;
        if (sp.size() == 2)
            measured["interspecies_collisions_per_s"] =
                cfg.weight * double(last.pair_collisions[2]) / last.t;
    }
    measured["collisions"] = last.collisions_cum;
    summary["measured"] = measured;
    summary["cell_underflow"] = result.cell_underflow;
    summary["mean_lonely_fraction"] = result.mean_lonely_fraction;
    summary["warnings"] = result.warnings;

    const bool as_json = run.opt.format == "json";
    Outputs& outs = run.outputs("dsmc", as_json ? ".json" : ".csv");
    if (as_json) {
        json pts = json::array();
        for (const auto& s : result.series)
            pts.push_back({{"t", s.t},
                           {"T1_kin", s.T_kin[0]},
                           {"T2_kin", sp.size() == 2 ? json(s.T_kin[1]) : json(nullptr)},
                           {"collisions_cum", s.collisions_cum}});
        outs.write(outs.primary(), dump(pts));
    } else {
        std::ostringstream os;
        dsmc::write_csv(result, os);
        outs.write(outs.primary(), os.str());
    }
    outs.write(outs.sibling(".summary.json"), dump(summary));
    for (const auto& w : result.warnings) run.out << "warning: " << w << '\n';
    run.out << result.series.size() << " samples, " << last.collisions_cum << " collisions\n";
    return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    CLI::App app{"Sympathetic cooling models: trap geometry, energy budget, thermal contact, "
                 "cooling trajectories and DSMC checks.",
                 "sympcool"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tool_version));

    Options opt;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "JSON configuration file");
        sub->add_option("--out", opt.out, "output directory, or a file name for the main output");
        sub->add_option("--seed", opt.seed, "random seed");
        sub->add_option("--format", opt.format, "main output format")
            ->check(CLI::IsMember({"csv", "json"}));
    };
    auto* trap = app.add_subcommand("trap", "trap frequencies and gravitational sags");
    auto* bud = app.add_subcommand("budget", "energy-budget model: critical numbers and outcome");
    auto* pd = app.add_subcommand("phase-diagram", "outcome regions over (eta, N2/N2c)");
    auto* con = app.add_subcommand("contact", "interspecies collision and thermalization rates");
    auto* traj = app.add_subcommand("traj", "time-domain cooling trajectory");
    auto* ds = app.add_subcommand("dsmc", "Monte Carlo thermalization run");
    for (auto* s : {trap, bud, pd, con, traj, ds}) common(s);
    pd->add_option("--eta-min", opt.eta_min);
    pd->add_option("--eta-max", opt.eta_max);
    pd->add_option("--eta-step", opt.eta_step);
    pd->add_option("--ratio", opt.ratio, "trap frequency ratio w2/w1");
    pd->add_option("--n2-min", opt.n2_min);
    pd->add_option("--n2-max", opt.n2_max);
    pd->add_option("--n2-points", opt.n2_points);
    con->add_option("--state", opt.config, "two-gas state (same as --config)");
    con->add_option("--sweep", opt.sweep, "var:lo:hi:n over delta, T1, T2, T, N1 or N2 (SI)");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();  // program name
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << tool_version << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "sympcool: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    CLI::App* chosen = app.get_subcommands().front();
    std::string command_line = "sympcool";
    for (std::size_t i = 1; i < args.size(); ++i) command_line += " " + args[i];

    try {
        Run run{opt, command_line, opt.config.empty() ? ConfigSource::empty()
                                                      : ConfigSource::load(opt.config),
                json::object(), out, std::nullopt};
        const std::string name = chosen->get_name();
        int code = 0;
        if (name == "trap") code = cmd_trap(run);
        else if (name == "budget") code = cmd_budget(run);
        else if (name == "phase-diagram") code = cmd_phase_diagram(run);
        else if (name == "contact") code = cmd_contact(run);
        else if (name == "traj") code = cmd_traj(run);
        else code = cmd_dsmc(run);
        if (code == 0 && run.outs) {
            const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                              start).count();
            json manifest{{"command", command_line},
                          {"config", run.canon},
                          {"config_digest", sha256_hex(run.canon.dump())},
                          {"tool_version", std::string(tool_version)},
                          {"seed", opt.seed},
                          {"outputs", run.outs->written()},
                          {"wall_time_s", wall}};
            run.outs->write(run.outs->sibling(".manifest.json"), dump(manifest));
        }
        return code;
    } catch (const ConfigFailure& e) {
        err << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "sympcool: " << e.what() << '\n';
        return 1;
    }
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    return dispatch(std::vector<std::string>(argv, argv + argc), out, err);
}

int dispatch(int argc, const char* const* argv) { return dispatch(argc, argv, std::cout, std::cerr); }

}  // namespace sympcool::cli
