#include "sympcool/budget.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

#include "sympcool/errors.hpp"
#include "sympcool/io.hpp"

namespace sympcool::budget {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

double log_temperature(double N1, const BudgetParams& p) {
    const double a = p.alpha();
    return std::log(p.T_ini) + a * (std::log(p.N2) - std::log(p.N1_ini)) +
           a * std::log1p(N1 / p.N2);
}

double log_quantum(double omega) { return std::log(constants::hbar * omega / constants::boltzmann); }

// ln D1 and ln D2 along the path, with the calibration prefactor included.
double log_buffer_psd(double N1, const BudgetParams& p) {
    return std::log(p.psd_prefactor) + std::log(N1) + 3.0 * log_quantum(p.omega1_bar) -
           3.0 * log_temperature(N1, p);
}

double log_target_psd(double N1, const BudgetParams& p) {
    return std::log(p.psd_prefactor) + std::log(p.N2) + 3.0 * log_quantum(p.omega2_bar) -
           3.0 * log_temperature(N1, p);
}

// ln of D2_max / N2^(1-3 alpha), the N2-independent part of the target maximum.
double log_target_scale(const BudgetParams& p) {
    return std::log(p.psd_prefactor) +
           3.0 * (p.alpha() * std::log(p.N1_ini) + log_quantum(p.omega2_bar) - std::log(p.T_ini));
}

double log_equal_factor(const BudgetParams& p) {
    const double r3 = std::pow(p.omega2_bar / p.omega1_bar, 3);
    return -3.0 * p.alpha() * std::log1p(r3);
}

double log_buffer_factor(const BudgetParams& p) {
    const double s = 3.0 * p.alpha();
    return 3.0 * std::log(p.omega1_bar / p.omega2_bar) + (s - 1.0) * std::log(s - 1.0) -
           s * std::log(s);
}

void require_interior_peak(const BudgetParams& p) {
    if (!(3.0 * p.alpha() > 1.0))
        throw NoInteriorPeak("3 alpha <= 1 (eta <= 3): buffer PSD has no interior maximum");
}

// Bisection for the sign change of f between a (f < 0) and b (f >= 0). Works
// in log space when both ends are positive.
double bisect(const std::function<double(double)>& f, double a, double b) {
    for (int i = 0; i < 400; ++i) {
        const double mid = (a > 0.0 && b > 0.0) ? std::sqrt(a) * std::sqrt(b) : 0.5 * (a + b);
        if (mid == a || mid == b) break;
        (f(mid) < 0.0 ? a : b) = mid;
    }
    return b;
}

}  // namespace

void BudgetParams::validate() const {
    if (!(eta >= 2.0)) throw DomainError("budget: eta must be >= 2");
    if (!(N2 > 0.0)) throw DomainError("budget: N2 must be positive");
    if (!(N1_ini > N2)) throw DomainError("budget: N1_ini must exceed N2");
    if (!(T_ini > 0.0)) throw DomainError("budget: T_ini must be positive");
    if (!(omega1_bar > 0.0) || !(omega2_bar > 0.0))
        throw DomainError("budget: mean trap frequencies must be positive");
    if (!(psd_prefactor > 0.0)) throw DomainError("budget: psd_prefactor must be positive");
}

double temperature_of(double N1, const BudgetParams& p) {
    if (!(N1 >= 0.0)) throw DomainError("temperature_of: N1 must be >= 0");
    return minimum_temperature(p) * std::pow(N1 / p.N2 + 1.0, p.alpha());
}

double minimum_temperature(const BudgetParams& p) {
    return p.T_ini * std::pow(p.N2 / p.N1_ini, p.alpha());
}

double phase_space_density(double N, double T, double omega_bar) {
    if (!(T > 0.0)) throw DomainError("phase_space_density: T must be positive");
    if (!(N >= 0.0)) throw DomainError("phase_space_density: N must be >= 0");
    const double x = constants::hbar * omega_bar / (constants::boltzmann * T);
    return N * x * x * x;
}

double buffer_psd(double N1, const BudgetParams& p) {
    return p.psd_prefactor * phase_space_density(N1, temperature_of(N1, p), p.omega1_bar);
}

double target_psd(double N1, const BudgetParams& p) {
    return p.psd_prefactor * phase_space_density(p.N2, temperature_of(N1, p), p.omega2_bar);
}

double target_psd_max(const BudgetParams& p) {
    return std::exp(log_target_scale(p) + (1.0 - 3.0 * p.alpha()) * std::log(p.N2));
}

BufferPeak buffer_psd_max(const BudgetParams& p) {
    require_interior_peak(p);
    return {p.N2 / (3.0 * p.alpha() - 1.0), target_psd_max(p) * std::exp(log_buffer_factor(p))};
}

double equal_psd_buffer_number(const BudgetParams& p) {
    return p.N2 * std::pow(p.omega2_bar / p.omega1_bar, 3);
}

double equal_psd(const BudgetParams& p) {
    return target_psd_max(p) * std::exp(log_equal_factor(p));
}

CriticalNumbers critical_numbers(const BudgetParams& p, double threshold) {
    require_interior_peak(p);
    const double k = log_target_scale(p);
    const double slope = 3.0 * p.alpha() - 1.0;
    const double lt = std::log(threshold);
    CriticalNumbers c;
    c.N2_c = std::exp((k - lt) / slope);
    c.N2_a = std::exp((k + log_equal_factor(p) - lt) / slope);
    c.N2_b = std::exp((k + log_buffer_factor(p) - lt) / slope);
    return c;
}

bool crossing_precedes_peak(const BudgetParams& p) {
    return 3.0 * p.alpha() - 1.0 > std::pow(p.omega1_bar / p.omega2_bar, 3);
}

std::string_view to_string(Region r) noexcept {
    switch (r) {
        case Region::DualBufferFirst: return "DualBufferFirst";
        case Region::DualTargetFirst: return "DualTargetFirst";
        case Region::TargetOnly: return "TargetOnly";
        case Region::BufferOnly: return "BufferOnly";
        case Region::NoBEC: return "NoBEC";
    }
    return "NoBEC";
}

Region region_from_string(std::string_view s) {
    for (Region r : {Region::DualBufferFirst, Region::DualTargetFirst, Region::TargetOnly,
                     Region::BufferOnly, Region::NoBEC})
        if (to_string(r) == s) return r;
    throw DomainError("unknown region name: " + std::string(s));
}

PsdScan scan_psd_curves(const BudgetParams& p, double threshold, std::size_t grid_points) {
    p.validate();
    grid_points = std::max<std::size_t>(grid_points, 16);
    const double lt = std::log(threshold);
    const double u_hi = std::log(p.N1_ini);
    const double u_lo = std::log(std::min(p.N1_ini, p.N2)) - 30.0;

    // Log-spaced nodes from N1_ini down, then N1 = 0.
    std::vector<double> n1(grid_points + 1);
    for (std::size_t k = 0; k < grid_points; ++k)
        n1[k] = std::exp(u_hi - (u_hi - u_lo) * double(k) / double(grid_points - 1));
    n1[0] = p.N1_ini;
    n1[grid_points] = 0.0;

    auto ld1 = [&](double N1) {
        return N1 > 0.0 ? log_buffer_psd(N1, p) : -std::numeric_limits<double>::infinity();
    };
    auto ld2 = [&](double N1) { return log_target_psd(N1, p); };

    std::vector<double> d1(n1.size()), d2(n1.size());
    std::size_t peak = 0;
    for (std::size_t k = 0; k < n1.size(); ++k) {
        d1[k] = ld1(n1[k]);
        d2[k] = ld2(n1[k]);
        if (d1[k] > d1[peak]) peak = k;
    }

    PsdScan s;
    s.D2_max = std::exp(d2.back());

    // Buffer peak: bisection on the slope d ln D1/d ln N1 = 1 - 3 alpha N1/(N1 + N2)
    // inside the bracketing nodes. Function values alone only locate a flat
    // maximum to sqrt(machine epsilon).
    if (peak == 0) {
        s.N1_buffer_peak = p.N1_ini;
        s.D1_max = std::exp(d1[0]);
    } else {
        auto slope = [&](double u) {
            const double N1 = std::exp(u);
            return 1.0 - 3.0 * p.alpha() * N1 / (N1 + p.N2);
        };
        double a = std::log(n1[peak + 1 < grid_points ? peak + 1 : peak]);
        double b = std::log(n1[peak - 1]);
        for (int i = 0; i < 200; ++i) {
            const double m = 0.5 * (a + b);
            if (m <= a || m >= b) break;
            (slope(m) > 0.0 ? a : b) = m;
        }
        s.N1_buffer_peak = std::exp(0.5 * (a + b));
        s.D1_max = std::exp(std::max(ld1(s.N1_buffer_peak), d1[peak]));
    }

    // Equal-PSD crossing: ln D1 - ln D2 changes sign once.
    auto diff = [&](double N1) { return ld2(N1) - ld1(N1); };
    s.N1_equal = nan;
    s.D_equal = nan;
    for (std::size_t k = 1; k < n1.size(); ++k) {
        if (d2[k - 1] - d1[k - 1] < 0.0 && d2[k] - d1[k] >= 0.0) {
            s.N1_equal = bisect(diff, n1[k - 1], n1[k]);
            s.D_equal = std::exp(ld1(s.N1_equal));
            break;
        }
    }

    // First threshold crossings while N1 decreases.
    auto first_crossing = [&](const std::vector<double>& d, auto&& f) {
        if (d[0] >= lt) return p.N1_ini;
        for (std::size_t k = 1; k < d.size(); ++k)
            if (d[k] >= lt) return bisect([&](double N1) { return f(N1) - lt; }, n1[k - 1], n1[k]);
        return nan;
    };
    s.N1_target_bec = first_crossing(d2, ld2);
    s.N1_buffer_bec = first_crossing(d1, ld1);
    if (std::isnan(s.N1_buffer_bec) && s.D1_max >= threshold && peak > 0)
        s.N1_buffer_bec = bisect([&](double N1) { return ld1(N1) - lt; }, n1[peak - 1],
                                 s.N1_buffer_peak);
    return s;
}

CoolingOutcome classify(const BudgetParams& p, double threshold) {
    const PsdScan s = scan_psd_curves(p, threshold);
    CoolingOutcome out;
    out.D1_max = s.D1_max;
    out.D2_max = s.D2_max;
    out.D_equal = std::isnan(s.D_equal) ? equal_psd(p) : s.D_equal;
    out.N1_at_buffer_peak = s.N1_buffer_peak;
    out.N1_buffer_bec = s.N1_buffer_bec;
    out.N1_target_bec = s.N1_target_bec;

    const bool buffer = !std::isnan(s.N1_buffer_bec);
    const bool target = !std::isnan(s.N1_target_bec);
    if (buffer && target)
        out.region = s.N1_buffer_bec >= s.N1_target_bec ? Region::DualBufferFirst
                                                        : Region::DualTargetFirst;
    else if (target)
        out.region = Region::TargetOnly;
    else if (buffer)
        out.region = Region::BufferOnly;
    else
        out.region = Region::NoBEC;

    out.extrapolated = !crossing_precedes_peak(p);
    if (!out.extrapolated) {
        Region closed = Region::NoBEC;
        if (equal_psd(p) > threshold)
            closed = Region::DualBufferFirst;
        else if (buffer_psd_max(p).D1_max > threshold)
            closed = Region::DualTargetFirst;
        else if (target_psd_max(p) > threshold)
            closed = Region::TargetOnly;
        out.closed_form_agrees = closed == out.region;
    }
    return out;
}

CoolingOutcome classify(double N2, BudgetParams p, double threshold) {
    p.N2 = N2;
    return classify(p, threshold);
}

BudgetParams reference_params(double eta, double trap_ratio, double n2c) {
    BudgetParams p;
    p.eta = eta;
    p.N1_ini = 1e12;
    p.N2 = n2c;
    p.omega1_bar = 2.0 * constants::pi * 100.0;
    p.omega2_bar = trap_ratio * p.omega1_bar;
    // Solve D2_max(n2c) = threshold for T_ini.
    const double a = p.alpha();
    const double log_x = (std::log(constants::bec_threshold) - std::log(p.psd_prefactor) -
                          (1.0 - 3.0 * a) * std::log(n2c)) / 3.0 -
                         a * std::log(p.N1_ini);
    p.T_ini = constants::hbar * p.omega2_bar / constants::boltzmann * std::exp(-log_x);
    return p;
}

PhaseDiagram phase_diagram(const std::vector<double>& eta_grid, const std::vector<double>& n2_grid,
                           double trap_ratio) {
    if (eta_grid.empty() || n2_grid.empty()) throw DomainError("phase_diagram: empty grid");
    if (!(trap_ratio > 0.0)) throw DomainError("phase_diagram: trap ratio must be positive");
    PhaseDiagram pd;
    pd.trap_ratio = trap_ratio;
    for (double eta : eta_grid) {
        if (!(eta >= 2.0)) throw DomainError("phase_diagram: eta must be >= 2");
        BoundaryPoint b{eta, false, nan, nan};
        const BudgetParams ref = reference_params(eta, trap_ratio);
        if (3.0 * ref.alpha() > 1.0) {
            const CriticalNumbers c = critical_numbers(ref);
            b.valid = true;
            b.a_over_c = c.ratio_a();
            b.b_over_c = c.ratio_b();
        }
        pd.boundaries.push_back(b);
        if (!b.valid) continue;
        const double n2c = critical_numbers(ref).N2_c;
        for (double n2 : n2_grid) {
            if (!(n2 > 0.0)) throw DomainError("phase_diagram: N2/N2_c must be positive");
            const CoolingOutcome o = classify(n2 * n2c, ref);
            pd.rows.push_back({eta, n2, o.region, o.D1_max, o.D2_max, o.D_equal, o.extrapolated});
        }
    }
    return pd;
}

void PhaseDiagram::write_csv(std::ostream& os) const {
    using io::format_number;
    os << "eta,n2_over_n2c,region,d1max,d2max,dequal\n";
    for (const auto& r : rows)
        os << format_number(r.eta) << ',' << format_number(r.n2_over_n2c) << ','
           << to_string(r.region) << ',' << format_number(r.d1max) << ','
           << format_number(r.d2max) << ',' << format_number(r.dequal) << '\n';
}

nlohmann::json PhaseDiagram::boundaries_json() const {
    nlohmann::json curves = nlohmann::json::array();
    for (const auto& b : boundaries) {
        nlohmann::json e{{"eta", b.eta}, {"valid", b.valid}};
        e["n2a_over_n2c"] = b.valid ? nlohmann::json(b.a_over_c) : nlohmann::json(nullptr);
        e["n2b_over_n2c"] = b.valid ? nlohmann::json(b.b_over_c) : nlohmann::json(nullptr);
        curves.push_back(std::move(e));
    }
    bool extrapolated = false;
    for (const auto& r : rows) extrapolated = extrapolated || r.extrapolated;
    return {{"trap_ratio", trap_ratio},
            {"threshold", constants::bec_threshold},
            {"extrapolated_rows", extrapolated},
            {"boundaries", curves}};
}

}  // namespace sympcool::budget
