#include "sympcool/trajectory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include <boost/numeric/odeint.hpp>
#include <nlohmann/json.hpp>

#include "sympcool/errors.hpp"
#include "sympcool/io.hpp"

namespace sympcool::trajectory {

namespace odeint = boost::numeric::odeint;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// ln N1, ln T1, ln T2, removed energy / E0
using State = std::array<double, 4>;

std::string_view to_string(StopReason r) {
    switch (r) {
        case StopReason::EndTime: return "end_time";
        case StopReason::BecReached: return "bec_reached";
        case StopReason::BufferExhausted: return "buffer_exhausted";
    }
    return "end_time";
}

}  // namespace

void RampSchedule::validate() const {
    if (t.empty() || t.size() != N1.size()) throw ConfigError("ramp: need matching, nonempty t and N1 knots");
    if (t.front() != 0.0) throw ConfigError("ramp: first knot must be at t = 0");
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(N1[i] > 0.0)) throw ConfigError("ramp: N1 knots must be positive");
        if (i > 0 && !(t[i] > t[i - 1])) throw ConfigError("ramp: knot times must increase");
        if (i > 0 && !(N1[i] <= N1[i - 1])) throw ConfigError("ramp: N1 knots must not increase");
    }
}

double RampSchedule::N1_at(double time) const {
    if (time <= t.front()) return N1.front();
    if (time >= t.back()) return N1.back();
    const auto it = std::upper_bound(t.begin(), t.end(), time);
    const std::size_t i = std::size_t(it - t.begin()) - 1;
    const double f = (time - t[i]) / (t[i + 1] - t[i]);
    return std::exp(std::log(N1[i]) + f * (std::log(N1[i + 1]) - std::log(N1[i])));
}

double RampSchedule::log_rate_at(double time) const {
    if (time < t.front() || time >= t.back()) return 0.0;
    const auto it = std::upper_bound(t.begin(), t.end(), time);
    const std::size_t i = std::size_t(it - t.begin()) - 1;
    return (std::log(N1[i + 1]) - std::log(N1[i])) / (t[i + 1] - t[i]);
}

double RampSchedule::next_knot(double time) const {
    const auto it = std::upper_bound(t.begin(), t.end(), time);
    return it == t.end() ? inf : *it;
}

void TrajectoryConfig::validate() const {
    initial.validate();
    if (!(initial.N1 > 0.0)) throw ConfigError("trajectory: initial N1 must be positive");
    if (!(eta > 2.0)) throw ConfigError("trajectory: eta must exceed 2");
    if (!(t_end > 0.0)) throw ConfigError("trajectory: t_end must be positive");
    if (!(dt_max > 0.0)) throw ConfigError("trajectory: dt_max must be positive");
    if (!(bec_threshold > 0.0) || !(psd_prefactor > 0.0))
        throw ConfigError("trajectory: bec_threshold and psd_prefactor must be positive");
    if (!(tolerance > 0.0)) throw ConfigError("trajectory: tolerance must be positive");
    if (!(n1_floor >= 0.0)) throw ConfigError("trajectory: n1_floor must be >= 0");
    if (const auto* ramp = std::get_if<RampDriven>(&evaporation)) {
        ramp->schedule.validate();
        if (std::abs(ramp->schedule.N1.front() - initial.N1) > 1e-9 * initial.N1)
            throw ConfigError("trajectory: ramp must start at the initial N1");
    } else {
        const auto& rate = std::get<RateDriven>(evaporation);
        if (!(rate.prefactor >= 0.0)) throw ConfigError("trajectory: rate prefactor must be >= 0");
        if (!(rate.sigma_self > 0.0))
            throw ConfigError("trajectory: rate-driven evaporation needs sigma_self > 0");
    }
}

Trajectory simulate(const TrajectoryConfig& cfg) {
    cfg.validate();
    const auto& s0 = cfg.initial;
    const double alpha = (cfg.eta - 2.0) / 3.0;
    const double xi = contact::transfer_efficiency(s0.M1, s0.M2);
    const double N2 = s0.N2;
    const bool instant = cfg.contact_mode == ContactMode::Instant;
    const auto* ramp = std::get_if<RampDriven>(&cfg.evaporation);
    const auto* rate_model = std::get_if<RateDriven>(&cfg.evaporation);
    const double T_start2 = instant ? s0.T1 : s0.T2;
    const double E0 = 3.0 * constants::boltzmann * (s0.N1 * s0.T1 + N2 * T_start2);

    auto gas_at = [&](double N1, double T1, double T2) {
        contact::TwoGasState g = s0;
        g.N1 = N1;
        g.T1 = T1;
        g.T2 = T2;
        return g;
    };

    double segment_rate = 0.0;  // d ln N1/dt of the current ramp segment
    auto log_rate = [&](double N1, double T1) {
        if (ramp) return segment_rate;
        const double gamma1 = contact::single_species_collision_rate(
            N1, T1, s0.f1.omega_bar, rate_model->sigma_self, s0.M1);
        return -rate_model->prefactor * gamma1 * std::exp(-cfg.eta);
    };

    auto rhs = [&](const State& y, State& dy, double /*t*/) {
        const double N1 = std::exp(y[0]);
        const double T1 = std::exp(y[1]);
        const double T2 = std::exp(y[2]);
        const double lr = log_rate(N1, T1);
        dy[0] = lr;
        if (instant) {
            dy[1] = dy[2] = alpha * lr * N1 / (N1 + N2);
        } else {
            const double k12 = contact::pair_collision_rate(gas_at(N1, T1, T2));
            dy[1] = alpha * lr + xi * (T2 - T1) * N2 * k12 / (3.0 * T1);
            dy[2] = -xi * (T2 - T1) * N1 * k12 / (3.0 * T2);
        }
        dy[3] = -(cfg.eta + 1.0) * constants::boltzmann * T1 * N1 * lr / E0;
    };

    Trajectory out;
    auto make_point = [&](double t, const State& y, const TrajectoryPoint* prev) {
        TrajectoryPoint p;
        p.t = t;
        p.N1 = std::exp(y[0]);
        p.T1 = std::exp(y[1]);
        p.T2 = std::exp(y[2]);
        p.removed_energy = y[3];
        const auto g = gas_at(p.N1, p.T1, p.T2);
        p.D1 = cfg.psd_prefactor * budget::phase_space_density(p.N1, p.T1, s0.f1.omega_bar);
        p.D2 = cfg.psd_prefactor * budget::phase_space_density(N2, p.T2, s0.f2.omega_bar);
        p.Gamma = contact::interspecies_collision_rate(g);
        p.overlap = contact::overlap_factor(g);
        p.bec1 = (prev && prev->bec1) || p.D1 >= cfg.bec_threshold;
        p.bec2 = (prev && prev->bec2) || p.D2 >= cfg.bec_threshold;
        if (!instant) {
            if (ramp) segment_rate = ramp->schedule.log_rate_at(t);
            p.stalled = (prev && prev->stalled) ||
                        (p.overlap < cfg.stall_overlap && log_rate(p.N1, p.T1) < 0.0);
        }
        return p;
    };

    State y{std::log(s0.N1), std::log(s0.T1), std::log(T_start2), 0.0};
    double t = 0.0;
    out.points.push_back(make_point(t, y, nullptr));

    auto stepper = odeint::make_controlled(cfg.tolerance, 0.0, odeint::runge_kutta_dopri5<State>());
    double dt = std::min(cfg.dt_max, cfg.t_end) * 1e-3;
    int consecutive_failures = 0;

    while (t < cfg.t_end) {
        double h = std::min({dt, cfg.dt_max, cfg.t_end - t});
        if (ramp) {
            h = std::min(h, ramp->schedule.next_knot(t) - t);
            segment_rate = ramp->schedule.log_rate_at(t);
        }
        const double t_before = t;
        if (stepper.try_step(rhs, y, t, h) == odeint::fail) {
            ++out.rejected_steps;
            if (++consecutive_failures > 200 || h < 1e-14 * std::max(t, cfg.dt_max))
                throw StepFailure("trajectory: step size underflow at t = " + std::to_string(t));
            dt = h;
            continue;
        }
        consecutive_failures = 0;
        ++out.accepted_steps;
        dt = h;
        // Land exactly on the end time and knots despite rounding in t += h.
        if (cfg.t_end - t < 1e-12 * cfg.t_end) t = std::max(t, cfg.t_end);
        if (ramp) {
            const double knot = ramp->schedule.next_knot(t_before);
            if (std::abs(knot - t) < 1e-12 * std::max(1.0, knot)) {
                t = knot;
                // the rate jumps here; drop the derivative dopri5 carries over
                stepper.reset();
            }
        }
        out.points.push_back(make_point(t, y, &out.points.back()));
        const auto& p = out.points.back();

        if (p.N1 <= cfg.n1_floor) {
            out.stop = StopReason::BufferExhausted;
            break;
        }
        const bool halt = (cfg.halt == BecHalt::First && (p.bec1 || p.bec2)) ||
                          (cfg.halt == BecHalt::Both && p.bec1 && p.bec2);
        if (halt) {
            out.stop = StopReason::BecReached;
            break;
        }
    }
    return out;
}

std::string_view to_string(EventKind k) noexcept {
    switch (k) {
        case EventKind::BEC1: return "BEC1";
        case EventKind::BEC2: return "BEC2";
        case EventKind::Stall: return "Stall";
        case EventKind::BufferExhausted: return "BufferExhausted";
    }
    return "BEC1";
}

std::vector<Event> detect_events(const std::vector<TrajectoryPoint>& series, double threshold,
                                 double n1_floor) {
    std::vector<Event> events;
    if (series.empty()) return events;

    auto crossing = [&](EventKind kind, bool TrajectoryPoint::*flag, double TrajectoryPoint::*d) {
        for (std::size_t k = 0; k < series.size(); ++k) {
            if (!(series[k].*flag)) continue;
            const auto& b = series[k];
            if (k == 0 || !(series[k - 1].*d > 0.0)) {
                events.push_back({kind, b.t, b.N1, b.T1, b.T2});
                return;
            }
            const auto& a = series[k - 1];
            const double la = std::log(a.*d), lb = std::log(b.*d);
            const double f = lb > la ? std::clamp((std::log(threshold) - la) / (lb - la), 0.0, 1.0) : 1.0;
            auto lerp_log = [f](double x, double y) {
                return std::exp(std::log(x) + f * (std::log(y) - std::log(x)));
            };
            events.push_back({kind, a.t + f * (b.t - a.t), lerp_log(a.N1, b.N1),
                              lerp_log(a.T1, b.T1), lerp_log(a.T2, b.T2)});
            return;
        }
    };
    crossing(EventKind::BEC1, &TrajectoryPoint::bec1, &TrajectoryPoint::D1);
    crossing(EventKind::BEC2, &TrajectoryPoint::bec2, &TrajectoryPoint::D2);

    for (const auto& p : series)
        if (p.stalled) {
            events.push_back({EventKind::Stall, p.t, p.N1, p.T1, p.T2});
            break;
        }
    const auto& last = series.back();
    if (last.N1 <= n1_floor) events.push_back({EventKind::BufferExhausted, last.t, last.N1, last.T1, last.T2});

    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
    return events;
}

budget::Region region_from_events(const std::vector<Event>& events) {
    const Event* b1 = nullptr;
    const Event* b2 = nullptr;
    for (const auto& e : events) {
        if (e.kind == EventKind::BEC1 && !b1) b1 = &e;
        if (e.kind == EventKind::BEC2 && !b2) b2 = &e;
    }
    using budget::Region;
    if (b1 && b2) return b1->t <= b2->t ? Region::DualBufferFirst : Region::DualTargetFirst;
    if (b2) return Region::TargetOnly;
    if (b1) return Region::BufferOnly;
    return Region::NoBEC;
}

void write_csv(const std::vector<TrajectoryPoint>& series, std::ostream& os) {
    using io::format_bool;
    using io::format_number;
    os << "t,N1,T1,T2,D1,D2,Gamma,overlap,stalled,bec1,bec2\n";
    for (const auto& p : series)
        os << format_number(p.t) << ',' << format_number(p.N1) << ',' << format_number(p.T1) << ','
           << format_number(p.T2) << ',' << format_number(p.D1) << ',' << format_number(p.D2) << ','
           << format_number(p.Gamma) << ',' << format_number(p.overlap) << ','
           << format_bool(p.stalled) << ',' << format_bool(p.bec1) << ',' << format_bool(p.bec2)
           << '\n';
}

nlohmann::json events_json(const Trajectory& traj, const std::vector<Event>& events) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& e : events)
        list.push_back({{"kind", to_string(e.kind)}, {"t", e.t}, {"N1", e.N1}, {"T1", e.T1}, {"T2", e.T2}});
    // Points after the first condensation lie outside the classical model.
    bool beyond = false;
    bool seen = false;
    for (const auto& p : traj.points) {
        if (seen) beyond = true;
        if (p.bec1 || p.bec2) seen = true;
    }
    const auto& last = traj.points.back();
    return {
        {"stop_reason", to_string(traj.stop)},
        {"accepted_steps", traj.accepted_steps},
        {"rejected_steps", traj.rejected_steps},
        {"region", budget::to_string(region_from_events(events))},
        {"beyond_model_validity", beyond},
        {"final", {{"t", last.t}, {"N1", last.N1}, {"T1", last.T1}, {"T2", last.T2},
                   {"D1", last.D1}, {"D2", last.D2}, {"stalled", last.stalled}}},
        {"events", list},
    };
}

void write_gnuplot(std::ostream& os, std::string_view csv_name, double threshold) {
    os << "# gnuplot -p <this file>\n"
       << "set datafile separator ','\n"
       << "set key autotitle columnhead\n"
       << "set multiplot layout 2,1\n"
       << "set logscale y\n"
       << "set xlabel 't [s]'\n"
       << "set ylabel 'T [K]'\n"
       << "plot '" << csv_name << "' using 1:3 with lines title 'T1 (buffer)', \\\n"
       << "     '' using 1:4 with lines title 'T2 (target)'\n"
       << "set ylabel 'phase-space density'\n"
       << "plot '" << csv_name << "' using 1:5 with lines title 'D1', \\\n"
       << "     '' using 1:6 with lines title 'D2', \\\n"
       << "     " << io::format_number(threshold) << " with lines dashtype 2 title 'BEC'\n"
       << "unset multiplot\n";
}

}  // namespace sympcool::trajectory
