#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sympcool/errors.hpp"
#include "sympcool/physics.hpp"
#include "sympcool/trajectory.hpp"

using namespace sympcool;
using namespace sympcool::trajectory;

namespace {

TrajectoryConfig config_at(double B0, double N2, ContactMode mode) {
    const auto trap = physics::iron_core_trap(B0);
    const auto buf = physics::rb87_f1_m1(), tgt = physics::rb87_f2_m2();
    const auto f1 = physics::trap_frequencies(trap, buf), f2 = physics::trap_frequencies(trap, tgt);
    TrajectoryConfig c;
    c.initial = {1e8, N2, 300e-6, 300e-6, f1, f2, buf.mass, tgt.mass, buf.sigma_cross,
                 std::abs(physics::relative_sag(f1, f2))};
    c.eta = 6.5;
    c.evaporation = RampDriven{{{0.0, 20.0}, {1e8, 1e5}}};
    c.contact_mode = mode;
    c.t_end = 20.0;
    c.dt_max = 0.5;
    return c;
}

// T on the instant-thermalization path through the initial point.
double closed_form_T(const TrajectoryConfig& c, double N1) {
    const auto& s = c.initial;
    return s.T1 * std::pow((N1 + s.N2) / (s.N1 + s.N2), (c.eta - 2.0) / 3.0);
}

TrajectoryPoint point(double t, double N1, double D1, double D2, bool stalled = false) {
    TrajectoryPoint p;
    p.t = t;
    p.N1 = N1;
    p.T1 = p.T2 = 1e-6;
    p.D1 = D1;
    p.D2 = D2;
    p.bec1 = D1 >= 2.612;
    p.bec2 = D2 >= 2.612;
    p.stalled = stalled;
    return p;
}

}  // namespace

TEST_CASE("instant contact follows the temperature law") {
    auto c = config_at(56.0, 3e4, ContactMode::Instant);
    c.halt = BecHalt::Never;
    const auto tr = simulate(c);
    REQUIRE(tr.points.size() > 10);
    double worst = 0.0;
    for (const auto& p : tr.points) {
        worst = std::max(worst, std::abs(p.T1 / closed_form_T(c, p.N1) - 1.0));
        CHECK(p.T1 == p.T2);
    }
    CHECK(worst < 1e-6);
    CHECK(tr.points.back().N1 == doctest::Approx(1e5).epsilon(1e-9));
}

TEST_CASE("rate-driven instant contact follows the temperature law") {
    auto c = config_at(56.0, 3e4, ContactMode::Instant);
    c.evaporation = RateDriven{3.0, physics::rb87_f1_m1().sigma_self};
    c.t_end = 60.0;
    c.halt = BecHalt::Never;
    const auto tr = simulate(c);
    double worst = 0.0;
    for (const auto& p : tr.points) worst = std::max(worst, std::abs(p.T1 / closed_form_T(c, p.N1) - 1.0));
    CHECK(worst < 1e-6);
    CHECK(tr.points.back().N1 < 0.5 * c.initial.N1);
}

TEST_CASE("without target atoms T scales as N1^alpha") {
    for (auto mode : {ContactMode::Instant, ContactMode::Finite}) {
        auto c = config_at(56.0, 0.0, mode);
        c.halt = BecHalt::Never;
        const auto tr = simulate(c);
        for (const auto& p : tr.points)
            CHECK(p.T1 == doctest::Approx(c.initial.T1 * std::pow(p.N1 / c.initial.N1, 1.5)).epsilon(1e-6));
    }
}

TEST_CASE("evaporation is the only energy sink") {
    auto c = config_at(56.0, 3e4, ContactMode::Finite);
    c.initial.T2 = 400e-6;
    c.halt = BecHalt::Never;
    const auto tr = simulate(c);
    const double kB = constants::boltzmann;
    const double E0 = 3.0 * kB * (c.initial.N1 * c.initial.T1 + c.initial.N2 * c.initial.T2);
    for (const auto& p : tr.points) {
        const double E = 3.0 * kB * (p.N1 * p.T1 + c.initial.N2 * p.T2);
        CHECK(E / E0 == doctest::Approx(1.0 - p.removed_energy).epsilon(1e-6));
    }
}

TEST_CASE("target never overshoots the buffer") {
    auto c = config_at(207.0, 3e4, ContactMode::Finite);
    c.halt = BecHalt::Never;
    const auto tr = simulate(c);
    for (const auto& p : tr.points) {
        CHECK(p.T2 >= p.T1);
        CHECK(p.T1 > 0.0);
    }
    for (std::size_t k = 1; k < tr.points.size(); ++k) CHECK(tr.points[k].N1 <= tr.points[k - 1].N1);
}

TEST_CASE("finite contact converges to instant contact as sigma12 grows") {
    auto c = config_at(56.0, 3e4, ContactMode::Finite);
    c.evaporation = RampDriven{{{0.0, 20.0}, {1e8, 1e6}}};
    c.halt = BecHalt::First;
    double prev = 1e300;
    for (int k = 0; k <= 3; ++k) {
        auto ck = c;
        ck.initial.sigma12 = c.initial.sigma12 * std::pow(10.0, k);
        const auto tr = simulate(ck);
        double sup = 0.0;
        for (const auto& p : tr.points) {
            const double Tc = closed_form_T(ck, p.N1);
            sup = std::max({sup, std::abs(p.T1 - Tc) / Tc, std::abs(p.T2 - Tc) / Tc});
        }
        MESSAGE("sigma12 x 10^" << k << ": sup |T - T_eq|/T_eq = " << sup);
        CHECK(sup < prev);
        prev = sup;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("simultaneous condensation at the first critical number") {
    auto c = config_at(56.0, 0.0, ContactMode::Instant);
    budget::BudgetParams p;
    p.eta = c.eta;
    p.N1_ini = c.initial.N1;
    p.T_ini = c.initial.T1;
    p.omega1_bar = c.initial.f1.omega_bar;
    p.omega2_bar = c.initial.f2.omega_bar;
    c.initial.N2 = budget::critical_numbers(p).N2_a;
    c.evaporation = RampDriven{{{0.0, 20.0}, {1e8, 1e3}}};
    c.halt = BecHalt::Both;
    const auto tr = simulate(c);
    const auto ev = detect_events(tr.points);
    const Event* b1 = nullptr;
    const Event* b2 = nullptr;
    for (const auto& e : ev) {
        if (e.kind == EventKind::BEC1) b1 = &e;
        if (e.kind == EventKind::BEC2) b2 = &e;
    }
    REQUIRE(b1);
    REQUIRE(b2);
    MESSAGE("BEC1 at " << b1->T1 * 1e9 << " nK, BEC2 at " << b2->T2 * 1e9 << " nK");
    CHECK(b1->T1 == doctest::Approx(b2->T2).epsilon(0.01));
    CHECK(b1->T1 == doctest::Approx(200e-9).epsilon(0.3));
    CHECK(tr.stop == StopReason::BecReached);
}

TEST_CASE("halting on the first condensate") {
    auto c = config_at(56.0, 3e4, ContactMode::Instant);
    c.evaporation = RampDriven{{{0.0, 20.0}, {1e8, 1e3}}};
    const auto tr = simulate(c);
    CHECK(tr.stop == StopReason::BecReached);
    const auto& last = tr.points.back();
    CHECK((last.bec1 || last.bec2));
    CHECK_FALSE((tr.points[tr.points.size() - 2].bec1 || tr.points[tr.points.size() - 2].bec2));
}

TEST_CASE("buffer exhaustion ends the run") {
    auto c = config_at(56.0, 1e6, ContactMode::Instant);
    c.evaporation = RampDriven{{{0.0, 10.0}, {1e8, 0.5}}};
    c.halt = BecHalt::Never;
    const auto tr = simulate(c);
    CHECK(tr.stop == StopReason::BufferExhausted);
    const auto ev = detect_events(tr.points);
    REQUIRE_FALSE(ev.empty());
    CHECK(ev.back().kind == EventKind::BufferExhausted);
}

TEST_CASE("event detection on hand-made series") {
    std::vector<TrajectoryPoint> quiet{point(0, 100, 0.1, 0.2), point(1, 50, 0.3, 0.5), point(2, 20, 0.5, 1.0)};
    CHECK(detect_events(quiet).empty());
    CHECK(region_from_events(detect_events(quiet)) == budget::Region::NoBEC);

    std::vector<TrajectoryPoint> s{point(0, 100, 0.5, 2.0), point(1, 50, 1.0, 4.0),
                                   point(2, 20, 3.0, 5.0, true), point(3, 10, 4.0, 6.0, true)};
    const auto ev = detect_events(s);
    REQUIRE(ev.size() == 3);
    CHECK(ev[0].kind == EventKind::BEC2);
    CHECK(ev[0].t == doctest::Approx(std::log(2.612 / 2.0) / std::log(2.0)).epsilon(1e-12));
    CHECK(ev[1].kind == EventKind::BEC1);
    CHECK(ev[1].t == doctest::Approx(1.0 + std::log(2.612) / std::log(3.0)).epsilon(1e-12));
    CHECK(ev[2].kind == EventKind::Stall);
    CHECK(ev[2].t == 2.0);
    CHECK(region_from_events(ev) == budget::Region::DualTargetFirst);

    std::vector<Event> only1{{EventKind::BEC1, 1.0, 1, 1, 1}};
    CHECK(region_from_events(only1) == budget::Region::BufferOnly);
}

TEST_CASE("ramp schedule") {
    RampSchedule r{{0.0, 1.0, 3.0}, {1e8, 1e6, 1e5}};
    CHECK_NOTHROW(r.validate());
    CHECK(r.N1_at(0.5) == doctest::Approx(1e7).epsilon(1e-12));
    CHECK(r.N1_at(2.0) == doctest::Approx(std::sqrt(1e11)).epsilon(1e-12));
    CHECK(r.N1_at(10.0) == 1e5);
    CHECK(r.log_rate_at(0.5) == doctest::Approx(std::log(1e-2)).epsilon(1e-12));
    CHECK(r.log_rate_at(5.0) == 0.0);
    CHECK(r.next_knot(1.0) == 3.0);
    CHECK(std::isinf(r.next_knot(3.0)));

    CHECK_THROWS_AS((RampSchedule{{0.0, 1.0}, {1e6, 1e7}}.validate()), ConfigError);
    CHECK_THROWS_AS((RampSchedule{{0.5, 1.0}, {1e7, 1e6}}.validate()), ConfigError);
    CHECK_THROWS_AS((RampSchedule{{0.0, 0.0}, {1e7, 1e6}}.validate()), ConfigError);
    CHECK_THROWS_AS((RampSchedule{{0.0}, {1e7, 1e6}}.validate()), ConfigError);
}

TEST_CASE("configuration checks") {
    auto c = config_at(56.0, 3e4, ContactMode::Finite);
    c.eta = 2.0;
    CHECK_THROWS_AS(simulate(c), ConfigError);
    c = config_at(56.0, 3e4, ContactMode::Finite);
    c.t_end = 0.0;
    CHECK_THROWS_AS(simulate(c), ConfigError);
    c = config_at(56.0, 3e4, ContactMode::Finite);
    c.dt_max = -1.0;
    CHECK_THROWS_AS(simulate(c), ConfigError);
    c = config_at(56.0, 3e4, ContactMode::Finite);
    c.evaporation = RateDriven{1.0, 0.0};
    CHECK_THROWS_AS(simulate(c), ConfigError);
    c = config_at(56.0, 3e4, ContactMode::Finite);
    c.initial.T1 = -1.0;
    CHECK_THROWS_AS(simulate(c), DomainError);
}

TEST_CASE("repeatable output") {
    const auto c = config_at(207.0, 3e4, ContactMode::Finite);
    std::ostringstream a, b;
    write_csv(simulate(c).points, a);
    write_csv(simulate(c).points, b);
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("t,N1,T1,T2,D1,D2,Gamma,overlap,stalled,bec1,bec2\n", 0) == 0);

    const auto tr = simulate(c);
    const auto j = events_json(tr, detect_events(tr.points));
    CHECK(j.contains("events"));
    CHECK(j.contains("region"));
    std::ostringstream gp;
    write_gnuplot(gp, "run.csv", 2.612);
    CHECK(gp.str().find("run.csv") != std::string::npos);
}
