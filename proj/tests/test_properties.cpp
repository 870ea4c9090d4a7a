// Randomized property checks across the budget, contact and trajectory modules.
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sympcool/budget.hpp"
#include "sympcool/contact.hpp"
#include "sympcool/physics.hpp"
#include "sympcool/trajectory.hpp"

using namespace sympcool;

namespace {

double log_uniform(std::mt19937_64& g, double lo, double hi) {
    return std::exp(std::uniform_real_distribution<double>(std::log(lo), std::log(hi))(g));
}

double uniform(std::mt19937_64& g, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

budget::BudgetParams random_params(std::mt19937_64& g, double eta_lo, double eta_hi, double r_lo,
                                   double r_hi) {
    budget::BudgetParams p;
    p.eta = uniform(g, eta_lo, eta_hi);
    p.N1_ini = log_uniform(g, 1e6, 1e9);
    p.T_ini = log_uniform(g, 10e-6, 1000e-6);
    p.omega1_bar = log_uniform(g, 2 * oracle::pi * 20, 2 * oracle::pi * 500);
    p.omega2_bar = p.omega1_bar * log_uniform(g, r_lo, r_hi);
    p.N2 = p.N1_ini * log_uniform(g, 1e-5, 1e-2);
    return p;
}

// Instant-contact run whose initial point sits exactly on the budget path of p.
trajectory::TrajectoryConfig instant_run(const budget::BudgetParams& p, trajectory::RampSchedule ramp) {
    const double M = physics::rb87_f1_m1().mass;
    trajectory::TrajectoryConfig c;
    c.initial.N1 = p.N1_ini;
    c.initial.N2 = p.N2;
    c.initial.T1 = c.initial.T2 = budget::temperature_of(p.N1_ini, p);
    c.initial.f1 = physics::TrapFrequencies::isotropic(p.omega1_bar);
    c.initial.f2 = physics::TrapFrequencies::isotropic(p.omega2_bar);
    c.initial.M1 = c.initial.M2 = M;
    c.initial.sigma12 = 1e-16;
    c.eta = p.eta;
    c.evaporation = trajectory::RampDriven{std::move(ramp)};
    c.contact_mode = trajectory::ContactMode::Instant;
    c.t_end = 10.0;
    c.dt_max = 0.25;
    c.halt = trajectory::BecHalt::Never;
    c.n1_floor = 0.0;
    c.psd_prefactor = p.psd_prefactor;
    return c;
}

}  // namespace

TEST_CASE("instant contact stays on the temperature law for random schedules") {
    std::mt19937_64 g(101);
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = random_params(g, 2.5, 12.0, 0.5, 2.0);
        trajectory::RampSchedule ramp;
        const int knots = 2 + int(g() % 6);
        double t = 0.0, N1 = p.N1_ini;
        for (int k = 0; k < knots; ++k) {
            ramp.t.push_back(t);
            ramp.N1.push_back(N1);
            t += uniform(g, 0.1, 3.0);
            N1 *= log_uniform(g, 1e-3, 1.0);
        }
        auto c = instant_run(p, ramp);
        c.t_end = t + 0.5;
        const auto tr = trajectory::simulate(c);
        double worst = 0.0;
        for (const auto& pt : tr.points)
            worst = std::max(worst, std::abs(pt.T1 / budget::temperature_of(pt.N1, p) - 1.0));
        CHECK(worst < 1e-6);
        CHECK(tr.points.back().N1 == doctest::Approx(ramp.N1.back()).epsilon(1e-9));
    }
}

TEST_CASE("event order from instant runs matches the budget classifier") {
    std::mt19937_64 g(202);
    int checked = 0;
    while (checked < 100) {
        auto p = random_params(g, 3.5, 10.0, 0.7, 2.0);
        p.N2 = 1.0;
        const auto c = budget::critical_numbers(p);
        p.N2 = c.N2_c * log_uniform(g, 0.02, 3.0);
        if (!(p.N2 < 0.5 * p.N1_ini)) continue;
        // stay clear of the boundaries, where sampling decides the order
        const double margin = 0.02;
        bool near = false;
        for (double b : {c.N2_a, c.N2_b, c.N2_c}) near = near || std::abs(p.N2 / b - 1.0) < margin;
        if (near) continue;

        const auto outcome = budget::classify(p);
        const auto tr = trajectory::simulate(instant_run(p, {{0.0, 10.0}, {p.N1_ini, p.N2 * 1e-7}}));
        const auto region = trajectory::region_from_events(trajectory::detect_events(tr.points));
        CHECK_MESSAGE(region == outcome.region, "eta=" << p.eta << " N2/N2c=" << p.N2 / c.N2_c);
        ++checked;
    }
}

TEST_CASE("closed forms agree with numeric maximization and bisection") {
    std::mt19937_64 g(303);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = random_params(g, 3.05, 12.0, 0.5, 2.0);
        const oracle::Path path{p.eta, p.N1_ini, p.N2, p.T_ini, p.omega1_bar, p.omega2_bar, p.psd_prefactor};
        const auto peak = budget::buffer_psd_max(p);
        const double n_peak = oracle::buffer_peak(path);
        CHECK(peak.N1 == doctest::Approx(n_peak).epsilon(1e-9));
        CHECK(peak.D1_max == doctest::Approx(path.D1(n_peak)).epsilon(1e-9));
        const double n_eq = oracle::equal_crossing(path);
        CHECK(budget::equal_psd_buffer_number(p) == doctest::Approx(n_eq).epsilon(1e-9));
        CHECK(budget::equal_psd(p) == doctest::Approx(path.D2(n_eq)).epsilon(1e-9));
    }
}

TEST_CASE("critical ratios depend only on eta and the frequency ratio") {
    std::mt19937_64 g(404);
    for (int trial = 0; trial < 100; ++trial) {
        const double eta = uniform(g, 3.2, 12.0);
        const double ratio = uniform(g, 0.5, 2.0);
        const auto ref = budget::critical_numbers(budget::reference_params(eta, ratio));
        budget::BudgetParams p = budget::reference_params(eta, ratio);
        p.N1_ini = log_uniform(g, 1e6, 1e9);
        p.T_ini = log_uniform(g, 10e-6, 1000e-6);
        p.omega1_bar = log_uniform(g, 100.0, 5000.0);
        p.omega2_bar = ratio * p.omega1_bar;
        p.N2 = p.N1_ini * 1e-4;
        const auto c = budget::critical_numbers(p);
        CHECK(c.ratio_a() == doctest::Approx(ref.ratio_a()).epsilon(1e-12));
        CHECK(c.ratio_b() == doctest::Approx(ref.ratio_b()).epsilon(1e-12));
        CHECK(c.ratio_a() <= c.ratio_b());
        // a stiffer buffer can peak above the target's final PSD
        if (ratio >= 1.0) CHECK(c.ratio_b() <= 1.0);
    }
}

TEST_CASE("classification changes only at the critical numbers") {
    std::mt19937_64 g(505);
    for (int trial = 0; trial < 20; ++trial) {
        auto p = random_params(g, 4.0, 10.0, 1.0, 2.0);
        if (!budget::crossing_precedes_peak(p)) continue;
        const auto c = budget::critical_numbers(p);
        auto expected = [&](double N2) {
            if (N2 > c.N2_c) return budget::Region::NoBEC;
            if (N2 > c.N2_b) return budget::Region::TargetOnly;
            if (N2 > c.N2_a) return budget::Region::DualTargetFirst;
            return budget::Region::DualBufferFirst;
        };
        for (double x = 0.01; x < 3.0; x *= 1.07) {
            const double N2 = x * c.N2_c;
            if (N2 >= p.N1_ini) break;
            bool near = false;
            for (double b : {c.N2_a, c.N2_b, c.N2_c}) near = near || std::abs(N2 / b - 1.0) < 1e-6;
            if (near) continue;
            const auto o = budget::classify(N2, p);
            CHECK(o.region == expected(N2));
            CHECK(o.closed_form_agrees);
        }
    }
}

TEST_CASE("contact observables under relabeling") {
    std::mt19937_64 g(606);
    for (int trial = 0; trial < 200; ++trial) {
        contact::TwoGasState s;
        s.N1 = log_uniform(g, 1e3, 1e9);
        s.N2 = log_uniform(g, 1e3, 1e9);
        s.T1 = log_uniform(g, 1e-8, 1e-4);
        s.T2 = log_uniform(g, 1e-8, 1e-4);
        s.f1 = physics::TrapFrequencies::from_axes(log_uniform(g, 50, 500), log_uniform(g, 50, 2000),
                                                   log_uniform(g, 50, 2000));
        s.f2 = physics::TrapFrequencies::from_axes(log_uniform(g, 50, 500), log_uniform(g, 50, 2000),
                                                   log_uniform(g, 50, 2000));
        s.M1 = log_uniform(g, 1e-26, 4e-25);
        s.M2 = log_uniform(g, 1e-26, 4e-25);
        s.sigma12 = log_uniform(g, 1e-17, 1e-14);
        s.delta = uniform(g, -5e-5, 5e-5);
        const contact::TwoGasState r{s.N2, s.N1, s.T2, s.T1, s.f2, s.f1, s.M2, s.M1, s.sigma12, -s.delta};
        CHECK(contact::interspecies_collision_rate(r) ==
              doctest::Approx(contact::interspecies_collision_rate(s)).epsilon(1e-12));
        CHECK(contact::energy_exchange_rate(r) ==
              doctest::Approx(-contact::energy_exchange_rate(s)).epsilon(1e-12));
        const double o = contact::overlap_factor(s);
        CHECK(o > 0.0);
        CHECK(o <= 1.0);
        CHECK(contact::interspecies_thermalization_rate(r) ==
              doctest::Approx(contact::interspecies_thermalization_rate(s)).epsilon(1e-12));
    }
}
