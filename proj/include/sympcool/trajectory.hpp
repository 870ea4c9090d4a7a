#pragma once

// Time-domain sympathetic cooling: buffer evaporation, interspecies energy
// exchange, and the condensation / stall bookkeeping.

#include <iosfwd>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sympcool/budget.hpp"
#include "sympcool/constants.hpp"
#include "sympcool/contact.hpp"

namespace sympcool::trajectory {

/// N1(t) given at knots; ln N1 is interpolated linearly, N1 is held after the last knot.
struct RampSchedule {
    std::vector<double> t;
    std::vector<double> N1;

    void validate() const;
    [[nodiscard]] double N1_at(double time) const;
    /// d ln N1 / dt on the segment containing `time` (right-continuous).
    [[nodiscard]] double log_rate_at(double time) const;
    /// First knot strictly after `time`, or +inf.
    [[nodiscard]] double next_knot(double time) const;
};

struct RampDriven {
    RampSchedule schedule;
};

/// dN1/dt = -prefactor * gamma1 * exp(-eta) * N1, gamma1 the buffer's own
/// elastic collision rate with cross-section sigma_self.
struct RateDriven {
    double prefactor = 1.0;
    double sigma_self = 0.0;
};

using EvaporationModel = std::variant<RampDriven, RateDriven>;

enum class ContactMode { Instant, Finite };

/// When the integration stops once a phase-space density reaches threshold.
enum class BecHalt { First, Both, Never };

struct TrajectoryConfig {
    contact::TwoGasState initial;
    double eta = 6.5;
    EvaporationModel evaporation = RateDriven{};
    ContactMode contact_mode = ContactMode::Finite;
    double t_end = 0.0;
    double dt_max = 0.0;
    double bec_threshold = constants::bec_threshold;
    double psd_prefactor = 2.17;
    BecHalt halt = BecHalt::First;
    double stall_overlap = 0.01;
    double n1_floor = 1.0;
    /// Tolerance on ln N1 and ln T, i.e. relative accuracy of N1 and T per step.
    double tolerance = 1e-8;

    void validate() const;
};

struct TrajectoryPoint {
    double t = 0.0;
    double N1 = 0.0;
    double T1 = 0.0;
    double T2 = 0.0;
    double D1 = 0.0;
    double D2 = 0.0;
    double Gamma = 0.0;
    double overlap = 1.0;
    bool stalled = false;
    bool bec1 = false;
    bool bec2 = false;
    /// Energy carried away by evaporation since t = 0, in units of the initial energy.
    double removed_energy = 0.0;
};

enum class StopReason { EndTime, BecReached, BufferExhausted };

struct Trajectory {
    std::vector<TrajectoryPoint> points;
    StopReason stop = StopReason::EndTime;
    int accepted_steps = 0;
    int rejected_steps = 0;
};

/// Integrates the configured cooling run. Finite contact evolves
///   dT1/dt = (eta - 2) T1 N1'/(3 N1) + W/(3 N1 k_B),   dT2/dt = -W/(3 N2 k_B);
/// instant contact keeps T1 = T2 = T with dT/T = alpha dN1/(N1 + N2).
/// Throws StepFailure when the stepper cannot meet the tolerance.
Trajectory simulate(const TrajectoryConfig& cfg);

enum class EventKind { BEC1, BEC2, Stall, BufferExhausted };

std::string_view to_string(EventKind k) noexcept;

struct Event {
    EventKind kind;
    double t = 0.0;
    double N1 = 0.0;
    double T1 = 0.0;
    double T2 = 0.0;
};

/// Time-ordered events; BEC times are interpolated in ln D between samples.
std::vector<Event> detect_events(const std::vector<TrajectoryPoint>& series,
                                 double threshold = constants::bec_threshold,
                                 double n1_floor = 1.0);

/// Cooling region implied by the order of the BEC events.
budget::Region region_from_events(const std::vector<Event>& events);

/// Header `t,N1,T1,T2,D1,D2,Gamma,overlap,stalled,bec1,bec2`.
void write_csv(const std::vector<TrajectoryPoint>& series, std::ostream& os);

nlohmann::json events_json(const Trajectory& traj, const std::vector<Event>& events);

/// gnuplot script plotting temperatures and phase-space densities from `csv_name`.
void write_gnuplot(std::ostream& os, std::string_view csv_name, double threshold);

}  // namespace sympcool::trajectory
