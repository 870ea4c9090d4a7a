#pragma once

// Quasi-static energy-budget model of sympathetic evaporative cooling.
//
// The buffer (species 1) is evaporated with a constant cutoff eta k_B T while
// the target (species 2, N2 atoms) is lossless and always in equilibrium with
// it. Each evaporated atom removes (eta + 1) k_B T, so along the cooling path
//
//     T(N1) = T_min (N1/N2 + 1)^alpha,   T_min = T_ini (N2/N1_ini)^alpha,
//     alpha = (eta - 2)/3.
//
// Both phase-space density curves are multiplied by the calibration constant
// `psd_prefactor`; every ratio used by the classifier is independent of it.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sympcool/constants.hpp"

namespace sympcool::budget {

struct BudgetParams {
    double eta = 6.5;
    double N1_ini = 1e8;
    double N2 = 1e4;        ///< constant number of target atoms
    double T_ini = 300e-6;  ///< K
    double omega1_bar = 0.0;
    double omega2_bar = 0.0;
    double psd_prefactor = 2.17;

    [[nodiscard]] double alpha() const noexcept { return (eta - 2.0) / 3.0; }

    /// eta >= 2, N1_ini > N2 > 0, T_ini > 0, frequencies and prefactor > 0.
    void validate() const;
};

/// T(N1) along the cooling path. Throws DomainError for N1 < 0.
double temperature_of(double N1, const BudgetParams& p);

/// Temperature once every buffer atom is gone.
double minimum_temperature(const BudgetParams& p);

/// Peak phase-space density N (hbar w / k_B T)^3 of a classical gas in a
/// harmonic trap. Throws DomainError for T <= 0 or N < 0.
double phase_space_density(double N, double T, double omega_bar);

/// Calibrated PSD of the buffer / target while N1 buffer atoms remain.
double buffer_psd(double N1, const BudgetParams& p);
double target_psd(double N1, const BudgetParams& p);

/// Target PSD at the end of evaporation,
///   D2_max = prefactor N2^(1 - 3 alpha) (N1_ini^alpha hbar w2 / k_B T_ini)^3.
double target_psd_max(const BudgetParams& p);

struct BufferPeak {
    double N1 = 0.0;      ///< buffer number at the maximum, N2/(3 alpha - 1)
    double D1_max = 0.0;
};

/// Maximum of the buffer PSD along the path. Throws NoInteriorPeak if 3 alpha <= 1.
BufferPeak buffer_psd_max(const BudgetParams& p);

/// Buffer number at which both PSDs are equal, N2 (w2/w1)^3.
double equal_psd_buffer_number(const BudgetParams& p);

/// Common PSD value where the two curves cross, D2_max (1 + (w2/w1)^3)^(-3 alpha).
double equal_psd(const BudgetParams& p);

struct CriticalNumbers {
    double N2_a = 0.0;  ///< D_equal = threshold
    double N2_b = 0.0;  ///< D1_max  = threshold
    double N2_c = 0.0;  ///< D2_max  = threshold

    [[nodiscard]] double ratio_a() const noexcept { return N2_a / N2_c; }
    [[nodiscard]] double ratio_b() const noexcept { return N2_b / N2_c; }
};

/// Closed-form critical target numbers (from D2_max ~ N2^(1 - 3 alpha)).
/// `p.N2` is ignored. Throws NoInteriorPeak if 3 alpha <= 1.
CriticalNumbers critical_numbers(const BudgetParams& p,
                                 double threshold = constants::bec_threshold);

/// True when the equal-PSD crossing is reached before the buffer peak,
/// i.e. 3 alpha - 1 > (w1/w2)^3. The closed-form region rules assume it.
bool crossing_precedes_peak(const BudgetParams& p);

enum class Region { DualBufferFirst, DualTargetFirst, TargetOnly, BufferOnly, NoBEC };

std::string_view to_string(Region r) noexcept;
Region region_from_string(std::string_view s);

/// Numeric features of the two PSD curves over N1 in [N1_ini, 0].
/// Fields that do not exist on the path are NaN.
struct PsdScan {
    double N1_buffer_peak = 0.0;
    double D1_max = 0.0;
    double N1_equal = 0.0;
    double D_equal = 0.0;
    double D2_max = 0.0;
    double N1_buffer_bec = 0.0;  ///< first N1 where D1 reaches the threshold
    double N1_target_bec = 0.0;  ///< first N1 where D2 reaches the threshold
};

/// Samples both curves on `grid_points` log-spaced buffer numbers (plus
/// N1 = 0), then refines the peak by bisection on the slope of ln D1 and every sign change by
/// bisection.
PsdScan scan_psd_curves(const BudgetParams& p, double threshold = constants::bec_threshold,
                        std::size_t grid_points = 2048);

struct CoolingOutcome {
    Region region = Region::NoBEC;
    double D1_max = 0.0;
    double D2_max = 0.0;
    double D_equal = 0.0;
    double N1_at_buffer_peak = 0.0;
    double N1_buffer_bec = 0.0;  ///< NaN when the buffer never condenses
    double N1_target_bec = 0.0;  ///< NaN when the target never condenses
    /// Crossing comes after the buffer peak: outside the regime the closed-form
    /// region rules describe, the scan alone defines the outcome.
    bool extrapolated = false;
    /// Closed-form region agrees with the scan (always true when extrapolated).
    bool closed_form_agrees = true;
};

/// Outcome of cooling `p.N2` target atoms. The numeric scan is authoritative.
CoolingOutcome classify(const BudgetParams& p, double threshold = constants::bec_threshold);
CoolingOutcome classify(double N2, BudgetParams p, double threshold = constants::bec_threshold);

struct PhaseDiagramRow {
    double eta = 0.0;
    double n2_over_n2c = 0.0;
    Region region = Region::NoBEC;
    double d1max = 0.0;
    double d2max = 0.0;
    double dequal = 0.0;
    bool extrapolated = false;
};

struct BoundaryPoint {
    double eta = 0.0;
    bool valid = false;  ///< false where 3 alpha <= 1
    double a_over_c = 0.0;
    double b_over_c = 0.0;
};

struct PhaseDiagram {
    double trap_ratio = 0.0;
    std::vector<BoundaryPoint> boundaries;
    std::vector<PhaseDiagramRow> rows;

    /// Header `eta,n2_over_n2c,region,d1max,d2max,dequal`.
    void write_csv(std::ostream& os) const;
    [[nodiscard]] nlohmann::json boundaries_json() const;
};

/// Outcome regions over an (eta, N2/N2_c) grid for w2/w1 = trap_ratio.
/// Etas with 3 alpha <= 1 produce an invalid boundary and no rows.
PhaseDiagram phase_diagram(const std::vector<double>& eta_grid,
                           const std::vector<double>& n2_grid, double trap_ratio);

/// Parameters with w1 = 2 pi 100 Hz, w2 = ratio w1 and T_ini chosen such
/// that N2_c = n2c; used to place the dimensionless phase diagram.
BudgetParams reference_params(double eta, double trap_ratio, double n2c = 1e4);

}  // namespace sympcool::budget
