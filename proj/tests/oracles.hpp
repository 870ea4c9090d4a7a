#pragma once
// Independent reference computations for the tests. Nothing here calls the
// library's closed forms; each oracle works from first principles (numeric
// maximization, bisection, quadrature, ODE integration).

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

constexpr double kB = 1.380649e-23;
constexpr double hbar = 6.62607015e-34 / (2.0 * std::numbers::pi);
constexpr double h = 6.62607015e-34;
constexpr double pi = std::numbers::pi;

// Forward-mode dual number: value and first derivative.
struct Dual {
    double v;
    double d;
};
inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) { return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)}; }
inline Dual pow(Dual a, double p) { return {std::pow(a.v, p), p * std::pow(a.v, p - 1.0) * a.d}; }
inline Dual log(Dual a) { return {std::log(a.v), a.d / a.v}; }

// Plain budget path, written out independently of the library.
struct Path {
    double eta, N1_ini, N2, T_ini, w1, w2, pref;
    [[nodiscard]] double alpha() const { return (eta - 2.0) / 3.0; }
    [[nodiscard]] double T(double N1) const {
        return T_ini * std::pow(N2 / N1_ini, alpha()) * std::pow(N1 / N2 + 1.0, alpha());
    }
    [[nodiscard]] double D1(double N1) const {
        const double x = hbar * w1 / (kB * T(N1));
        return pref * N1 * x * x * x;
    }
    [[nodiscard]] double D2(double N1) const {
        const double x = hbar * w2 / (kB * T(N1));
        return pref * N2 * x * x * x;
    }
    // d ln D1 / d ln N1 by forward-mode differentiation, u = ln N1.
    [[nodiscard]] double dlnD1_du(double u) const {
        Dual lnN1{u, 1.0};
        Dual N1{std::exp(u), std::exp(u)};
        Dual base = N1 / Dual{N2, 0.0} + Dual{1.0, 0.0};
        Dual lnD = lnN1 + Dual{-3.0 * alpha(), 0.0} * log(base);
        return lnD.d;
    }
};

// Maximizing N1 from the root of d ln D1/d ln N1 (dual numbers + bisection).
inline double buffer_peak(const Path& p) {
    double a = std::log(p.N2) - 40.0, b = std::log(p.N1_ini);
    if (p.dlnD1_du(b) > 0.0) return p.N1_ini;
    for (int i = 0; i < 300; ++i) {
        const double m = 0.5 * (a + b);
        (p.dlnD1_du(m) > 0.0 ? a : b) = m;
    }
    return std::exp(0.5 * (a + b));
}

// Maximizing N1 by golden-section search on ln D1 over the whole path. Only
// accurate to ~1e-7 because the maximum is flat.
inline double buffer_peak_golden(const Path& p) {
    double lo = std::log(p.N2) - 40.0, hi = std::log(p.N1_ini);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    auto f = [&](double u) { return std::log(p.D1(std::exp(u))); };
    double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
    for (int i = 0; i < 300; ++i) {
        if (f(c) > f(d)) hi = d; else lo = c;
        c = hi - g * (hi - lo);
        d = lo + g * (hi - lo);
    }
    return std::exp(0.5 * (lo + hi));
}

// Bisection for f(x) = 0 on [a, b] with a sign change, geometric midpoints.
inline double bisect_log(const std::function<double(double)>& f, double a, double b) {
    double fa = f(a);
    for (int i = 0; i < 400; ++i) {
        const double m = std::sqrt(a) * std::sqrt(b);
        if (m == a || m == b) break;
        const double fm = f(m);
        if ((fm < 0.0) == (fa < 0.0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return std::sqrt(a) * std::sqrt(b);
}

// N1 at which D1 = D2 by bisection on ln D1 - ln D2.
inline double equal_crossing(const Path& p) {
    return bisect_log([&](double N1) { return std::log(p.D1(N1)) - std::log(p.D2(N1)); },
                      p.N2 * 1e-12, p.N1_ini);
}

// Critical target numbers by nested bisection over N2.
inline double solve_N2(Path p, double threshold, const std::function<double(const Path&)>& value) {
    return bisect_log(
        [&](double N2) {
            Path q = p;
            q.N2 = N2;
            return std::log(value(q)) - std::log(threshold);
        },
        1e-6, p.N1_ini * 0.999);
}

// Peak PSD as n0 lambda^3 with n0 the central density of a Boltzmann cloud.
inline double psd_n0_lambda3(double N, double T, double omega_bar, double M) {
    const double n0 = N * std::pow(omega_bar, 3) * std::pow(M / (2.0 * pi * kB * T), 1.5);
    const double lambda = h / std::sqrt(2.0 * pi * M * kB * T);
    return n0 * lambda * lambda * lambda;
}

// Composite Simpson rule on [a, b] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    const double hh = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * hh) * (i % 2 ? 4.0 : 2.0);
    return s * hh / 3.0;
}

// Mean collision rate per atom n_bar sigma <v_rel> of a harmonically trapped
// Boltzmann gas from quadrature: density overlap integral per axis and the
// mean relative speed of two Maxwellians.
inline double collision_rate_quadrature(double N, double T, double wx, double wy, double wz,
                                        double sigma, double M) {
    double overlap = 1.0;  // integral of n_hat^2 over space
    for (double w : {wx, wy, wz}) {
        const double s = std::sqrt(kB * T / (M * w * w));
        overlap *= simpson(
            [&](double x) {
                const double g = std::exp(-x * x / (2.0 * s * s)) / (std::sqrt(2.0 * pi) * s);
                return g * g;
            },
            -14.0 * s, 14.0 * s, 20000);
    }
    // relative velocity is Maxwellian with mass M/2
    const double mu = M / 2.0;
    const double su = std::sqrt(kB * T / mu);
    const double vrel = simpson(
        [&](double u) {
            return 4.0 * pi * u * u * u * std::pow(2.0 * pi * su * su, -1.5) *
                   std::exp(-u * u / (2.0 * su * su));
        },
        0.0, 16.0 * su, 20000);
    return N * overlap * sigma * vrel;
}

// Minimum temperature by integrating dT/T = alpha dN1/(N1 + N2) from N1_ini
// to 0 with fourth-order Runge-Kutta in N1.
inline double integrate_T_min(double eta, double N1_ini, double N2, double T_ini, int steps) {
    const double a = (eta - 2.0) / 3.0;
    auto f = [&](double N1, double lnT) {
        (void)lnT;
        return a / (N1 + N2);
    };
    double lnT = std::log(T_ini);
    // integrate in s = ln(N1 + N2) for accuracy over eight decades
    const double s0 = std::log(N1_ini + N2), s1 = std::log(N2);
    const double hs = (s1 - s0) / steps;
    for (int i = 0; i < steps; ++i) {
        const double s = s0 + i * hs;
        auto g = [&](double ss, double y) { return f(std::exp(ss) - N2, y) * std::exp(ss); };
        const double k1 = g(s, lnT);
        const double k2 = g(s + hs / 2, lnT + hs * k1 / 2);
        const double k3 = g(s + hs / 2, lnT + hs * k2 / 2);
        const double k4 = g(s + hs, lnT + hs * k3);
        lnT += hs * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0;
    }
    return std::exp(lnT);
}

}  // namespace oracle
