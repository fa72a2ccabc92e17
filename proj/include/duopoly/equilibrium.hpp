#pragma once

// Equilibria of the coupled system. Every point of the saturation line
// n1 + n2 = 1 is an equilibrium. A small inward displacement relaxes back
// to the line, in general at a shifted point (c1, -c1), governed by
//
//   d(dn1)/dt = a (dn1 + dn2),   d(dn2)/dt = b (dn1 + dn2).

#include "duopoly/bass.hpp"
#include "duopoly/error.hpp"

#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace duopoly {

struct LinearizationCoeffs {
    double a = 0.0;
    double b = 0.0;
};

struct PerturbationConstants {
    double c1 = 0.0; ///< conserved displacement along the line
    double c2 = 0.0; ///< amplitude of the decaying mode
};

struct Displacement {
    double dn1 = 0.0;
    double dn2 = 0.0;
};

struct PerturbationAnalysis {
    double n1_star = 0.0;
    double a = 0.0;
    double b = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
};

struct EquilibriumPoint {
    double n1 = 0.0;
    double n2 = 0.0;
};

/// a = -(p1 + q12) + (q12 - q11) n1*,  b = -(p2 + q22) + (q22 - q21) n1*.
inline LinearizationCoeffs linearization_coeffs(const BassParams& k, double n1_star)
{
    if (!(n1_star >= 0.0 && n1_star <= 1.0))
        throw Error(ErrorKind::InvalidState, "n1_star must lie in [0, 1]");
    return {-(k.p1 + k.q12) + (k.q12 - k.q11) * n1_star,
            -(k.p2 + k.q22) + (k.q22 - k.q21) * n1_star};
}

namespace detail {

inline void check_nondegenerate(double a, double b)
{
    if (b == 0.0 || a + b == 0.0)
        throw Error(ErrorKind::DegenerateLinearization, "requires b != 0 and a + b != 0");
}

} // namespace detail

inline PerturbationConstants perturbation_constants(double a, double b, double dn1_0, double dn2_0)
{
    detail::check_nondegenerate(a, b);
    const double ratio = a / b;
    return {(dn1_0 - ratio * dn2_0) / (1.0 + ratio), (dn1_0 + dn2_0) / (1.0 + ratio)};
}

inline Displacement perturbation_evolution(double a, double b, double c1, double c2, double t)
{
    detail::check_nondegenerate(a, b);
    const double mode = c2 * std::exp((a + b) * t);
    return {mode * (a / b) + c1, mode - c1};
}

inline PerturbationAnalysis analyze_perturbation(const BassParams& params, double n1_star,
                                                 double dn1_0, double dn2_0)
{
    const auto [a, b] = linearization_coeffs(params, n1_star);
    const auto [c1, c2] = perturbation_constants(a, b, dn1_0, dn2_0);
    return {n1_star, a, b, c1, c2};
}

/// Log form of the within-brand equilibrium relation
///   1 + (q22/p2)(1 - n1) = (1 + (q11/p1) n1)^(q22/q11);
/// strictly increasing in n1 on [0, 1], negative at 0 and positive at 1.
inline double within_brand_residual(double n1, double p1, double p2, double q11, double q22)
{
    return (q22 / q11) * std::log1p((q11 / p1) * n1) - std::log1p((q22 / p2) * (1.0 - n1));
}

inline constexpr int kNewtonMaxIterations = 100;
inline constexpr double kNewtonResidualTol = 1e-12;

/// Saturation point reached from n1 = n2 = 0 without cross-brand terms.
/// Newton-Raphson from n1 = 1/2, falling back to bisection whenever an
/// iterate leaves the current bracket.
inline EquilibriumPoint solve_within_brand_equilibrium(double p1, double p2, double q11, double q22)
{
    if (!(p1 > 0.0) || !(p2 > 0.0) || !(q11 > 0.0) || !(q22 > 0.0) || !std::isfinite(p1 + p2 + q11 + q22))
        throw Error(ErrorKind::InvalidParams, "p1, p2, q11, q22 must all be > 0");

    const double ratio = q22 / q11;
    const double alpha = q11 / p1;
    const double beta = q22 / p2;
    auto derivative = [&](double n) {
        return ratio * alpha / (1.0 + alpha * n) + beta / (1.0 + beta * (1.0 - n));
    };

    double lo = 0.0, hi = 1.0;
    double n = 0.5;
    for (int it = 0; it < kNewtonMaxIterations; ++it) {
        const double g = within_brand_residual(n, p1, p2, q11, q22);
        if (std::abs(g) < kNewtonResidualTol)
            return {n, 1.0 - n};
        (g < 0.0 ? lo : hi) = n;
        double next = n - g / derivative(n);
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        if (next == n)
            return {n, 1.0 - n};
        n = next;
    }
    throw Error(ErrorKind::NoConvergence, "within-brand equilibrium did not converge in 100 iterations");
}

inline EquilibriumPoint solve_within_brand_equilibrium(const BassParams& k)
{
    return solve_within_brand_equilibrium(k.p1, k.p2, k.q11, k.q22);
}

// ---------------------------------------------------------------------------
// Scenario sweeps

enum class SweepKind {
    Imitation,  ///< q22 = q11 + delta
    Innovation, ///< p2 = p1 + delta
};

struct SweepRow {
    double delta = 0.0;
    double n1 = 0.0;
    double n2 = 0.0;
};

/// count values start, start + step, ... computed by multiplication so that
/// the grid carries no accumulated rounding.
inline std::vector<double> uniform_grid(double start, double step, std::size_t count)
{
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = start + step * static_cast<double>(i);
    return out;
}

inline BassParams apply_delta(BassParams base, double delta, SweepKind kind)
{
    if (kind == SweepKind::Imitation)
        base.q22 = base.q11 + delta;
    else
        base.p2 = base.p1 + delta;
    return base;
}

inline std::vector<SweepRow> sweep_fig1(const BassParams& base, std::span<const double> deltas,
                                        SweepKind kind)
{
    std::vector<SweepRow> rows;
    rows.reserve(deltas.size());
    for (double d : deltas) {
        const auto eq = solve_within_brand_equilibrium(apply_delta(base, d, kind));
        rows.push_back({d, eq.n1, eq.n2});
    }
    return rows;
}

/// Imitation scenario: p1 = p2 = 0.03, q11 = 0.2, dq = 0, 0.1, ..., 0.8.
inline BassParams fig1_imitation_base() { return {0.03, 0.03, 0.2, 0.2, 0.0, 0.0, 1.0}; }
inline std::vector<double> fig1_imitation_deltas() { return uniform_grid(0.0, 0.1, 9); }
/// Innovation scenario: q11 = q22 = 0.4, p1 = 0.01, dp = 0, 0.01, ..., 0.09.
inline BassParams fig1_innovation_base() { return {0.01, 0.01, 0.4, 0.4, 0.0, 0.0, 1.0}; }
inline std::vector<double> fig1_innovation_deltas() { return uniform_grid(0.0, 0.01, 10); }

struct CrossCase {
    std::string label;
    double q12 = 0.0;
    double q21 = 0.0;
};

struct CaseTrajectory {
    CrossCase cross;
    Trajectory trajectory;
};

inline BassParams fig2_params() { return {0.03, 0.06, 0.38, 0.68, 0.0, 0.0, 1.0}; }

inline std::vector<CrossCase> fig2_cases()
{
    return {{"A", 0.0, 0.0}, {"B", 0.0, 0.5}, {"C", 0.5, 0.0}, {"D", 0.5, 0.5}};
}

inline constexpr double kFig2Horizon = 40.0;

inline std::vector<CaseTrajectory> sweep_fig2(const BassParams& params, std::span<const CrossCase> cases,
                                              double t_end = kFig2Horizon, IntegrateOptions opts = {})
{
    std::vector<CaseTrajectory> out;
    out.reserve(cases.size());
    for (const auto& c : cases) {
        BassParams k = params;
        k.q12 = c.q12;
        k.q21 = c.q21;
        out.push_back({c, integrate(k, MarketState{}, t_end, opts)});
    }
    return out;
}

inline void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows)
{
    os << "delta,n1,n2\n";
    for (const auto& r : rows)
        os << format_double(r.delta) << ',' << format_double(r.n1) << ',' << format_double(r.n2) << '\n';
}

inline void write_cases_csv(std::ostream& os, std::span<const CaseTrajectory> cases)
{
    os << "case,t,n1,n2\n";
    for (const auto& c : cases)
        for (const auto& s : c.trajectory.samples)
            os << c.cross.label << ',' << format_double(s.t) << ',' << format_double(s.n1) << ','
               << format_double(s.n2) << '\n';
}

} // namespace duopoly
