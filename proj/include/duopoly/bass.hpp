#pragma once

// Coupled two-brand Bass system with cross-brand terms, in dimensionless
// shares n_i = N_i / m:
//
//   dn1/dt = (p1 + q11 n1 + q12 n2) (1 - n1 - n2)
//   dn2/dt = (p2 + q22 n2 + q21 n1) (1 - n1 - n2)

#include "duopoly/error.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace duopoly {

/// Slack allowed on n1 + n2 <= 1 for a state to count as valid.
inline constexpr double kStateSlack = 1e-9;
/// Largest overshoot of n1 + n2 tolerated inside an RK4 substep.
inline constexpr double kSubstepCeiling = 0.01;
inline constexpr double kDefaultDt = 0.01;
inline constexpr double kDefaultSaturationTol = 1e-6;

enum class Coefficient : std::size_t { p1 = 0, p2, q11, q22, q12, q21 };

inline constexpr std::array<Coefficient, 6> kAllCoefficients = {
    Coefficient::p1,  Coefficient::p2,  Coefficient::q11,
    Coefficient::q22, Coefficient::q12, Coefficient::q21,
};

constexpr std::string_view name_of(Coefficient c) noexcept
{
    constexpr std::array<std::string_view, 6> names = {"p1", "p2", "q11", "q22", "q12", "q21"};
    return names[static_cast<std::size_t>(c)];
}

struct BassParams {
    double p1 = 0.0;
    double p2 = 0.0;
    double q11 = 0.0;
    double q22 = 0.0;
    double q12 = 0.0; ///< influence of brand-2 adopters on brand 1
    double q21 = 0.0; ///< influence of brand-1 adopters on brand 2
    double m = 1.0;   ///< potential market; only used for dimensional output

    double& operator[](Coefficient c) noexcept
    {
        switch (c) {
        case Coefficient::p1: return p1;
        case Coefficient::p2: return p2;
        case Coefficient::q11: return q11;
        case Coefficient::q22: return q22;
        case Coefficient::q12: return q12;
        case Coefficient::q21: return q21;
        }
        return p1;
    }
    double operator[](Coefficient c) const noexcept { return const_cast<BassParams&>(*this)[c]; }

    /// Throws InvalidParams naming the first negative or non-finite field.
    void validate() const
    {
        for (auto c : kAllCoefficients) {
            const double v = (*this)[c];
            if (!std::isfinite(v) || v < 0.0)
                throw Error(ErrorKind::InvalidParams,
                            std::string(name_of(c)) + " must be finite and >= 0 (got " +
                                std::to_string(v) + ")");
        }
        if (!std::isfinite(m) || m <= 0.0)
            throw Error(ErrorKind::InvalidParams, "m must be > 0");
    }

    /// Brand labels exchanged.
    BassParams swapped() const noexcept { return {p2, p1, q22, q11, q21, q12, m}; }

    bool operator==(const BassParams&) const = default;
};

struct MarketState {
    double t = 0.0;
    double n1 = 0.0;
    double n2 = 0.0;

    double adopted() const noexcept { return n1 + n2; }
    bool operator==(const MarketState&) const = default;
};

inline void validate_state(const MarketState& s)
{
    if (!(s.n1 >= 0.0) || !(s.n2 >= 0.0))
        throw Error(ErrorKind::InvalidState, "shares must be non-negative");
    if (s.adopted() > 1.0 + kStateSlack)
        throw Error(ErrorKind::InvalidState, "n1 + n2 exceeds 1");
}

/// Samples at a constant step dt, starting at samples.front().t.
struct Trajectory {
    double dt = kDefaultDt;
    std::vector<MarketState> samples;

    std::size_t size() const noexcept { return samples.size(); }
    const MarketState& front() const { return samples.front(); }
    const MarketState& back() const { return samples.back(); }
};

struct SingleBrandParams {
    double p = 0.0;
    double q = 0.0;
};

struct Rates {
    double dn1_dt = 0.0;
    double dn2_dt = 0.0;
};

namespace detail {

// n1 + n2 is formed first so that swapping the brands is bit-exact.
inline Rates rhs_unchecked(const BassParams& k, double n1, double n2) noexcept
{
    const double free_market = 1.0 - (n1 + n2);
    return {(k.p1 + k.q11 * n1 + k.q12 * n2) * free_market,
            (k.p2 + k.q22 * n2 + k.q21 * n1) * free_market};
}

inline void check_substep(double n1, double n2)
{
    if (n1 + n2 > 1.0 + kSubstepCeiling)
        throw Error(ErrorKind::StepTooLarge, "RK4 substep left the feasible region; reduce dt");
}

/// One classical RK4 step; projects back onto n1 + n2 <= 1 on overshoot.
inline void rk4_step(const BassParams& k, double h, double& n1, double& n2)
{
    const Rates k1 = rhs_unchecked(k, n1, n2);
    double a1 = n1 + 0.5 * h * k1.dn1_dt, a2 = n2 + 0.5 * h * k1.dn2_dt;
    check_substep(a1, a2);
    const Rates k2 = rhs_unchecked(k, a1, a2);
    a1 = n1 + 0.5 * h * k2.dn1_dt;
    a2 = n2 + 0.5 * h * k2.dn2_dt;
    check_substep(a1, a2);
    const Rates k3 = rhs_unchecked(k, a1, a2);
    a1 = n1 + h * k3.dn1_dt;
    a2 = n2 + h * k3.dn2_dt;
    check_substep(a1, a2);
    const Rates k4 = rhs_unchecked(k, a1, a2);
    n1 += h / 6.0 * (k1.dn1_dt + 2.0 * k2.dn1_dt + 2.0 * k3.dn1_dt + k4.dn1_dt);
    n2 += h / 6.0 * (k1.dn2_dt + 2.0 * k2.dn2_dt + 2.0 * k3.dn2_dt + k4.dn2_dt);
    const double total = n1 + n2;
    check_substep(n1, n2);
    if (total > 1.0) {
        n1 /= total;
        n2 /= total;
    }
}

inline void check_step(double dt)
{
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw Error(ErrorKind::InvalidParams, "dt must be > 0");
}

} // namespace detail

inline Rates bass_rhs(const BassParams& params, const MarketState& state)
{
    validate_state(state);
    return detail::rhs_unchecked(params, state.n1, state.n2);
}

struct IntegrateOptions {
    double dt = kDefaultDt;
    /// Record every stride-th RK4 step; the step count is rounded up to a
    /// multiple of stride so the recorded grid stays uniform.
    std::size_t stride = 1;
};

/// Fixed-step RK4 from init to (at least) t_end. Sample i sits at
/// init.t + i * dt * stride. t_end == init.t yields the initial state only.
inline Trajectory integrate(const BassParams& params, const MarketState& init, double t_end,
                            IntegrateOptions opts = {})
{
    params.validate();
    validate_state(init);
    detail::check_step(opts.dt);
    if (opts.stride == 0)
        throw Error(ErrorKind::InvalidParams, "stride must be >= 1");
    if (!(t_end >= init.t))
        throw Error(ErrorKind::InvalidParams, "t_end must not precede the initial time");

    const double span = t_end - init.t;
    auto steps = static_cast<std::size_t>(std::ceil(span / opts.dt - 1e-9));
    if (steps % opts.stride != 0)
        steps += opts.stride - steps % opts.stride;

    Trajectory out;
    out.dt = opts.dt * static_cast<double>(opts.stride);
    out.samples.reserve(steps / opts.stride + 1);

    double n1 = init.n1, n2 = init.n2;
    if (n1 + n2 > 1.0) {
        const double total = n1 + n2;
        n1 /= total;
        n2 /= total;
    }
    out.samples.push_back({init.t, n1, n2});
    for (std::size_t i = 1; i <= steps; ++i) {
        detail::rk4_step(params, opts.dt, n1, n2);
        if (i % opts.stride == 0)
            out.samples.push_back({init.t + static_cast<double>(i) * opts.dt, n1, n2});
    }
    return out;
}

struct SaturationResult {
    MarketState final_state;
    bool saturated = false; ///< true if 1 - (n1 + n2) < tol was reached before t_max
};

/// Integrates until the free market share drops below tol or t_max passes.
inline SaturationResult integrate_to_saturation(const BassParams& params, const MarketState& init,
                                                double t_max, double dt = kDefaultDt,
                                                double tol = kDefaultSaturationTol)
{
    params.validate();
    validate_state(init);
    detail::check_step(dt);

    double n1 = init.n1, n2 = init.n2;
    std::size_t i = 0;
    double t = init.t;
    while (1.0 - (n1 + n2) >= tol && t < t_max) {
        detail::rk4_step(params, dt, n1, n2);
        ++i;
        t = init.t + static_cast<double>(i) * dt;
    }
    return {{t, n1, n2}, 1.0 - (n1 + n2) < tol};
}

/// Closed-form single-brand Bass curve with n(0) = 0.
inline double closed_form_single(const SingleBrandParams& sb, double t)
{
    if (!(sb.p > 0.0))
        throw Error(ErrorKind::InvalidParams, "p must be > 0");
    if (!(sb.q >= 0.0))
        throw Error(ErrorKind::InvalidParams, "q must be >= 0");
    const double decay = std::exp(-(sb.p + sb.q) * t);
    return (1.0 - decay) / (1.0 + (sb.q / sb.p) * decay);
}

struct DimensionalSample {
    double t = 0.0;
    double N1 = 0.0;
    double N2 = 0.0;
};

inline std::vector<DimensionalSample> to_dimensional(const Trajectory& traj, double m)
{
    if (!(m > 0.0))
        throw Error(ErrorKind::InvalidParams, "m must be > 0");
    std::vector<DimensionalSample> out;
    out.reserve(traj.size());
    for (const auto& s : traj.samples)
        out.push_back({s.t, m * s.n1, m * s.n2});
    return out;
}

/// 17 significant digits; round-trips any double.
inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_csv(std::ostream& os, const Trajectory& traj)
{
    os << "t,n1,n2\n";
    for (const auto& s : traj.samples)
        os << format_double(s.t) << ',' << format_double(s.n1) << ',' << format_double(s.n2) << '\n';
}

} // namespace duopoly
