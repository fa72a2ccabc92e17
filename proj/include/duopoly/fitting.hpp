#pragma once

// Calibration of the coupled Bass system against reference adoption curves
// (typically ensemble means of the agent-based model) and the comparison
// metrics used to judge the fits.

#include "duopoly/abm.hpp"
#include "duopoly/bass.hpp"
#include "duopoly/equilibrium.hpp"
#include "duopoly/error.hpp"
#include "duopoly/nelder_mead.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace duopoly {

/// One or two adoption curves on a shared time grid. A single-curve target
/// leaves n2 empty.
struct CurvePair {
    std::vector<double> t;
    std::vector<double> n1;
    std::vector<double> n2;

    bool has_second() const noexcept { return !n2.empty(); }
    std::size_t size() const noexcept { return t.size(); }
};

inline CurvePair curves_from(const Trajectory& traj)
{
    CurvePair c;
    for (const auto& s : traj.samples) {
        c.t.push_back(s.t);
        c.n1.push_back(s.n1);
        c.n2.push_back(s.n2);
    }
    return c;
}

inline CurvePair curves_from(const AbmTrajectory& traj)
{
    CurvePair c;
    for (const auto& s : traj.samples) {
        c.t.push_back(s.t);
        c.n1.push_back(s.n1);
        c.n2.push_back(s.n2);
    }
    return c;
}

namespace detail {

inline void check_same_grid(const CurvePair& a, const CurvePair& b)
{
    if (a.size() != b.size() || a.n1.size() != a.size() || b.n1.size() != b.size() ||
        a.has_second() != b.has_second() || (a.has_second() && (a.n2.size() != a.size() || b.n2.size() != b.size())))
        throw Error(ErrorKind::GridMismatch, "curves differ in length or curve count");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a.t[i] - b.t[i]) > 1e-9)
            throw Error(ErrorKind::GridMismatch, "time grids differ at sample " + std::to_string(i));
}

inline double trapezoid(std::span<const double> t, std::span<const double> f)
{
    double acc = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i)
        acc += 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
    return acc;
}

} // namespace detail

inline double sse(const CurvePair& model, const CurvePair& target)
{
    detail::check_same_grid(model, target);
    double acc = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) {
        const double d1 = model.n1[i] - target.n1[i];
        acc += d1 * d1;
        if (target.has_second()) {
            const double d2 = model.n2[i] - target.n2[i];
            acc += d2 * d2;
        }
    }
    return acc;
}

/// 1 - SS_res / SS_tot, SS_tot taken about the target mean.
inline double r_squared(std::span<const double> model, std::span<const double> target)
{
    if (model.size() != target.size() || target.empty())
        throw Error(ErrorKind::GridMismatch, "curves differ in length");
    double mean = 0.0;
    for (double v : target)
        mean += v;
    mean /= static_cast<double>(target.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        ss_res += (model[i] - target[i]) * (model[i] - target[i]);
        ss_tot += (target[i] - mean) * (target[i] - mean);
    }
    if (ss_tot == 0.0)
        throw Error(ErrorKind::ZeroVarianceTarget, "target curve is constant");
    return 1.0 - ss_res / ss_tot;
}

/// 100 * sum_i int |model_i - target_i| dt / sum_i int target_i dt, by the
/// trapezoidal rule on the common grid.
inline double area_difference_pct(const CurvePair& model, const CurvePair& target)
{
    detail::check_same_grid(model, target);
    const std::size_t n = model.size();
    std::vector<double> gap(n);
    double diff_area = 0.0, target_area = 0.0;
    auto accumulate = [&](const std::vector<double>& m, const std::vector<double>& tg) {
        for (std::size_t i = 0; i < n; ++i)
            gap[i] = std::abs(m[i] - tg[i]);
        diff_area += detail::trapezoid(model.t, gap);
        target_area += detail::trapezoid(target.t, tg);
    };
    accumulate(model.n1, target.n1);
    if (target.has_second())
        accumulate(model.n2, target.n2);
    if (!(target_area > 0.0))
        throw Error(ErrorKind::ZeroAreaTarget, "target curves enclose no area");
    return 100.0 * diff_area / target_area;
}

/// Bass trajectory from (0, 0) at t = 0 sampled at `times`, which must be
/// ascending, non-negative multiples of dt.
inline CurvePair simulate_on_grid(const BassParams& params, std::span<const double> times, bool two_curves = true,
                                  double dt = kDefaultDt)
{
    params.validate();
    detail::check_step(dt);
    CurvePair out;
    out.t.assign(times.begin(), times.end());
    out.n1.reserve(times.size());
    if (two_curves)
        out.n2.reserve(times.size());

    double n1 = 0.0, n2 = 0.0;
    long long done = 0;
    for (double t : times) {
        const double steps = t / dt;
        const auto target = std::llround(steps);
        if (t < 0.0 || std::abs(steps - static_cast<double>(target)) > 1e-6 || target < done)
            throw Error(ErrorKind::GridMismatch, "sample times must be ascending multiples of dt");
        for (; done < target; ++done)
            detail::rk4_step(params, dt, n1, n2);
        out.n1.push_back(n1);
        if (two_curves)
            out.n2.push_back(n2);
    }
    return out;
}

inline CurvePair closed_form_on_grid(const SingleBrandParams& sb, std::span<const double> times)
{
    CurvePair out;
    out.t.assign(times.begin(), times.end());
    for (double t : times)
        out.n1.push_back(closed_form_single(sb, t));
    return out;
}

// ---------------------------------------------------------------------------
// Fitting

struct Bounds {
    double lo = 0.0;
    double hi = 5.0;
};

/// follower is held equal to leader.
struct Tie {
    Coefficient leader;
    Coefficient follower;
};

struct FitSpec {
    std::array<bool, 6> free_mask{};
    std::array<Bounds, 6> bounds{};
    BassParams initial;
    std::vector<Tie> ties;
    CurvePair target;
    double dt = kDefaultDt;
    NelderMeadOptions optimizer;

    bool is_free(Coefficient c) const { return free_mask[static_cast<std::size_t>(c)]; }
    void set_free(Coefficient c, bool v = true) { free_mask[static_cast<std::size_t>(c)] = v; }
    Bounds& bounds_of(Coefficient c) { return bounds[static_cast<std::size_t>(c)]; }
    const Bounds& bounds_of(Coefficient c) const { return bounds[static_cast<std::size_t>(c)]; }

    void validate() const
    {
        initial.validate();
        for (auto c : kAllCoefficients) {
            const auto& b = bounds_of(c);
            if (!(b.lo >= 0.0) || !(b.hi >= b.lo))
                throw Error(ErrorKind::InvalidParams, std::string("bounds of ") + std::string(name_of(c)) +
                                                          " must satisfy 0 <= lo <= hi");
            if (is_free(c) && (initial[c] < b.lo || initial[c] > b.hi))
                throw Error(ErrorKind::InvalidParams,
                            std::string("initial ") + std::string(name_of(c)) + " lies outside its bounds");
        }
        for (const auto& tie : ties)
            if (is_free(tie.follower) || tie.follower == tie.leader)
                throw Error(ErrorKind::InvalidParams,
                            std::string("tied coefficient ") + std::string(name_of(tie.follower)) +
                                " must not be free");
        if (target.size() < 2)
            throw Error(ErrorKind::InvalidParams, "target needs at least two samples");
    }
};

struct FitResult {
    BassParams params;
    double sse = 0.0;
    std::vector<double> r2; ///< one entry per target curve
    double area_diff_pct = 0.0;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool converged = true;
    std::vector<double> sse_history;
};

/// Metrics of a fixed parameter set against a target; no optimization.
inline FitResult evaluate_fit(const BassParams& params, const CurvePair& target, double dt = kDefaultDt)
{
    const CurvePair model = simulate_on_grid(params, target.t, target.has_second(), dt);
    FitResult r;
    r.params = params;
    r.sse = sse(model, target);
    r.r2.push_back(r_squared(model.n1, target.n1));
    if (target.has_second())
        r.r2.push_back(r_squared(model.n2, target.n2));
    r.area_diff_pct = area_difference_pct(model, target);
    return r;
}

namespace detail {

inline double initial_step(double x0) { return x0 > 0.0 ? std::max(0.25 * x0, 1e-3) : 0.01; }

inline std::vector<Coefficient> free_coefficients(const FitSpec& spec)
{
    std::vector<Coefficient> out;
    for (auto c : kAllCoefficients)
        if (spec.is_free(c))
            out.push_back(c);
    return out;
}

} // namespace detail

/// Nelder-Mead minimization of sse over the free coefficients. Trial points
/// are clamped onto the bounds and ties are re-applied before every
/// evaluation. When the evaluation budget runs out the best point so far is
/// returned with converged = false.
inline FitResult fit(const FitSpec& spec)
{
    spec.validate();
    const auto free = detail::free_coefficients(spec);

    auto assemble = [&](const std::vector<double>& x) {
        BassParams k = spec.initial;
        for (std::size_t i = 0; i < free.size(); ++i)
            k[free[i]] = x[i];
        for (const auto& tie : spec.ties)
            k[tie.follower] = k[tie.leader];
        return k;
    };
    auto project = [&](std::vector<double>& x) {
        for (std::size_t i = 0; i < free.size(); ++i) {
            const auto& b = spec.bounds_of(free[i]);
            x[i] = std::clamp(x[i], b.lo, b.hi);
        }
    };
    auto objective = [&](const std::vector<double>& x) {
        try {
            return sse(simulate_on_grid(assemble(x), spec.target.t, spec.target.has_second(), spec.dt), spec.target);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::StepTooLarge)
                return std::numeric_limits<double>::infinity();
            throw;
        }
    };

    std::vector<double> x0, step;
    for (auto c : free) {
        x0.push_back(spec.initial[c]);
        step.push_back(detail::initial_step(spec.initial[c]));
    }
    const auto nm = nelder_mead(objective, x0, step, project, spec.optimizer);

    FitResult r = evaluate_fit(assemble(nm.x), spec.target, spec.dt);
    r.iterations = nm.iterations;
    r.evaluations = nm.evaluations;
    r.converged = nm.converged;
    r.sse_history = nm.best_history;
    return r;
}

struct SingleBrandFit {
    SingleBrandParams params;
    double sse = 0.0;
    double r2 = 0.0;
    double area_diff_pct = 0.0;
    std::size_t iterations = 0;
    bool converged = true;
};

/// Fits the closed-form single-brand curve to one adoption curve.
inline SingleBrandFit fit_single_brand(std::span<const double> times, std::span<const double> shares,
                                       SingleBrandParams initial, const NelderMeadOptions& opts = {})
{
    if (times.size() != shares.size() || times.size() < 2)
        throw Error(ErrorKind::GridMismatch, "times and shares must match and hold >= 2 samples");
    if (!(initial.p > 0.0) || !(initial.q >= 0.0))
        throw Error(ErrorKind::InvalidParams, "initial p must be > 0 and q >= 0");

    CurvePair target;
    target.t.assign(times.begin(), times.end());
    target.n1.assign(shares.begin(), shares.end());

    static constexpr double kMinP = 1e-9;
    auto project = [](std::vector<double>& x) {
        x[0] = std::clamp(x[0], kMinP, 5.0);
        x[1] = std::clamp(x[1], 0.0, 5.0);
    };
    auto objective = [&](const std::vector<double>& x) {
        return sse(closed_form_on_grid({x[0], x[1]}, target.t), target);
    };
    const auto nm = nelder_mead(objective, {initial.p, initial.q},
                                {detail::initial_step(initial.p), detail::initial_step(initial.q)}, project, opts);

    SingleBrandFit r;
    r.params = {nm.x[0], nm.x[1]};
    const CurvePair model = closed_form_on_grid(r.params, target.t);
    r.sse = sse(model, target);
    r.r2 = r_squared(model.n1, target.n1);
    r.area_diff_pct = area_difference_pct(model, target);
    r.iterations = nm.iterations;
    r.converged = nm.converged;
    return r;
}

// ---------------------------------------------------------------------------
// Final-proportion matching

struct FinalShareOptions {
    double lo = 0.0;
    double hi = 10.0;
    double t_max = 1e4;
    double dt = kDefaultDt;
    double saturation_tol = kDefaultSaturationTol;
};

/// Brand-1 share at saturation, starting from an empty market.
inline double final_share(const BassParams& params, const FinalShareOptions& opts = {})
{
    return integrate_to_saturation(params, MarketState{}, opts.t_max, opts.dt, opts.saturation_tol).final_state.n1;
}

/// Bisection for the value v of the coefficients in `which` (all set to v)
/// that makes the saturated brand-1 share equal target_n1.
inline double solve_final_share(const BassParams& base, double target_n1, std::span<const Coefficient> which,
                                const FinalShareOptions& opts = {})
{
    auto with = [&](double v) {
        BassParams k = base;
        for (auto c : which)
            k[c] = v;
        return k;
    };
    auto gap = [&](double v) { return final_share(with(v), opts) - target_n1; };

    double lo = opts.lo, hi = opts.hi;
    double g_lo = gap(lo);
    if (g_lo == 0.0)
        return lo;
    const double g_hi = gap(hi);
    if (g_hi == 0.0)
        return hi;
    if ((g_lo < 0.0) == (g_hi < 0.0))
        throw Error(ErrorKind::NoBracket, "no sign change of the final-share gap on [" + format_double(lo) + ", " +
                                              format_double(hi) + "]");
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double g = gap(mid);
        if (g == 0.0)
            return mid;
        if ((g < 0.0) == (g_lo < 0.0)) {
            lo = mid;
            g_lo = g;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Tied cross coefficient c = q12 = q21 reproducing the target saturation
/// shares.
inline double match_final_proportions(const BassParams& base, const EquilibriumPoint& target_eq,
                                      const FinalShareOptions& opts = {})
{
    if (std::abs(target_eq.n1 + target_eq.n2 - 1.0) > 1e-6)
        throw Error(ErrorKind::InvalidState, "target equilibrium must lie on the saturation line");
    constexpr std::array<Coefficient, 2> tied = {Coefficient::q12, Coefficient::q21};
    return solve_final_share(base, target_eq.n1, tied, opts);
}

// ---------------------------------------------------------------------------
// The four macro/micro comparison experiments

struct Experiment {
    int id = 0;
    std::string label;
    FitResult result;
};

struct ExperimentOptions {
    double dt = kDefaultDt;
    FinalShareOptions final_share;
    NelderMeadOptions optimizer;
    double cross_upper = 5.0;
};

/// Saturation shares of a target, normalized onto n1 + n2 = 1.
inline EquilibriumPoint target_equilibrium(const CurvePair& target)
{
    const double n1 = target.n1.back(), n2 = target.n2.back();
    if (!(n1 + n2 > 0.0))
        throw Error(ErrorKind::InvalidState, "target has no adopters");
    return {n1 / (n1 + n2), n2 / (n1 + n2)};
}

/// 1: monopoly coefficients, no cross terms (metrics only).
/// 2: tied q12 = q21 chosen to reproduce the target's saturation shares.
/// 3: q12, q21 independent, best curve fit on the family that keeps the
///    saturation shares (q21 searched, q12 solved for the shares).
/// 4: all six coefficients free, started from experiment 3.
inline std::vector<Experiment> run_experiments(const CurvePair& target, const BassParams& base,
                                               const ExperimentOptions& opts = {})
{
    if (!target.has_second())
        throw Error(ErrorKind::InvalidParams, "experiments need a two-brand target");
    base.validate();
    const EquilibriumPoint eq = target_equilibrium(target);
    std::vector<Experiment> out;

    BassParams k1 = base;
    k1.q12 = k1.q21 = 0.0;
    out.push_back({1, "monopoly coefficients, no cross-brand terms", evaluate_fit(k1, target, opts.dt)});

    BassParams k2 = k1;
    k2.q12 = k2.q21 = match_final_proportions(k1, eq, opts.final_share);
    out.push_back({2, "tied cross-brand terms matching final proportions", evaluate_fit(k2, target, opts.dt)});

    // Experiment 3: one free variable (q21); q12 follows from the constraint.
    constexpr std::array<Coefficient, 1> solve_for = {Coefficient::q12};
    auto constrained = [&](double q21) {
        BassParams k = k2;
        k.q21 = q21;
        k.q12 = solve_final_share(k, eq.n1, solve_for, opts.final_share);
        return k;
    };
    auto project = [&](std::vector<double>& x) { x[0] = std::clamp(x[0], 0.0, opts.cross_upper); };
    auto objective = [&](const std::vector<double>& x) {
        try {
            const BassParams k = constrained(x[0]);
            return sse(simulate_on_grid(k, target.t, true, opts.dt), target);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::NoBracket || e.kind() == ErrorKind::StepTooLarge)
                return std::numeric_limits<double>::infinity();
            throw;
        }
    };
    const auto nm3 = nelder_mead(objective, {k2.q21}, {detail::initial_step(k2.q21)}, project, opts.optimizer);
    FitResult r3 = evaluate_fit(constrained(nm3.x[0]), target, opts.dt);
    r3.iterations = nm3.iterations;
    r3.evaluations = nm3.evaluations;
    r3.converged = nm3.converged;
    r3.sse_history = nm3.best_history;
    out.push_back({3, "independent cross-brand terms preserving final proportions", r3});

    FitSpec spec4;
    spec4.free_mask.fill(true);
    for (auto c : kAllCoefficients)
        spec4.bounds_of(c) = {0.0, opts.cross_upper};
    spec4.initial = r3.params;
    spec4.target = target;
    spec4.dt = opts.dt;
    spec4.optimizer = opts.optimizer;
    out.push_back({4, "all coefficients free", fit(spec4)});
    return out;
}

} // namespace duopoly
