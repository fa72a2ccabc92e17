#include "duopoly/abm.hpp"
#include "duopoly/fitting.hpp"

#include "generators.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace duopoly;
using duopoly::testing::Gen;

namespace {

template <class Fn>
ErrorKind kind_of(Fn&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an error";
    return ErrorKind::Io;
}

CurvePair pair(std::vector<double> t, std::vector<double> a, std::vector<double> b = {})
{
    return {std::move(t), std::move(a), std::move(b)};
}

std::vector<double> tick_grid(std::size_t n)
{
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i)
        t[i] = static_cast<double>(i);
    return t;
}

const BassParams kReference{0.0109, 0.0239, 0.3536, 0.3513, 0.0, 0.0, 1.0};

} // namespace

TEST(Sse, Basics)
{
    const auto t = tick_grid(5);
    const CurvePair target = pair(t, {0, .1, .2, .3, .4}, {0, .2, .4, .5, .6});
    EXPECT_EQ(sse(target, target), 0.0);
    CurvePair shifted = target;
    for (auto& v : shifted.n2)
        v += 0.5;
    EXPECT_DOUBLE_EQ(sse(shifted, target), 5 * 0.25);
}

TEST(Sse, MatchesDirectSummation)
{
    Gen g(401);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 2 + g.below(100);
        CurvePair a = pair(tick_grid(n), {}, {}), b = a;
        double expected = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            a.n1.push_back(g.uniform(0, 1));
            a.n2.push_back(g.uniform(0, 1));
            b.n1.push_back(g.uniform(0, 1));
            b.n2.push_back(g.uniform(0, 1));
            expected += std::pow(a.n1[i] - b.n1[i], 2) + std::pow(a.n2[i] - b.n2[i], 2);
        }
        EXPECT_NEAR(sse(a, b), expected, 1e-12);
    }
}

TEST(Sse, GridMismatch)
{
    const CurvePair a = pair({0, 1, 2}, {0, 1, 2}), b = pair({0, 1, 3}, {0, 1, 2});
    EXPECT_EQ(kind_of([&] { sse(a, b); }), ErrorKind::GridMismatch);
    const CurvePair c = pair({0, 1}, {0, 1});
    EXPECT_EQ(kind_of([&] { sse(a, c); }), ErrorKind::GridMismatch);
}

TEST(RSquared, Cases)
{
    const std::vector<double> target = {1, 2, 3, 4, 5};
    EXPECT_EQ(r_squared(target, target), 1.0);
    EXPECT_NEAR(r_squared(std::vector<double>(5, 3.0), target), 0.0, 1e-15);
    // residuals 0.1, -0.1, 0.2, -0.2, 0: SS_res = 0.1, SS_tot = 10
    EXPECT_NEAR(r_squared(std::vector<double>{1.1, 1.9, 3.2, 3.8, 5.0}, target), 0.99, 1e-14);
    EXPECT_EQ(kind_of([] { r_squared(std::vector<double>{1, 2}, std::vector<double>{3, 3}); }),
              ErrorKind::ZeroVarianceTarget);
}

TEST(AreaDifference, Cases)
{
    const auto t = tick_grid(20);
    CurvePair target = pair(t, {}, {});
    for (double x : t) {
        target.n1.push_back(closed_form_single({0.02, 0.4}, x));
        target.n2.push_back(closed_form_single({0.05, 0.3}, x));
    }
    EXPECT_EQ(area_difference_pct(target, target), 0.0);
    CurvePair scaled = target;
    for (auto* v : {&scaled.n1, &scaled.n2})
        for (auto& x : *v)
            x *= 1.1;
    EXPECT_NEAR(area_difference_pct(scaled, target), 10.0, 1e-12);
    const CurvePair flat = pair({0, 1}, {0, 0}, {0, 0});
    EXPECT_EQ(kind_of([&] { area_difference_pct(flat, flat); }), ErrorKind::ZeroAreaTarget);
}

TEST(AreaDifference, MatchesRefinedRiemannSum)
{
    Gen g(402);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t n = 3 + g.below(60);
        CurvePair a = pair({}, {}, {}), b = a;
        double t = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            t += g.uniform(0.1, 2.0);
            for (auto* c : {&a, &b}) {
                c->t.push_back(t);
                c->n1.push_back(g.uniform(0, 1));
                c->n2.push_back(g.uniform(0, 1));
            }
        }
        std::vector<double> gap1(n), gap2(n);
        for (std::size_t i = 0; i < n; ++i) {
            gap1[i] = std::abs(a.n1[i] - b.n1[i]);
            gap2[i] = std::abs(a.n2[i] - b.n2[i]);
        }
        const double expected = 100.0 * (oracle::riemann(a.t, gap1, 1000) + oracle::riemann(a.t, gap2, 1000)) /
                                (oracle::riemann(b.t, b.n1, 1000) + oracle::riemann(b.t, b.n2, 1000));
        EXPECT_NEAR(area_difference_pct(a, b) / expected, 1.0, 1e-10);
    }
}

TEST(SimulateOnGrid, MatchesIntegrate)
{
    const auto traj = integrate(kReference, {}, 30.0, {0.01, 100});
    const auto c = simulate_on_grid(kReference, curves_from(traj).t);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        EXPECT_EQ(c.n1[i], traj.samples[i].n1);
        EXPECT_EQ(c.n2[i], traj.samples[i].n2);
    }
    EXPECT_EQ(kind_of([] { simulate_on_grid(kReference, std::vector<double>{0.0, 0.005}); }),
              ErrorKind::GridMismatch);
}

TEST(Fit, SingleBrandRecoversGenerator)
{
    const auto t = tick_grid(60);
    const auto target = closed_form_on_grid({0.0109, 0.3536}, t);
    const auto r = fit_single_brand(t, target.n1, {0.02, 0.5});
    EXPECT_NEAR(r.params.p, 0.0109, 1e-6);
    EXPECT_NEAR(r.params.q, 0.3536, 1e-6);
    EXPECT_GT(r.r2, 1.0 - 1e-10);
}

TEST(Fit, SixParameterRoundTrip)
{
    const BassParams truth{0.02, 0.035, 0.45, 0.3, 0.15, 0.25, 1.0};
    FitSpec spec;
    spec.free_mask.fill(true);
    spec.initial = {0.03, 0.03, 0.35, 0.35, 0.1, 0.1, 1.0};
    spec.target = simulate_on_grid(truth, tick_grid(41));
    const auto r = fit(spec);
    for (auto c : kAllCoefficients)
        EXPECT_NEAR(r.params[c], truth[c], 1e-3) << name_of(c);
    EXPECT_LT(r.sse, 1e-10);
    for (double v : r.r2)
        EXPECT_GT(v, 1.0 - 1e-8);
    for (std::size_t i = 1; i < r.sse_history.size(); ++i)
        EXPECT_LE(r.sse_history[i], r.sse_history[i - 1]);
}

TEST(Fit, RespectsBoundsAndTies)
{
    const BassParams truth{0.02, 0.035, 0.45, 0.3, 0.15, 0.25, 1.0};
    FitSpec spec;
    spec.set_free(Coefficient::q12);
    spec.set_free(Coefficient::p1);
    spec.bounds_of(Coefficient::p1) = {0.0, 0.01};
    spec.initial = truth;
    spec.initial.p1 = 0.005;
    spec.ties.push_back({Coefficient::q12, Coefficient::q21});
    spec.target = simulate_on_grid(truth, tick_grid(41));
    const auto r = fit(spec);
    EXPECT_LE(r.params.p1, 0.01);
    EXPECT_GE(r.params.p1, 0.0);
    EXPECT_EQ(r.params.q12, r.params.q21);
    EXPECT_EQ(r.params.q11, truth.q11);
}

TEST(Fit, RejectsInvalidFitSpec)
{
    FitSpec spec;
    spec.set_free(Coefficient::p1);
    spec.initial = kReference;
    spec.target = simulate_on_grid(kReference, tick_grid(5));
    spec.bounds_of(Coefficient::p1) = {0.1, 0.2};
    EXPECT_EQ(kind_of([&] { fit(spec); }), ErrorKind::InvalidParams);
    spec.bounds_of(Coefficient::p1) = {0.0, 5.0};
    spec.ties.push_back({Coefficient::p2, Coefficient::p1});
    EXPECT_EQ(kind_of([&] { fit(spec); }), ErrorKind::InvalidParams);
}

TEST(Fit, BudgetExhaustion)
{
    FitSpec spec;
    spec.free_mask.fill(true);
    spec.initial = {0.03, 0.03, 0.35, 0.35, 0.1, 0.1, 1.0};
    spec.target = simulate_on_grid({0.02, 0.035, 0.45, 0.3, 0.15, 0.25, 1.0}, tick_grid(41));
    spec.optimizer.max_evaluations = 40;
    const auto r = fit(spec);
    EXPECT_FALSE(r.converged);
    EXPECT_LE(r.evaluations, 50u);
}

TEST(FinalProportions, ReferenceTiedValue)
{
    const double c = match_final_proportions(kReference, {0.40125, 0.59875});
    EXPECT_NEAR(c, 0.077515, 1e-4);
    BassParams k = kReference;
    k.q12 = k.q21 = c;
    EXPECT_NEAR(integrate_to_saturation(k, {}, 1e4).final_state.n1, 0.40125, 1e-5);
}

TEST(FinalProportions, BaselineTargetGivesZero)
{
    const double n1 = final_share(kReference);
    EXPECT_EQ(match_final_proportions(kReference, {n1, 1.0 - n1}), 0.0);
}

TEST(FinalProportions, Errors)
{
    EXPECT_EQ(kind_of([] { match_final_proportions(kReference, {0.99, 0.01}); }), ErrorKind::NoBracket);
    EXPECT_EQ(kind_of([] { match_final_proportions(kReference, {0.5, 0.4}); }), ErrorKind::InvalidState);
}

TEST(Experiments, SyntheticTargetRecoveredByFreeFit)
{
    const BassParams truth{0.012, 0.022, 0.5, 0.4, 0.06, 0.04, 1.0};
    const auto target = simulate_on_grid(truth, tick_grid(41));
    const auto exps = run_experiments(target, {0.012, 0.022, 0.5, 0.4, 0.0, 0.0, 1.0});
    ASSERT_EQ(exps.size(), 4u);
    EXPECT_LT(exps[3].result.area_diff_pct, 0.1);
    for (int i : {1, 2}) {
        const auto m = simulate_on_grid(exps[i].result.params, std::vector<double>{0.0, 1e3});
        EXPECT_NEAR(m.n1.back() / (m.n1.back() + m.n2.back()), target_equilibrium(target).n1, 1e-4)
            << "experiment " << exps[i].id;
    }
    EXPECT_EQ(exps[0].result.params.q12, 0.0);
    EXPECT_EQ(exps[1].result.params.q12, exps[1].result.params.q21);
}

TEST(Experiments, AbmTargetOrdering)
{
    AbmConfig cfg;
    cfg.n_agents = 4000;
    cfg.gamma1 = 44;
    cfg.gamma2 = 96;
    const auto target = curves_from(ensemble(cfg, 10));
    const BassParams base{0.006, 0.0114, 0.54, 0.79, 0.0, 0.0, 1.0};
    const auto exps = run_experiments(target, base);
    EXPECT_GT(exps[0].result.area_diff_pct, exps[1].result.area_diff_pct);
    EXPECT_GT(exps[1].result.area_diff_pct, exps[2].result.area_diff_pct);
    EXPECT_GT(exps[2].result.area_diff_pct, exps[3].result.area_diff_pct);
    EXPECT_GT(exps[1].result.params.q12, 0.0);
}

TEST(Experiments, NeedsTwoCurves)
{
    const auto t = tick_grid(10);
    EXPECT_EQ(kind_of([&] { run_experiments(closed_form_on_grid({0.01, 0.3}, t), kReference); }),
              ErrorKind::InvalidParams);
}
