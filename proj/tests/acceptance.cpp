// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include "duopoly/abm.hpp"
#include "duopoly/bass.hpp"
#include "duopoly/cli/commands.hpp"
#include "duopoly/equilibrium.hpp"
#include "duopoly/fitting.hpp"

#include "generators.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

using namespace duopoly;
using duopoly::testing::Gen;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;
};

struct Criterion {
    int id;
    std::string title;
    double budget_s; ///< runtime limit, 0 for none
    std::function<Verdict()> check;
};

std::string fmt(const char* format, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

// 1 -------------------------------------------------------------------------
Verdict within_brand_equilibrium()
{
    const auto a = solve_within_brand_equilibrium(0.01, 0.035, 0.4, 0.4);
    const auto b = solve_within_brand_equilibrium(0.02, 0.02, 0.3, 0.3);
    const bool ok_a = std::abs(a.n2 - 0.80) <= 0.02;
    const bool ok_b = std::abs(b.n1 - 0.5) <= 1e-10;
    return {ok_a && ok_b, fmt("n2=%.6f (want 0.80 +/- 0.02), symmetric n1=%.12f", a.n2, b.n1)};
}

// 2 -------------------------------------------------------------------------
Verdict solver_ode_consistency()
{
    const auto ps = uniform_grid(0.01, 0.0225, 5);
    const auto qs = uniform_grid(0.1, 0.175, 5);
    double worst = 0.0;
    int cases = 0;
    for (double p1 : ps)
        for (double p2 : ps)
            for (double q11 : qs)
                for (double q22 : qs) {
                    const BassParams k{p1, p2, q11, q22, 0.0, 0.0, 1.0};
                    const double root = solve_within_brand_equilibrium(k).n1;
                    const auto sat = integrate_to_saturation(k, {}, 1e4);
                    if (!sat.saturated)
                        return {false, "integration did not saturate"};
                    worst = std::max(worst, std::abs(root - sat.final_state.n1));
                    ++cases;
                }
    return {worst < 1e-4, fmt("%d grid points, max |root - integrated| = %.3g", cases, worst)};
}

// 3 -------------------------------------------------------------------------
Verdict reference_proportions()
{
    const BassParams k{0.0109, 0.0239, 0.3536, 0.3513, 0.0, 0.0, 1.0};
    const auto sat = integrate_to_saturation(k, {}, 1e4);
    const double c = match_final_proportions(k, {0.40125, 0.59875});
    const bool ok = std::abs(sat.final_state.n1 - 0.3155) <= 5e-4 &&
                    std::abs(sat.final_state.n2 - 0.68446) <= 5e-4 && std::abs(c - 0.077515) <= 1e-4;
    return {ok, fmt("final (%.6f, %.6f), tied c = %.7f", sat.final_state.n1, sat.final_state.n2, c)};
}

// 4 -------------------------------------------------------------------------
Verdict attractor()
{
    Gen g(4);
    double worst = 0.0;
    int unsaturated = 0;
    for (int i = 0; i < 100; ++i) {
        const BassParams k = g.params();
        const double n = g.uniform(0.02, 0.98);
        const double d1 = -g.uniform(0.0, 1e-3), d2 = -g.uniform(0.0, 1e-3);
        const auto pa = analyze_perturbation(k, n, d1, d2);
        const auto sat = integrate_to_saturation(k, {0.0, n + d1, 1.0 - n + d2}, 1e6);
        if (!(std::abs(1.0 - sat.final_state.adopted()) < 1e-6))
            ++unsaturated;
        worst = std::max({worst, std::abs(sat.final_state.n1 - n - pa.c1),
                          std::abs(sat.final_state.n2 - (1.0 - n) + pa.c1)});
    }
    return {unsaturated == 0 && worst < 5e-5,
            fmt("%d unsaturated, max |shift - (c1, -c1)| = %.3g", unsaturated, worst)};
}

// 5 -------------------------------------------------------------------------
Verdict sum_negative()
{
    Gen g(5);
    int violations = 0;
    for (int i = 0; i < 10'000; ++i) {
        BassParams k = g.params();
        if (g.coin(0.1))
            (g.coin() ? k.p1 : k.p2) = 0.0;
        if (g.coin(0.1))
            k.q11 = k.q22 = k.q12 = k.q21 = 0.0;
        const auto [a, b] = linearization_coeffs(k, g.uniform(0.0, 1.0));
        violations += a + b < 0.0 ? 0 : 1;
    }
    return {violations == 0, fmt("%d violations in 10000 samples", violations)};
}

// 6 -------------------------------------------------------------------------
Verdict closed_form_vs_rk4()
{
    Gen g(6);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const SingleBrandParams sb{g.log_uniform(1e-3, 0.2), g.uniform(0.0, 1.0)};
        BassParams k;
        k.p1 = sb.p;
        k.q11 = sb.q;
        for (const auto& s : integrate(k, {}, 100.0, {0.01, 1}).samples)
            worst = std::max(worst, std::abs(s.n1 - closed_form_single(sb, s.t)));
    }
    return {worst < 1e-6, fmt("max |closed form - RK4| = %.3g over 20 pairs", worst)};
}

// 7 -------------------------------------------------------------------------
Verdict decision_rule()
{
    const StateTriple equal = {0.0, 0.0, 0.0};
    const double p_i = choice_probability(1, {0.5, 0.0, 0.5}, equal);
    const double p_ii = choice_probability(1, {0.5, 0.25, 0.25}, equal);
    int violations = 0, cases = 0;
    for (int degree = 1; degree <= 8; ++degree)
        for (int a = 0; a <= degree; ++a)
            for (int b = 0; a + b <= degree; ++b) {
                const double d = degree;
                const StateTriple nu = {a / d, b / d, (degree - a - b) / d};
                const StateTriple p = state_probabilities(nu, equal);
                violations += p[0] + p[1] + p[2] == 1.0 ? 0 : 1;
                ++cases;
            }
    return {p_i == 0.5 && p_ii == 1.0 && violations == 0,
            fmt("P(1) = %g and %g; %d/%d neighborhoods not normalized", p_i, p_ii, violations, cases)};
}

// 8 -------------------------------------------------------------------------
Verdict cross_brand_cases()
{
    const auto runs = sweep_fig2(fig2_params(), fig2_cases(), kFig2Horizon);
    auto final_of = [&](std::size_t i) { return runs[i].trajectory.back(); };
    for (std::size_t i = 0; i < 4; ++i)
        if (1.0 - final_of(i).adopted() >= 1e-6)
            return {false, "case " + runs[i].cross.label + " not saturated at the horizon"};
    const double rise = final_of(1).n2 - final_of(0).n2;
    const double gap_c = std::abs(final_of(2).n1 - final_of(2).n2);
    const double gap_d = std::abs(final_of(3).n1 - final_of(3).n2);
    const bool ok = rise < 0.03 && gap_c < 0.1 && gap_d > gap_c;
    return {ok, fmt("B - A in n2 = %.5f (want < 0.03), |n1-n2| C = %.5f (want < 0.1), D = %.5f (want > C)", rise,
                    gap_c, gap_d)};
}

// 9 -------------------------------------------------------------------------
Verdict fit_round_trip()
{
    const BassParams truth{0.015, 0.03, 0.42, 0.33, 0.12, 0.2, 1.0};
    std::vector<double> t;
    for (int i = 0; i <= 40; ++i)
        t.push_back(i);
    FitSpec spec;
    spec.free_mask.fill(true);
    spec.initial = {0.02, 0.02, 0.35, 0.35, 0.1, 0.1, 1.0};
    spec.target = simulate_on_grid(truth, t);
    const auto r = fit(spec);
    double worst = 0.0;
    for (auto c : kAllCoefficients)
        worst = std::max(worst, std::abs(r.params[c] - truth[c]));
    const double r2 = std::min(r.r2[0], r.r2[1]);
    return {worst < 1e-3 && r2 > 1.0 - 1e-8, fmt("max |param error| = %.3g, min r2 = 1 - %.3g", worst, 1.0 - r2)};
}

// 10 ------------------------------------------------------------------------
Verdict experiment_ordering()
{
    cli::ScenarioConfig cfg; // n = 10000, k = 8, 20 replicates
    const auto mono = cli::detail::monopoly_fits(cfg);
    const auto target = curves_from(ensemble(cfg.abm.config, cfg.fit.replicates));
    const auto exps = run_experiments(target, cli::detail::base_from(mono));
    const double a1 = exps[0].result.area_diff_pct, a2 = exps[1].result.area_diff_pct,
                 a3 = exps[2].result.area_diff_pct, a4 = exps[3].result.area_diff_pct;
    const auto& r2 = exps[3].result.r2;
    const bool ok = a1 > a2 && a2 > a3 && a3 > a4 && r2[0] >= 0.99 && r2[1] >= 0.99;
    return {ok, fmt("area %% = %.3f > %.3f > %.3f > %.3f, exp-4 r2 = %.4f / %.4f", a1, a2, a3, a4, r2[0], r2[1])};
}

// 11 ------------------------------------------------------------------------
std::string slurp(const cli::fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

Verdict determinism()
{
    using namespace cli;
    ScenarioConfig base;
    base.abm.config.n_agents = 2000;
    base.abm.config.gamma1 = 22;
    base.abm.config.gamma2 = 48;
    base.abm.replicates = 4;
    base.fit.replicates = 4;

    using Command = std::function<CommandOutcome(const ScenarioConfig&, std::ostream&)>;
    auto with_mode = [](Mode m, Command c) {
        return [m, c](ScenarioConfig cfg, std::ostream& os) {
            cfg.mode = m;
            return c(cfg, os);
        };
    };
    const std::vector<std::pair<std::string, Command>> commands = {
        {"simulate-bass", cmd_simulate_bass},
        {"simulate-abm", cmd_simulate_abm},
        {"equilibrium", cmd_equilibrium},
        {"sweep-fig1", with_mode(Mode::SweepFig1, cmd_sweep)},
        {"sweep-fig2", with_mode(Mode::SweepFig2, cmd_sweep)},
        {"fit", cmd_fit},
        {"reproduce", [](const ScenarioConfig& c, std::ostream& os) { return cmd_reproduce(c, "all", os); }},
    };

    const fs::path root = fs::temp_directory_path() / "duopoly_acceptance_determinism";
    std::size_t compared = 0;
    for (const auto& [name, command] : commands) {
        std::vector<std::string> outputs[2];
        std::string logs[2];
        for (int pass = 0; pass < 2; ++pass) {
            ScenarioConfig cfg = base;
            cfg.output_dir = root / (name + "_" + std::to_string(pass));
            fs::remove_all(cfg.output_dir);
            std::ostringstream log;
            const auto outcome = command(cfg, log);
            logs[pass] = log.str();
            for (const auto& p : outcome.artifacts)
                outputs[pass].push_back(p.filename().string() + "\n" + slurp(p));
        }
        if (outputs[0] != outputs[1] || logs[0] != logs[1] || outputs[0].empty())
            return {false, name + " produced different artifacts on rerun"};
        compared += outputs[0].size();
    }
    fs::remove_all(root);
    return {true, fmt("%zu artifacts from %zu commands identical on rerun", compared, commands.size())};
}

} // namespace

int main()
{
    const std::vector<Criterion> criteria = {
        {1, "within-brand equilibrium values", 1.0, within_brand_equilibrium},
        {2, "equilibrium root agrees with ODE on 5^4 grid", 30.0, solver_ode_consistency},
        {3, "reference final proportions and tied cross value", 10.0, reference_proportions},
        {4, "saturation line attracts perturbed starts", 30.0, attractor},
        {5, "a + b < 0 on random samples", 0.0, sum_negative},
        {6, "closed form matches RK4", 0.0, closed_form_vs_rk4},
        {7, "decision rule exactness and normalization", 0.0, decision_rule},
        {8, "cross-brand cases A-D", 10.0, cross_brand_cases},
        {9, "six-parameter fit round trip", 60.0, fit_round_trip},
        {10, "experiment ordering on ABM target", 600.0, experiment_ordering},
        {11, "commands are byte-deterministic", 0.0, determinism},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.check();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.budget_s > 0.0 && secs >= c.budget_s) {
            v.pass = false;
            v.detail += fmt(" [over %.0f s budget]", c.budget_s);
        }
        failures += v.pass ? 0 : 1;
        std::printf("%s [%2d] %s: %s (%.2f s)\n", v.pass ? "PASS" : "FAIL", c.id, c.title.c_str(), v.detail.c_str(),
                    secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
