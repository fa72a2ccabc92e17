#pragma once

// Subcommand implementations. Each command is a pure function of the
// scenario (including its seed) to the bytes it writes.

#include "duopoly/abm.hpp"
#include "duopoly/bass.hpp"
#include "duopoly/cli/config.hpp"
#include "duopoly/cli/report.hpp"
#include "duopoly/equilibrium.hpp"
#include "duopoly/error.hpp"
#include "duopoly/fitting.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace duopoly::cli {

namespace fs = std::filesystem;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<fs::path> out;
    std::optional<std::size_t> replicates;
};

inline void apply_overrides(ScenarioConfig& cfg, const Overrides& o)
{
    if (o.seed)
        cfg.rng_seed = *o.seed;
    if (o.out)
        cfg.output_dir = *o.out;
    if (o.replicates) {
        cfg.abm.replicates = *o.replicates;
        cfg.fit.replicates = *o.replicates;
    }
    cfg.abm.config.rng_seed = cfg.rng_seed;
}

/// Fails unless the scenario's declared mode (if any) is one of `accepted`.
inline void require_mode(const ScenarioConfig& cfg, std::initializer_list<Mode> accepted, std::string_view command)
{
    if (!cfg.mode)
        return;
    for (Mode m : accepted)
        if (*cfg.mode == m)
            return;
    throw Error(ErrorKind::ConfigParse, "scenario mode '" + std::string(to_string(*cfg.mode)) +
                                            "' does not match command '" + std::string(command) + "'");
}

struct CommandOutcome {
    int exit_code = 0; ///< 0 ok, 2 when a numerical routine did not converge
    std::vector<fs::path> artifacts;
};

class ArtifactWriter {
public:
    explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir))
    {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec)
            throw Error(ErrorKind::Io, "cannot create " + dir_.string() + ": " + ec.message());
    }

    template <class Fn>
    void write(const std::string& name, Fn&& fill)
    {
        const fs::path path = dir_ / name;
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        if (!os)
            throw Error(ErrorKind::Io, "cannot open " + path.string());
        fill(os);
        os.flush();
        if (!os)
            throw Error(ErrorKind::Io, "failed writing " + path.string());
        outcome.artifacts.push_back(path);
    }

    void write_json(const std::string& name, const nlohmann::ordered_json& doc)
    {
        write(name, [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
    }

    CommandOutcome outcome;

private:
    fs::path dir_;
};

// ---------------------------------------------------------------------------

inline CommandOutcome cmd_simulate_bass(const ScenarioConfig& cfg, std::ostream& out)
{
    require_mode(cfg, {Mode::Bass}, "simulate-bass");
    const auto& b = cfg.bass;
    const Trajectory traj = integrate(b.params, b.init, b.t_end, {b.dt, b.stride});

    ArtifactWriter w(cfg.output_dir);
    w.write("bass_trajectory.csv", [&](std::ostream& os) { write_csv(os, traj); });

    const auto& last = traj.back();
    const bool saturated = 1.0 - last.adopted() < kDefaultSaturationTol;
    out << "final t=" << format_double(last.t) << " n1=" << format_double(last.n1)
        << " n2=" << format_double(last.n2) << (saturated ? " (saturated)" : " (not saturated)") << '\n';
    return w.outcome;
}

inline CommandOutcome cmd_simulate_abm(const ScenarioConfig& cfg, std::ostream& out)
{
    require_mode(cfg, {Mode::Abm}, "simulate-abm");
    const auto& a = cfg.abm;
    const AbmTrajectory traj = a.replicates > 1 ? ensemble(a.config, a.replicates) : run(a.config);

    ArtifactWriter w(cfg.output_dir);
    w.write("abm_trajectory.csv", [&](std::ostream& os) { write_csv(os, traj); });
    const auto& last = traj.samples.back();
    out << "ticks=" << traj.samples.size() - 1 << " n1=" << format_double(last.n1)
        << " n2=" << format_double(last.n2) << '\n';
    return w.outcome;
}

inline CommandOutcome cmd_equilibrium(const ScenarioConfig& cfg, std::ostream& out)
{
    require_mode(cfg, {Mode::Equilibrium}, "equilibrium");
    const BassParams& k = cfg.bass.params;
    k.validate();
    const auto& e = cfg.equilibrium;

    nlohmann::ordered_json doc;
    doc["params"] = params_json(k);

    if (k.p1 > 0.0 && k.p2 > 0.0 && k.q11 > 0.0 && k.q22 > 0.0) {
        const auto eq = solve_within_brand_equilibrium(k);
        doc["within_brand"] = {{"n1", eq.n1},
                               {"n2", eq.n2},
                               {"residual", within_brand_residual(eq.n1, k.p1, k.p2, k.q11, k.q22)},
                               {"applies_to_cross_terms", k.q12 == 0.0 && k.q21 == 0.0}};
        out << "within-brand equilibrium n1=" << format_double(eq.n1) << " n2=" << format_double(eq.n2) << '\n';
    } else {
        doc["within_brand"] = nullptr;
    }

    const auto pa = analyze_perturbation(k, e.n1_star, e.dn1, e.dn2);
    const MarketState start{0.0, e.n1_star + e.dn1, 1.0 - e.n1_star + e.dn2};
    const auto sat = integrate_to_saturation(k, start, e.t_max);
    doc["perturbation"] = {{"n1_star", pa.n1_star},
                           {"dn1_0", e.dn1},
                           {"dn2_0", e.dn2},
                           {"a", pa.a},
                           {"b", pa.b},
                           {"c1", pa.c1},
                           {"c2", pa.c2},
                           {"predicted_final", {{"n1", pa.n1_star + pa.c1}, {"n2", 1.0 - pa.n1_star - pa.c1}}},
                           {"integrated_final", {{"n1", sat.final_state.n1}, {"n2", sat.final_state.n2}}},
                           {"saturated", sat.saturated}};
    out << "perturbation a=" << format_double(pa.a) << " b=" << format_double(pa.b)
        << " c1=" << format_double(pa.c1) << " c2=" << format_double(pa.c2) << '\n';

    ArtifactWriter w(cfg.output_dir);
    w.write_json("equilibrium.json", doc);
    if (!sat.saturated)
        w.outcome.exit_code = 2;
    return w.outcome;
}

namespace detail {

inline void write_fig1(ArtifactWriter& w, const ScenarioConfig& cfg, std::ostream& out)
{
    const auto& s = cfg.sweep;
    auto one = [&](SweepKind kind, BassParams base, std::vector<double> deltas, const std::string& name) {
        if (s.base)
            base = *s.base;
        if (s.deltas && s.kind != "both")
            deltas = *s.deltas;
        const auto rows = sweep_fig1(base, deltas, kind);
        w.write(name, [&](std::ostream& os) { write_sweep_csv(os, rows); });
        out << name << ": " << rows.size() << " rows, last n2=" << format_double(rows.back().n2) << '\n';
    };
    if (s.kind == "imitation" || s.kind == "both")
        one(SweepKind::Imitation, fig1_imitation_base(), fig1_imitation_deltas(), "fig1_imitation.csv");
    if (s.kind == "innovation" || s.kind == "both")
        one(SweepKind::Innovation, fig1_innovation_base(), fig1_innovation_deltas(), "fig1_innovation.csv");
}

inline std::vector<CaseTrajectory> write_fig2(ArtifactWriter& w, const ScenarioConfig& cfg, std::ostream& out)
{
    const auto& s = cfg.sweep;
    const BassParams params = s.base ? *s.base : fig2_params();
    const auto cases = sweep_fig2(params, s.cases, s.t_end, {s.dt, s.stride});
    w.write("fig2_cases.csv", [&](std::ostream& os) { write_cases_csv(os, cases); });
    for (const auto& c : cases)
        out << "case " << c.cross.label << ": final n1=" << format_double(c.trajectory.back().n1)
            << " n2=" << format_double(c.trajectory.back().n2) << '\n';
    return cases;
}

inline AbmConfig monopoly_config(AbmConfig c, int brand)
{
    constexpr double off = -std::numeric_limits<double>::infinity();
    if (brand == 1) {
        c.gamma2 = 0;
        c.u[1] = off;
    } else {
        c.gamma1 = 0;
        c.u[0] = off;
    }
    return c;
}

struct MonopolyFits {
    AbmTrajectory brand1;
    AbmTrajectory brand2;
    SingleBrandFit fit1;
    SingleBrandFit fit2;
};

inline MonopolyFits monopoly_fits(const ScenarioConfig& cfg)
{
    MonopolyFits m;
    m.brand1 = ensemble(monopoly_config(cfg.abm.config, 1), cfg.fit.replicates);
    m.brand2 = ensemble(monopoly_config(cfg.abm.config, 2), cfg.fit.replicates);
    const CurvePair c1 = curves_from(m.brand1), c2 = curves_from(m.brand2);
    const SingleBrandParams start{0.01, 0.4};
    m.fit1 = fit_single_brand(c1.t, c1.n1, start);
    m.fit2 = fit_single_brand(c2.t, c2.n2, start);
    return m;
}

inline BassParams base_from(const MonopolyFits& m)
{
    return {m.fit1.params.p, m.fit2.params.p, m.fit1.params.q, m.fit2.params.q, 0.0, 0.0, 1.0};
}

inline void write_fig3(ArtifactWriter& w, const MonopolyFits& m)
{
    auto curve = [](std::ostream& os, const AbmTrajectory& abm, int brand, const SingleBrandParams& fit) {
        os << "t,abm,abm_sd,bass\n";
        for (std::size_t i = 0; i < abm.samples.size(); ++i) {
            const auto& s = abm.samples[i];
            os << format_double(s.t) << ',' << format_double(brand == 1 ? s.n1 : s.n2) << ','
               << format_double(brand == 1 ? abm.n1_sd[i] : abm.n2_sd[i]) << ','
               << format_double(closed_form_single(fit, s.t)) << '\n';
        }
    };
    w.write("fig3_brand1.csv", [&](std::ostream& os) { curve(os, m.brand1, 1, m.fit1.params); });
    w.write("fig3_brand2.csv", [&](std::ostream& os) { curve(os, m.brand2, 2, m.fit2.params); });
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    doc.push_back(single_fit_json("brand1", m.fit1));
    doc.push_back(single_fit_json("brand2", m.fit2));
    w.write_json("fig3_fits.json", doc);
}

inline bool write_experiments(ArtifactWriter& w, const CurvePair& target, const std::vector<Experiment>& exps,
                              const std::string& prefix)
{
    bool all_converged = true;
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& e : exps) {
        doc.push_back(fit_report_json(e.id, e.result));
        all_converged = all_converged && e.result.converged;
    }
    w.write_json(prefix + "_fits.json", doc);
    w.write(prefix + "_curves.csv", [&](std::ostream& os) {
        os << "t,abm_n1,abm_n2";
        for (const auto& e : exps)
            os << ",exp" << e.id << "_n1,exp" << e.id << "_n2";
        os << '\n';
        std::vector<CurvePair> models;
        for (const auto& e : exps)
            models.push_back(simulate_on_grid(e.result.params, target.t, true));
        for (std::size_t i = 0; i < target.size(); ++i) {
            os << format_double(target.t[i]) << ',' << format_double(target.n1[i]) << ','
               << format_double(target.n2[i]);
            for (const auto& m : models)
                os << ',' << format_double(m.n1[i]) << ',' << format_double(m.n2[i]);
            os << '\n';
        }
    });
    return all_converged;
}

inline CurvePair read_curves_csv(const fs::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw Error(ErrorKind::Io, "cannot open target " + path.string());
    std::string line;
    if (!std::getline(is, line) || line.rfind("t,n1,n2", 0) != 0)
        throw Error(ErrorKind::ConfigParse, path.string() + ": header must start with t,n1,n2");
    CurvePair c;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty())
            continue;
        std::istringstream ls(line);
        std::string cell;
        double v[3];
        for (double& x : v) {
            if (!std::getline(ls, cell, ','))
                throw Error(ErrorKind::ConfigParse, path.string() + ": row " + std::to_string(row) + " is short");
            try {
                x = std::stod(cell);
            } catch (const std::exception&) {
                throw Error(ErrorKind::ConfigParse, path.string() + ": bad number on row " + std::to_string(row));
            }
        }
        c.t.push_back(v[0]);
        c.n1.push_back(v[1]);
        c.n2.push_back(v[2]);
    }
    return c;
}

inline ExperimentOptions experiment_options(const ScenarioConfig& cfg)
{
    ExperimentOptions o;
    o.optimizer.max_evaluations = cfg.fit.max_evaluations;
    return o;
}

inline nlohmann::ordered_json table_eq_json()
{
    const BassParams k{0.0109, 0.0239, 0.3536, 0.3513, 0.0, 0.0, 1.0};
    const auto a = integrate_to_saturation(k, MarketState{}, 1e4);
    const EquilibriumPoint target{0.40125, 0.59875};
    const double c = match_final_proportions(k, target);
    BassParams kb = k;
    kb.q12 = kb.q21 = c;
    const auto b = integrate_to_saturation(kb, MarketState{}, 1e4);
    nlohmann::ordered_json doc;
    doc["case_a"] = {{"params", params_json(k)},
                     {"n1", a.final_state.n1},
                     {"n2", a.final_state.n2},
                     {"saturated", a.saturated}};
    doc["case_b"] = {{"target", {{"n1", target.n1}, {"n2", target.n2}}},
                     {"q12_q21", c},
                     {"n1", b.final_state.n1},
                     {"n2", b.final_state.n2},
                     {"saturated", b.saturated}};
    return doc;
}

inline constexpr std::string_view kFig1Script = R"(set datafile separator ","
set key autotitle columnhead
set multiplot layout 1,2
set xlabel "delta q"
set ylabel "share at saturation"
plot "fig1_imitation.csv" using 1:2 with linespoints title "n1", "" using 1:3 with linespoints title "n2"
set xlabel "delta p"
plot "fig1_innovation.csv" using 1:2 with linespoints title "n1", "" using 1:3 with linespoints title "n2"
unset multiplot
)";

inline constexpr std::string_view kFig2Script = R"(set datafile separator ","
set xlabel "t"
set ylabel "share"
plot for [c in "A B C D"] "fig2_cases.csv" using 2:(strcol(1) eq c ? $3 : 1/0) with lines dashtype 2 title c." n1", \
     for [c in "A B C D"] "fig2_cases.csv" using 2:(strcol(1) eq c ? $4 : 1/0) with lines title c." n2"
)";

inline constexpr std::string_view kFig3Script = R"(set datafile separator ","
set key autotitle columnhead
set multiplot layout 1,2
set xlabel "t"
set ylabel "share"
plot "fig3_brand1.csv" using 1:2 with points title "ABM", "" using 1:4 with lines title "Bass fit"
plot "fig3_brand2.csv" using 1:2 with points title "ABM", "" using 1:4 with lines title "Bass fit"
unset multiplot
)";

inline constexpr std::string_view kFig4Script = R"(set datafile separator ","
set multiplot layout 2,2
set xlabel "t"
set ylabel "share"
do for [e=1:4] {
  set title sprintf("experiment %d", e)
  plot "fig4_curves.csv" using 1:2 with points title "ABM n1", "" using 1:3 with points title "ABM n2", \
       "" using 1:(column(2*e+2)) with lines title "Bass n1", "" using 1:(column(2*e+3)) with lines title "Bass n2"
}
unset multiplot
)";

inline void write_script(ArtifactWriter& w, const std::string& name, std::string_view body)
{
    w.write(name, [&](std::ostream& os) { os << body; });
}

} // namespace detail

inline CommandOutcome cmd_sweep(const ScenarioConfig& cfg, std::ostream& out)
{
    require_mode(cfg, {Mode::SweepFig1, Mode::SweepFig2}, "sweep");
    ArtifactWriter w(cfg.output_dir);
    if (cfg.mode == Mode::SweepFig2)
        detail::write_fig2(w, cfg, out);
    else
        detail::write_fig1(w, cfg, out);
    return w.outcome;
}

/// Runs the four comparison experiments. The target is the CSV named in
/// [fit] or, by default, an ABM ensemble; the monopoly coefficients come
/// from [fit] or from single-brand ABM fits.
inline CommandOutcome cmd_fit(const ScenarioConfig& cfg, std::ostream& out)
{
    require_mode(cfg, {Mode::Fit}, "fit");
    ArtifactWriter w(cfg.output_dir);

    CurvePair target;
    if (cfg.fit.target) {
        target = detail::read_curves_csv(*cfg.fit.target);
    } else {
        const AbmTrajectory abm = ensemble(cfg.abm.config, cfg.fit.replicates);
        w.write("fit_target.csv", [&](std::ostream& os) { write_csv(os, abm); });
        target = curves_from(abm);
    }

    BassParams base;
    bool converged = true;
    if (cfg.fit.base) {
        base = *cfg.fit.base;
    } else {
        const auto mono = detail::monopoly_fits(cfg);
        detail::write_fig3(w, mono);
        base = detail::base_from(mono);
        converged = mono.fit1.converged && mono.fit2.converged;
    }

    const auto exps = run_experiments(target, base, detail::experiment_options(cfg));
    converged = detail::write_experiments(w, target, exps, "fit") && converged;
    for (const auto& e : exps)
        out << "experiment " << e.id << ": area_diff=" << format_double(e.result.area_diff_pct)
            << "% sse=" << format_double(e.result.sse) << '\n';
    if (!converged)
        w.outcome.exit_code = 2;
    return w.outcome;
}

inline constexpr std::array<std::string_view, 6> kFigureIds = {"fig1", "fig2", "fig3", "fig4", "table-eq", "all"};

inline CommandOutcome cmd_reproduce(const ScenarioConfig& cfg, std::string_view figure, std::ostream& out)
{
    require_mode(cfg, {Mode::Reproduce}, "reproduce");
    if (std::find(kFigureIds.begin(), kFigureIds.end(), figure) == kFigureIds.end())
        throw Error(ErrorKind::UnknownFigure, "'" + std::string(figure) +
                                                  "' is not one of fig1, fig2, fig3, fig4, table-eq, all");
    const bool all = figure == "all";
    ArtifactWriter w(cfg.output_dir);
    bool converged = true;

    if (all || figure == "fig1") {
        ScenarioConfig c = cfg;
        c.sweep.kind = "both";
        detail::write_fig1(w, c, out);
        detail::write_script(w, "fig1.gp", detail::kFig1Script);
    }
    if (all || figure == "fig2") {
        detail::write_fig2(w, cfg, out);
        detail::write_script(w, "fig2.gp", detail::kFig2Script);
    }
    if (all || figure == "table-eq") {
        const auto doc = detail::table_eq_json();
        w.write_json("table_eq.json", doc);
        out << "tied cross coefficient q12=q21=" << format_double(doc["case_b"]["q12_q21"].get<double>()) << '\n';
    }
    if (all || figure == "fig3" || figure == "fig4") {
        const auto mono = detail::monopoly_fits(cfg);
        converged = converged && mono.fit1.converged && mono.fit2.converged;
        if (all || figure == "fig3") {
            detail::write_fig3(w, mono);
            detail::write_script(w, "fig3.gp", detail::kFig3Script);
            out << "monopoly fits: brand1 p=" << format_double(mono.fit1.params.p)
                << " q=" << format_double(mono.fit1.params.q) << ", brand2 p=" << format_double(mono.fit2.params.p)
                << " q=" << format_double(mono.fit2.params.q) << '\n';
        }
        if (all || figure == "fig4") {
            const AbmTrajectory abm = ensemble(cfg.abm.config, cfg.fit.replicates);
            w.write("fig4_abm.csv", [&](std::ostream& os) { write_csv(os, abm); });
            const CurvePair target = curves_from(abm);
            const auto exps = run_experiments(target, detail::base_from(mono), detail::experiment_options(cfg));
            converged = detail::write_experiments(w, target, exps, "fig4") && converged;
            detail::write_script(w, "fig4.gp", detail::kFig4Script);
            for (const auto& e : exps)
                out << "experiment " << e.id << ": area_diff=" << format_double(e.result.area_diff_pct) << "%\n";
        }
    }
    if (!converged)
        w.outcome.exit_code = 2;
    return w.outcome;
}

} // namespace duopoly::cli
