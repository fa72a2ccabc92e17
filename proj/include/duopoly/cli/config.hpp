#pragma once

// Scenario files. A scenario is a TOML document with an optional top-level
// `mode`, `output_dir` and `rng_seed`, plus one table per model:
//
//   [bass]         p1 p2 q11 q22 q12 q21 m, n1_0 n2_0, t_end dt stride
//   [equilibrium]  n1_star dn1 dn2 t_max (coefficients come from [bass])
//   [sweep]        kind = "imitation" | "innovation" | "both", deltas,
//                  cases = [{label, q12, q21}, ...], t_end dt stride, and
//                  optionally p1 p2 q11 q22 to replace the reference base
//   [abm]          n_agents k p_rewire u | delta_u, gamma1 | gamma1_fraction,
//                  gamma2 | gamma2_fraction, seeding_dispersion, max_ticks,
//                  replicates
//   [fit]          target (CSV path), replicates, p1 p2 q11 q22 (monopoly
//                  coefficients), max_evaluations
//
// Every key is optional; defaults reproduce the reference scenarios.
// Unknown keys are rejected so that typos do not silently fall back.

#include "duopoly/abm.hpp"
#include "duopoly/bass.hpp"
#include "duopoly/equilibrium.hpp"
#include "duopoly/error.hpp"

#include <toml++/toml.hpp>

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace duopoly::cli {

enum class Mode { Bass, Abm, Equilibrium, SweepFig1, SweepFig2, Fit, Reproduce };

constexpr std::string_view to_string(Mode m) noexcept
{
    switch (m) {
    case Mode::Bass: return "bass";
    case Mode::Abm: return "abm";
    case Mode::Equilibrium: return "equilibrium";
    case Mode::SweepFig1: return "sweep-fig1";
    case Mode::SweepFig2: return "sweep-fig2";
    case Mode::Fit: return "fit";
    case Mode::Reproduce: return "reproduce";
    }
    return "";
}

inline std::optional<Mode> parse_mode(std::string_view s)
{
    for (Mode m : {Mode::Bass, Mode::Abm, Mode::Equilibrium, Mode::SweepFig1, Mode::SweepFig2, Mode::Fit,
                   Mode::Reproduce})
        if (to_string(m) == s)
            return m;
    return std::nullopt;
}

struct BassSection {
    BassParams params = fig2_params();
    MarketState init{};
    double t_end = kFig2Horizon;
    double dt = kDefaultDt;
    std::size_t stride = 10;
};

struct EquilibriumSection {
    double n1_star = 0.4;
    double dn1 = -5e-4;
    double dn2 = -5e-4;
    double t_max = 1e4;
};

struct SweepSection {
    std::string kind = "both";
    std::optional<BassParams> base;
    std::optional<std::vector<double>> deltas;
    std::vector<CrossCase> cases = fig2_cases();
    double t_end = kFig2Horizon;
    double dt = kDefaultDt;
    std::size_t stride = 10;
};

struct AbmSection {
    AbmConfig config{};
    std::size_t replicates = 1;
};

struct FitSection {
    std::optional<std::filesystem::path> target;
    std::size_t replicates = 20;
    /// Monopoly coefficients; when absent they are fitted to single-brand
    /// ABM runs.
    std::optional<BassParams> base;
    std::size_t max_evaluations = 5000;
};

struct ScenarioConfig {
    std::optional<Mode> mode;
    std::filesystem::path output_dir = "out";
    std::uint64_t rng_seed = 1;
    BassSection bass;
    EquilibriumSection equilibrium;
    SweepSection sweep;
    AbmSection abm;
    FitSection fit;
};

namespace detail {

inline void reject_unknown(const toml::table& t, std::string_view section, std::initializer_list<std::string_view> known)
{
    for (const auto& [key, node] : t) {
        bool ok = false;
        for (auto k : known)
            ok = ok || key.str() == k;
        if (!ok)
            throw Error(ErrorKind::ConfigParse,
                        "unknown key '" + std::string(key.str()) + "' in " + std::string(section));
    }
}

inline std::string field(std::string_view section, std::string_view key)
{
    return section.empty() ? std::string(key) : std::string(section) + "." + std::string(key);
}

inline void read(const toml::table& t, std::string_view section, std::string_view key, double& out)
{
    const auto* node = t.get(key);
    if (!node)
        return;
    const auto v = node->value<double>();
    if (!v)
        throw Error(ErrorKind::ConfigParse, field(section, key) + " must be a number");
    out = *v;
}

inline void read(const toml::table& t, std::string_view section, std::string_view key, std::uint64_t& out)
{
    const auto* node = t.get(key);
    if (!node)
        return;
    const auto v = node->value<std::int64_t>();
    if (!v || *v < 0)
        throw Error(ErrorKind::ConfigParse, field(section, key) + " must be a non-negative integer");
    out = static_cast<std::size_t>(*v);
}

inline void read(const toml::table& t, std::string_view section, std::string_view key, std::string& out)
{
    const auto* node = t.get(key);
    if (!node)
        return;
    const auto v = node->value<std::string>();
    if (!v)
        throw Error(ErrorKind::ConfigParse, field(section, key) + " must be a string");
    out = *v;
}

inline std::vector<double> read_numbers(const toml::node& node, const std::string& name)
{
    const auto* arr = node.as_array();
    if (!arr)
        throw Error(ErrorKind::ConfigParse, name + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& el : *arr) {
        const auto v = el.value<double>();
        if (!v)
            throw Error(ErrorKind::ConfigParse, name + " must be an array of numbers");
        out.push_back(*v);
    }
    return out;
}

inline const toml::table* section(const toml::table& root, std::string_view name)
{
    const auto* node = root.get(name);
    if (!node)
        return nullptr;
    const auto* t = node->as_table();
    if (!t)
        throw Error(ErrorKind::ConfigParse, std::string(name) + " must be a table");
    return t;
}

inline void read_coefficients(const toml::table& t, std::string_view name, BassParams& k)
{
    for (auto c : kAllCoefficients)
        read(t, name, name_of(c), k[c]);
    read(t, name, "m", k.m);
}

inline void read_gamma(const toml::table& t, std::string_view key, std::size_t n_agents, std::size_t& out)
{
    const std::string frac_key = std::string(key) + "_fraction";
    if (t.get(key) && t.get(frac_key))
        throw Error(ErrorKind::ConfigParse,
                    "abm." + std::string(key) + " and abm." + frac_key + " are mutually exclusive");
    read(t, "abm", key, out);
    if (t.get(frac_key)) {
        double f = 0.0;
        read(t, "abm", frac_key, f);
        out = seeding_count(f, n_agents);
    }
}

} // namespace detail

inline ScenarioConfig parse_config(const toml::table& root)
{
    using detail::read;
    ScenarioConfig cfg;
    detail::reject_unknown(root, "top level",
                           {"mode", "output_dir", "rng_seed", "bass", "equilibrium", "sweep", "abm", "fit"});
    if (root.get("mode")) {
        std::string m;
        read(root, "", "mode", m);
        cfg.mode = parse_mode(m);
        if (!cfg.mode)
            throw Error(ErrorKind::ConfigParse, "mode '" + m + "' is not one of bass, abm, equilibrium, "
                                                              "sweep-fig1, sweep-fig2, fit, reproduce");
    }
    std::string out_dir = cfg.output_dir.string();
    read(root, "", "output_dir", out_dir);
    cfg.output_dir = out_dir;
    read(root, "", "rng_seed", cfg.rng_seed);

    if (const auto* t = detail::section(root, "bass")) {
        detail::reject_unknown(*t, "[bass]",
                               {"p1", "p2", "q11", "q22", "q12", "q21", "m", "n1_0", "n2_0", "t_end", "dt", "stride"});
        detail::read_coefficients(*t, "bass", cfg.bass.params);
        read(*t, "bass", "n1_0", cfg.bass.init.n1);
        read(*t, "bass", "n2_0", cfg.bass.init.n2);
        read(*t, "bass", "t_end", cfg.bass.t_end);
        read(*t, "bass", "dt", cfg.bass.dt);
        read(*t, "bass", "stride", cfg.bass.stride);
    }
    if (const auto* t = detail::section(root, "equilibrium")) {
        detail::reject_unknown(*t, "[equilibrium]", {"n1_star", "dn1", "dn2", "t_max"});
        read(*t, "equilibrium", "n1_star", cfg.equilibrium.n1_star);
        read(*t, "equilibrium", "dn1", cfg.equilibrium.dn1);
        read(*t, "equilibrium", "dn2", cfg.equilibrium.dn2);
        read(*t, "equilibrium", "t_max", cfg.equilibrium.t_max);
    }
    if (const auto* t = detail::section(root, "sweep")) {
        detail::reject_unknown(*t, "[sweep]",
                               {"kind", "deltas", "cases", "t_end", "dt", "stride", "p1", "p2", "q11", "q22"});
        if (t->get("p1") || t->get("p2") || t->get("q11") || t->get("q22")) {
            BassParams k;
            for (auto c : {Coefficient::p1, Coefficient::p2, Coefficient::q11, Coefficient::q22}) {
                if (!t->get(name_of(c)))
                    throw Error(ErrorKind::ConfigParse, "sweep." + std::string(name_of(c)) +
                                                            " is required when a sweep base is given");
                read(*t, "sweep", name_of(c), k[c]);
            }
            cfg.sweep.base = k;
        }
        read(*t, "sweep", "kind", cfg.sweep.kind);
        if (cfg.sweep.kind != "imitation" && cfg.sweep.kind != "innovation" && cfg.sweep.kind != "both")
            throw Error(ErrorKind::ConfigParse, "sweep.kind must be imitation, innovation or both");
        if (const auto* d = t->get("deltas"))
            cfg.sweep.deltas = detail::read_numbers(*d, "sweep.deltas");
        if (const auto* c = t->get("cases")) {
            const auto* arr = c->as_array();
            if (!arr)
                throw Error(ErrorKind::ConfigParse, "sweep.cases must be an array of tables");
            cfg.sweep.cases.clear();
            for (const auto& el : *arr) {
                const auto* ct = el.as_table();
                if (!ct)
                    throw Error(ErrorKind::ConfigParse, "sweep.cases must be an array of tables");
                detail::reject_unknown(*ct, "sweep.cases", {"label", "q12", "q21"});
                CrossCase cc;
                read(*ct, "sweep.cases", "label", cc.label);
                read(*ct, "sweep.cases", "q12", cc.q12);
                read(*ct, "sweep.cases", "q21", cc.q21);
                cfg.sweep.cases.push_back(cc);
            }
        }
        read(*t, "sweep", "t_end", cfg.sweep.t_end);
        read(*t, "sweep", "dt", cfg.sweep.dt);
        read(*t, "sweep", "stride", cfg.sweep.stride);
    }
    if (const auto* t = detail::section(root, "abm")) {
        detail::reject_unknown(*t, "[abm]",
                               {"n_agents", "k", "p_rewire", "u", "delta_u", "gamma1", "gamma1_fraction", "gamma2",
                                "gamma2_fraction", "seeding_dispersion", "max_ticks", "replicates"});
        auto& a = cfg.abm.config;
        read(*t, "abm", "n_agents", a.n_agents);
        read(*t, "abm", "k", a.k);
        read(*t, "abm", "p_rewire", a.p_rewire);
        if (t->get("u") && t->get("delta_u"))
            throw Error(ErrorKind::ConfigParse, "abm.u and abm.delta_u are mutually exclusive");
        if (const auto* u = t->get("u")) {
            const auto v = detail::read_numbers(*u, "abm.u");
            if (v.size() != 3)
                throw Error(ErrorKind::ConfigParse, "abm.u must hold three utilities (u1, u2, u3)");
            a.u = {v[0], v[1], v[2]};
        }
        if (t->get("delta_u")) {
            double du = 0.0;
            read(*t, "abm", "delta_u", du);
            a.u = {du, du, 0.0};
        }
        detail::read_gamma(*t, "gamma1", a.n_agents, a.gamma1);
        detail::read_gamma(*t, "gamma2", a.n_agents, a.gamma2);
        std::string dispersion = "uniform";
        read(*t, "abm", "seeding_dispersion", dispersion);
        if (dispersion != "uniform")
            throw Error(ErrorKind::ConfigParse, "abm.seeding_dispersion supports only \"uniform\"");
        read(*t, "abm", "max_ticks", a.max_ticks);
        read(*t, "abm", "replicates", cfg.abm.replicates);
    }
    if (const auto* t = detail::section(root, "fit")) {
        detail::reject_unknown(*t, "[fit]", {"target", "replicates", "p1", "p2", "q11", "q22", "max_evaluations"});
        if (t->get("target")) {
            std::string path;
            read(*t, "fit", "target", path);
            cfg.fit.target = path;
        }
        read(*t, "fit", "replicates", cfg.fit.replicates);
        read(*t, "fit", "max_evaluations", cfg.fit.max_evaluations);
        const bool any = t->get("p1") || t->get("p2") || t->get("q11") || t->get("q22");
        if (any) {
            for (auto key : {"p1", "p2", "q11", "q22"})
                if (!t->get(key))
                    throw Error(ErrorKind::ConfigParse,
                                std::string("fit.") + key + " is required when monopoly coefficients are given");
            BassParams k;
            read(*t, "fit", "p1", k.p1);
            read(*t, "fit", "p2", k.p2);
            read(*t, "fit", "q11", k.q11);
            read(*t, "fit", "q22", k.q22);
            cfg.fit.base = k;
        }
    }
    cfg.abm.config.rng_seed = cfg.rng_seed;
    return cfg;
}

inline ScenarioConfig parse_config_string(std::string_view text, std::string_view source = "<string>")
{
    try {
        return parse_config(toml::parse(text, source));
    } catch (const toml::parse_error& e) {
        throw Error(ErrorKind::ConfigParse, std::string(e.description()) + " (" + std::string(source) + ")");
    }
}

inline ScenarioConfig load_config(const std::filesystem::path& path)
{
    try {
        return parse_config(toml::parse_file(path.string()));
    } catch (const toml::parse_error& e) {
        throw Error(ErrorKind::ConfigParse, std::string(e.description()) + " (" + path.string() + ")");
    }
}

} // namespace duopoly::cli
