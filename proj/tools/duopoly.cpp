// duopoly: command-line front end for the two-brand diffusion models.

#include "duopoly/cli/commands.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

namespace {

using namespace duopoly;
using namespace duopoly::cli;

void configure_logging()
{
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("DUOPOLY_LOG"))
        spdlog::set_level(spdlog::level::from_str(env));
}

ScenarioConfig load(const std::string& path, const Overrides& o)
{
    ScenarioConfig cfg = path.empty() ? ScenarioConfig{} : load_config(path);
    apply_overrides(cfg, o);
    spdlog::info("scenario {} seed={} out={}", path.empty() ? "<defaults>" : path, cfg.rng_seed,
                 cfg.output_dir.string());
    return cfg;
}

} // namespace

int main(int argc, char** argv)
{
    configure_logging();

    CLI::App app{"Two-brand diffusion: coupled Bass model, agent-based model and fitting"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides overrides;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::size_t replicates = 0;

    auto common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "scenario TOML file")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override rng_seed");
        sub->add_option("-o,--out", out_dir, "override output_dir");
        sub->add_option("-r,--replicates", replicates, "override ensemble size")->check(CLI::PositiveNumber);
    };

    auto* bass = app.add_subcommand("simulate-bass", "integrate the coupled Bass model");
    common(bass);
    auto* abm = app.add_subcommand("simulate-abm", "run the agent-based model");
    common(abm);
    auto* eq = app.add_subcommand("equilibrium", "equilibrium and perturbation analysis");
    common(eq);
    auto* sweep = app.add_subcommand("sweep", "saturation-share sweeps");
    common(sweep);
    std::string sweep_kind;
    sweep->add_option("figure", sweep_kind, "fig1 (coefficient sweeps) or fig2 (cross-term cases)")
        ->check(CLI::IsMember({"fig1", "fig2"}));
    auto* fit_cmd = app.add_subcommand("fit", "fit the coupled Bass model to an ABM ensemble");
    common(fit_cmd);
    auto* repro = app.add_subcommand("reproduce", "regenerate a figure or table");
    common(repro);
    std::string figure;
    repro->add_option("figure", figure, "fig1, fig2, fig3, fig4, table-eq or all")->required();

    CLI11_PARSE(app, argc, argv);

    for (auto* sub : app.get_subcommands()) {
        if (sub->count("--seed"))
            overrides.seed = seed;
        if (sub->count("--out"))
            overrides.out = out_dir;
        if (sub->count("--replicates"))
            overrides.replicates = replicates;
    }

    try {
        ScenarioConfig cfg = load(config_path, overrides);
        CommandOutcome outcome;
        if (bass->parsed()) {
            outcome = cmd_simulate_bass(cfg, std::cout);
        } else if (abm->parsed()) {
            outcome = cmd_simulate_abm(cfg, std::cout);
        } else if (eq->parsed()) {
            outcome = cmd_equilibrium(cfg, std::cout);
        } else if (sweep->parsed()) {
            if (!sweep_kind.empty()) {
                const Mode wanted = sweep_kind == "fig2" ? Mode::SweepFig2 : Mode::SweepFig1;
                if (cfg.mode && *cfg.mode != wanted)
                    throw Error(ErrorKind::ConfigParse, "scenario mode '" + std::string(to_string(*cfg.mode)) +
                                                            "' conflicts with sweep " + sweep_kind);
                cfg.mode = wanted;
            }
            outcome = cmd_sweep(cfg, std::cout);
        } else if (fit_cmd->parsed()) {
            outcome = cmd_fit(cfg, std::cout);
        } else {
            outcome = cmd_reproduce(cfg, figure, std::cout);
        }
        for (const auto& path : outcome.artifacts)
            spdlog::info("wrote {}", path.string());
        if (outcome.exit_code != 0)
            spdlog::warn("a numerical routine did not converge");
        return outcome.exit_code;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
