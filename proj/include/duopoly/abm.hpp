#pragma once

// Agent-based two-brand adoption on a small-world network.
//
// Each agent is a brand-1 adopter, a brand-2 adopter, or a non-adopter.
// Adoption is absorbing. Every tick, first gamma1 / gamma2 non-adopters are
// converted by external influence (seeding), then every remaining
// non-adopter applies the zero-temperature three-option rule to its
// neighborhood as it stood at the start of the tick (synchronous update):
// an option is taken for sure when its effective utility
//
//   Delta_kj = nu_k - nu_j + u_k - u_j
//
// beats both alternatives, and ties at the top are split uniformly.

#include "duopoly/error.hpp"
#include "duopoly/network.hpp"
#include "duopoly/rng.hpp"
#include "duopoly/bass.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <future>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace duopoly {

enum class AgentState : std::uint8_t { Brand1 = 1, Brand2 = 2, NonAdopter = 3 };

constexpr int state_index(AgentState s) noexcept { return static_cast<int>(s); }

/// Per-state quantity indexed by state index 1..3 (stored at [index - 1]).
using StateTriple = std::array<double, 3>;

constexpr double& at(StateTriple& v, int state) { return v[static_cast<std::size_t>(state - 1)]; }
constexpr double at(const StateTriple& v, int state) { return v[static_cast<std::size_t>(state - 1)]; }

/// |Delta| at or below this counts as a tie.
inline constexpr double kTieTolerance = 1e-12;

/// Fractions of the agent's neighbors in each state.
inline StateTriple local_shares(AgentIndex agent, const Network& net, std::span<const AgentState> states)
{
    const auto& nb = net.adjacency.at(agent);
    if (nb.empty())
        throw Error(ErrorKind::IsolatedAgent, "agent " + std::to_string(agent) + " has no neighbors");
    std::array<std::size_t, 3> counts{};
    for (AgentIndex j : nb)
        ++counts[static_cast<std::size_t>(state_index(states[j]) - 1)];
    const auto degree = static_cast<double>(nb.size());
    return {static_cast<double>(counts[0]) / degree, static_cast<double>(counts[1]) / degree,
            static_cast<double>(counts[2]) / degree};
}

/// Delta_kj. A utility of -infinity removes an option from the choice set;
/// equal utilities (including two removed options) contribute nothing.
inline double effective_delta(int k_state, int j_state, const StateTriple& nu, const StateTriple& u)
{
    if (k_state == j_state)
        return 0.0;
    const double uk = at(u, k_state), uj = at(u, j_state);
    const double du = uk == uj ? 0.0 : uk - uj;
    return at(nu, k_state) - at(nu, j_state) + du;
}

/// Zero-temperature probability of ending in `state`: 1 if it strictly beats
/// both alternatives, 1/2 if it ties one and beats the other, 1/3 if it ties
/// both, 0 if either alternative beats it.
inline double choice_probability(int state, const StateTriple& nu, const StateTriple& u)
{
    int ties = 0;
    for (int other = 1; other <= 3; ++other) {
        if (other == state)
            continue;
        const double d = effective_delta(state, other, nu, u);
        if (d < -kTieTolerance)
            return 0.0;
        if (d <= kTieTolerance)
            ++ties;
    }
    return 1.0 / static_cast<double>(ties + 1);
}

inline StateTriple state_probabilities(const StateTriple& nu, const StateTriple& u)
{
    return {choice_probability(1, nu, u), choice_probability(2, nu, u), choice_probability(3, nu, u)};
}

enum class SeedingDispersion { Uniform };

struct AbmConfig {
    std::size_t n_agents = 10'000;
    std::size_t k = 8;
    double p_rewire = 0.0;
    /// (u1, u2, u3). Both brands sit 0.6 above non-adoption by default.
    StateTriple u = {0.6, 0.6, 0.0};
    std::size_t gamma1 = 109; ///< brand-1 seeds per tick
    std::size_t gamma2 = 239; ///< brand-2 seeds per tick
    SeedingDispersion seeding_dispersion = SeedingDispersion::Uniform;
    std::size_t max_ticks = 400;
    std::uint64_t rng_seed = 1;

    void validate() const
    {
        if (k < 2 || k % 2 != 0)
            throw Error(ErrorKind::InvalidConfig, "k must be even and >= 2");
        if (!(n_agents > k + 1))
            throw Error(ErrorKind::InvalidConfig, "n_agents must exceed k + 1");
        if (!(p_rewire >= 0.0 && p_rewire <= 1.0))
            throw Error(ErrorKind::InvalidConfig, "p_rewire must lie in [0, 1]");
        for (double v : u)
            if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
                throw Error(ErrorKind::InvalidConfig, "utilities must be finite or -inf");
    }
};

/// Seeds per tick for a per-tick fraction of the population.
inline std::size_t seeding_count(double fraction, std::size_t n_agents)
{
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw Error(ErrorKind::InvalidConfig, "seeding fraction must lie in [0, 1]");
    return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n_agents)));
}

struct AbmSample {
    double t = 0.0;
    double n1 = 0.0;
    double n2 = 0.0;
    bool operator==(const AbmSample&) const = default;
};

/// One sample per tick starting at t = 0. The sd columns are filled only by
/// ensemble().
struct AbmTrajectory {
    std::vector<AbmSample> samples;
    std::vector<double> n1_sd;
    std::vector<double> n2_sd;

    bool has_sd() const noexcept { return !n1_sd.empty(); }
};

namespace detail {

inline void seed_adopters(std::vector<AgentState>& states, const AbmConfig& cfg, Rng& rng)
{
    if (cfg.gamma1 + cfg.gamma2 == 0)
        return;
    std::vector<AgentIndex> pool;
    for (AgentIndex i = 0; i < states.size(); ++i)
        if (states[i] == AgentState::NonAdopter)
            pool.push_back(i);

    std::size_t take1 = cfg.gamma1, take2 = cfg.gamma2;
    const std::size_t wanted = take1 + take2;
    if (wanted > pool.size()) {
        // Not enough non-adopters left: split what remains pro rata, the odd
        // agent (if any) going to a brand drawn with the same odds.
        const std::size_t left = pool.size();
        take1 = left * cfg.gamma1 / wanted;
        take2 = left * cfg.gamma2 / wanted;
        if (take1 + take2 < left) {
            if (uniform01(rng) * static_cast<double>(wanted) < static_cast<double>(cfg.gamma1))
                ++take1;
            else
                ++take2;
        }
    }
    const std::size_t total = take1 + take2;
    for (std::size_t i = 0; i < total; ++i) {
        const std::size_t j = i + uniform_below(rng, pool.size() - i);
        std::swap(pool[i], pool[j]);
        states[pool[i]] = i < take1 ? AgentState::Brand1 : AgentState::Brand2;
    }
}

} // namespace detail

/// One tick: seeding, then a synchronous decision round in which every
/// non-adopter reads the start-of-tick snapshot. A random draw is consumed
/// only when the agent's distribution is not degenerate.
inline void step(const Network& net, std::vector<AgentState>& states, const AbmConfig& cfg, Rng& rng)
{
    const std::vector<AgentState> snapshot = states;
    detail::seed_adopters(states, cfg, rng);
    for (AgentIndex i = 0; i < snapshot.size(); ++i) {
        if (states[i] != AgentState::NonAdopter)
            continue;
        const StateTriple nu = local_shares(i, net, snapshot);
        const StateTriple prob = state_probabilities(nu, cfg.u);
        if (prob[2] == 1.0)
            continue;
        if (prob[0] == 1.0) {
            states[i] = AgentState::Brand1;
            continue;
        }
        if (prob[1] == 1.0) {
            states[i] = AgentState::Brand2;
            continue;
        }
        const double r = uniform01(rng) * (prob[0] + prob[1] + prob[2]);
        if (r < prob[0])
            states[i] = AgentState::Brand1;
        else if (r < prob[0] + prob[1])
            states[i] = AgentState::Brand2;
    }
}

/// Ticks until max_ticks or until every agent has adopted. The network is
/// built from the same generator, before the first tick.
inline AbmTrajectory run(const AbmConfig& cfg)
{
    cfg.validate();
    Rng rng = make_rng(cfg.rng_seed);
    const Network net = build_watts_strogatz(cfg.n_agents, cfg.k, cfg.p_rewire, rng);
    std::vector<AgentState> states(cfg.n_agents, AgentState::NonAdopter);

    AbmTrajectory traj;
    traj.samples.push_back({0.0, 0.0, 0.0});
    const auto n = static_cast<double>(cfg.n_agents);
    for (std::size_t tick = 1; tick <= cfg.max_ticks; ++tick) {
        step(net, states, cfg, rng);
        const auto b1 = std::count(states.begin(), states.end(), AgentState::Brand1);
        const auto b2 = std::count(states.begin(), states.end(), AgentState::Brand2);
        traj.samples.push_back({static_cast<double>(tick), static_cast<double>(b1) / n,
                                static_cast<double>(b2) / n});
        if (static_cast<std::size_t>(b1 + b2) == cfg.n_agents)
            break;
    }
    return traj;
}

/// Per-tick mean (and sample standard deviation) over replicates run with
/// seeds rng_seed + r. Runs that saturate early are extended with their
/// final state. Replicates run concurrently; accumulation is in replicate
/// order so the result does not depend on scheduling.
inline AbmTrajectory ensemble(const AbmConfig& cfg, std::size_t replicates)
{
    if (replicates == 0)
        throw Error(ErrorKind::InvalidConfig, "replicates must be >= 1");
    cfg.validate();

    std::vector<std::future<AbmTrajectory>> pending;
    pending.reserve(replicates);
    for (std::size_t r = 0; r < replicates; ++r) {
        AbmConfig c = cfg;
        c.rng_seed = cfg.rng_seed + r;
        pending.push_back(std::async(std::launch::async, [c] { return run(c); }));
    }
    std::vector<AbmTrajectory> runs;
    runs.reserve(replicates);
    std::size_t length = 0;
    for (auto& f : pending) {
        runs.push_back(f.get());
        length = std::max(length, runs.back().samples.size());
    }

    auto sample_at = [](const AbmTrajectory& tr, std::size_t i) -> const AbmSample& {
        return tr.samples[std::min(i, tr.samples.size() - 1)];
    };

    AbmTrajectory out;
    out.samples.resize(length);
    out.n1_sd.resize(length);
    out.n2_sd.resize(length);
    const auto count = static_cast<double>(replicates);
    for (std::size_t i = 0; i < length; ++i) {
        double s1 = 0.0, s2 = 0.0;
        for (const auto& tr : runs) {
            s1 += sample_at(tr, i).n1;
            s2 += sample_at(tr, i).n2;
        }
        const double m1 = s1 / count, m2 = s2 / count;
        double v1 = 0.0, v2 = 0.0;
        for (const auto& tr : runs) {
            v1 += (sample_at(tr, i).n1 - m1) * (sample_at(tr, i).n1 - m1);
            v2 += (sample_at(tr, i).n2 - m2) * (sample_at(tr, i).n2 - m2);
        }
        out.samples[i] = {static_cast<double>(i), m1, m2};
        out.n1_sd[i] = replicates > 1 ? std::sqrt(v1 / (count - 1.0)) : 0.0;
        out.n2_sd[i] = replicates > 1 ? std::sqrt(v2 / (count - 1.0)) : 0.0;
    }
    return out;
}

inline void write_csv(std::ostream& os, const AbmTrajectory& traj)
{
    os << (traj.has_sd() ? "t,n1,n2,n1_sd,n2_sd\n" : "t,n1,n2\n");
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        const auto& s = traj.samples[i];
        os << format_double(s.t) << ',' << format_double(s.n1) << ',' << format_double(s.n2);
        if (traj.has_sd())
            os << ',' << format_double(traj.n1_sd[i]) << ',' << format_double(traj.n2_sd[i]);
        os << '\n';
    }
}

} // namespace duopoly
