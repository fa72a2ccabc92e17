#pragma once

#include "duopoly/error.hpp"
#include "duopoly/rng.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace duopoly {

using AgentIndex = std::uint32_t;

/// Simple undirected graph stored as per-agent neighbor lists.
struct Network {
    std::vector<std::vector<AgentIndex>> adjacency;

    std::size_t n_agents() const noexcept { return adjacency.size(); }
    std::size_t degree(AgentIndex i) const { return adjacency[i].size(); }

    std::size_t edge_count() const noexcept
    {
        std::size_t twice = 0;
        for (const auto& nb : adjacency)
            twice += nb.size();
        return twice / 2;
    }

    bool has_edge(AgentIndex a, AgentIndex b) const
    {
        const auto& nb = adjacency[a];
        return std::find(nb.begin(), nb.end(), b) != nb.end();
    }

    void add_edge(AgentIndex a, AgentIndex b)
    {
        adjacency[a].push_back(b);
        adjacency[b].push_back(a);
    }

    void remove_edge(AgentIndex a, AgentIndex b)
    {
        auto drop = [](std::vector<AgentIndex>& nb, AgentIndex x) {
            nb.erase(std::find(nb.begin(), nb.end(), x));
        };
        drop(adjacency[a], b);
        drop(adjacency[b], a);
    }
};

/// Watts-Strogatz small world: a ring where every agent links to its k/2
/// nearest neighbors on each side, after which each lattice edge (i, i+j) is,
/// with probability p_rewire, detached from i+j and reattached to an agent
/// drawn uniformly among those not already linked to i. Edges are visited
/// lap by lap (all j = 1 edges, then j = 2, ...), the usual ordering.
inline Network build_watts_strogatz(std::size_t n_agents, std::size_t k, double p_rewire, Rng& rng)
{
    if (k % 2 != 0 || k < 2)
        throw Error(ErrorKind::InvalidConfig, "k must be even and >= 2 (got " + std::to_string(k) + ")");
    if (k + 1 >= n_agents)
        throw Error(ErrorKind::InvalidConfig, "k must be < n_agents - 1");
    if (!(p_rewire >= 0.0 && p_rewire <= 1.0))
        throw Error(ErrorKind::InvalidConfig, "p_rewire must lie in [0, 1]");
    if (n_agents > UINT32_MAX)
        throw Error(ErrorKind::InvalidConfig, "n_agents too large");

    Network net;
    net.adjacency.resize(n_agents);
    for (auto& nb : net.adjacency)
        nb.reserve(k + 2);
    const auto n = static_cast<AgentIndex>(n_agents);
    for (AgentIndex i = 0; i < n; ++i)
        for (std::size_t j = 1; j <= k / 2; ++j)
            net.add_edge(i, static_cast<AgentIndex>((i + j) % n));

    if (p_rewire == 0.0)
        return net;

    for (std::size_t j = 1; j <= k / 2; ++j) {
        for (AgentIndex i = 0; i < n; ++i) {
            if (uniform01(rng) >= p_rewire)
                continue;
            const auto old_target = static_cast<AgentIndex>((i + j) % n);
            if (net.degree(i) + 1 >= n_agents)
                continue;
            AgentIndex w;
            do {
                w = static_cast<AgentIndex>(uniform_below(rng, n));
            } while (w == i || net.has_edge(i, w));
            net.remove_edge(i, old_target);
            net.add_edge(i, w);
        }
    }
    return net;
}

} // namespace duopoly
