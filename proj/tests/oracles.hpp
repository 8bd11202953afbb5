#pragma once

// Test-only independent oracles. These deliberately avoid the library's
// solver paths: brute-force cut enumeration for min congestion, direct token
// pushing for flow TS checks, and exact rational propagation for the
// cut-matching CTS.

#include <algorithm>
#include <map>
#include <vector>

#include "croute/flow_ts.hpp"
#include "croute/graph.hpp"
#include "croute/pmcf.hpp"

namespace test_oracles {

using croute::Graph;
using croute::Rat;

// Exact single-commodity min congestion via cut enumeration:
// max over subsets S of net_supply(S) / cap(delta(S)). Cluster size <= 20.
inline Rat brute_min_congestion(const Graph& g, const croute::Distribution& mu_in,
                                const croute::Distribution& mu_out,
                                const std::vector<int>& cluster) {
    int sz = static_cast<int>(cluster.size());
    Rat best = 0;
    for (uint32_t mask = 1; mask + 1 < (1u << sz); ++mask) {
        Rat net = 0;
        std::vector<char> in_s(g.node_count(), 0);
        for (int i = 0; i < sz; ++i)
            if (mask & (1u << i)) {
                in_s[cluster[i]] = 1;
                net += mu_in[cluster[i]] - mu_out[cluster[i]];
            }
        if (net <= 0) continue;
        int64_t cap = 0;
        for (int e = 0; e < g.edge_count(); ++e) {
            const auto& ed = g.edge(e);
            bool iu = in_s[ed.u], iv = in_s[ed.v];
            // only edges inside the cluster count
            bool cu = std::find(cluster.begin(), cluster.end(), ed.u) != cluster.end();
            bool cv = std::find(cluster.begin(), cluster.end(), ed.v) != cluster.end();
            if (cu && cv && iu != iv) cap += ed.capacity;
        }
        if (cap == 0) return Rat(-1);  // infeasible marker
        Rat ratio = net / cap;
        if (ratio > best) best = ratio;
    }
    return best;
}

// Independent replay of the token-pushing procedure: pushes tokens through
// the integral acyclic flow directly (sorting + fixed edge order) and returns
// each token's full edge path, without consulting the FlowTs tables.
inline std::map<int64_t, std::vector<int>> push_tokens(const croute::IntegralAcyclicFlow& fl,
                                                       const std::vector<int64_t>& mu) {
    const Graph& g = *fl.g;
    int n = g.node_count();
    std::vector<std::vector<int64_t>> present(n);
    std::map<int64_t, std::vector<int>> paths;
    // offsets from a single global counter in node-index order
    int64_t counter = 0;
    for (int v = 0; v < n; ++v) {
        for (int64_t k = 0; k < mu[v]; ++k) {
            present[v].push_back(counter + k + 1);
            paths[counter + k + 1] = {};
        }
        counter += mu[v];
    }
    for (int u : fl.topo_order) {
        auto& toks = present[u];
        std::sort(toks.begin(), toks.end());
        size_t pos = 0;
        for (int e : g.incident(u)) {
            int64_t amount = fl.signed_from(e, u);
            if (amount <= 0) continue;
            for (int64_t i = 0; i < amount; ++i) {
                paths[toks[pos + i]].push_back(e);
                present[g.other(e, u)].push_back(toks[pos + i]);
            }
            pos += static_cast<size_t>(amount);
        }
        toks.clear();
    }
    return paths;
}

// Token start offsets in node-index order (the construction's convention).
inline std::vector<int64_t> token_offsets(const std::vector<int64_t>& mu) {
    std::vector<int64_t> off(mu.size(), 0);
    int64_t c = 0;
    for (size_t v = 0; v < mu.size(); ++v) {
        off[v] = c;
        c += mu[v];
    }
    return off;
}

// Exact rational propagation of the pmcf CTS from a single source node,
// modelling the index skew of i' mod 2nc(v) exactly.
// Returns the arrival mass per node (total 1).
inline std::vector<Rat> propagate_pmcf(const Graph& g, const croute::PmcfCts& cts, int source) {
    int n = g.node_count();
    std::vector<Rat> mass(n, Rat(0));
    mass[source] = 1;
    int64_t t_space = cts.index_space();
    for (int k = 0; k < cts.rounds(); ++k) {
        std::vector<Rat> next(n, Rat(0));
        const auto& rd = cts.round(k);
        for (int v = 0; v < n; ++v) {
            if (mass[v] == 0) continue;
            next[v] += mass[v] / 2;  // stay
            int64_t b = cts.virtual_of(v);
            for (int64_t i = 1; i <= b; ++i) {
                // count of i' in [1, T] with ((i'-1) mod b)+1 == i
                Rat p(( (t_space - i) / b ) + 1, t_space);
                int target;
                if (i <= rd.ts1.count(v))
                    target = rd.ts1.walk(g, v, rd.ts1.token_for(v, i)).first;
                else
                    target = rd.ts2.walk(g, v, rd.ts2.token_for(v, i - rd.ts1.count(v))).first;
                next[target] += mass[v] / 2 * p;
            }
        }
        mass = std::move(next);
    }
    return mass;
}

}  // namespace test_oracles
