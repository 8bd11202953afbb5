#include "croute/flow_engine.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

#include "croute/maxflow.hpp"

namespace croute {

namespace {

struct ScaledProblem {
    std::vector<int64_t> supply, demand;  // integer, after clearing denominators
    int64_t total = 0;
    Int denom = 1;
};

ScaledProblem scale_to_integers(const Graph& g, const Distribution& mu_in,
                                const Distribution& mu_out) {
    int n = g.node_count();
    ScaledProblem p;
    p.supply.assign(n, 0);
    p.demand.assign(n, 0);
    Int lcm = 1;
    for (int v = 0; v < n; ++v) {
        lcm = int_lcm(lcm, denominator(mu_in[v]));
        lcm = int_lcm(lcm, denominator(mu_out[v]));
    }
    p.denom = lcm;
    for (int v = 0; v < n; ++v) {
        Rat delta = mu_out[v] - mu_in[v];  // desired balance
        Int scaled = numerator(Rat(delta * lcm));
        if (scaled < 0)
            p.supply[v] = to_i64(-scaled);
        else
            p.demand[v] = to_i64(scaled);
        if (scaled < 0) p.total += p.supply[v];
    }
    return p;
}

}  // namespace

Flow min_congestion_flow(const Graph& g, const Distribution& mu_in, const Distribution& mu_out,
                         const std::vector<int>& cluster) {
    if (mu_in.total() != mu_out.total())
        throw std::invalid_argument("min_congestion_flow: distribution totals differ");
    int n = g.node_count();
    std::vector<char> in_cluster(n, cluster.empty() ? 1 : 0);
    for (int v : cluster) in_cluster[v] = 1;
    for (int v = 0; v < n; ++v)
        if (!in_cluster[v] && (mu_in[v] != 0 || mu_out[v] != 0))
            throw std::invalid_argument("min_congestion_flow: support outside cluster");

    Flow result(g);
    ScaledProblem p = scale_to_integers(g, mu_in, mu_out);
    if (p.total == 0) return result;  // mu_in == mu_out

    std::vector<int> edges;
    for (int e = 0; e < g.edge_count(); ++e)
        if (in_cluster[g.edge(e).u] && in_cluster[g.edge(e).v]) edges.push_back(e);

    int s = n, t = n + 1;
    // theta = num/den, exact. Feasible iff max-flow with edge capacities
    // num*w(e) and terminal capacities den*supply/demand saturates all supply.
    auto solve = [&](const Int& num, const Int& den)
        -> std::pair<bool, std::pair<MaxFlow, std::vector<std::pair<int, int>>>> {
        MaxFlow mf(n + 2);
        std::vector<std::pair<int, int>> arc_of_edge;  // (arc u->v, arc v->u)
        for (int v = 0; v < n; ++v) {
            if (p.supply[v] > 0) mf.add_arc(s, v, to_i64(den * p.supply[v]));
            if (p.demand[v] > 0) mf.add_arc(v, t, to_i64(den * p.demand[v]));
        }
        for (int e : edges) {
            int64_t cap = to_i64(num * g.edge(e).capacity);
            int a = mf.add_arc(g.edge(e).u, g.edge(e).v, cap);
            int b = mf.add_arc(g.edge(e).v, g.edge(e).u, cap);
            arc_of_edge.emplace_back(a, b);
        }
        int64_t got = mf.run(s, t);
        bool feasible = got == to_i64(den * p.total);
        return {feasible, {std::move(mf), std::move(arc_of_edge)}};
    };

    // Dinkelbach: raise theta to the ratio of the most violated cut until
    // feasible; the final theta is the exact optimum.
    Int num = 0, den = 1;
    for (int iter = 0;; ++iter) {
        if (iter > 4 * n + 16) throw std::logic_error("min_congestion_flow: iteration bound exceeded");
        auto [feasible, state] = solve(num, den);
        if (feasible) {
            const auto& [mf, arc_of_edge] = state;
            Rat theta(num, den);
            for (size_t i = 0; i < edges.size(); ++i) {
                int e = edges[i];
                int64_t net = mf.flow_on(arc_of_edge[i].first) - mf.flow_on(arc_of_edge[i].second);
                // Arc capacities were scaled by den * p.denom overall.
                result.set_oriented(e, Rat(net, den * p.denom));
            }
            // Exactness check: balances match by construction.
            return result;
        }
        auto side = state.first.min_cut_side(s);
        Int cut_supply = 0, cut_cap = 0;
        for (int v = 0; v < n; ++v)
            if (side[v]) cut_supply += Int(p.supply[v]) - Int(p.demand[v]);
        for (int e : edges)
            if (side[g.edge(e).u] != side[g.edge(e).v]) cut_cap += g.edge(e).capacity;
        if (cut_cap == 0)
            throw std::invalid_argument("min_congestion_flow: infeasible (cluster disconnects support)");
        if (cut_supply * den <= num * cut_cap)
            throw std::logic_error("min_congestion_flow: Dinkelbach failed to make progress");
        Int gc = gcd(cut_supply, cut_cap);
        num = cut_supply / gc;
        den = cut_cap / gc;
    }
}

IntegralAcyclicFlow integralize_acyclic(const Graph& g, const Flow& f,
                                        const std::vector<int64_t>& mu,
                                        const std::vector<int64_t>& mu_out) {
    int n = g.node_count();
    int64_t total = 0, total_out = 0;
    for (int v = 0; v < n; ++v) {
        total += mu[v];
        total_out += mu_out[v];
    }
    if (total != total_out) throw std::invalid_argument("integralize_acyclic: totals differ");

    Int big_f = rat_ceil(f.congestion());  // F
    int s = n, t = n + 1;
    MaxFlow mf(n + 2);
    std::vector<std::pair<int, int>> arc_of_edge;
    for (int v = 0; v < n; ++v) {
        if (mu[v] > 0) mf.add_arc(s, v, mu[v]);
        if (mu_out[v] > 0) mf.add_arc(v, t, mu_out[v]);
    }
    for (int e = 0; e < g.edge_count(); ++e) {
        int64_t cap = to_i64(big_f * g.edge(e).capacity);
        int a = mf.add_arc(g.edge(e).u, g.edge(e).v, cap);
        int b = mf.add_arc(g.edge(e).v, g.edge(e).u, cap);
        arc_of_edge.emplace_back(a, b);
    }
    if (mf.run(s, t) != total)
        throw std::invalid_argument("integralize_acyclic: given flow does not certify feasibility");

    IntegralAcyclicFlow out;
    out.g = &g;
    out.f.assign(g.edge_count(), 0);
    out.value = total;
    for (int e = 0; e < g.edge_count(); ++e)
        out.f[e] = mf.flow_on(arc_of_edge[e].first) - mf.flow_on(arc_of_edge[e].second);

    // Cancel cycles on positive-flow arcs.
    while (true) {
        std::vector<int> state(n, 0), stack, parent_edge(n, -1);
        std::vector<int> cycle_edges;
        bool found = false;
        auto positive_out = [&](int v, int e) {
            return out.signed_from(e, v) > 0;
        };
        for (int root = 0; root < n && !found; ++root) {
            if (state[root] != 0) continue;
            // Iterative DFS over positive arcs.
            std::vector<std::pair<int, size_t>> frames{{root, 0}};
            state[root] = 1;
            stack = {root};
            while (!frames.empty() && !found) {
                auto& [v, idx] = frames.back();
                const auto& inc = g.incident(v);
                bool advanced = false;
                while (idx < inc.size()) {
                    int e = inc[idx++];
                    if (!positive_out(v, e)) continue;
                    int u = g.other(e, v);
                    if (state[u] == 1) {
                        // Back edge: recover the cycle from the stack.
                        cycle_edges.push_back(e);
                        for (int i = static_cast<int>(stack.size()) - 1; stack[i] != u; --i)
                            cycle_edges.push_back(parent_edge[stack[i]]);
                        found = true;
                        break;
                    }
                    if (state[u] == 0) {
                        state[u] = 1;
                        parent_edge[u] = e;
                        stack.push_back(u);
                        frames.emplace_back(u, 0);
                        advanced = true;
                        break;
                    }
                }
                if (found || advanced) continue;
                state[v] = 2;
                stack.pop_back();
                frames.pop_back();
            }
        }
        if (!found) break;
        int64_t m = INT64_MAX;
        for (int e : cycle_edges) m = std::min(m, std::abs(out.f[e]));
        for (int e : cycle_edges) out.f[e] += out.f[e] > 0 ? -m : m;
    }

    // Topological order over positive arcs (Kahn, smallest node id first).
    std::vector<int> indeg(n, 0);
    for (int e = 0; e < g.edge_count(); ++e)
        if (out.f[e] != 0) ++indeg[out.f[e] > 0 ? g.edge(e).v : g.edge(e).u];
    std::priority_queue<int, std::vector<int>, std::greater<>> ready;
    for (int v = 0; v < n; ++v)
        if (indeg[v] == 0) ready.push(v);
    while (!ready.empty()) {
        int v = ready.top();
        ready.pop();
        out.topo_order.push_back(v);
        for (int e : g.incident(v))
            if (out.signed_from(e, v) > 0 && --indeg[g.other(e, v)] == 0) ready.push(g.other(e, v));
    }
    if (out.topo_order.size() != static_cast<size_t>(n))
        throw std::logic_error("integralize_acyclic: cycle cancellation incomplete");

    for (int v = 0; v < n; ++v)
        if (out.balance(v) != mu_out[v] - mu[v])
            throw std::logic_error("integralize_acyclic: balance mismatch");
    return out;
}

FlowTs build_flow_ts(const IntegralAcyclicFlow& flow, const std::vector<int64_t>& mu,
                     const std::vector<int64_t>& mu_out) {
    return FlowTs::build(flow, mu, mu_out);
}

FlowTs route_similar(const Graph& g, const std::vector<int64_t>& mu_in,
                     const std::vector<int64_t>& mu_out, const std::vector<int>& cluster,
                     const std::vector<int64_t>& c) {
    int n = g.node_count();
    Int tin = 0, tout = 0;
    for (int v = 0; v < n; ++v) {
        if (mu_in[v] > c[v] || mu_out[v] > c[v])
            throw std::invalid_argument("route_similar: distribution exceeds cluster weights");
        tin += mu_in[v];
        tout += mu_out[v];
    }
    if (tin == 0 || tout == 0) throw std::invalid_argument("route_similar: empty distribution");
    Int m = std::min(tin, tout);

    // a = M * normalized(mu_in), b = M * normalized(mu_out); lambda clears
    // denominators, so lambda divides tin*tout.
    Int lambda = 1;
    for (int v = 0; v < n; ++v) {
        Rat a(Int(mu_in[v]) * m, tin), b(Int(mu_out[v]) * m, tout);
        lambda = int_lcm(lambda, int_lcm(denominator(a), denominator(b)));
    }
    Distribution da(n), db(n);
    std::vector<int64_t> ia(n), ib(n);
    for (int v = 0; v < n; ++v) {
        Rat a = Rat(Int(mu_in[v]) * m * lambda, tin), b = Rat(Int(mu_out[v]) * m * lambda, tout);
        da.set(v, a);
        db.set(v, b);
        ia[v] = to_i64(numerator(a));
        ib[v] = to_i64(numerator(b));
    }
    Flow f = min_congestion_flow(g, da, db, cluster);
    IntegralAcyclicFlow fa = integralize_acyclic(g, f, ia, ib);
    FlowTs ts = FlowTs::build(fa, ia, ib);
    ts.demand_scale = to_i64(lambda);
    return ts;
}

}  // namespace croute
