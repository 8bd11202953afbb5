#include "croute/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>

#include "croute/simplex.hpp"

namespace croute {

namespace {

// Demands aggregated by source node.
struct SourceDemands {
    int src;
    std::vector<std::pair<int, Rat>> targets;
    Rat total;
};

std::vector<SourceDemands> aggregate(const DemandMatrix& d, int n) {
    std::map<int, std::map<int, Rat>> by_src;
    for (const auto& e : d.entries()) {
        if (e.src == e.dst) continue;  // self demand routes with zero load
        by_src[e.src][e.dst] += e.amount;
    }
    std::vector<SourceDemands> out;
    for (auto& [s, m] : by_src) {
        SourceDemands sd;
        sd.src = s;
        sd.total = 0;
        for (auto& [t, a] : m) {
            sd.targets.emplace_back(t, a);
            sd.total += a;
        }
        out.push_back(std::move(sd));
    }
    (void)n;
    return out;
}

// Exact LP over oriented edge flows, one commodity per aggregated source.
CongestionCertificate exact_lp(const Graph& g, const std::vector<SourceDemands>& demands) {
    int n = g.node_count(), m = g.edge_count();
    int k = static_cast<int>(demands.size());
    // Variables: x[c][arc] (2m per commodity), theta, slack per edge.
    int theta_col = k * 2 * m;
    int ncols = theta_col + 1 + m;
    auto col = [&](int c, int e, bool forward) { return c * 2 * m + 2 * e + (forward ? 0 : 1); };

    std::vector<std::vector<Rat>> a;
    std::vector<Rat> b;
    // Conservation: for commodity c at node v: inflow - outflow = rhs.
    for (int c = 0; c < k; ++c) {
        for (int v = 0; v < n; ++v) {
            std::vector<Rat> row(ncols, Rat(0));
            for (int e : g.incident(v)) {
                bool is_u = g.edge(e).u == v;
                // forward arc = u->v orientation of the stored edge
                row[col(c, e, true)] += is_u ? Rat(-1) : Rat(1);
                row[col(c, e, false)] += is_u ? Rat(1) : Rat(-1);
            }
            Rat rhs = 0;
            if (v == demands[c].src) rhs -= demands[c].total;
            for (const auto& [t, amt] : demands[c].targets)
                if (t == v) rhs += amt;
            a.push_back(std::move(row));
            b.push_back(rhs);
        }
    }
    // Capacity: sum_c (x_fwd + x_bwd) - theta*w + slack = 0.
    for (int e = 0; e < m; ++e) {
        std::vector<Rat> row(ncols, Rat(0));
        for (int c = 0; c < k; ++c) {
            row[col(c, e, true)] = 1;
            row[col(c, e, false)] = 1;
        }
        row[theta_col] = -Rat(g.edge(e).capacity);
        row[theta_col + 1 + e] = 1;
        a.push_back(std::move(row));
        b.push_back(Rat(0));
    }
    std::vector<Rat> cost(ncols, Rat(0));
    cost[theta_col] = 1;

    LpResult res = solve_lp_min(std::move(a), std::move(b), cost);
    if (res.status != LpResult::Status::Optimal)
        throw std::invalid_argument("opt_congestion: infeasible demands (disconnected pair?)");

    CongestionCertificate cert;
    cert.exact = true;
    cert.primal = res.objective;
    cert.dual = res.objective;
    cert.per_edge_loads.assign(m, Rat(0));
    for (int e = 0; e < m; ++e)
        for (int c = 0; c < k; ++c)
            cert.per_edge_loads[e] += res.x[col(c, e, true)] + res.x[col(c, e, false)];
    return cert;
}

struct DijkstraResult {
    std::vector<double> dist;
    std::vector<int> parent_edge;
};

DijkstraResult dijkstra(const Graph& g, int src, const std::vector<double>& len) {
    int n = g.node_count();
    DijkstraResult r{std::vector<double>(n, std::numeric_limits<double>::infinity()),
                     std::vector<int>(n, -1)};
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> q;
    r.dist[src] = 0;
    q.push({0, src});
    while (!q.empty()) {
        auto [d, v] = q.top();
        q.pop();
        if (d > r.dist[v]) continue;
        for (int e : g.incident(v)) {
            int u = g.other(e, v);
            double nd = d + len[e];
            if (nd < r.dist[u]) {
                r.dist[u] = nd;
                r.parent_edge[u] = e;
                q.push({nd, u});
            }
        }
    }
    return r;
}

// Multiplicative-weights max concurrent flow; phases run until the duality
// gap certificate reaches the target.
CongestionCertificate mwu(const Graph& g, const std::vector<SourceDemands>& demands,
                          double eps) {
    int m = g.edge_count();
    double step = std::min(0.1, eps / 4);
    std::vector<double> len(m), load(m, 0.0);
    for (int e = 0; e < m; ++e) len[e] = 1.0 / g.edge(e).capacity;

    double best_dual = 0;
    CongestionCertificate cert;
    int phases = 0;
    const int max_phases = 200000;
    while (phases < max_phases) {
        ++phases;
        for (const auto& sd : demands) {
            auto sp = dijkstra(g, sd.src, len);
            for (const auto& [t, amt] : sd.targets) {
                if (std::isinf(sp.dist[t]))
                    throw std::invalid_argument("opt_congestion: demand between disconnected nodes");
                double remaining = to_double(amt);
                while (remaining > 0) {
                    // Walk the shortest path, find bottleneck capacity.
                    double bottleneck = std::numeric_limits<double>::infinity();
                    for (int v = t; v != sd.src;) {
                        int e = sp.parent_edge[v];
                        bottleneck = std::min(bottleneck, static_cast<double>(g.edge(e).capacity));
                        v = g.other(e, v);
                    }
                    double send = std::min(remaining, bottleneck);
                    for (int v = t; v != sd.src;) {
                        int e = sp.parent_edge[v];
                        load[e] += send;
                        len[e] *= 1.0 + step * send / g.edge(e).capacity;
                        v = g.other(e, v);
                    }
                    remaining -= send;
                    if (remaining > 0) sp = dijkstra(g, sd.src, len);
                }
            }
        }
        // Dual certificate from the current lengths.
        double alpha = 0, beta = 0;
        for (int e = 0; e < m; ++e) beta += len[e] * g.edge(e).capacity;
        for (const auto& sd : demands) {
            auto sp = dijkstra(g, sd.src, len);
            for (const auto& [t, amt] : sd.targets) alpha += to_double(amt) * sp.dist[t];
        }
        best_dual = std::max(best_dual, alpha / beta);
        double primal = 0;
        for (int e = 0; e < m; ++e) primal = std::max(primal, load[e] / (g.edge(e).capacity * phases));
        if (best_dual > 0 && primal / best_dual <= 1 + eps) break;
    }
    double primal = 0;
    for (int e = 0; e < m; ++e) primal = std::max(primal, load[e] / (g.edge(e).capacity * phases));
    cert.primal = Rat(primal);
    cert.dual = Rat(best_dual);
    cert.exact = false;
    cert.per_edge_loads.resize(m);
    for (int e = 0; e < m; ++e) cert.per_edge_loads[e] = Rat(load[e] / phases);
    return cert;
}

}  // namespace

CongestionCertificate CongestionCertificate::scaled(const Rat& g) const {
    CongestionCertificate c = *this;
    c.primal *= g;
    c.dual *= g;
    for (auto& l : c.per_edge_loads) l *= g;
    return c;
}

CongestionCertificate opt_congestion(const Graph& g, const DemandMatrix& d, const Config& cfg) {
    auto demands = aggregate(d, g.node_count());
    if (demands.empty()) {
        CongestionCertificate cert;
        cert.exact = true;
        cert.per_edge_loads.assign(g.edge_count(), Rat(0));
        return cert;
    }
    // Normalize by total demand so that scaled inputs solve the same instance
    // and reuse the same routing.
    Rat total = 0;
    for (const auto& sd : demands) total += sd.total;
    auto normalized = demands;
    for (auto& sd : normalized) {
        sd.total /= total;
        for (auto& [t, a] : sd.targets) a /= total;
    }
    int pairs = 0;
    for (const auto& sd : demands) pairs += static_cast<int>(sd.targets.size());
    CongestionCertificate cert;
    if (static_cast<int64_t>(g.node_count()) * pairs <= cfg.exact_lp_threshold)
        cert = exact_lp(g, normalized);
    else
        cert = mwu(g, normalized, cfg.oracle_eps);
    return cert.scaled(total);
}

CongestionCertificate pmcf_congestion(const Graph& g, const std::vector<int>& cluster,
                                      const std::vector<int64_t>& c, const Config& cfg) {
    // Induced subgraph with relabelled nodes.
    std::vector<int> idx(g.node_count(), -1);
    for (size_t i = 0; i < cluster.size(); ++i) idx[cluster[i]] = static_cast<int>(i);
    std::vector<std::tuple<int, int, int64_t>> edges;
    for (int e = 0; e < g.edge_count(); ++e) {
        const auto& ed = g.edge(e);
        if (idx[ed.u] >= 0 && idx[ed.v] >= 0)
            edges.emplace_back(idx[ed.u], idx[ed.v], ed.capacity);
    }
    CongestionCertificate trivial;
    trivial.exact = true;
    trivial.per_edge_loads.assign(g.edge_count(), Rat(0));

    Int cv = 0;
    for (int v : cluster) cv += c[v];
    if (cv == 0 || cluster.size() <= 1) return trivial;

    Graph sub(static_cast<int>(cluster.size()), edges);
    DemandMatrix d;
    for (int u : cluster)
        for (int v : cluster)
            if (u != v && c[u] > 0 && c[v] > 0)
                d.add(idx[u], idx[v], Rat(Int(c[u]) * Int(c[v]), cv));
    if (d.empty()) return trivial;

    CongestionCertificate cert = opt_congestion(sub, d, cfg);
    // Report loads on the original edge indexing.
    std::vector<Rat> loads(g.edge_count(), Rat(0));
    int sub_e = 0;
    for (int e = 0; e < g.edge_count(); ++e) {
        const auto& ed = g.edge(e);
        if (idx[ed.u] >= 0 && idx[ed.v] >= 0) loads[e] = cert.per_edge_loads[sub_e++];
    }
    cert.per_edge_loads = std::move(loads);
    return cert;
}

}  // namespace croute
