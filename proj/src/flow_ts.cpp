#include "croute/flow_ts.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

namespace croute {

int64_t IntegralAcyclicFlow::balance(int v) const {
    int64_t b = 0;
    for (int e : g->incident(v)) b += signed_from(e, g->other(e, v));
    return b;
}

Rat IntegralAcyclicFlow::congestion() const {
    Rat c = 0;
    for (int e = 0; e < g->edge_count(); ++e) {
        Rat r = Rat(f[e] < 0 ? -f[e] : f[e], g->edge(e).capacity);
        if (r > c) c = r;
    }
    return c;
}

bool IntegralAcyclicFlow::is_acyclic() const {
    std::vector<int> pos(g->node_count(), -1);
    for (size_t i = 0; i < topo_order.size(); ++i) pos[topo_order[i]] = static_cast<int>(i);
    for (int e = 0; e < g->edge_count(); ++e) {
        if (f[e] == 0) continue;
        int from = f[e] > 0 ? g->edge(e).u : g->edge(e).v;
        int to = g->other(e, from);
        if (pos[from] < 0 || pos[to] < 0 || pos[from] >= pos[to]) return false;
    }
    return true;
}

FlowTs FlowTs::build(const IntegralAcyclicFlow& flow, const std::vector<int64_t>& mu,
                     const std::vector<int64_t>& mu_out) {
    const Graph& g = *flow.g;
    int n = g.node_count();
    FlowTs ts;
    ts.nodes_.resize(n);

    int64_t counter = 0;  // global token counter in node-index order
    for (int v = 0; v < n; ++v) {
        ts.nodes_[v].offset = counter;
        ts.nodes_[v].count = mu[v];
        counter += mu[v];
    }
    ts.total_tokens_ = counter;

    // Tokens present at each node, kept sorted. Nodes are processed in the
    // certified topological order, so arrivals are complete before dispatch.
    std::vector<std::vector<int64_t>> present(n);
    for (int v = 0; v < n; ++v)
        for (int64_t k = 1; k <= mu[v]; ++k) present[v].push_back(ts.nodes_[v].offset + k);

    for (int u : flow.topo_order) {
        auto& toks = present[u];
        std::sort(toks.begin(), toks.end());
        size_t pos = 0;
        for (int e : g.incident(u)) {  // fixed edge-index order
            int64_t amount = flow.signed_from(e, u);
            if (amount <= 0) continue;
            if (pos + static_cast<size_t>(amount) > toks.size())
                throw std::logic_error("flow conservation violated during token dispatch");
            int64_t lo = toks[pos], hi = toks[pos + amount - 1];
            ts.nodes_[u].out.push_back({e, lo, hi});
            int w = g.other(e, u);
            for (int64_t i = 0; i < amount; ++i) present[w].push_back(toks[pos + i]);
            pos += static_cast<size_t>(amount);
        }
        // Remaining tokens terminate at u.
        if (toks.size() - pos != static_cast<size_t>(mu_out[u]))
            throw std::logic_error("terminal token count does not match target distribution");
        toks.clear();
    }
    for (auto& nd : ts.nodes_)
        std::sort(nd.out.begin(), nd.out.end(),
                  [](const FlowTsInterval& a, const FlowTsInterval& b) { return a.lo < b.lo; });
    return ts;
}

std::optional<int> FlowTs::step(int v, int64_t t) const {
    const auto& out = nodes_[v].out;
    auto it = std::upper_bound(out.begin(), out.end(), t,
                               [](int64_t x, const FlowTsInterval& iv) { return x < iv.lo; });
    if (it == out.begin()) return std::nullopt;
    --it;
    if (t <= it->hi) return it->edge;
    return std::nullopt;
}

void FlowTs::retain_only(int keep) {
    for (int v = 0; v < node_count(); ++v)
        if (v != keep) nodes_[v] = FlowTsNode{};
}

int FlowTs::start_of(int64_t t) const {
    for (int v = 0; v < node_count(); ++v)
        if (t > nodes_[v].offset && t <= nodes_[v].offset + nodes_[v].count) return v;
    throw std::out_of_range("token id outside every start range");
}

std::pair<int, std::vector<int>> FlowTs::walk(const Graph& g, int v, int64_t t) const {
    std::vector<int> edges;
    int cur = v;
    while (true) {
        auto e = step(cur, t);
        if (!e) break;
        edges.push_back(*e);
        cur = g.other(*e, cur);
        if (edges.size() > static_cast<size_t>(g.node_count()))
            throw std::logic_error("token walk exceeded node count; flow not acyclic");
    }
    return {cur, edges};
}

int FlowTs::target_of(const Graph& g, int v, int64_t path_id) const {
    return walk(g, v, token_for(v, path_id)).first;
}

std::vector<int64_t> FlowTs::enumerate_loads(const Graph& g) const {
    std::vector<int64_t> load(g.edge_count(), 0);
    for (int v = 0; v < node_count(); ++v)
        for (int64_t k = 1; k <= count(v); ++k)
            for (int e : walk(g, v, token_for(v, k)).second) ++load[e];
    return load;
}

std::vector<int64_t> FlowTs::enumerate_arrivals(const Graph& g) const {
    std::vector<int64_t> arr(g.node_count(), 0);
    for (int v = 0; v < node_count(); ++v)
        for (int64_t k = 1; k <= count(v); ++k) ++arr[walk(g, v, token_for(v, k)).first];
    return arr;
}

size_t FlowTs::table_bits(const Graph& g, int v) const {
    BitWriter w;
    serialize_node(g, v, w);
    return w.bit_size();
}

void FlowTs::serialize_node(const Graph& g, int v, BitWriter& w) const {
    int tw = token_width();
    int iw = bit_width_for(std::max<uint64_t>(1, g.incident(v).size()));
    const auto& nd = nodes_[v];
    w.put(static_cast<uint64_t>(nd.offset), tw);
    w.put(static_cast<uint64_t>(nd.count), tw);
    w.put(nd.out.size(), iw);
    const auto& inc = g.incident(v);
    for (const auto& iv : nd.out) {
        auto pos = std::find(inc.begin(), inc.end(), iv.edge) - inc.begin();
        w.put(static_cast<uint64_t>(pos), iw);  // port number
        w.put(static_cast<uint64_t>(iv.lo), tw);
        w.put(static_cast<uint64_t>(iv.hi), tw);
    }
}

FlowTsNode FlowTs::deserialize_node(const Graph& g, int v, int64_t total_tokens, BitReader& r) {
    int tw = bit_width_for(static_cast<uint64_t>(total_tokens) + 1);
    int iw = bit_width_for(std::max<uint64_t>(1, g.incident(v).size()));
    FlowTsNode nd;
    nd.offset = static_cast<int64_t>(r.get(tw));
    nd.count = static_cast<int64_t>(r.get(tw));
    uint64_t k = r.get(iw);
    for (uint64_t i = 0; i < k; ++i) {
        int port = static_cast<int>(r.get(iw));
        int64_t lo = static_cast<int64_t>(r.get(tw));
        int64_t hi = static_cast<int64_t>(r.get(tw));
        nd.out.push_back({g.incident(v)[port], lo, hi});
    }
    return nd;
}

void FlowTs::serialize(const Graph& g, BitWriter& w) const {
    w.put(static_cast<uint64_t>(total_tokens_), 64);
    w.put(static_cast<uint64_t>(demand_scale), 64);
    for (int v = 0; v < node_count(); ++v) serialize_node(g, v, w);
}

FlowTs FlowTs::deserialize(const Graph& g, BitReader& r) {
    FlowTs ts;
    ts.total_tokens_ = static_cast<int64_t>(r.get(64));
    ts.demand_scale = static_cast<int64_t>(r.get(64));
    ts.nodes_.resize(g.node_count());
    for (int v = 0; v < g.node_count(); ++v)
        ts.nodes_[v] = deserialize_node(g, v, ts.total_tokens_, r);
    return ts;
}

bool operator==(const FlowTsInterval& a, const FlowTsInterval& b) {
    return a.edge == b.edge && a.lo == b.lo && a.hi == b.hi;
}
bool operator==(const FlowTsNode& a, const FlowTsNode& b) {
    return a.offset == b.offset && a.count == b.count && a.out == b.out;
}
bool FlowTs::operator==(const FlowTs& o) const {
    return total_tokens_ == o.total_tokens_ && demand_scale == o.demand_scale && nodes_ == o.nodes_;
}

}  // namespace croute
