#include "croute/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <mutex>
#include <stdexcept>

namespace croute {

namespace {

// Draws per the pmcf layout: one coin plus one index per round.
void begin_pmcf_round(Header::PmcfExec& px, const PmcfCts& cts, int node, CounterRng& rng) {
    bool move;
    int64_t iprime;
    if (px.replay) {
        move = px.id.move[px.round] != 0;
        iprime = px.id.iprime[px.round];
    } else {
        move = rng.coin();
        iprime = static_cast<int64_t>(rng.below(static_cast<uint64_t>(cts.index_space()))) + 1;
    }
    if (!move) {
        px.walk_ts = 0;
        ++px.round;
        return;
    }
    int64_t b = cts.virtual_of(node);
    if (b == 0) throw std::logic_error("pmcf execution reached a zero-weight node");
    int64_t i = (iprime - 1) % b + 1;
    const PmcfRound& rd = cts.round(px.round);
    if (i <= rd.ts1.count(node)) {
        px.walk_ts = 1;
        px.token = rd.ts1.token_for(node, i);
    } else {
        px.walk_ts = 2;
        px.token = rd.ts2.token_for(node, i - rd.ts1.count(node));
    }
}

// Advances a pmcf execution at `node`. Returns an edge when the packet must
// move; sets done=true when all rounds are finished.
std::optional<int> advance_pmcf(Header::PmcfExec& px, const PmcfCts& cts, int node,
                                CounterRng& rng, bool& done) {
    done = false;
    while (true) {
        if (px.walk_ts != 0) {
            const PmcfRound& rd = cts.round(px.round);
            const FlowTs& ts = px.walk_ts == 1 ? rd.ts1 : rd.ts2;
            auto e = ts.step(node, px.token);
            if (e) return e;
            px.walk_ts = 0;
            ++px.round;
        }
        if (px.round >= cts.rounds()) {
            done = true;
            return std::nullopt;
        }
        begin_pmcf_round(px, cts, node, rng);
    }
}

void start_path_replay(Header& h, const EmbedCts::SinglePath& path, bool leg1) {
    h.pmcf.active = true;
    h.pmcf.replay = true;
    h.pmcf.id = leg1 ? path.id1 : path.id2;
    h.pmcf.round = 0;
    h.pmcf.walk_ts = 0;
    h.pmcf.token = 0;
}

}  // namespace

const ClusterScheme& Simulator::scheme_at(int node, int depth) const {
    return b_->scheme(b_->cluster_at(node, depth));
}

Header Simulator::make_header(int src, int dst) const {
    Header h;
    h.target_label = b_->label(dst);
    const auto& ls = b_->label(src);
    size_t lca = 0;
    while (lca < ls.size() && lca < h.target_label.size() && ls[lca] == h.target_label[lca]) ++lca;
    h.lca_depth = static_cast<int16_t>(lca);
    h.depth = static_cast<int16_t>(ls.size());
    h.phase = src == dst ? Header::Phase::Arrived : Header::Phase::Up;
    if (src != dst && h.depth == h.lca_depth) h.phase = Header::Phase::Down;
    return h;
}

std::optional<int> Simulator::step(int node, Header& h, CounterRng& rng) const {
    while (true) {
        if (h.phase == Header::Phase::Arrived) return std::nullopt;
        auto e = h.phase == Header::Phase::Up ? step_up(node, h, rng) : step_down(node, h, rng);
        if (e) return e;
    }
}

std::optional<int> Simulator::step_up(int node, Header& h, CounterRng& rng) const {
    // Executing the mixing CTS of the ancestor at depth-1; commodity is the
    // depth-level child containing the packet.
    const ClusterScheme& cs = scheme_at(node, h.depth - 1);
    if (!cs.active) throw std::logic_error("up step through an inactive cluster");
    if (h.stage == 0) {
        int child_idx = b_->label(node)[h.depth - 1];
        const FlowTs& ts = cs.mixing.stage1[child_idx];
        int64_t cnt = ts.count(node);
        if (cnt <= 0) throw std::logic_error("mixing stage 1 has no path ids at the packet node");
        h.flow.active = true;
        h.flow.token = ts.token_for(node, static_cast<int64_t>(rng.below(cnt)) + 1);
        h.stage = 1;
    }
    if (h.stage == 1) {
        int child_idx = b_->label(node)[h.depth - 1];
        const FlowTs& ts = cs.mixing.stage1[child_idx];
        auto e = ts.step(node, h.flow.token);
        if (e) return e;
        h.flow.active = false;
        h.stage = 2;
        h.pmcf = {};
        h.pmcf.active = true;
    }
    // stage 2: pmcf of the ancestor, randomized
    bool done = false;
    auto e = advance_pmcf(h.pmcf, *cs.pmcf, node, rng, done);
    if (e) return e;
    if (done) {
        h.pmcf = {};
        h.stage = 0;
        --h.depth;
        if (h.depth == h.lca_depth)
            h.phase = Header::Phase::Down;
    }
    return std::nullopt;
}

std::optional<int> Simulator::step_down(int node, Header& h, CounterRng& rng) const {
    if (h.depth == static_cast<int16_t>(h.target_label.size())) {
        h.phase = Header::Phase::Arrived;
        return std::nullopt;
    }
    const ClusterScheme& cs = scheme_at(node, h.depth);
    if (!cs.active) throw std::logic_error("down step through an inactive cluster");
    const Cluster& c = b_->tree().cluster(cs.cluster_id);
    int commodity = h.target_label[h.depth];
    int cls = c.child_class[commodity];

    if (h.stage == 0) {
        const FlowTs& ts = cs.unmixing.stage1.at(cls);
        int64_t cnt = ts.count(node);
        if (cnt <= 0) throw std::logic_error("unmixing stage 1 has no path ids at the packet node");
        h.flow.active = true;
        h.flow.token = ts.token_for(node, static_cast<int64_t>(rng.below(cnt)) + 1);
        h.stage = 1;
    }
    if (h.stage == 1) {
        const FlowTs& ts = cs.unmixing.stage1.at(cls);
        auto e = ts.step(node, h.flow.token);
        if (e) return e;
        h.flow.active = false;
        // enter the hypercube
        const auto* cube = cs.unmixing.cube.cube_for_class(cls);
        if (!cube) throw std::logic_error("no hypercube for the commodity class");
        const auto& ids = cube->ids_of[node];
        if (ids.empty()) throw std::logic_error("packet entered the cube at a node with no ids");
        auto [lo, size] = cs.unmixing.cube.child_range(commodity);
        h.cube = {};
        h.cube.active = true;
        h.cube.commodity = commodity;
        h.cube.cls = cls;
        h.cube.cur = ids[rng.below(ids.size())];
        h.cube.z = static_cast<int64_t>(rng.below(uint64_t{1} << cube->dim));
        h.cube.y = lo + static_cast<int64_t>(rng.below(static_cast<uint64_t>(size)));
        h.cube.toward_y = 0;
        h.stage = 2;
    }
    if (h.stage == 2) {
        if (h.embed.active) {
            auto e = step_embed(node, h, rng, cs);
            if (e) return e;
        }
        if (!h.embed.active) {
            if (advance_cube(node, h, rng, cs)) {
                // cube finished; start stage 3
                h.cube = {};
                const FlowTs& ts = cs.unmixing.stage3[commodity];
                int64_t cnt = ts.count(node);
                if (cnt <= 0)
                    throw std::logic_error("unmixing stage 3 has no path ids at the packet node");
                h.flow.active = true;
                h.flow.token = ts.token_for(node, static_cast<int64_t>(rng.below(cnt)) + 1);
                h.stage = 3;
            } else if (h.embed.active) {
                auto e = step_embed(node, h, rng, cs);
                if (e) return e;
            }
        }
    }
    if (h.stage == 3) {
        const FlowTs& ts = cs.unmixing.stage3[commodity];
        auto e = ts.step(node, h.flow.token);
        if (e) return e;
        h.flow.active = false;
        h.stage = 0;
        ++h.depth;
        if (h.depth == static_cast<int16_t>(h.target_label.size())) h.phase = Header::Phase::Arrived;
    }
    return std::nullopt;
}

// Advances cube-id bookkeeping without leaving the node. Returns true when
// the cube target y has been reached; sets h.embed.active when the packet
// must traverse an embedded arc first.
bool Simulator::advance_cube(int node, Header& h, CounterRng& rng, const ClusterScheme& cs) const {
    (void)rng;
    const auto* cube = cs.unmixing.cube.cube_for_class(h.cube.cls);
    while (true) {
        int64_t target = h.cube.toward_y ? h.cube.y : h.cube.z;
        if (h.cube.cur == target) {
            if (h.cube.toward_y) return true;
            h.cube.toward_y = 1;
            continue;
        }
        int64_t diff = h.cube.cur ^ target;
        int bit = 0;
        while (!((diff >> bit) & 1)) ++bit;
        int64_t next = h.cube.cur ^ (int64_t{1} << bit);
        int arc = cube->neighbor_arc[h.cube.cur][bit];
        if (arc < 0) {
            h.cube.cur = next;  // same owner, no movement
            continue;
        }
        h.embed = {};
        h.embed.active = true;
        h.embed.arc = arc;
        h.embed.mode = 0;
        h.cube.pending_id = next;
        return false;
    }
}

std::optional<int> Simulator::step_embed(int node, Header& h, CounterRng& rng,
                                         const ClusterScheme& cs) const {
    return embed_step(b_->graph(), cs.unmixing.cube.embed(), node, h, rng);
}

std::optional<int> embed_step(const Graph& g, const EmbedCts& em, int node, Header& h,
                              CounterRng& rng) {
    (void)g;
    auto& es = h.embed;
    while (true) {
        switch (es.mode) {
            case 0: {  // at the arc source: pick the branch
                const EmbedCts::ArcPlan& plan = em.plan(es.arc);
                if (em.arcs()[es.arc].u != node)
                    throw std::logic_error("embed arc started away from its source");
                bool large = plan.d_large > 0 &&
                             static_cast<int64_t>(rng.below(static_cast<uint64_t>(plan.d_total))) <
                                 plan.d_large;
                if (large) {
                    es.round = plan.elim_round;
                    int64_t span = plan.fwd_hi - plan.fwd_lo + 1;
                    es.token =
                        plan.fwd_lo + static_cast<int64_t>(rng.below(static_cast<uint64_t>(span)));
                    es.mode = 1;
                } else {
                    if (!plan.residual) throw std::logic_error("embed arc lacks a residual path");
                    es.path = *plan.residual;
                    es.has_path = true;
                    es.mode = 3;
                    start_path_replay(h, es.path, true);
                }
                break;
            }
            case 1: {  // forward walk toward the helper
                const auto& rd = em.rounds()[es.round];
                auto e = rd.fwd.step(node, es.token);
                if (e) return e;
                // landed: pick up the stored continuation (anticipative routing)
                auto it = rd.entries.find(es.token);
                if (it == rd.entries.end() || rd.landing.at(es.token) != node)
                    throw std::logic_error("embed helper entry missing at the landing node");
                const auto& cont = it->second;
                es.pending = true;
                es.pending_branch = cont.is_branch;
                es.pending_round = cont.next_round;
                es.pending_lo = cont.lo;
                es.pending_hi = cont.hi;
                if (cont.path) {
                    es.path = *cont.path;
                    es.has_path = true;
                }
                es.token = cont.rev_token;
                es.mode = 2;
                break;
            }
            case 2: {  // reverse walk back into the sources
                const auto& rd = em.rounds()[es.round];
                auto e = rd.rev.step(node, es.token);
                if (e) return e;
                if (!es.pending) throw std::logic_error("reverse walk without a payload");
                es.pending = false;
                if (es.pending_branch) {
                    es.round = es.pending_round;
                    int64_t span = es.pending_hi - es.pending_lo + 1;
                    es.token = es.pending_lo +
                               static_cast<int64_t>(rng.below(static_cast<uint64_t>(span)));
                    es.mode = 1;
                } else {
                    if (!es.has_path) throw std::logic_error("continuation carries no path");
                    es.mode = 3;
                    start_path_replay(h, es.path, true);
                }
                break;
            }
            case 3: {  // stored path, first leg
                bool done = false;
                auto e = advance_pmcf(h.pmcf, em.pmcf(), node, rng, done);
                if (e) return e;
                if (!done) throw std::logic_error("path replay stalled");
                if (node != es.path.mid)
                    throw std::logic_error("path replay missed the intermediate node");
                es.mode = 4;
                start_path_replay(h, es.path, false);
                break;
            }
            case 4: {  // stored path, second leg
                bool done = false;
                auto e = advance_pmcf(h.pmcf, em.pmcf(), node, rng, done);
                if (e) return e;
                if (!done) throw std::logic_error("path replay stalled");
                if (node != es.path.dst) throw std::logic_error("path replay missed the target");
                h.pmcf = {};
                // arc delivered: hand control back to the cube
                if (h.cube.active) h.cube.cur = h.cube.pending_id;
                es = {};
                return std::nullopt;
            }
            default:
                throw std::logic_error("bad embed mode");
        }
    }
}

std::pair<int, std::vector<int>> run_embed_arc(const Graph& g, const EmbedCts& em, int arc,
                                               uint64_t seed, uint64_t stream) {
    CounterRng rng(seed, stream);
    Header h;
    h.phase = Header::Phase::Down;  // keeps arrived() false during the run
    h.embed.active = true;
    h.embed.arc = arc;
    h.embed.mode = 0;
    int cur = em.arcs()[arc].u;
    std::vector<int> edges;
    size_t bound = static_cast<size_t>(g.node_count()) * 4096;
    while (h.embed.active) {
        auto e = embed_step(g, em, cur, h, rng);
        if (!e) break;
        edges.push_back(*e);
        cur = g.other(*e, cur);
        if (edges.size() > bound) throw std::runtime_error("embedded arc exceeded the step bound");
    }
    return {cur, edges};
}

std::pair<int, std::vector<int>> Simulator::run_packet(int src, int dst, uint64_t seed,
                                                       uint64_t packet_index,
                                                       size_t* max_header_bits) const {
    CounterRng rng(seed, packet_index);
    Header h = make_header(src, dst);
    std::vector<int> edges;
    const Graph& g = b_->graph();
    size_t bound = static_cast<size_t>(g.node_count()) *
                   (b_->max_header_bits_budget() + 1) *
                   static_cast<size_t>(b_->config().step_bound_mult);
    int cur = src;
    size_t steps = 0;
    if (max_header_bits) *max_header_bits = std::max(*max_header_bits, header_bits(h));
    while (!h.arrived()) {
        auto e = step(cur, h, rng);
        if (max_header_bits) *max_header_bits = std::max(*max_header_bits, header_bits(h));
        if (!e) break;
        edges.push_back(*e);
        cur = g.other(*e, cur);
        if (++steps > bound) throw std::runtime_error("packet exceeded the step bound");
    }
    return {cur, edges};
}

size_t Simulator::header_bits(const Header& h) const {
    size_t bits = 0;
    bits += 2;  // phase
    int depth_w = bit_width_for(static_cast<uint64_t>(b_->tree().height()) + 1);
    bits += 2 * static_cast<size_t>(depth_w);  // depth + lca
    bits += 3;                                 // stage
    bits += h.target_label.size() * static_cast<size_t>(b_->label_component_bits());
    bits += 64;  // per-packet draw counter
    if (h.arrived()) return bits;

    // widths taken as the bundle-wide maxima so sizes are well defined
    // without resolving the active cluster
    size_t max_iw = 1, max_rounds = 1;
    for (int id = 0; id < b_->tree().cluster_count(); ++id) {
        const ClusterScheme& s = b_->scheme(id);
        if (!s.active) continue;
        max_iw = std::max<size_t>(max_iw, static_cast<size_t>(s.pmcf->index_width()));
        max_rounds = std::max<size_t>(max_rounds, static_cast<size_t>(s.pmcf->rounds()));
    }
    size_t round_w = bit_width_for(max_rounds + 1);
    size_t path_id_bits = h.pmcf.id.move.size() * (1 + max_iw);

    if (h.flow.active) bits += 64;  // flow token
    if (h.pmcf.active) {
        bits += round_w + 2 + 64;  // round counter, walk state, walk token
        if (h.pmcf.replay) bits += path_id_bits;
    }
    if (h.cube.active) bits += 16 + 8 + 4 * 16 + 1;  // commodity, class, ids, flag
    if (h.embed.active) {
        bits += 24 + 64;  // arc/mode/round + token
        if (h.embed.pending) bits += 8 + 2 * 64;
        if (h.embed.has_path)
            bits += 64 + 2 * static_cast<size_t>(h.embed.path.id1.move.size()) * (1 + max_iw);
    }
    return bits;
}

LoadReport Simulator::simulate_monte_carlo(const DemandMatrix& d, int trials, uint64_t seed) const {
    const Graph& g = b_->graph();
    LoadReport rep;
    rep.trials = trials;
    rep.seed = seed;
    rep.per_edge.assign(g.edge_count(), Rat(0));

    int jobs = std::max(1, b_->config().jobs);
    const auto& entries = d.entries();
    struct Buffer {
        std::vector<std::vector<int64_t>> counts;
        std::vector<int64_t> delivered;
        size_t max_hdr = 0;
        int64_t faults = 0;
    };
    std::vector<Buffer> buffers(jobs);
    for (auto& buf : buffers) {
        buf.counts.assign(entries.size(), std::vector<int64_t>(g.edge_count(), 0));
        buf.delivered.assign(entries.size(), 0);
    }

    auto work = [&](int thread_idx) {
        Buffer& buf = buffers[thread_idx];
        for (size_t ei = 0; ei < entries.size(); ++ei) {
            for (int t = thread_idx; t < trials; t += jobs) {
                uint64_t stream = CounterRng::mix(0x7061636b6574ULL, ei, static_cast<uint64_t>(t));
                try {
                    auto [end, edges] =
                        run_packet(entries[ei].src, entries[ei].dst, seed, stream, &buf.max_hdr);
                    if (end == entries[ei].dst) ++buf.delivered[ei];
                    for (int e : edges) ++buf.counts[ei][e];
                } catch (const std::exception&) {
                    ++buf.faults;
                }
            }
        }
    };
    if (jobs == 1) {
        work(0);
    } else {
        std::vector<std::future<void>> pool;
        for (int t = 0; t < jobs; ++t) pool.push_back(std::async(std::launch::async, work, t));
        for (auto& f : pool) f.wait();
    }

    for (size_t ei = 0; ei < entries.size(); ++ei) {
        int64_t delivered = 0;
        std::vector<int64_t> counts(g.edge_count(), 0);
        for (const auto& buf : buffers) {
            delivered += buf.delivered[ei];
            for (int e = 0; e < g.edge_count(); ++e) counts[e] += buf.counts[ei][e];
        }
        Rat unit = entries[ei].amount / trials;
        for (int e = 0; e < g.edge_count(); ++e) rep.per_edge[e] += unit * counts[e];
        rep.delivery[{entries[ei].src, entries[ei].dst}] = Rat(delivered, trials);
    }
    for (const auto& buf : buffers) {
        rep.max_header_bits = std::max(rep.max_header_bits, buf.max_hdr);
        rep.faults += buf.faults;
    }
    for (int e = 0; e < g.edge_count(); ++e) {
        Rat r = rep.per_edge[e] / g.edge(e).capacity;
        if (r > rep.congestion) rep.congestion = r;
    }
    return rep;
}

SizeReport Simulator::measure(int header_probe_trials) const {
    const Graph& g = b_->graph();
    SizeReport rep;
    rep.bits_per_node.resize(g.node_count());
    for (int v = 0; v < g.node_count(); ++v) rep.bits_per_node[v] = b_->node_bits(v);
    for (int v = 0; v < g.node_count(); ++v) rep.label_bits_total += b_->label_bits(v);

    double lg = std::log2(static_cast<double>(g.node_count()) * g.max_capacity());
    if (lg < 1) lg = 1;
    for (int v = 0; v < g.node_count(); ++v) {
        double ratio = static_cast<double>(rep.bits_per_node[v]) /
                       ((g.degree(v) + 1.0) * lg * lg * lg);
        rep.max_compactness = std::max(rep.max_compactness, ratio);
    }

    // probe header sizes with a few packets per pair
    size_t max_hdr = 0;
    uint64_t stream = 0;
    for (int u = 0; u < g.node_count() && header_probe_trials > 0; ++u)
        for (int v = 0; v < g.node_count(); ++v) {
            if (u == v) continue;
            for (int t = 0; t < header_probe_trials; ++t)
                run_packet(u, v, b_->config().seed, stream++, &max_hdr);
        }
    rep.max_header_bits = max_hdr;
    return rep;
}

// ---------------------------------------------------------------------------
// Exact evaluation: per-cluster rational kernels composed along tree paths.
// ---------------------------------------------------------------------------

namespace {

using Dist = std::map<int, Rat>;              // node -> mass
using EdgeLoads = std::vector<Rat>;           // dense per edge

struct Kernel {
    Dist dist;
    EdgeLoads loads;
};

Kernel flow_ts_kernel(const Graph& g, const FlowTs& ts, int src) {
    Kernel k;
    k.loads.assign(g.edge_count(), Rat(0));
    int64_t cnt = ts.count(src);
    if (cnt == 0) throw std::logic_error("exact: flow TS has no tokens at source");
    Rat p(1, cnt);
    for (int64_t i = 1; i <= cnt; ++i) {
        auto [end, edges] = ts.walk(g, src, ts.token_for(src, i));
        k.dist[end] += p;
        for (int e : edges) k.loads[e] += p;
    }
    return k;
}

}  // namespace

struct Simulator::ExactCache {
    // flow TS kernels keyed by (table identity, source node)
    std::map<std::pair<const void*, int>, Kernel> flow;
    // pmcf kernels per cluster id: transfer and loads from every source node
    std::map<int, std::map<int, Kernel>> pmcf;
    // embed arc kernels per cluster id: loads per arc (delivery is exact)
    std::map<int, std::vector<EdgeLoads>> embed_arcs;
    // memo: unmixing kernel per (cluster, commodity, source node)
    std::map<std::tuple<int, int, int>, Kernel> unmix;
    // memo: mixing kernel per (cluster, child, source node)
    std::map<std::tuple<int, int, int>, Kernel> mix;
    std::mutex mutex;
};

Simulator::ExactCache& Simulator::exact_cache() const {
    if (!exact_) exact_ = std::make_shared<ExactCache>();
    return *exact_;
}

namespace {

// Exact pmcf propagation from one source, modelling the index skew exactly.
Kernel pmcf_kernel_from(const Graph& g, const PmcfCts& cts, int src) {
    Kernel k;
    k.loads.assign(g.edge_count(), Rat(0));
    Dist mass;
    mass[src] = 1;
    int64_t t_space = cts.index_space();
    for (int round = 0; round < cts.rounds(); ++round) {
        const PmcfRound& rd = cts.round(round);
        Dist next;
        for (const auto& [v, m] : mass) {
            next[v] += m / 2;
            int64_t b = cts.virtual_of(v);
            for (int64_t i = 1; i <= b; ++i) {
                Rat p((t_space - i) / b + 1, t_space);
                Rat weight = m / 2 * p;
                const FlowTs& ts = i <= rd.ts1.count(v) ? rd.ts1 : rd.ts2;
                int64_t token = i <= rd.ts1.count(v)
                                    ? rd.ts1.token_for(v, i)
                                    : rd.ts2.token_for(v, i - rd.ts1.count(v));
                auto [end, edges] = ts.walk(g, v, token);
                next[end] += weight;
                for (int e : edges) k.loads[e] += weight;
            }
        }
        mass = std::move(next);
    }
    k.dist = std::move(mass);
    return k;
}

// Exact loads of one embedded arc (delivery is deterministic per branch).
struct EmbedExact {
    const Graph& g;
    const EmbedCts& em;
    std::map<std::pair<int, int64_t>, EdgeLoads> cont_memo;

    EdgeLoads path_loads(const EmbedCts::SinglePath& sp, int src) {
        EdgeLoads loads(g.edge_count(), Rat(0));
        std::vector<int> edges;
        int mid = replay_pmcf(g, em.pmcf(), src, sp.id1, &edges);
        if (mid != sp.mid) throw std::logic_error("exact: stored path missed its intermediate");
        int end = replay_pmcf(g, em.pmcf(), mid, sp.id2, &edges);
        if (end != sp.dst) throw std::logic_error("exact: stored path missed its target");
        for (int e : edges) loads[e] += 1;
        return loads;
    }

    // loads incurred from helper pickup of token t in round r through delivery
    const EdgeLoads& continuation_loads(int r, int64_t t) {
        auto key = std::make_pair(r, t);
        auto it = cont_memo.find(key);
        if (it != cont_memo.end()) return it->second;
        const auto& rd = em.rounds()[r];
        const auto& cont = rd.entries.at(t);
        EdgeLoads loads(g.edge_count(), Rat(0));
        int z = rd.landing.at(t);
        auto [back, rev_edges] = rd.rev.walk(g, z, cont.rev_token);
        for (int e : rev_edges) loads[e] += 1;
        if (cont.is_branch) {
            int64_t span = cont.hi - cont.lo + 1;
            Rat p(1, span);
            for (int64_t t2 = cont.lo; t2 <= cont.hi; ++t2) {
                const EdgeLoads& sub = branch_token_loads(cont.next_round, t2);
                for (int e = 0; e < g.edge_count(); ++e)
                    if (sub[e] != 0) loads[e] += p * sub[e];
            }
        } else {
            if (!cont.path) throw std::logic_error("exact: continuation without path");
            EdgeLoads sub = path_loads(*cont.path, back);
            for (int e = 0; e < g.edge_count(); ++e) loads[e] += sub[e];
        }
        return cont_memo.emplace(key, std::move(loads)).first->second;
    }

    std::map<std::pair<int, int64_t>, EdgeLoads> branch_memo;
    // loads of taking forward token t in round r (fwd walk + continuation)
    const EdgeLoads& branch_token_loads(int r, int64_t t) {
        auto key = std::make_pair(r, t);
        auto it = branch_memo.find(key);
        if (it != branch_memo.end()) return it->second;
        const auto& rd = em.rounds()[r];
        int start = rd.fwd.start_of(t);
        EdgeLoads loads(g.edge_count(), Rat(0));
        auto [z, fwd_edges] = rd.fwd.walk(g, start, t);
        (void)z;
        for (int e : fwd_edges) loads[e] += 1;
        const EdgeLoads& sub = continuation_loads(r, t);
        for (int e = 0; e < g.edge_count(); ++e) loads[e] += sub[e];
        return branch_memo.emplace(key, std::move(loads)).first->second;
    }

    EdgeLoads arc_loads(int a) {
        const auto& plan = em.plan(a);
        const auto& arc = em.arcs()[a];
        EdgeLoads loads(g.edge_count(), Rat(0));
        if (plan.d_large > 0) {
            Rat pl(plan.d_large, plan.d_total);
            int64_t span = plan.fwd_hi - plan.fwd_lo + 1;
            Rat pt = pl / span;
            for (int64_t t = plan.fwd_lo; t <= plan.fwd_hi; ++t) {
                const EdgeLoads& sub = branch_token_loads(plan.elim_round, t);
                for (int e = 0; e < g.edge_count(); ++e)
                    if (sub[e] != 0) loads[e] += pt * sub[e];
            }
        }
        if (plan.d_large < plan.d_total) {
            if (!plan.residual) throw std::logic_error("exact: missing residual path");
            Rat pr(plan.d_total - plan.d_large, plan.d_total);
            EdgeLoads sub = path_loads(*plan.residual, arc.u);
            for (int e = 0; e < g.edge_count(); ++e) loads[e] += pr * sub[e];
        }
        return loads;
    }
};

}  // namespace

std::vector<Rat> Simulator::exact_unit_loads(int src, int dst) const {
    const Graph& g = b_->graph();
    ExactCache& cache = exact_cache();
    std::lock_guard<std::mutex> lock(cache.mutex);

    EdgeLoads total(g.edge_count(), Rat(0));
    if (src == dst) return total;

    auto flow_from = [&](const FlowTs& ts, int u) -> const Kernel& {
        auto key = std::make_pair(static_cast<const void*>(&ts), u);
        auto it = cache.flow.find(key);
        if (it == cache.flow.end()) it = cache.flow.emplace(key, flow_ts_kernel(g, ts, u)).first;
        return it->second;
    };
    auto pmcf_from = [&](int cluster_id, int u) -> const Kernel& {
        auto& per = cache.pmcf[cluster_id];
        auto it = per.find(u);
        if (it == per.end())
            it = per.emplace(u, pmcf_kernel_from(g, *b_->scheme(cluster_id).pmcf, u)).first;
        return it->second;
    };
    auto embed_arc = [&](int cluster_id, int a) -> const EdgeLoads& {
        auto& per = cache.embed_arcs[cluster_id];
        const EmbedCts& em = b_->scheme(cluster_id).unmixing.cube.embed();
        if (per.empty()) per.resize(em.arcs().size());
        if (per[a].empty()) {
            EmbedExact ee{g, em, {}, {}};
            per[a] = ee.arc_loads(a);
        }
        return per[a];
    };

    // mixing kernel from one source node
    auto mix_kernel = [&](int cluster_id, int child_idx, int u) -> const Kernel& {
        auto key = std::make_tuple(cluster_id, child_idx, u);
        auto it = cache.mix.find(key);
        if (it != cache.mix.end()) return it->second;
        const ClusterScheme& cs = b_->scheme(cluster_id);
        Kernel k;
        k.loads.assign(g.edge_count(), Rat(0));
        const Kernel& s1 = flow_from(cs.mixing.stage1[child_idx], u);
        for (int e = 0; e < g.edge_count(); ++e) k.loads[e] += s1.loads[e];
        for (const auto& [w, p] : s1.dist) {
            const Kernel& pk = pmcf_from(cluster_id, w);
            for (const auto& [t, q] : pk.dist) k.dist[t] += p * q;
            for (int e = 0; e < g.edge_count(); ++e)
                if (pk.loads[e] != 0) k.loads[e] += p * pk.loads[e];
        }
        return cache.mix.emplace(key, std::move(k)).first->second;
    };

    // unmixing kernel from one source node for one commodity
    auto unmix_kernel = [&](int cluster_id, int commodity, int u) -> const Kernel& {
        auto key = std::make_tuple(cluster_id, commodity, u);
        auto it = cache.unmix.find(key);
        if (it != cache.unmix.end()) return it->second;
        const ClusterScheme& cs = b_->scheme(cluster_id);
        const Cluster& c = b_->tree().cluster(cluster_id);
        int cls = c.child_class[commodity];
        Kernel k;
        k.loads.assign(g.edge_count(), Rat(0));
        const Kernel& s1 = flow_from(cs.unmixing.stage1.at(cls), u);
        for (int e = 0; e < g.edge_count(); ++e) k.loads[e] += s1.loads[e];

        const auto* cube = cs.unmixing.cube.cube_for_class(cls);
        if (!cube) throw std::logic_error("exact: no cube for class");
        auto [ylo, ysize] = cs.unmixing.cube.child_range(commodity);
        int64_t size = int64_t{1} << cube->dim;

        // distribution after the cube + stage 3, weighted by stage-1 arrivals
        for (const auto& [w, p] : s1.dist) {
            const auto& ids = cube->ids_of[w];
            if (ids.empty()) throw std::logic_error("exact: cube entry node owns no ids");
            Rat px = p / static_cast<int64_t>(ids.size());
            for (int64_t x : ids) {
                // arc usage over Valiant pairs (x -> z -> y)
                std::map<int, Rat> arc_use;  // arc -> expected traversals
                Rat pz(1, size);
                auto add_fix_path = [&](int64_t from, int64_t to, const Rat& weight) {
                    int64_t cur = from;
                    while (cur != to) {
                        int64_t diff = cur ^ to;
                        int bit = 0;
                        while (!((diff >> bit) & 1)) ++bit;
                        int arc = cube->neighbor_arc[cur][bit];
                        cur ^= int64_t{1} << bit;
                        if (arc >= 0) arc_use[arc] += weight;
                    }
                    return cur;
                };
                for (int64_t z = 0; z < size; ++z) {
                    add_fix_path(x, z, px * pz);
                    Rat py = px * pz / ysize;
                    for (int64_t y = ylo; y < ylo + ysize; ++y) add_fix_path(z, y, py);
                }
                for (const auto& [arc, cnt] : arc_use) {
                    const EdgeLoads& al = embed_arc(cluster_id, arc);
                    for (int e = 0; e < g.edge_count(); ++e)
                        if (al[e] != 0) k.loads[e] += cnt * al[e];
                }
                // target node distribution from y, then stage 3
                Rat py(1, ysize);
                for (int64_t y = ylo; y < ylo + ysize; ++y) {
                    int owner = static_cast<int>(cube->owner[y]);
                    Rat weight = px * py;
                    const Kernel& s3 = flow_from(cs.unmixing.stage3[commodity], owner);
                    for (const auto& [t, q] : s3.dist) k.dist[t] += weight * q;
                    for (int e = 0; e < g.edge_count(); ++e)
                        if (s3.loads[e] != 0) k.loads[e] += weight * s3.loads[e];
                }
            }
        }
        return cache.unmix.emplace(key, std::move(k)).first->second;
    };

    // walk the tree path, composing kernels
    const auto& lsrc = b_->label(src);
    const auto& ldst = b_->label(dst);
    size_t lca = 0;
    while (lca < lsrc.size() && lca < ldst.size() && lsrc[lca] == ldst[lca]) ++lca;

    Dist state;
    state[src] = 1;
    auto apply = [&](auto&& kernel_of) {
        Dist next;
        for (const auto& [u, p] : state) {
            const Kernel& k = kernel_of(u);
            for (const auto& [t, q] : k.dist) next[t] += p * q;
            for (int e = 0; e < g.edge_count(); ++e)
                if (k.loads[e] != 0) total[e] += p * k.loads[e];
        }
        state = std::move(next);
    };

    for (int depth = static_cast<int>(lsrc.size()); depth > static_cast<int>(lca); --depth) {
        int cluster_id = b_->cluster_at(src, depth - 1);
        int child_idx = lsrc[depth - 1];
        apply([&](int u) -> const Kernel& { return mix_kernel(cluster_id, child_idx, u); });
    }
    for (int depth = static_cast<int>(lca); depth < static_cast<int>(ldst.size()); ++depth) {
        int cluster_id = b_->cluster_at(dst, depth);
        int commodity = ldst[depth];
        apply([&](int u) -> const Kernel& { return unmix_kernel(cluster_id, commodity, u); });
    }
    if (state.size() != 1 || state.begin()->first != dst || state.begin()->second != 1)
        throw std::logic_error("exact evaluation did not deliver the full unit mass");
    return total;
}

LoadReport Simulator::simulate_exact(const DemandMatrix& d) const {
    const Graph& g = b_->graph();
    LoadReport rep;
    rep.trials = 0;
    rep.per_edge.assign(g.edge_count(), Rat(0));
    for (const auto& entry : d.entries()) {
        if (entry.src == entry.dst) {
            rep.delivery[{entry.src, entry.dst}] = 1;
            continue;
        }
        auto unit = exact_unit_loads(entry.src, entry.dst);
        for (int e = 0; e < g.edge_count(); ++e) rep.per_edge[e] += entry.amount * unit[e];
        rep.delivery[{entry.src, entry.dst}] = 1;
    }
    for (int e = 0; e < g.edge_count(); ++e) {
        Rat r = rep.per_edge[e] / g.edge(e).capacity;
        if (r > rep.congestion) rep.congestion = r;
    }
    return rep;
}

}  // namespace croute
