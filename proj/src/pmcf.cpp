#include "croute/pmcf.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "croute/flow_engine.hpp"

namespace croute {

CutMatchingState::CutMatchingState(const std::vector<int>& cluster, const std::vector<int64_t>& c,
                                   uint64_t seed)
    : n_(static_cast<int>(cluster.size())), rng_(seed, 0x637574706c617965ULL) {
    blocks_.resize(n_);
    for (int i = 0; i < n_; ++i) {
        blocks_[i] = 2 * int64_t{n_} * c[cluster[i]];
        vcount_ += blocks_[i];
    }
    mass_.assign(static_cast<size_t>(n_) * n_, 0.0);
    for (int i = 0; i < n_; ++i) mass_[static_cast<size_t>(i) * n_ + i] = 1.0;
}

std::vector<int64_t> CutMatchingState::cut_partition() {
    // Gaussian per-block coefficients emulate projecting the block-uniform
    // rows onto a random direction over V'.
    std::vector<double> rho(n_), proj(n_);
    for (int i = 0; i < n_; ++i) {
        // Box-Muller from the counter rng.
        double u1 = (static_cast<double>(rng_.next() >> 11) + 0.5) / 9007199254740992.0;
        double u2 = (static_cast<double>(rng_.next() >> 11) + 0.5) / 9007199254740992.0;
        double gauss = std::sqrt(-2.0 * std::log(u1)) * std::cos(2 * M_PI * u2);
        rho[i] = blocks_[i] > 0 ? gauss / std::sqrt(static_cast<double>(blocks_[i])) : 0.0;
    }
    for (int i = 0; i < n_; ++i) {
        const double* row = &mass_[static_cast<size_t>(i) * n_];
        double s = 0;
        for (int b = 0; b < n_; ++b) s += row[b] * rho[b];
        proj[i] = s;
    }
    std::vector<int> order(n_);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return proj[a] < proj[b]; });

    // Whole blocks fill A1 until half is reached; the boundary block splits.
    std::vector<int64_t> mu1(n_, 0);
    int64_t remaining = vcount_ / 2;
    for (int i : order) {
        int64_t take = std::min(remaining, blocks_[i]);
        mu1[i] = take;
        remaining -= take;
        if (remaining == 0) break;
    }
    return mu1;
}

void CutMatchingState::apply_round(const std::vector<std::vector<int64_t>>& k) {
    // Row update: row <- 1/2 row + 1/2 row * K/|block|.
    std::vector<double> next(static_cast<size_t>(n_) * n_, 0.0);
    for (int i = 0; i < n_; ++i) {
        const double* row = &mass_[static_cast<size_t>(i) * n_];
        double* out = &next[static_cast<size_t>(i) * n_];
        for (int b = 0; b < n_; ++b) {
            double m = row[b];
            if (m == 0) continue;
            out[b] += 0.5 * m;
            if (blocks_[b] == 0) continue;
            double inv = 0.5 * m / static_cast<double>(blocks_[b]);
            for (int b2 = 0; b2 < n_; ++b2) out[b2] += inv * k[b][b2];
        }
    }
    mass_ = std::move(next);
}

double CutMatchingState::potential() const {
    // sum over virtual nodes of || P(v',.) - 1/|V'| ||^2 with the block mass
    // spread uniformly inside each block.
    double pot = 0;
    for (int i = 0; i < n_; ++i) {
        const double* row = &mass_[static_cast<size_t>(i) * n_];
        double row_pot = 0;
        for (int b = 0; b < n_; ++b) {
            if (blocks_[b] == 0) continue;
            double per = row[b] / static_cast<double>(blocks_[b]) - 1.0 / static_cast<double>(vcount_);
            row_pot += per * per * static_cast<double>(blocks_[b]);
        }
        pot += row_pot * static_cast<double>(blocks_[i]);
    }
    return pot;
}

PmcfCts PmcfCts::build(const Graph& g, const std::vector<int>& cluster,
                       const std::vector<int64_t>& c, const Config& cfg, uint64_t seed) {
    PmcfCts cts;
    cts.cluster_ = cluster;
    cts.c_.assign(g.node_count(), 0);
    for (int v : cluster) {
        if (c[v] < 0) throw std::invalid_argument("pmcf: negative weight");
        cts.c_[v] = c[v];
        cts.c_total_ += c[v];
    }
    if (cts.c_total_ == 0) throw std::invalid_argument("pmcf: zero weight function");
    cts.n_ = static_cast<int>(cluster.size());

    int64_t vcount = 2 * int64_t{cts.n_} * cts.c_total_;
    double lg = std::log2(static_cast<double>(vcount));
    cts.rounds_ = static_cast<int>(std::ceil(cfg.kappa * lg * lg));
    if (cts.rounds_ < 1) cts.rounds_ = 1;
    cts.idx_space_ = 2 * int64_t{cts.n_} * cts.n_ * cts.c_total_ * cts.rounds_;

    CutMatchingState state(cluster, cts.c_, seed);

    std::vector<int> pos_of(g.node_count(), -1);
    for (int i = 0; i < cts.n_; ++i) pos_of[cluster[i]] = i;

    for (int k = 0; k < cts.rounds_; ++k) {
        std::vector<int64_t> mu1_pos = state.cut_partition();
        std::vector<int64_t> mu1(g.node_count(), 0), mu2(g.node_count(), 0);
        for (int i = 0; i < cts.n_; ++i) {
            mu1[cluster[i]] = mu1_pos[i];
            mu2[cluster[i]] = state.block_size(i) - mu1_pos[i];
        }
        Distribution da(g.node_count()), db(g.node_count());
        for (int v : cluster) {
            da.set(v, Rat(mu1[v]));
            db.set(v, Rat(mu2[v]));
        }
        Flow f = min_congestion_flow(g, da, db, cluster);
        IntegralAcyclicFlow fa = integralize_acyclic(g, f, mu1, mu2);
        PmcfRound rd;
        rd.ts1 = FlowTs::build(fa, mu1, mu2);
        // Reverse flow for the way back.
        IntegralAcyclicFlow rb;
        rb.g = &g;
        rb.f.resize(g.edge_count());
        for (int e = 0; e < g.edge_count(); ++e) rb.f[e] = -fa.f[e];
        rb.topo_order.assign(fa.topo_order.rbegin(), fa.topo_order.rend());
        rb.value = fa.value;
        rd.ts2 = FlowTs::build(rb, mu2, mu1);

        // Token target counts feed the cut player's walk update.
        std::vector<std::vector<int64_t>> kmat(cts.n_, std::vector<int64_t>(cts.n_, 0));
        for (const FlowTs* ts : {&rd.ts1, &rd.ts2})
            for (int i = 0; i < cts.n_; ++i) {
                int v = cluster[i];
                for (int64_t t = 1; t <= ts->count(v); ++t)
                    ++kmat[i][pos_of[ts->target_of(g, v, t)]];
            }
        state.apply_round(kmat);
        cts.potential_trace.push_back(state.potential());
        cts.rounds_data_.push_back(std::move(rd));
    }
    return cts;
}

int PmcfCts::exec_round(const Graph& g, int k, int v, bool move, int64_t iprime,
                        std::vector<int>* edges_out) const {
    if (!move) return v;
    int64_t b = virtual_of(v);
    if (b == 0) throw std::logic_error("pmcf: packet at zero-weight node between rounds");
    int64_t i = (iprime - 1) % b + 1;
    const PmcfRound& rd = rounds_data_[k];
    const FlowTs* ts;
    int64_t token;
    if (i <= rd.ts1.count(v)) {
        ts = &rd.ts1;
        token = rd.ts1.token_for(v, i);
    } else {
        ts = &rd.ts2;
        token = rd.ts2.token_for(v, i - rd.ts1.count(v));
    }
    auto [end, edges] = ts->walk(g, v, token);
    if (edges_out) edges_out->insert(edges_out->end(), edges.begin(), edges.end());
    return end;
}

int PmcfCts::exec_random(const Graph& g, int v, CounterRng& rng, std::vector<int>* edges_out) const {
    int cur = v;
    for (int k = 0; k < rounds_; ++k) {
        bool move = rng.coin();
        int64_t iprime = static_cast<int64_t>(rng.below(static_cast<uint64_t>(idx_space_))) + 1;
        cur = exec_round(g, k, cur, move, iprime, edges_out);
    }
    return cur;
}

size_t PmcfCts::table_bits(const Graph& g, int v) const {
    size_t bits = 0;
    for (const auto& rd : rounds_data_) bits += rd.ts1.table_bits(g, v) + rd.ts2.table_bits(g, v);
    return bits;
}

void PmcfCts::serialize(const Graph& g, BitWriter& w) const {
    w.put(static_cast<uint64_t>(n_), 32);
    for (int v : cluster_) w.put(static_cast<uint64_t>(v), 32);
    for (int v : cluster_) w.put(static_cast<uint64_t>(c_[v]), 64);
    w.put(static_cast<uint64_t>(rounds_), 32);
    w.put(static_cast<uint64_t>(idx_space_), 64);
    for (const auto& rd : rounds_data_) {
        rd.ts1.serialize(g, w);
        rd.ts2.serialize(g, w);
    }
}

PmcfCts PmcfCts::deserialize(const Graph& g, BitReader& r) {
    PmcfCts cts;
    cts.n_ = static_cast<int>(r.get(32));
    cts.cluster_.resize(cts.n_);
    for (int& v : cts.cluster_) v = static_cast<int>(r.get(32));
    cts.c_.assign(g.node_count(), 0);
    for (int v : cts.cluster_) {
        cts.c_[v] = static_cast<int64_t>(r.get(64));
        cts.c_total_ += cts.c_[v];
    }
    cts.rounds_ = static_cast<int>(r.get(32));
    cts.idx_space_ = static_cast<int64_t>(r.get(64));
    for (int k = 0; k < cts.rounds_; ++k) {
        PmcfRound rd;
        rd.ts1 = FlowTs::deserialize(g, r);
        rd.ts2 = FlowTs::deserialize(g, r);
        cts.rounds_data_.push_back(std::move(rd));
    }
    return cts;
}

bool PmcfCts::operator==(const PmcfCts& o) const {
    if (cluster_ != o.cluster_ || c_ != o.c_ || rounds_ != o.rounds_ || idx_space_ != o.idx_space_)
        return false;
    for (int k = 0; k < rounds_; ++k)
        if (!(rounds_data_[k].ts1 == o.rounds_data_[k].ts1) ||
            !(rounds_data_[k].ts2 == o.rounds_data_[k].ts2))
            return false;
    return true;
}

void PmcfCts::retain_only(int keep) {
    for (auto& rd : rounds_data_) {
        rd.ts1.retain_only(keep);
        rd.ts2.retain_only(keep);
    }
}

PmcfPathId draw_pmcf_path_id(const PmcfCts& cts, CounterRng& rng) {
    PmcfPathId id;
    id.move.resize(cts.rounds());
    id.iprime.resize(cts.rounds());
    for (int k = 0; k < cts.rounds(); ++k) {
        id.move[k] = rng.coin() ? 1 : 0;
        id.iprime[k] = static_cast<int64_t>(rng.below(static_cast<uint64_t>(cts.index_space()))) + 1;
    }
    return id;
}

int replay_pmcf(const Graph& g, const PmcfCts& cts, int v, const PmcfPathId& id,
                std::vector<int>* edges_out, int* min_class) {
    int cur = v;
    std::vector<int> edges;
    for (int k = 0; k < cts.rounds(); ++k)
        cur = cts.exec_round(g, k, cur, id.move[k] != 0, id.iprime[k], &edges);
    if (min_class) {
        int mc = INT_MAX;
        for (int e : edges) mc = std::min(mc, g.edge(e).cls);
        *min_class = mc;
    }
    if (edges_out) edges_out->insert(edges_out->end(), edges.begin(), edges.end());
    return cur;
}

}  // namespace croute
