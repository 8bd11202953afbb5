#include "croute/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "croute/flow_engine.hpp"

namespace croute {

namespace {

void serialize_path_id(BitWriter& w, const PmcfPathId& id, const PmcfCts& pmcf) {
    int iw = pmcf.index_width();
    for (int k = 0; k < pmcf.rounds(); ++k) {
        w.put_bit(id.move[k] != 0);
        w.put(static_cast<uint64_t>(id.iprime[k] - 1), iw);
    }
}

PmcfPathId deserialize_path_id(BitReader& r, const PmcfCts& pmcf) {
    PmcfPathId id;
    int iw = pmcf.index_width();
    id.move.resize(pmcf.rounds());
    id.iprime.resize(pmcf.rounds());
    for (int k = 0; k < pmcf.rounds(); ++k) {
        id.move[k] = r.get_bit() ? 1 : 0;
        id.iprime[k] = static_cast<int64_t>(r.get(iw)) + 1;
    }
    return id;
}

PmcfPathId all_stay_id(const PmcfCts& pmcf) {
    PmcfPathId id;
    id.move.assign(pmcf.rounds(), 0);
    id.iprime.assign(pmcf.rounds(), 1);
    return id;
}

}  // namespace

int PathSystemSampler::sample_budget() const {
    int n = static_cast<int>(pmcf_->cluster().size());
    return static_cast<int>(std::ceil(cfg_->sample_factor * g_->num_classes() * std::log(n + 4.0)));
}

std::optional<PmcfPathId> PathSystemSampler::leg2_to(int w, int v) {
    auto key = std::make_pair(w, v);
    auto it = pool_.find(key);
    if (it != pool_.end() && !it->second.empty()) {
        PmcfPathId id = std::move(it->second.back());
        it->second.pop_back();
        return id;
    }
    // Rejection sampling; misses are pooled for later requests.
    int64_t budget = 64 * (pmcf_->weight_total() + 1);
    for (int64_t tries = 0; tries < budget; ++tries) {
        PmcfPathId id = draw_pmcf_path_id(*pmcf_, rng_);
        int end = replay_pmcf(*g_, *pmcf_, w, id);
        if (end == v) return id;
        pool_[{w, end}].push_back(std::move(id));
    }
    return std::nullopt;
}

SampledPath PathSystemSampler::sample_one(int u, int v) {
    while (true) {
        PmcfPathId leg1 = draw_pmcf_path_id(*pmcf_, rng_);
        int cls1 = INT_MAX;
        int mid = replay_pmcf(*g_, *pmcf_, u, leg1, nullptr, &cls1);
        auto leg2 = leg2_to(mid, v);
        if (!leg2) continue;  // dead intermediate; resample the first leg
        int cls2 = INT_MAX;
        replay_pmcf(*g_, *pmcf_, mid, *leg2, nullptr, &cls2);
        SampledPath p;
        p.leg1 = std::move(leg1);
        p.leg2 = std::move(*leg2);
        p.mid = mid;
        p.cls = std::min(cls1, cls2);
        return p;
    }
}

const PathSystem& PathSystemSampler::system(int u, int v) {
    auto key = std::make_pair(u, v);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    PathSystem ps;
    ps.src = u;
    ps.dst = v;
    if (u == v) {
        SampledPath p;
        p.leg1 = all_stay_id(*pmcf_);
        p.leg2 = all_stay_id(*pmcf_);
        p.mid = u;
        p.cls = INT_MAX;
        ps.cls = INT_MAX;
        ps.paths.push_back(std::move(p));
        ps.raw_samples = 1;
        ps.plurality_share = 1.0;
        return cache_.emplace(key, std::move(ps)).first->second;
    }
    int m = sample_budget();
    std::vector<SampledPath> raw;
    raw.reserve(m);
    std::map<int, int> class_count;
    for (int i = 0; i < m; ++i) {
        raw.push_back(sample_one(u, v));
        ++class_count[raw.back().cls];
    }
    int best_cls = raw.front().cls, best = 0;
    for (const auto& [cls, cnt] : class_count)
        if (cnt > best || (cnt == best && cls > best_cls)) {
            best = cnt;
            best_cls = cls;
        }
    ps.cls = best_cls;
    for (auto& p : raw)
        if (p.cls == best_cls) ps.paths.push_back(std::move(p));
    ps.raw_samples = m;
    ps.plurality_share = static_cast<double>(ps.paths.size()) / m;
    return cache_.emplace(key, std::move(ps)).first->second;
}

std::vector<int> PathSystemSampler::edges_of(const SampledPath& p, int src) const {
    std::vector<int> edges;
    int mid = replay_pmcf(*g_, *pmcf_, src, p.leg1, &edges);
    if (mid != p.mid) throw std::logic_error("path system replay diverged at the intermediate node");
    replay_pmcf(*g_, *pmcf_, mid, p.leg2, &edges);
    return edges;
}

RoundedPaths round_paths(const Graph& g, PathSystemSampler& sampler,
                         const std::vector<const PathSystem*>& systems,
                         const std::vector<int64_t>& demands, const Config& cfg, CounterRng& rng) {
    if (systems.size() != demands.size()) throw std::invalid_argument("round_paths: size mismatch");
    size_t k = systems.size();
    for (size_t i = 0; i < k; ++i) {
        if (systems[i]->paths.empty()) throw std::invalid_argument("round_paths: empty path system");
        if (demands[i] <= 0) throw std::invalid_argument("round_paths: nonpositive demand");
    }

    // Fractional congestion of the systems themselves: each system spreads
    // d_i evenly over its paths.
    std::vector<Rat> frac_load(g.edge_count(), Rat(0));
    for (size_t i = 0; i < k; ++i) {
        const PathSystem& ps = *systems[i];
        Rat share(demands[i], static_cast<int64_t>(ps.paths.size()));
        for (const auto& p : ps.paths)
            for (int e : sampler.edges_of(p, ps.src)) frac_load[e] += share;
    }
    Rat frac_cong = 0;
    for (int e = 0; e < g.edge_count(); ++e) {
        Rat r = frac_load[e] / g.edge(e).capacity;
        if (r > frac_cong) frac_cong = r;
    }
    double threshold = 2.0 * to_double(frac_cong) + 6.0 * std::log(static_cast<double>(g.edge_count()));

    RoundedPaths out;
    out.fractional_congestion = frac_cong;
    for (int attempt = 1; attempt <= cfg.rounding_retries; ++attempt) {
        out.attempts = attempt;
        std::vector<std::vector<int>> chosen(k);
        std::vector<Rat> load(g.edge_count(), Rat(0));
        for (size_t i = 0; i < k; ++i) {
            const PathSystem& ps = *systems[i];
            int64_t count;
            if (ps.cls >= 62) {
                count = 1;  // empty-path sentinel class
            } else {
                int64_t unit = int64_t{1} << ps.cls;
                count = (demands[i] + unit - 1) / unit;  // ceil(2^-l d)
            }
            Rat share(demands[i], count);
            for (int64_t j = 0; j < count; ++j) {
                int pick = static_cast<int>(rng.below(ps.paths.size()));
                chosen[i].push_back(pick);
                for (int e : sampler.edges_of(ps.paths[pick], ps.src))
                    load[e] += share;
            }
        }
        Rat realized = 0;
        for (int e = 0; e < g.edge_count(); ++e) {
            Rat r = load[e] / g.edge(e).capacity;
            if (r > realized) realized = r;
        }
        if (to_double(realized) <= threshold) {
            out.chosen = std::move(chosen);
            out.realized_congestion = realized;
            return out;
        }
    }
    throw std::runtime_error("round_paths: retry budget exhausted (bad path-system input)");
}

EmbedCts EmbedCts::build(const Graph& g, const std::vector<int>& cluster,
                         const std::vector<int64_t>& c, const Rat& measured_c,
                         const PmcfCts& pmcf, const std::vector<AuxArc>& arcs, const Config& cfg,
                         uint64_t seed, int64_t demand_slack) {
    EmbedCts cts;
    cts.pmcf_ = &pmcf;
    cts.arcs_ = arcs;
    cts.by_source_.assign(g.node_count(), {});
    cts.plans_.resize(arcs.size());
    (void)measured_c;

    // Demand totals per endpoint must respect the cluster weights (up to the
    // caller-declared slack).
    std::vector<int64_t> in_total(g.node_count(), 0), out_total(g.node_count(), 0);
    for (size_t a = 0; a < arcs.size(); ++a) {
        const AuxArc& arc = arcs[a];
        if (arc.d <= 0) throw std::invalid_argument("embed: arc with nonpositive demand");
        out_total[arc.u] += arc.d;
        in_total[arc.v] += arc.d;
        cts.by_source_[arc.u].push_back(static_cast<int>(a));
        cts.plans_[a].d_total = arc.d;
    }
    for (int v : cluster)
        if (in_total[v] > demand_slack * c[v] || out_total[v] > demand_slack * c[v])
            throw std::invalid_argument("embed: arc demand totals exceed node weight at node " +
                                        std::to_string(v));

    PathSystemSampler sampler(g, pmcf, cfg, seed);
    CounterRng rng(seed, 0x656d626564637473ULL);

    struct Slot {
        enum Kind { Whole, Residual, Helper } kind;
        int arc = -1;
        int round = -1;
        int64_t token = -1;
    };
    struct Live {
        int u, v;
        int64_t d;
        Slot slot;
    };
    std::vector<Live> live;
    for (size_t a = 0; a < arcs.size(); ++a)
        live.push_back({arcs[a].u, arcs[a].v, arcs[a].d,
                        {Slot::Whole, static_cast<int>(a), -1, -1}});

    auto demand_snapshot = [&]() {
        std::vector<int64_t> totals(2 * g.node_count(), 0);
        for (const auto& l : live) {
            totals[l.u] += l.d;
            totals[g.node_count() + l.v] += l.d;
        }
        return totals;
    };

    int iterations = 0;
    while (true) {
        // Highest class with an l-large live arc.
        int l = -1;
        for (const auto& a : live) {
            int cls = sampler.system(a.u, a.v).cls;
            if (cls < 62 && a.d > (int64_t{1} << cls)) l = std::max(l, cls);
        }
        if (l < 0) break;
        if (++iterations > g.num_classes())
            throw std::logic_error("embed: elimination loop exceeded the class count");
        auto before = demand_snapshot();

        int64_t unit = int64_t{1} << l;
        std::vector<size_t> large_idx;
        std::vector<const PathSystem*> systems;
        std::vector<int64_t> dprime;
        for (size_t i = 0; i < live.size(); ++i) {
            const PathSystem& ps = sampler.system(live[i].u, live[i].v);
            if (ps.cls == l && live[i].d > unit) {
                large_idx.push_back(i);
                systems.push_back(&ps);
                dprime.push_back(live[i].d / unit * unit);
            }
        }

        RoundedPaths rounded = round_paths(g, sampler, systems, dprime, cfg, rng);

        // Prefixes up to and including the first class-l edge become a flow.
        Elim elim;
        elim.cls = l;
        std::vector<int64_t> mu(g.node_count(), 0), mu_out(g.node_count(), 0);
        std::vector<int64_t> fsigned(g.edge_count(), 0);
        for (size_t j = 0; j < large_idx.size(); ++j) {
            const Live& a = live[large_idx[j]];
            const PathSystem& ps = *systems[j];
            for (int pick : rounded.chosen[j]) {
                auto edges = sampler.edges_of(ps.paths[pick], a.u);
                int cur = a.u;
                bool found = false;
                for (int e : edges) {
                    int nxt = g.other(e, cur);
                    fsigned[e] += (g.edge(e).u == cur) ? 1 : -1;
                    cur = nxt;
                    if (g.edge(e).cls == l) {
                        found = true;
                        break;
                    }
                }
                if (!found) throw std::logic_error("embed: class-l path has no class-l edge");
                ++mu[a.u];
                ++mu_out[cur];
            }
        }
        Flow fr(g);
        for (int e = 0; e < g.edge_count(); ++e) fr.set_oriented(e, Rat(fsigned[e]));
        IntegralAcyclicFlow fa = integralize_acyclic(g, fr, mu, mu_out);
        elim.fwd = FlowTs::build(fa, mu, mu_out);
        IntegralAcyclicFlow rb;
        rb.g = &g;
        rb.f.resize(g.edge_count());
        for (int e = 0; e < g.edge_count(); ++e) rb.f[e] = -fa.f[e];
        rb.topo_order.assign(fa.topo_order.rbegin(), fa.topo_order.rend());
        rb.value = fa.value;
        elim.rev = FlowTs::build(rb, mu_out, mu);

        // Contiguous forward-token ranges per large arc, in source-node order.
        std::vector<int64_t> cursor(g.node_count(), 0);
        int round_index = static_cast<int>(cts.rounds_.size());
        std::vector<std::pair<int64_t, int64_t>> ranges(large_idx.size());
        for (size_t j = 0; j < large_idx.size(); ++j) {
            const Live& a = live[large_idx[j]];
            int64_t n_tok = dprime[j] / unit;
            int64_t lo = elim.fwd.offset(a.u) + cursor[a.u] + 1;
            cursor[a.u] += n_tok;
            ranges[j] = {lo, lo + n_tok - 1};
        }

        // Route every token through fwd and rev; record landings and the
        // sorted-order mapping to reverse path ids.
        std::map<int64_t, int> landing;  // fwd token -> node
        for (size_t j = 0; j < large_idx.size(); ++j)
            for (int64_t t = ranges[j].first; t <= ranges[j].second; ++t)
                landing[t] = elim.fwd.walk(g, live[large_idx[j]].u, t).first;

        std::map<int, std::vector<int64_t>> tokens_at;
        for (const auto& [t, z] : landing) tokens_at[z].push_back(t);
        std::map<int64_t, int64_t> rev_token_of;
        std::map<int64_t, int> back_at;  // fwd token -> node after the reverse leg
        for (const auto& [z, toks] : tokens_at) {
            if (static_cast<int64_t>(toks.size()) != elim.rev.count(z))
                throw std::logic_error("embed: landing multiset does not match reverse sources");
            for (size_t rk = 0; rk < toks.size(); ++rk) {
                int64_t rev_tok = elim.rev.token_for(z, static_cast<int64_t>(rk) + 1);
                rev_token_of[toks[rk]] = rev_tok;
                back_at[toks[rk]] = elim.rev.walk(g, z, rev_tok).first;
            }
        }

        // Write branch specs into the slots and enqueue the split arcs.
        std::vector<Live> next_live;
        std::vector<char> is_large(live.size(), 0);
        for (size_t idx : large_idx) is_large[idx] = 1;
        for (size_t i = 0; i < live.size(); ++i)
            if (!is_large[i]) next_live.push_back(live[i]);

        for (size_t j = 0; j < large_idx.size(); ++j) {
            const Live& a = live[large_idx[j]];
            int64_t residual = a.d - dprime[j];
            switch (a.slot.kind) {
                case Slot::Whole: {
                    ArcPlan& plan = cts.plans_[a.slot.arc];
                    plan.d_large = dprime[j];
                    plan.elim_round = round_index;
                    plan.fwd_lo = ranges[j].first;
                    plan.fwd_hi = ranges[j].second;
                    if (residual > 0)
                        next_live.push_back(
                            {a.u, a.v, residual, {Slot::Residual, a.slot.arc, -1, -1}});
                    break;
                }
                case Slot::Helper: {
                    if (residual != 0) throw std::logic_error("embed: split arc has a residual");
                    Continuation& cont = cts.rounds_[a.slot.round].entries.at(a.slot.token);
                    cont.is_branch = true;
                    cont.next_round = round_index;
                    cont.lo = ranges[j].first;
                    cont.hi = ranges[j].second;
                    break;
                }
                case Slot::Residual:
                    throw std::logic_error("embed: residual arc became large");
            }
            for (int64_t t = ranges[j].first; t <= ranges[j].second; ++t) {
                Continuation cont;
                cont.rev_token = rev_token_of.at(t);
                elim.entries.emplace(t, cont);
                next_live.push_back({back_at.at(t), a.v, unit, {Slot::Helper, -1, round_index, t}});
            }
        }
        elim.landing = std::move(landing);
        cts.rounds_.push_back(std::move(elim));
        live = std::move(next_live);

        auto after = demand_snapshot();
        if (before != after) throw std::logic_error("embed: elimination changed node demand totals");
    }

    // Final stage: every live arc routes over a single stored path.
    if (!live.empty()) {
        std::vector<const PathSystem*> systems;
        std::vector<int64_t> demands;
        for (const auto& a : live) {
            systems.push_back(&sampler.system(a.u, a.v));
            demands.push_back(a.d);
        }
        RoundedPaths rounded = round_paths(g, sampler, systems, demands, cfg, rng);
        for (size_t i = 0; i < live.size(); ++i) {
            if (rounded.chosen[i].size() != 1)
                throw std::logic_error("embed: non-large arc was assigned multiple paths");
            const SampledPath& p = systems[i]->paths[rounded.chosen[i][0]];
            SinglePath sp;
            sp.id1 = p.leg1;
            sp.id2 = p.leg2;
            sp.mid = p.mid;
            sp.dst = live[i].v;
            const Slot& slot = live[i].slot;
            switch (slot.kind) {
                case Slot::Whole:
                case Slot::Residual:
                    cts.plans_[slot.arc].residual = std::move(sp);
                    break;
                case Slot::Helper:
                    cts.rounds_[slot.round].entries.at(slot.token).path = std::move(sp);
                    break;
            }
        }
    }

    for (int v : cluster)
        cts.max_storage_bits_node_ = std::max<int64_t>(
            cts.max_storage_bits_node_, static_cast<int64_t>(cts.table_bits(g, v)));
    return cts;
}

size_t EmbedCts::table_bits(const Graph& g, int v) const {
    BitWriter w;
    auto put_path = [&](const SinglePath& sp) {
        w.put(static_cast<uint64_t>(sp.mid), 32);
        w.put(static_cast<uint64_t>(sp.dst), 32);
        serialize_path_id(w, sp.id1, *pmcf_);
        serialize_path_id(w, sp.id2, *pmcf_);
    };
    // arc plans stored at their source
    for (int a : by_source_[v]) {
        const ArcPlan& p = plans_[a];
        w.put(static_cast<uint64_t>(arcs_[a].v), 32);
        w.put(static_cast<uint64_t>(p.d_total), 64);
        w.put(static_cast<uint64_t>(p.d_large), 64);
        w.put_bit(p.elim_round >= 0);
        if (p.elim_round >= 0) {
            int tw = bit_width_for(
                static_cast<uint64_t>(rounds_[p.elim_round].fwd.total_tokens()) + 1);
            w.put(static_cast<uint64_t>(p.elim_round), 8);
            w.put(static_cast<uint64_t>(p.fwd_lo), tw);
            w.put(static_cast<uint64_t>(p.fwd_hi), tw);
        }
        w.put_bit(p.residual.has_value());
        if (p.residual) put_path(*p.residual);
    }
    // per-round TS node records + helper entries landing here
    for (const auto& rd : rounds_) {
        rd.fwd.serialize_node(g, v, w);
        rd.rev.serialize_node(g, v, w);
        int tw = bit_width_for(static_cast<uint64_t>(rd.fwd.total_tokens()) + 1);
        int rw = bit_width_for(static_cast<uint64_t>(rd.rev.total_tokens()) + 1);
        for (const auto& [t, cont] : rd.entries) {
            if (rd.landing.at(t) != v) continue;
            w.put(static_cast<uint64_t>(t), tw);
            w.put(static_cast<uint64_t>(cont.rev_token), rw);
            w.put_bit(cont.is_branch);
            if (cont.is_branch) {
                int nw = bit_width_for(
                    static_cast<uint64_t>(rounds_[cont.next_round].fwd.total_tokens()) + 1);
                w.put(static_cast<uint64_t>(cont.next_round), 8);
                w.put(static_cast<uint64_t>(cont.lo), nw);
                w.put(static_cast<uint64_t>(cont.hi), nw);
            }
            w.put_bit(cont.path.has_value());
            if (cont.path) put_path(*cont.path);
        }
    }
    return w.bit_size();
}

void serialize_single_path(BitWriter& w, const EmbedCts::SinglePath& sp, const PmcfCts& pmcf) {
    w.put(static_cast<uint64_t>(sp.mid), 32);
    w.put(static_cast<uint64_t>(sp.dst), 32);
    serialize_path_id(w, sp.id1, pmcf);
    serialize_path_id(w, sp.id2, pmcf);
}

void EmbedCts::serialize(const Graph& g, BitWriter& w) const {
    w.put(arcs_.size(), 32);
    for (const auto& a : arcs_) {
        w.put(static_cast<uint64_t>(a.u), 32);
        w.put(static_cast<uint64_t>(a.v), 32);
        w.put(static_cast<uint64_t>(a.d), 64);
    }
    for (const auto& p : plans_) {
        w.put(static_cast<uint64_t>(p.d_large), 64);
        w.put_bit(p.elim_round >= 0);
        if (p.elim_round >= 0) {
            w.put(static_cast<uint64_t>(p.elim_round), 8);
            w.put(static_cast<uint64_t>(p.fwd_lo), 64);
            w.put(static_cast<uint64_t>(p.fwd_hi), 64);
        }
        w.put_bit(p.residual.has_value());
        if (p.residual) serialize_single_path(w, *p.residual, *pmcf_);
    }
    w.put(rounds_.size(), 8);
    for (const auto& rd : rounds_) {
        w.put(static_cast<uint64_t>(rd.cls), 8);
        rd.fwd.serialize(g, w);
        rd.rev.serialize(g, w);
        w.put(rd.entries.size(), 32);
        for (const auto& [t, cont] : rd.entries) {
            w.put(static_cast<uint64_t>(t), 64);
            w.put(static_cast<uint64_t>(rd.landing.at(t)), 32);
            w.put(static_cast<uint64_t>(cont.rev_token), 64);
            w.put_bit(cont.is_branch);
            if (cont.is_branch) {
                w.put(static_cast<uint64_t>(cont.next_round), 8);
                w.put(static_cast<uint64_t>(cont.lo), 64);
                w.put(static_cast<uint64_t>(cont.hi), 64);
            }
            w.put_bit(cont.path.has_value());
            if (cont.path) serialize_single_path(w, *cont.path, *pmcf_);
        }
    }
}

EmbedCts EmbedCts::deserialize(const Graph& g, const PmcfCts& pmcf, BitReader& r) {
    EmbedCts cts;
    cts.pmcf_ = &pmcf;
    cts.by_source_.assign(g.node_count(), {});
    uint64_t na = r.get(32);
    for (uint64_t i = 0; i < na; ++i) {
        AuxArc a;
        a.u = static_cast<int>(r.get(32));
        a.v = static_cast<int>(r.get(32));
        a.d = static_cast<int64_t>(r.get(64));
        cts.by_source_[a.u].push_back(static_cast<int>(i));
        cts.arcs_.push_back(a);
    }
    auto read_path = [&]() {
        SinglePath sp;
        sp.mid = static_cast<int>(r.get(32));
        sp.dst = static_cast<int>(r.get(32));
        sp.id1 = deserialize_path_id(r, pmcf);
        sp.id2 = deserialize_path_id(r, pmcf);
        return sp;
    };
    cts.plans_.resize(na);
    for (uint64_t i = 0; i < na; ++i) {
        ArcPlan& p = cts.plans_[i];
        p.d_total = cts.arcs_[i].d;
        p.d_large = static_cast<int64_t>(r.get(64));
        if (r.get_bit()) {
            p.elim_round = static_cast<int>(r.get(8));
            p.fwd_lo = static_cast<int64_t>(r.get(64));
            p.fwd_hi = static_cast<int64_t>(r.get(64));
        }
        if (r.get_bit()) p.residual = read_path();
    }
    uint64_t nr = r.get(8);
    for (uint64_t k = 0; k < nr; ++k) {
        Elim rd;
        rd.cls = static_cast<int>(r.get(8));
        rd.fwd = FlowTs::deserialize(g, r);
        rd.rev = FlowTs::deserialize(g, r);
        uint64_t ne = r.get(32);
        for (uint64_t i = 0; i < ne; ++i) {
            int64_t t = static_cast<int64_t>(r.get(64));
            int land = static_cast<int>(r.get(32));
            Continuation cont;
            cont.rev_token = static_cast<int64_t>(r.get(64));
            if (r.get_bit()) {
                cont.is_branch = true;
                cont.next_round = static_cast<int>(r.get(8));
                cont.lo = static_cast<int64_t>(r.get(64));
                cont.hi = static_cast<int64_t>(r.get(64));
            }
            if (r.get_bit()) cont.path = read_path();
            rd.entries.emplace(t, cont);
            rd.landing.emplace(t, land);
        }
        cts.rounds_.push_back(std::move(rd));
    }
    return cts;
}

bool EmbedCts::equal_tables(const EmbedCts& o) const {
    if (arcs_.size() != o.arcs_.size() || rounds_.size() != o.rounds_.size()) return false;
    for (size_t i = 0; i < arcs_.size(); ++i)
        if (arcs_[i].u != o.arcs_[i].u || arcs_[i].v != o.arcs_[i].v || arcs_[i].d != o.arcs_[i].d)
            return false;
    auto path_eq = [](const std::optional<SinglePath>& a, const std::optional<SinglePath>& b) {
        if (a.has_value() != b.has_value()) return false;
        if (!a) return true;
        return a->mid == b->mid && a->dst == b->dst && a->id1.move == b->id1.move &&
               a->id1.iprime == b->id1.iprime && a->id2.move == b->id2.move &&
               a->id2.iprime == b->id2.iprime;
    };
    for (size_t i = 0; i < plans_.size(); ++i) {
        const ArcPlan &a = plans_[i], &b = o.plans_[i];
        if (a.d_total != b.d_total || a.d_large != b.d_large || a.elim_round != b.elim_round ||
            a.fwd_lo != b.fwd_lo || a.fwd_hi != b.fwd_hi || !path_eq(a.residual, b.residual))
            return false;
    }
    for (size_t k = 0; k < rounds_.size(); ++k) {
        const Elim &a = rounds_[k], &b = o.rounds_[k];
        if (a.cls != b.cls || !(a.fwd == b.fwd) || !(a.rev == b.rev) || a.landing != b.landing ||
            a.entries.size() != b.entries.size())
            return false;
        for (const auto& [t, cont] : a.entries) {
            auto it = b.entries.find(t);
            if (it == b.entries.end()) return false;
            const Continuation& c2 = it->second;
            if (cont.rev_token != c2.rev_token || cont.is_branch != c2.is_branch ||
                cont.next_round != c2.next_round || cont.lo != c2.lo || cont.hi != c2.hi ||
                !path_eq(cont.path, c2.path))
                return false;
        }
    }
    return true;
}

void EmbedCts::retain_only(int keep) {
    for (size_t a = 0; a < arcs_.size(); ++a)
        if (arcs_[a].u != keep) plans_[a] = ArcPlan{};
    for (auto& rd : rounds_) {
        rd.fwd.retain_only(keep);
        rd.rev.retain_only(keep);
        for (auto it = rd.entries.begin(); it != rd.entries.end();) {
            if (rd.landing.at(it->first) != keep)
                it = rd.entries.erase(it);
            else
                ++it;
        }
    }
}

void HypercubeCts::retain_only(int keep) {
    for (auto& cube : cubes_) {
        int64_t size = int64_t{1} << cube.dim;
        for (int64_t id = 0; id < size; ++id)
            if (cube.owner[id] != keep) cube.neighbor_arc[id].assign(cube.dim, INT_MIN);
        for (int v = 0; v < static_cast<int>(cube.ids_of.size()); ++v)
            if (v != keep) cube.ids_of[v].clear();
    }
    if (has_embed_) embed_.retain_only(keep);
}

HypercubeCts HypercubeCts::build(const Graph& g, const std::vector<int>& cluster,
                                 const std::vector<int64_t>& w_s, const Rat& measured_c,
                                 const PmcfCts& pmcf,
                                 const std::vector<std::vector<int>>& child_nodes,
                                 const std::vector<int>& child_class,
                                 const std::vector<int64_t>& child_norm,
                                 const std::vector<std::vector<int64_t>>& child_out_cls,
                                 const Config& cfg, uint64_t seed) {
    HypercubeCts cts;
    cts.child_class_ = child_class;
    cts.child_norm_ = child_norm;
    int r = static_cast<int>(child_nodes.size());

    std::set<int> classes(child_class.begin(), child_class.end());
    for (int cls : classes) {
        Cube cube;
        cube.cls = cls;
        int64_t total_norm = 0;
        for (int i = 0; i < r; ++i)
            if (child_class[i] == cls) total_norm += child_norm[i];
        if (total_norm == 0) continue;
        cube.dim = 0;
        while ((int64_t{1} << cube.dim) < total_norm) ++cube.dim;
        int64_t size = int64_t{1} << cube.dim;
        cube.owner.assign(size, -1);
        cube.ids_of.assign(g.node_count(), {});

        int64_t unit = int64_t{1} << cls;
        int64_t cursor = 0;
        std::vector<std::pair<int, int64_t>> caps;  // (node, remaining filler budget 2x_v)
        for (int i = 0; i < r; ++i) {
            if (child_class[i] != cls) continue;
            cube.ranges.emplace_back(i, cursor);
            // base assignment x_v = out^(l)_{S_i}(v)/2^l, surplus spread up to 2x_v
            std::vector<int64_t> base;
            int64_t x_total = 0;
            for (int v : child_nodes[i]) {
                int64_t x = child_out_cls[i][v] / unit;
                base.push_back(x);
                x_total += x;
            }
            int64_t surplus = child_norm[i] - x_total;
            if (surplus < 0) throw std::logic_error("hypercube: norm below base assignment");
            std::vector<int64_t> extra(base.size(), 0);
            while (surplus > 0) {
                bool progressed = false;
                for (size_t j = 0; j < base.size() && surplus > 0; ++j) {
                    if (extra[j] < base[j]) {
                        ++extra[j];
                        --surplus;
                        progressed = true;
                    }
                }
                if (!progressed) throw std::logic_error("hypercube: cannot place norm surplus");
            }
            for (size_t j = 0; j < base.size(); ++j) {
                int v = child_nodes[i][j];
                for (int64_t q = 0; q < base[j] + extra[j]; ++q) {
                    cube.owner[cursor] = v;
                    cube.ids_of[v].push_back(cursor);
                    ++cursor;
                }
                if (base[j] > 0) caps.emplace_back(v, 2 * base[j]);
            }
        }
        // remaining ids are intermediates only, spread evenly up to the cap
        int64_t leftover = size - cursor;
        while (leftover > 0) {
            bool progressed = false;
            for (auto& [v, budget] : caps) {
                if (leftover == 0) break;
                if (budget > 0) {
                    --budget;
                    cube.owner[cursor] = v;
                    cube.ids_of[v].push_back(cursor);
                    ++cursor;
                    --leftover;
                    progressed = true;
                }
            }
            if (!progressed) throw std::logic_error("hypercube: cannot place filler ids");
        }
        for (auto& ids : cube.ids_of) std::sort(ids.begin(), ids.end());
        cts.cubes_.push_back(std::move(cube));
    }

    // Aggregate cube edges into directed aux arcs d = sum_l 2^l d_l.
    std::map<std::pair<int, int>, int64_t> demand;
    for (const auto& cube : cts.cubes_) {
        int64_t unit = int64_t{1} << cube.cls;
        int64_t size = int64_t{1} << cube.dim;
        for (int64_t a = 0; a < size; ++a)
            for (int b = 0; b < cube.dim; ++b) {
                int64_t a2 = a ^ (int64_t{1} << b);
                if (a2 < a) continue;
                int p = static_cast<int>(cube.owner[a]), q = static_cast<int>(cube.owner[a2]);
                if (p == q) continue;
                demand[{p, q}] += unit;
                demand[{q, p}] += unit;
            }
    }
    std::vector<AuxArc> arcs;
    for (const auto& [pq, d] : demand) arcs.push_back({pq.first, pq.second, d});
    if (!arcs.empty()) {
        // Aggregated cube demands may exceed w_S by the cube-degree factor;
        // the embedding absorbs it as a congestion factor.
        int64_t slack = 1;
        std::vector<int64_t> tin(g.node_count(), 0), tout(g.node_count(), 0);
        for (const auto& a : arcs) {
            tout[a.u] += a.d;
            tin[a.v] += a.d;
        }
        for (int v : cluster)
            if (w_s[v] > 0)
                slack = std::max<int64_t>(
                    slack, (std::max(tin[v], tout[v]) + w_s[v] - 1) / w_s[v]);
        cts.embed_ = EmbedCts::build(g, cluster, w_s, measured_c, pmcf, arcs, cfg, seed, slack);
        cts.has_embed_ = true;
    }
    cts.fill_neighbor_arcs();
    return cts;
}

void HypercubeCts::fill_neighbor_arcs() {
    std::map<std::pair<int, int>, int> arc_index;
    if (has_embed_)
        for (size_t a = 0; a < embed_.arcs().size(); ++a)
            arc_index[{embed_.arcs()[a].u, embed_.arcs()[a].v}] = static_cast<int>(a);
    for (auto& cube : cubes_) {
        int64_t size = int64_t{1} << cube.dim;
        cube.neighbor_arc.assign(size, std::vector<int>(cube.dim, -1));
        for (int64_t a = 0; a < size; ++a)
            for (int b = 0; b < cube.dim; ++b) {
                int p = static_cast<int>(cube.owner[a]);
                int q = static_cast<int>(cube.owner[a ^ (int64_t{1} << b)]);
                if (p != q) cube.neighbor_arc[a][b] = arc_index.at({p, q});
            }
    }
}

const HypercubeCts::Cube* HypercubeCts::cube_for_class(int cls) const {
    for (const auto& c : cubes_)
        if (c.cls == cls) return &c;
    return nullptr;
}

std::pair<int64_t, int64_t> HypercubeCts::child_range(int child_index) const {
    const Cube* cube = cube_for_class(child_class_[child_index]);
    if (!cube) throw std::logic_error("hypercube: no cube for the child's class");
    for (const auto& [idx, lo] : cube->ranges)
        if (idx == child_index) return {lo, child_norm_[child_index]};
    throw std::logic_error("hypercube: child has no id range");
}

size_t HypercubeCts::table_bits(const Graph& g, int v) const {
    BitWriter w;
    // own cube ids plus, per id and dimension, the commodity index of the
    // arc to the neighbouring id's owner
    for (const auto& cube : cubes_) {
        int iw = bit_width_for(static_cast<uint64_t>(int64_t{1} << cube.dim));
        int aw = 1 + bit_width_for(std::max<uint64_t>(1, has_embed_ ? embed_.arcs().size() : 1));
        w.put(cube.ids_of[v].size(), 32);
        for (int64_t id : cube.ids_of[v]) {
            w.put(static_cast<uint64_t>(id), iw);
            for (int b = 0; b < cube.dim; ++b)
                w.put(static_cast<uint64_t>(cube.neighbor_arc[id][b] + 1), aw);
        }
    }
    // per-class (norm, count) tables for range recomputation
    std::map<std::pair<int, int64_t>, int> counts;
    for (size_t i = 0; i < child_class_.size(); ++i) ++counts[{child_class_[i], child_norm_[i]}];
    for (const auto& [key, cnt] : counts) {
        w.put(static_cast<uint64_t>(key.first), 8);
        w.put(static_cast<uint64_t>(key.second), 32);
        w.put(static_cast<uint64_t>(cnt), 16);
        (void)key;
    }
    if (has_embed_) return w.bit_size() + embed_.table_bits(g, v);
    return w.bit_size();
}

void HypercubeCts::serialize(const Graph& g, BitWriter& w) const {
    w.put(child_class_.size(), 16);
    for (size_t i = 0; i < child_class_.size(); ++i) {
        w.put(static_cast<uint64_t>(child_class_[i]), 8);
        w.put(static_cast<uint64_t>(child_norm_[i]), 64);
    }
    w.put(cubes_.size(), 8);
    for (const auto& cube : cubes_) {
        w.put(static_cast<uint64_t>(cube.cls), 8);
        w.put(static_cast<uint64_t>(cube.dim), 8);
        for (int64_t o : cube.owner) w.put(static_cast<uint64_t>(o), 32);
        w.put(cube.ranges.size(), 16);
        for (const auto& [idx, lo] : cube.ranges) {
            w.put(static_cast<uint64_t>(idx), 16);
            w.put(static_cast<uint64_t>(lo), 64);
        }
    }
    w.put_bit(has_embed_);
    if (has_embed_) embed_.serialize(g, w);
}

HypercubeCts HypercubeCts::deserialize(const Graph& g, const PmcfCts& pmcf, BitReader& r) {
    HypercubeCts cts;
    uint64_t nc = r.get(16);
    cts.child_class_.resize(nc);
    cts.child_norm_.resize(nc);
    for (uint64_t i = 0; i < nc; ++i) {
        cts.child_class_[i] = static_cast<int>(r.get(8));
        cts.child_norm_[i] = static_cast<int64_t>(r.get(64));
    }
    uint64_t ncubes = r.get(8);
    for (uint64_t c = 0; c < ncubes; ++c) {
        Cube cube;
        cube.cls = static_cast<int>(r.get(8));
        cube.dim = static_cast<int>(r.get(8));
        int64_t size = int64_t{1} << cube.dim;
        cube.owner.resize(size);
        cube.ids_of.assign(g.node_count(), {});
        for (int64_t i = 0; i < size; ++i) {
            cube.owner[i] = static_cast<int64_t>(r.get(32));
            cube.ids_of[cube.owner[i]].push_back(i);
        }
        uint64_t nranges = r.get(16);
        for (uint64_t i = 0; i < nranges; ++i) {
            int idx = static_cast<int>(r.get(16));
            int64_t lo = static_cast<int64_t>(r.get(64));
            cube.ranges.emplace_back(idx, lo);
        }
        cts.cubes_.push_back(std::move(cube));
    }
    cts.has_embed_ = r.get_bit();
    if (cts.has_embed_) cts.embed_ = EmbedCts::deserialize(g, pmcf, r);
    cts.fill_neighbor_arcs();
    return cts;
}

}  // namespace croute
