#include "croute/scheme.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <future>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "croute/flow_engine.hpp"

namespace croute {

namespace {

// Per-cluster deterministic seed.
uint64_t cluster_seed(uint64_t base, int cluster_id) {
    return CounterRng::mix(base, 0xc105735e3dULL, static_cast<uint64_t>(cluster_id));
}

ClusterScheme build_cluster_scheme(const Graph& g, const DecompositionTree& tree, int id,
                                   const Config& cfg) {
    const Cluster& c = tree.cluster(id);
    ClusterScheme cs;
    cs.cluster_id = id;
    if (c.is_leaf() || c.w_total == 0) return cs;
    cs.active = true;
    uint64_t seed = cluster_seed(cfg.seed, id);

    cs.pmcf = std::make_shared<PmcfCts>(PmcfCts::build(g, c.nodes, c.w, cfg, seed));

    // Mixing stage 1: <w_S(S_i): w_{S_i} -> out_{S_i}> inside each child.
    for (size_t i = 0; i < c.children.size(); ++i) {
        const Cluster& ch = tree.cluster(c.children[i]);
        cs.mixing.stage1.push_back(route_similar(g, ch.w, ch.out, ch.nodes, ch.w));
    }

    // Unmixing stage 1 per class: <w_S(M_l): w_S -> maj^(l)_S>.
    for (int cls : tree.child_classes(id)) {
        std::vector<int64_t> m = tree.maj(id, cls);
        int64_t total = 0;
        for (int v : c.nodes) total += m[v];
        if (total == 0) continue;
        cs.unmixing.stage1.emplace(cls, route_similar(g, c.w, m, c.nodes, c.w));
    }

    // Hypercube CTS over the per-class child data.
    std::vector<std::vector<int>> child_nodes;
    std::vector<std::vector<int64_t>> child_out_cls;
    for (size_t i = 0; i < c.children.size(); ++i) {
        const Cluster& ch = tree.cluster(c.children[i]);
        child_nodes.push_back(ch.nodes);
        child_out_cls.push_back(ch.out_cls[c.child_class[i]]);
    }
    cs.unmixing.cube =
        HypercubeCts::build(g, c.nodes, c.w, c.pmcf.primal, *cs.pmcf, child_nodes, c.child_class,
                            c.child_norm, child_out_cls, cfg, seed);

    // Unmixing stage 3: <w_S(S_i): out^(l)_{S_i} -> out_{S_i}> inside each child.
    for (size_t i = 0; i < c.children.size(); ++i) {
        const Cluster& ch = tree.cluster(c.children[i]);
        cs.unmixing.stage3.push_back(
            route_similar(g, ch.out_cls[c.child_class[i]], ch.out, ch.nodes, ch.w));
    }
    return cs;
}

}  // namespace

size_t ClusterScheme::table_bits(const Graph& g, const Cluster& c, int v) const {
    if (!active) return 0;
    if (!std::binary_search(c.nodes.begin(), c.nodes.end(), v)) return 0;
    size_t bits = pmcf->table_bits(g, v);
    for (size_t i = 0; i < c.children.size(); ++i) {
        bits += mixing.stage1[i].table_bits(g, v);
        bits += unmixing.stage3[i].table_bits(g, v);
    }
    for (const auto& [cls, ts] : unmixing.stage1) bits += ts.table_bits(g, v);
    bits += unmixing.cube.table_bits(g, v);
    return bits;
}

SchemeBundle SchemeBundle::build(const Graph& g, const Config& cfg) {
    return build(g, DecompositionTree::build(g, cfg), cfg);
}

SchemeBundle SchemeBundle::build(const Graph& g, DecompositionTree tree, const Config& cfg) {
    if (!g.connected()) throw std::invalid_argument("build_scheme: graph not connected");
    SchemeBundle b;
    b.g_ = &g;
    b.tree_ = std::move(tree);
    b.cfg_ = cfg;
    b.assign_labels();
    b.build_schemes();
    return b;
}

void SchemeBundle::assign_labels() {
    const Graph& g = *g_;
    int deg_t = std::max(1, tree_.degree());
    label_width_ = deg_t <= 1 ? 0 : bit_width_for(static_cast<uint64_t>(deg_t - 1));
    labels_.assign(g.node_count(), {});
    for (int v = 0; v < g.node_count(); ++v) {
        int id = tree_.leaf_of(v);
        std::vector<int> rev;
        while (tree_.cluster(id).parent >= 0) {
            int parent = tree_.cluster(id).parent;
            const auto& kids = tree_.cluster(parent).children;
            auto it = std::find(kids.begin(), kids.end(), id);
            rev.push_back(static_cast<int>(it - kids.begin()));
            id = parent;
        }
        labels_[v].assign(rev.rbegin(), rev.rend());
    }
}

void SchemeBundle::build_schemes() {
    int count = tree_.cluster_count();
    schemes_.resize(count);
    auto build_one = [&](int id) {
        try {
            return build_cluster_scheme(*g_, tree_, id, cfg_);
        } catch (const std::exception& e) {
            throw std::runtime_error("cluster " + std::to_string(id) + ": " + e.what());
        }
    };
    if (cfg_.jobs <= 1) {
        for (int id = 0; id < count; ++id) schemes_[id] = build_one(id);
        return;
    }
    int jobs = cfg_.jobs;
    std::vector<std::future<void>> pool;
    std::atomic<int> cursor{0};
    std::mutex err_mutex;
    std::exception_ptr error;
    for (int t = 0; t < jobs; ++t)
        pool.push_back(std::async(std::launch::async, [&]() {
            while (true) {
                int id = cursor.fetch_add(1);
                if (id >= count) return;
                try {
                    schemes_[id] = build_one(id);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        }));
    for (auto& f : pool) f.wait();
    if (error) std::rethrow_exception(error);
}

int SchemeBundle::cluster_at(int v, int depth) const {
    int id = tree_.root();
    for (int d = 0; d < depth && !tree_.cluster(id).is_leaf(); ++d)
        id = tree_.cluster(id).children[labels_[v][d]];
    return id;
}

size_t SchemeBundle::node_bits(int v) const {
    size_t bits = label_bits(v);
    for (int id = 0; id < tree_.cluster_count(); ++id)
        bits += schemes_[id].table_bits(*g_, tree_.cluster(id), v);
    return bits;
}

size_t SchemeBundle::max_header_bits_budget() const {
    // Descent indices + phase bookkeeping + the largest sub-scheme header.
    size_t pmcf_bits = 0;
    for (const auto& s : schemes_)
        if (s.active) pmcf_bits = std::max(pmcf_bits, s.pmcf->path_id_bits());
    // anticipative payload carries up to two pmcf path ids plus framing
    size_t height = static_cast<size_t>(std::max(1, tree_.height()));
    return 3 * pmcf_bits + height * static_cast<size_t>(label_width_) + 512;
}

void SchemeBundle::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write bundle file: " + path);
    BitWriter w;
    // magic + version
    w.put(0x43525442, 32);  // "CRTB"
    w.put(1, 16);
    // graph
    w.put(static_cast<uint64_t>(g_->node_count()), 32);
    w.put(static_cast<uint64_t>(g_->edge_count()), 32);
    for (const auto& e : g_->edges()) {
        w.put(static_cast<uint64_t>(e.u), 32);
        w.put(static_cast<uint64_t>(e.v), 32);
        w.put(static_cast<uint64_t>(e.capacity), 64);
    }
    // tree (text form) + measured congestion values
    std::ostringstream tree_text;
    tree_.write(tree_text);
    std::string tt = tree_text.str();
    w.put(tt.size(), 32);
    for (char ch : tt) w.put(static_cast<uint8_t>(ch), 8);
    for (int id = 0; id < tree_.cluster_count(); ++id) {
        const auto& cert = tree_.cluster(id).pmcf;
        std::string primal = rat_str(cert.primal), dual = rat_str(cert.dual);
        w.put(primal.size(), 16);
        for (char ch : primal) w.put(static_cast<uint8_t>(ch), 8);
        w.put(dual.size(), 16);
        for (char ch : dual) w.put(static_cast<uint8_t>(ch), 8);
        w.put_bit(cert.exact);
    }
    // cluster schemes
    for (int id = 0; id < tree_.cluster_count(); ++id) {
        const ClusterScheme& s = schemes_[id];
        w.put_bit(s.active);
        if (!s.active) continue;
        s.pmcf->serialize(*g_, w);
        w.put(s.mixing.stage1.size(), 16);
        for (const auto& ts : s.mixing.stage1) ts.serialize(*g_, w);
        w.put(s.unmixing.stage1.size(), 16);
        for (const auto& [cls, ts] : s.unmixing.stage1) {
            w.put(static_cast<uint64_t>(cls), 8);
            ts.serialize(*g_, w);
        }
        s.unmixing.cube.serialize(*g_, w);
        w.put(s.unmixing.stage3.size(), 16);
        for (const auto& ts : s.unmixing.stage3) ts.serialize(*g_, w);
    }
    out.write(reinterpret_cast<const char*>(w.bytes().data()),
              static_cast<std::streamsize>(w.bytes().size()));
}

SchemeBundle SchemeBundle::restricted_to(int keep) const {
    SchemeBundle b = *this;
    for (auto& s : b.schemes_) {
        if (!s.active) continue;
        s.pmcf = std::make_shared<PmcfCts>(*s.pmcf);
        s.pmcf->retain_only(keep);
        for (auto& ts : s.mixing.stage1) ts.retain_only(keep);
        for (auto& [cls, ts] : s.unmixing.stage1) ts.retain_only(keep);
        for (auto& ts : s.unmixing.stage3) ts.retain_only(keep);
        s.unmixing.cube.retain_only(keep);
        s.unmixing.cube.rebind_pmcf(*s.pmcf);
    }
    for (int v = 0; v < static_cast<int>(b.labels_.size()); ++v)
        if (v != keep) b.labels_[v].clear();
    return b;
}

SchemeBundle SchemeBundle::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open bundle file: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    BitReader r(bytes.data(), bytes.size() * 8);
    if (r.get(32) != 0x43525442) throw std::runtime_error("bundle file: bad magic");
    if (r.get(16) != 1) throw std::runtime_error("bundle file: unsupported version");

    SchemeBundle b;
    int n = static_cast<int>(r.get(32));
    int m = static_cast<int>(r.get(32));
    std::vector<std::tuple<int, int, int64_t>> edges;
    for (int e = 0; e < m; ++e) {
        int u = static_cast<int>(r.get(32));
        int v = static_cast<int>(r.get(32));
        int64_t cap = static_cast<int64_t>(r.get(64));
        edges.emplace_back(u, v, cap);
    }
    b.owned_graph_ = std::make_shared<Graph>(n, edges);
    b.g_ = b.owned_graph_.get();

    uint64_t tlen = r.get(32);
    std::string tt(tlen, '\0');
    for (auto& ch : tt) ch = static_cast<char>(r.get(8));
    std::istringstream tree_in(tt);
    b.cfg_ = Config{};
    b.tree_ = DecompositionTree::parse(*b.g_, tree_in, b.cfg_, /*measure_pmcf=*/false);
    for (int id = 0; id < b.tree_.cluster_count(); ++id) {
        auto read_rat = [&](int len_bits) {
            uint64_t len = r.get(len_bits);
            std::string s(len, '\0');
            for (auto& ch : s) ch = static_cast<char>(r.get(8));
            auto slash = s.find('/');
            return Rat(Int(s.substr(0, slash)), Int(s.substr(slash + 1)));
        };
        CongestionCertificate cert;
        cert.primal = read_rat(16);
        cert.dual = read_rat(16);
        cert.exact = r.get_bit();
        b.tree_.cluster_mut(id).pmcf = cert;
    }
    b.assign_labels();
    b.schemes_.resize(b.tree_.cluster_count());
    for (int id = 0; id < b.tree_.cluster_count(); ++id) {
        ClusterScheme& s = b.schemes_[id];
        s.cluster_id = id;
        s.active = r.get_bit();
        if (!s.active) continue;
        s.pmcf = std::make_shared<PmcfCts>(PmcfCts::deserialize(*b.g_, r));
        uint64_t n1 = r.get(16);
        for (uint64_t i = 0; i < n1; ++i) s.mixing.stage1.push_back(FlowTs::deserialize(*b.g_, r));
        uint64_t nu = r.get(16);
        for (uint64_t i = 0; i < nu; ++i) {
            int cls = static_cast<int>(r.get(8));
            s.unmixing.stage1.emplace(cls, FlowTs::deserialize(*b.g_, r));
        }
        s.unmixing.cube = HypercubeCts::deserialize(*b.g_, *s.pmcf, r);
        uint64_t n3 = r.get(16);
        for (uint64_t i = 0; i < n3; ++i)
            s.unmixing.stage3.push_back(FlowTs::deserialize(*b.g_, r));
    }
    return b;
}

}  // namespace croute
