#include "croute/decomposition.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace croute {

namespace {

// Capacity across the cut (A, S \ A) inside G[S].
int64_t cut_capacity(const Graph& g, const std::vector<int>& nodes, const std::vector<char>& in_a) {
    int64_t cap = 0;
    std::vector<char> in_s(g.node_count(), 0);
    for (int v : nodes) in_s[v] = 1;
    for (int e = 0; e < g.edge_count(); ++e) {
        const auto& ed = g.edge(e);
        if (!in_s[ed.u] || !in_s[ed.v]) continue;
        if (in_a[ed.u] != in_a[ed.v]) cap += ed.capacity;
    }
    return cap;
}

// Split S into two near-balanced sides minimizing the uniform-sparsest-cut
// ratio cap / (|A| * |B|). Exhaustive for small S, spectral sweep otherwise.
std::pair<std::vector<int>, std::vector<int>> bisect(const Graph& g, const std::vector<int>& nodes) {
    int sz = static_cast<int>(nodes.size());
    int lo = (sz + 2) / 3, hi = sz - lo;  // both sides within [ceil(sz/3), sz - ceil(sz/3)]
    std::vector<char> in_a(g.node_count(), 0);
    std::vector<char> best_mask;
    Rat best_ratio;
    bool have = false;

    auto consider = [&](const std::vector<char>& mask, int count_a) {
        if (count_a < lo || count_a > hi) return;
        int64_t cap = cut_capacity(g, nodes, mask);
        Rat ratio(cap, static_cast<int64_t>(count_a) * (sz - count_a));
        if (!have || ratio < best_ratio) {
            have = true;
            best_ratio = ratio;
            best_mask = mask;
        }
    };

    if (sz <= 10) {
        // Fix nodes[0] on side A to halve the enumeration.
        for (uint32_t bits = 0; bits < (1u << (sz - 1)); ++bits) {
            std::fill(in_a.begin(), in_a.end(), 0);
            in_a[nodes[0]] = 1;
            int count = 1;
            for (int i = 1; i < sz; ++i)
                if (bits & (1u << (i - 1))) {
                    in_a[nodes[i]] = 1;
                    ++count;
                }
            consider(in_a, count);
        }
    } else {
        // Fiedler vector of the capacity-weighted Laplacian of G[S].
        std::vector<int> idx(g.node_count(), -1);
        for (int i = 0; i < sz; ++i) idx[nodes[i]] = i;
        Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(sz, sz);
        for (int e = 0; e < g.edge_count(); ++e) {
            const auto& ed = g.edge(e);
            if (idx[ed.u] < 0 || idx[ed.v] < 0) continue;
            double w = static_cast<double>(ed.capacity);
            lap(idx[ed.u], idx[ed.v]) -= w;
            lap(idx[ed.v], idx[ed.u]) -= w;
            lap(idx[ed.u], idx[ed.u]) += w;
            lap(idx[ed.v], idx[ed.v]) += w;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap);
        Eigen::VectorXd fiedler = es.eigenvectors().col(1);
        std::vector<int> order(sz);
        for (int i = 0; i < sz; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (fiedler(a) != fiedler(b)) return fiedler(a) < fiedler(b);
            return nodes[a] < nodes[b];
        });
        for (int k = lo; k <= hi; ++k) {
            std::fill(in_a.begin(), in_a.end(), 0);
            for (int i = 0; i < k; ++i) in_a[nodes[order[i]]] = 1;
            consider(in_a, k);
        }
    }
    if (!have) throw std::logic_error("bisect: no admissible cut");
    std::vector<int> a, b;
    for (int v : nodes) (best_mask[v] ? a : b).push_back(v);
    return {a, b};
}

std::vector<std::vector<int>> components_within(const Graph& g, const std::vector<int>& nodes) {
    std::vector<char> in_s(g.node_count(), 0), seen(g.node_count(), 0);
    for (int v : nodes) in_s[v] = 1;
    std::vector<std::vector<int>> comps;
    for (int start : nodes) {
        if (seen[start]) continue;
        std::vector<int> comp, stack{start};
        seen[start] = 1;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            comp.push_back(v);
            for (int e : g.incident(v)) {
                int u = g.other(e, v);
                if (in_s[u] && !seen[u]) {
                    seen[u] = 1;
                    stack.push_back(u);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
    }
    return comps;
}

}  // namespace

DecompositionTree DecompositionTree::build(const Graph& g, const Config& cfg) {
    if (!g.connected()) throw std::invalid_argument("build_tree: graph not connected");
    DecompositionTree t;
    t.g_ = &g;

    struct Work {
        std::vector<int> nodes;
        int parent;
        int depth;
    };
    std::vector<int> all(g.node_count());
    for (int v = 0; v < g.node_count(); ++v) all[v] = v;
    std::vector<Work> queue{{all, -1, 0}};
    while (!queue.empty()) {
        Work w = std::move(queue.back());
        queue.pop_back();
        Cluster c;
        c.id = static_cast<int>(t.clusters_.size());
        c.parent = w.parent;
        c.depth = w.depth;
        c.nodes = w.nodes;
        if (w.parent >= 0) t.clusters_[w.parent].children.push_back(c.id);
        t.clusters_.push_back(c);
        if (w.nodes.size() <= 1) continue;
        auto [a, b] = bisect(g, w.nodes);
        for (auto side : {&a, &b})
            for (auto& comp : components_within(g, *side))
                queue.push_back({std::move(comp), c.id, w.depth + 1});
    }
    t.finalize(cfg);
    return t;
}

void DecompositionTree::finalize(const Config& cfg, bool measure_pmcf) {
    const Graph& g = *g_;
    int n = g.node_count();
    int ncls = g.num_classes();
    leaf_of_node_.assign(n, -1);
    height_ = 0;
    degree_ = 0;

    for (auto& c : clusters_) {
        height_ = std::max(height_, c.depth);
        degree_ = std::max<int>(degree_, static_cast<int>(c.children.size()));
        if (c.is_leaf()) {
            if (c.nodes.size() != 1)
                throw std::invalid_argument("cluster " + std::to_string(c.id) +
                                            ": childless cluster is not a singleton");
            leaf_of_node_[c.nodes[0]] = c.id;
        }
        // Border weights.
        c.out.assign(n, 0);
        c.out_cls.assign(ncls, std::vector<int64_t>(n, 0));
        std::vector<char> in_s(n, 0);
        for (int v : c.nodes) in_s[v] = 1;
        for (int v : c.nodes)
            for (int e : g.incident(v)) {
                int u = g.other(e, v);
                if (in_s[u]) continue;
                c.out[v] += g.edge(e).capacity;
                c.out_cls[g.edge(e).cls][v] += g.edge(e).capacity;
            }
        c.out_total = 0;
        for (int v : c.nodes) c.out_total += c.out[v];
    }
    for (int v = 0; v < n; ++v)
        if (leaf_of_node_[v] < 0) throw std::invalid_argument("tree is missing leaf for node " + std::to_string(v));

    // Cluster weights need children's borders; process deepest-first.
    std::vector<int> by_depth(clusters_.size());
    for (size_t i = 0; i < clusters_.size(); ++i) by_depth[i] = static_cast<int>(i);
    std::sort(by_depth.begin(), by_depth.end(),
              [&](int a, int b) { return clusters_[a].depth > clusters_[b].depth; });
    for (int id : by_depth) {
        Cluster& c = clusters_[id];
        c.w.assign(n, 0);
        if (c.is_leaf()) {
            c.w = c.out;
        } else {
            for (int ch : c.children)
                for (int v : clusters_[ch].nodes) c.w[v] += clusters_[ch].out[v];
        }
        c.w_total = 0;
        for (int v : c.nodes) c.w_total += c.w[v];

        // Child classes, norms, and the fixed numbering sorted by (class, norm).
        c.child_class.clear();
        c.child_norm.clear();
        for (int ch : c.children) {
            const Cluster& s = clusters_[ch];
            int best_cls = 0;
            int64_t best_val = -1;
            for (int l = 0; l < g.num_classes(); ++l) {
                int64_t tot = 0;
                for (int v : s.nodes) tot += s.out_cls[l][v];
                if (tot >= best_val) {  // ties toward the larger class
                    best_val = tot;
                    best_cls = l;
                }
            }
            int64_t units = best_val / (int64_t{1} << best_cls);
            int64_t norm = 1;
            while (norm < units) norm *= 2;
            c.child_class.push_back(best_cls);
            c.child_norm.push_back(units == 0 ? 0 : norm);
        }
        std::vector<int> order(c.children.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (c.child_class[a] != c.child_class[b]) return c.child_class[a] < c.child_class[b];
            if (c.child_norm[a] != c.child_norm[b]) return c.child_norm[a] < c.child_norm[b];
            return clusters_[c.children[a]].nodes[0] < clusters_[c.children[b]].nodes[0];
        });
        std::vector<int> ch2;
        std::vector<int> cls2;
        std::vector<int64_t> norm2;
        for (int i : order) {
            ch2.push_back(c.children[i]);
            cls2.push_back(c.child_class[i]);
            norm2.push_back(c.child_norm[i]);
        }
        c.children = std::move(ch2);
        c.child_class = std::move(cls2);
        c.child_norm = std::move(norm2);
    }

    // Measured PMCF congestion per non-leaf cluster.
    for (auto& c : clusters_) {
        if (!measure_pmcf || c.is_leaf() || c.w_total == 0) continue;
        if (!g.connected_within(c.nodes))
            throw std::invalid_argument("cluster " + std::to_string(c.id) + " is not connected");
        c.pmcf = pmcf_congestion(g, c.nodes, c.w, cfg);
    }
}

std::vector<int64_t> DecompositionTree::maj(int id, int cls) const {
    const Cluster& c = clusters_[id];
    std::vector<int64_t> m(g_->node_count(), 0);
    for (size_t i = 0; i < c.children.size(); ++i) {
        if (c.child_class[i] != cls) continue;
        const Cluster& s = clusters_[c.children[i]];
        for (int v : s.nodes) m[v] += s.out_cls[cls][v];
    }
    return m;
}

std::vector<int> DecompositionTree::child_classes(int id) const {
    std::set<int> cls(cluster(id).child_class.begin(), cluster(id).child_class.end());
    return {cls.begin(), cls.end()};
}

DecompositionTree DecompositionTree::import_file(const Graph& g, const std::string& path,
                                                 const Config& cfg) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open tree file: " + path);
    return parse(g, in, cfg);
}

DecompositionTree DecompositionTree::parse(const Graph& g, std::istream& in, const Config& cfg,
                                           bool measure_pmcf) {
    struct Raw {
        int level, id, parent;
        std::vector<int> nodes;
    };
    std::vector<Raw> raws;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        Raw r;
        if (!(ls >> r.level)) continue;
        std::string colon;
        if (!(ls >> r.id >> r.parent >> colon) || colon != ":")
            throw std::runtime_error("tree file line " + std::to_string(lineno) +
                                     ": expected 'level id parent : v1 v2 ...'");
        int v;
        while (ls >> v) {
            if (v < 0 || v >= g.node_count())
                throw std::runtime_error("tree file line " + std::to_string(lineno) + ": node out of range");
            r.nodes.push_back(v);
        }
        std::sort(r.nodes.begin(), r.nodes.end());
        if (std::adjacent_find(r.nodes.begin(), r.nodes.end()) != r.nodes.end())
            throw std::runtime_error("tree file line " + std::to_string(lineno) + ": duplicate node in cluster");
        raws.push_back(std::move(r));
    }
    std::map<int, int> id_map;  // file id -> cluster index
    DecompositionTree t;
    t.g_ = &g;
    // Root first.
    int root_idx = -1;
    for (size_t i = 0; i < raws.size(); ++i)
        if (raws[i].parent < 0) {
            if (root_idx >= 0) throw std::invalid_argument("tree file has two roots");
            root_idx = static_cast<int>(i);
        }
    if (root_idx < 0) throw std::invalid_argument("tree file has no root");
    if (static_cast<int>(raws[root_idx].nodes.size()) != g.node_count())
        throw std::invalid_argument("root cluster does not contain all nodes");

    // Breadth-first over the declared parent structure.
    std::vector<int> order{root_idx};
    std::map<int, std::vector<int>> by_parent;
    for (size_t i = 0; i < raws.size(); ++i)
        if (static_cast<int>(i) != root_idx) by_parent[raws[i].parent].push_back(static_cast<int>(i));
    for (size_t qi = 0; qi < order.size(); ++qi) {
        int raw_idx = order[qi];
        Cluster c;
        c.id = static_cast<int>(t.clusters_.size());
        c.nodes = raws[raw_idx].nodes;
        id_map[raws[raw_idx].id] = c.id;
        if (raws[raw_idx].parent >= 0) {
            auto it = id_map.find(raws[raw_idx].parent);
            if (it == id_map.end())
                throw std::invalid_argument("cluster " + std::to_string(raws[raw_idx].id) +
                                            ": unknown parent " + std::to_string(raws[raw_idx].parent));
            c.parent = it->second;
            c.depth = t.clusters_[c.parent].depth + 1;
            if (c.depth != raws[raw_idx].level)
                throw std::invalid_argument("cluster " + std::to_string(raws[raw_idx].id) +
                                            ": level field does not match parent depth + 1");
            t.clusters_[c.parent].children.push_back(c.id);
        } else if (raws[raw_idx].level != 0) {
            throw std::invalid_argument("root cluster must be level 0");
        }
        t.clusters_.push_back(c);
        auto kids = by_parent.find(raws[raw_idx].id);
        if (kids != by_parent.end())
            for (int k : kids->second) order.push_back(k);
    }
    if (t.clusters_.size() != raws.size())
        throw std::invalid_argument("tree file contains clusters unreachable from the root");

    // Children must partition the parent.
    for (const auto& c : t.clusters_) {
        if (c.is_leaf()) {
            if (c.nodes.size() != 1)
                throw std::invalid_argument("cluster " + std::to_string(c.id) +
                                            ": childless cluster is not a singleton leaf");
            continue;
        }
        std::vector<int> merged;
        for (int ch : c.children)
            merged.insert(merged.end(), t.clusters_[ch].nodes.begin(), t.clusters_[ch].nodes.end());
        std::sort(merged.begin(), merged.end());
        if (merged != c.nodes)
            throw std::invalid_argument("cluster " + std::to_string(c.id) +
                                        ": children do not partition the cluster");
    }
    t.finalize(cfg, measure_pmcf);
    return t;
}

void DecompositionTree::write(std::ostream& out) const {
    for (const auto& c : clusters_) {
        out << c.depth << " " << c.id << " " << (c.parent < 0 ? -1 : c.parent) << " :";
        for (int v : c.nodes) out << " " << v;
        out << "\n";
    }
}

void DecompositionTree::export_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write tree file: " + path);
    write(out);
}

}  // namespace croute
