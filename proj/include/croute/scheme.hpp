#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "croute/decomposition.hpp"
#include "croute/embedding.hpp"
#include "croute/pmcf.hpp"

namespace croute {

// Up-phase CTS of a cluster S: per-child flow TS <w_S(S_i): w_{S_i} -> out_{S_i}>
// inside S_i, then the cluster's PMCF CTS with weights w_S.
struct MixingCts {
    std::vector<FlowTs> stage1;  // aligned with the sorted child order
};

// Down-phase CTS: per-class flow TS <w_S(M_l): w_S -> maj^(l)_S>, the per-class
// hypercube CTS, and per-child flow TS <w_S(S_i): out^(l)_{S_i} -> out_{S_i}>
// inside S_i.
struct UnmixingCts {
    std::map<int, FlowTs> stage1;  // keyed by class
    HypercubeCts cube;
    std::vector<FlowTs> stage3;  // aligned with the sorted child order
};

struct ClusterScheme {
    int cluster_id = -1;
    bool active = false;  // leaves and zero-weight clusters carry no tables
    std::shared_ptr<PmcfCts> pmcf;
    MixingCts mixing;
    UnmixingCts unmixing;

    // Per-node routing table bits of this cluster's schemes (0 outside S).
    size_t table_bits(const Graph& g, const Cluster& c, int v) const;
};

// The assembled oblivious routing scheme.
class SchemeBundle {
public:
    static SchemeBundle build(const Graph& g, const Config& cfg);
    static SchemeBundle build(const Graph& g, DecompositionTree tree, const Config& cfg);

    const Graph& graph() const { return *g_; }
    const DecompositionTree& tree() const { return tree_; }
    const ClusterScheme& scheme(int cluster_id) const { return schemes_[cluster_id]; }
    const Config& config() const { return cfg_; }

    // Node labels: child indices along the root-to-leaf path, each
    // label_component_bits() wide.
    const std::vector<int>& label(int v) const { return labels_[v]; }
    int label_component_bits() const { return label_width_; }
    size_t label_bits(int v) const { return labels_[v].size() * label_width_; }

    // Child index of the depth d+1 cluster on v's root-leaf path.
    int child_index_at(int v, int depth) const { return labels_[v][depth]; }
    // Cluster id containing v at a given depth (clamped to v's leaf depth).
    int cluster_at(int v, int depth) const;

    // Total routing table bits of node v (cluster tables + label).
    size_t node_bits(int v) const;
    size_t max_header_bits_budget() const;

    void save(const std::string& path) const;
    static SchemeBundle load(const std::string& path);

    // Locality audit: a copy with every per-node table record outside
    // `keep`'s slice destroyed. Driving step() against it must reproduce the
    // original behaviour whenever the packet sits at `keep`.
    SchemeBundle restricted_to(int keep) const;

private:
    void assign_labels();
    void build_schemes();

    std::shared_ptr<Graph> owned_graph_;  // set when loaded from file
    const Graph* g_ = nullptr;
    DecompositionTree tree_;
    Config cfg_;
    std::vector<ClusterScheme> schemes_;
    std::vector<std::vector<int>> labels_;
    int label_width_ = 0;
};

}  // namespace croute
