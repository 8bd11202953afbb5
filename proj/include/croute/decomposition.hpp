#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "croute/config.hpp"
#include "croute/graph.hpp"
#include "croute/oracle.hpp"

namespace croute {

struct Cluster {
    int id = -1;
    int parent = -1;
    int depth = 0;
    std::vector<int> nodes;     // sorted global node ids
    std::vector<int> children;  // cluster ids in the fixed child numbering

    // Weight functions, indexed by global node id (zero outside the cluster).
    std::vector<int64_t> out;                      // border weight out_S
    std::vector<std::vector<int64_t>> out_cls;     // out_S^(l) per class l
    std::vector<int64_t> w;                        // cluster weight w_S (leaf: = out_S)
    int64_t out_total = 0;
    int64_t w_total = 0;

    // Per-child data, aligned with `children`.
    std::vector<int> child_class;     // L(S_i) = argmax_l out^(l)_{S_i}(S_i), ties to larger l
    std::vector<int64_t> child_norm;  // ||S_i||: smallest power of two >= out^(L)_{S_i}(S_i)/2^L

    // Measured PMCF congestion with weights w_S (leaves: zero).
    CongestionCertificate pmcf;

    bool is_leaf() const { return children.empty(); }
    int size() const { return static_cast<int>(nodes.size()); }
};

class DecompositionTree {
public:
    // Recursive near-balanced bisection: spectral sweep cut for larger
    // clusters, exhaustive min-ratio cut for clusters of <= 10 nodes; the two
    // sides are refined into connected components. Per-cluster PMCF
    // congestion is measured with the oracle.
    static DecompositionTree build(const Graph& g, const Config& cfg);

    static DecompositionTree import_file(const Graph& g, const std::string& path, const Config& cfg);
    static DecompositionTree parse(const Graph& g, std::istream& in, const Config& cfg,
                                   bool measure_pmcf = true);
    void export_file(const std::string& path) const;
    void write(std::ostream& out) const;

    const Graph& graph() const { return *g_; }
    int cluster_count() const { return static_cast<int>(clusters_.size()); }
    const Cluster& cluster(int id) const { return clusters_[id]; }
    Cluster& cluster_mut(int id) { return clusters_[id]; }
    int root() const { return 0; }
    int leaf_of(int v) const { return leaf_of_node_[v]; }
    int height() const { return height_; }
    int degree() const { return degree_; }  // deg(T): max child count

    // Class-l children aggregate maj_S^(l) for cluster id, per global node.
    std::vector<int64_t> maj(int id, int cls) const;
    // Classes l for which cluster id has at least one class-l child.
    std::vector<int> child_classes(int id) const;

private:
    void finalize(const Config& cfg, bool measure_pmcf = true);

    const Graph* g_ = nullptr;
    std::vector<Cluster> clusters_;
    std::vector<int> leaf_of_node_;
    int height_ = 0;
    int degree_ = 0;
};

}  // namespace croute
