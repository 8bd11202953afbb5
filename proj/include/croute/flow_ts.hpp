#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "croute/bitio.hpp"
#include "croute/graph.hpp"

namespace croute {

// Integral flow certified acyclic on positive-flow edges.
struct IntegralAcyclicFlow {
    const Graph* g = nullptr;
    std::vector<int64_t> f;        // signed, in stored edge orientation
    std::vector<int> topo_order;   // every positive-flow arc goes forward in this order
    int64_t value = 0;             // total routed mass

    int64_t signed_from(int e, int from) const {
        return g->edge(e).u == from ? f[e] : -f[e];
    }
    int64_t balance(int v) const;
    Rat congestion() const;
    bool is_acyclic() const;
};

struct FlowTsInterval {
    int edge;        // graph edge index
    int64_t lo, hi;  // token ids in [lo, hi] present at this node depart on `edge`
};

struct FlowTsNode {
    int64_t offset = 0;  // tokens starting here have ids offset+1 .. offset+count
    int64_t count = 0;   // N_v
    std::vector<FlowTsInterval> out;  // disjoint, sorted by lo
};

// Deterministic transformation scheme built from an integral acyclic flow.
// Executing path id k in {1..N_v} from node v moves token offset(v)+k along
// the interval tables until no interval contains it.
class FlowTs {
public:
    static FlowTs build(const IntegralAcyclicFlow& flow, const std::vector<int64_t>& mu,
                        const std::vector<int64_t>& mu_out);

    int64_t total_tokens() const { return total_tokens_; }
    int64_t count(int v) const { return nodes_[v].count; }
    int64_t offset(int v) const { return nodes_[v].offset; }
    int64_t token_for(int v, int64_t path_id) const { return nodes_[v].offset + path_id; }
    const FlowTsNode& node(int v) const { return nodes_[v]; }
    int node_count() const { return static_cast<int>(nodes_.size()); }

    // One local step: the edge token t departs on from v, or nullopt if it
    // terminates at v.
    std::optional<int> step(int v, int64_t t) const;

    // Node at which token t starts (t in 1..total_tokens).
    int start_of(int64_t t) const;

    // Locality audit: drop every node record except `keep`'s.
    void retain_only(int keep);

    // Full walk of token t from its start node; returns (end node, edges visited).
    std::pair<int, std::vector<int>> walk(const Graph& g, int v, int64_t t) const;
    int target_of(const Graph& g, int v, int64_t path_id) const;

    // Enumerated per-edge load: number of tokens crossing each edge.
    std::vector<int64_t> enumerate_loads(const Graph& g) const;
    // Arrival counts when every path id is executed once.
    std::vector<int64_t> enumerate_arrivals(const Graph& g) const;

    // Demand scaling: each token carries 1/scale units of demand.
    int64_t demand_scale = 1;

    size_t table_bits(const Graph& g, int v) const;
    void serialize_node(const Graph& g, int v, BitWriter& w) const;
    static FlowTsNode deserialize_node(const Graph& g, int v, int64_t total_tokens, BitReader& r);
    void serialize(const Graph& g, BitWriter& w) const;
    static FlowTs deserialize(const Graph& g, BitReader& r);

    bool operator==(const FlowTs&) const;

private:
    int64_t total_tokens_ = 0;
    std::vector<FlowTsNode> nodes_;
    int token_width() const { return bit_width_for(static_cast<uint64_t>(total_tokens_) + 1); }
};

bool operator==(const FlowTsInterval& a, const FlowTsInterval& b);
bool operator==(const FlowTsNode& a, const FlowTsNode& b);

}  // namespace croute
