#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "croute/rng.hpp"
#include "croute/scheme.hpp"

namespace croute {

// Packet header: the complete per-packet state. The step function reads only
// the current node's tables plus this header, so the struct doubles as the
// wire format whose serialized size is the measured header length.
struct Header {
    enum class Phase : uint8_t { Up, Down, Arrived };

    std::vector<int> target_label;
    int16_t lca_depth = 0;
    int16_t depth = 0;
    Phase phase = Phase::Arrived;
    uint8_t stage = 0;  // 0 = entering the current tree step

    // Flow-TS walk (mixing stage 1, unmixing stages 1/3, embed fwd/rev).
    struct FlowWalk {
        bool active = false;
        int64_t token = 0;
    } flow;

    // PMCF execution: randomized (mixing stage 2) or replay of a stored id.
    struct PmcfExec {
        bool active = false;
        bool replay = false;
        PmcfPathId id;  // only when replay
        int round = 0;
        uint8_t walk_ts = 0;  // 0 between rounds, 1/2 during a flow walk
        int64_t token = 0;
    } pmcf;

    // Hypercube traversal (unmixing stage 2).
    struct CubeState {
        bool active = false;
        int commodity = -1;  // child index
        int cls = -1;
        int64_t cur = -1, z = -1, y = -1;
        uint8_t toward_y = 0;
        int64_t pending_id = -1;  // cube id reached once the embed arc delivers
    } cube;

    // Embedded-arc traversal with anticipative payload.
    struct EmbedState {
        bool active = false;
        int arc = -1;
        uint8_t mode = 0;  // 0 pick, 1 fwd, 2 rev, 3 path leg1, 4 path leg2
        int round = -1;
        int64_t token = 0;  // current fwd/rev token
        // anticipative payload picked up at the helper node
        bool pending = false;
        bool pending_branch = false;
        int pending_round = -1;
        int64_t pending_lo = 0, pending_hi = -1;
        EmbedCts::SinglePath path;  // carried in the header during replay
        bool has_path = false;
    } embed;

    uint64_t rng_counter = 0;

    bool arrived() const { return phase == Phase::Arrived; }
};

struct LoadReport {
    std::vector<Rat> per_edge;                  // expected load per edge
    Rat congestion = 0;                         // max load/capacity
    std::map<std::pair<int, int>, Rat> delivery;  // (src,dst) -> delivered fraction
    int64_t trials = 0;                         // 0 for exact mode
    uint64_t seed = 0;
    size_t max_header_bits = 0;
    int64_t faults = 0;
};

struct SizeReport {
    std::vector<size_t> bits_per_node;
    size_t label_bits_total = 0;
    size_t max_header_bits = 0;
    double max_compactness = 0;  // max_v bits(v) / ((deg(v)+1) * log2(nW)^3)
};

// One local step of an embedded-arc traversal: consumes only `node`'s slice
// of the embed tables. Returns the outgoing edge, or nullopt once h.embed
// goes inactive (arc delivered).
std::optional<int> embed_step(const Graph& g, const EmbedCts& em, int node, Header& h,
                              CounterRng& rng);

// Standalone runner for one embedded arc: end node plus traversed edges.
std::pair<int, std::vector<int>> run_embed_arc(const Graph& g, const EmbedCts& em, int arc,
                                               uint64_t seed, uint64_t stream);

class Simulator {
public:
    explicit Simulator(const SchemeBundle& b) : b_(&b) {}

    // Header for a packet from src to dst, initialized from src's own label
    // and the target label.
    Header make_header(int src, int dst) const;

    // One local step: consumes only the tables of `node` and the header.
    // Returns the outgoing edge, or nullopt when the packet has arrived.
    std::optional<int> step(int node, Header& h, CounterRng& rng) const;

    // Runs a packet to completion; returns (end node, edges traversed).
    std::pair<int, std::vector<int>> run_packet(int src, int dst, uint64_t seed,
                                                uint64_t packet_index,
                                                size_t* max_header_bits = nullptr) const;

    LoadReport simulate_monte_carlo(const DemandMatrix& d, int trials, uint64_t seed) const;
    LoadReport simulate_exact(const DemandMatrix& d) const;
    SizeReport measure(int header_probe_trials = 64) const;

    // Exact per-pair unit-demand edge loads (rational), composed from exact
    // per-cluster kernels.
    std::vector<Rat> exact_unit_loads(int src, int dst) const;

    size_t header_bits(const Header& h) const;

private:
    struct ExactCache;
    const SchemeBundle* b_;
    mutable std::shared_ptr<ExactCache> exact_;

    // internal step helpers; each advances the header until an edge is
    // emitted or the packet state changes phase
    std::optional<int> step_up(int node, Header& h, CounterRng& rng) const;
    std::optional<int> step_down(int node, Header& h, CounterRng& rng) const;
    std::optional<int> step_embed(int node, Header& h, CounterRng& rng,
                                  const ClusterScheme& cs) const;
    bool advance_cube(int node, Header& h, CounterRng& rng, const ClusterScheme& cs) const;

    const ClusterScheme& scheme_at(int node, int depth) const;
    ExactCache& exact_cache() const;
};

}  // namespace croute
