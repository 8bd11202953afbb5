#pragma once

#include <cstdint>
#include <vector>

#include "croute/config.hpp"
#include "croute/flow_ts.hpp"
#include "croute/graph.hpp"
#include "croute/rng.hpp"

namespace croute {

// One cut-matching round: a deterministic TS pair induced by a single
// integral flow. ts1 routes mu1 -> mu2, ts2 the reverse along -f.
struct PmcfRound {
    FlowTs ts1, ts2;
};

// State of the cut-matching game over virtual nodes V' = {1..2n c(V)}:
// node v simulates 2n c(v) virtual nodes. Packets re-randomize their virtual
// node inside the block each round, so walk rows coincide within blocks and
// an n x n block matrix carries the full state.
class CutMatchingState {
public:
    CutMatchingState(const std::vector<int>& cluster, const std::vector<int64_t>& c, uint64_t seed);

    int64_t virtual_count() const { return vcount_; }
    int64_t block_size(int pos) const { return blocks_[pos]; }

    // Cut player: balanced bipartition by projecting walk rows on a random
    // direction and splitting at the median. Returns mu1 per cluster position
    // (mu2 = block size - mu1).
    std::vector<int64_t> cut_partition();

    // Matching player feedback: per-position target counts of the round's
    // token mapping, k[from][to] summed over both TSes. Updates the walk.
    void apply_round(const std::vector<std::vector<int64_t>>& k);

    // Walk potential sum_v' ||P(v',.) - uniform||^2 of the tracked matrix.
    double potential() const;

private:
    int n_;
    int64_t vcount_ = 0;
    std::vector<int64_t> blocks_;  // 2n c(v) per cluster position
    std::vector<double> mass_;     // n x n row-major: row = walk from a block
    CounterRng rng_;
};

// Deterministic CTS routing <c(v): 1_v -> c> for every cluster node v.
// Path ids: per round a coin bit plus an index i' in {1..2 n^2 c(V) N}.
class PmcfCts {
public:
    static PmcfCts build(const Graph& g, const std::vector<int>& cluster,
                         const std::vector<int64_t>& c, const Config& cfg, uint64_t seed);

    const std::vector<int>& cluster() const { return cluster_; }
    int64_t weight(int v) const { return c_[v]; }
    int64_t weight_total() const { return c_total_; }
    int cluster_size() const { return n_; }
    int rounds() const { return rounds_; }
    int64_t index_space() const { return idx_space_; }  // T
    const PmcfRound& round(int k) const { return rounds_data_[k]; }
    int64_t virtual_of(int v) const { return 2 * int64_t{n_} * c_[v]; }

    // One round of execution at node v; returns the node after the round.
    // `edges_out`, when non-null, collects the traversed edge ids.
    int exec_round(const Graph& g, int k, int v, bool move, int64_t iprime,
                   std::vector<int>* edges_out = nullptr) const;
    // Full execution with choices drawn from rng.
    int exec_random(const Graph& g, int v, CounterRng& rng, std::vector<int>* edges_out = nullptr) const;

    // Path id encoding: per round 1 coin bit + index_width bits.
    int index_width() const { return bit_width_for(static_cast<uint64_t>(idx_space_)); }
    size_t path_id_bits() const { return static_cast<size_t>(rounds_) * (1 + index_width()); }

    size_t table_bits(const Graph& g, int v) const;
    void serialize(const Graph& g, BitWriter& w) const;
    static PmcfCts deserialize(const Graph& g, BitReader& r);
    bool operator==(const PmcfCts&) const;
    void retain_only(int keep);

    // Cut-player walk potential after each round (construction metadata,
    // not serialized).
    std::vector<double> potential_trace;

private:
    std::vector<int> cluster_;
    std::vector<int64_t> c_;  // per global node
    int64_t c_total_ = 0;
    int n_ = 0;
    int rounds_ = 0;
    int64_t idx_space_ = 0;
    std::vector<PmcfRound> rounds_data_;
};

// A sampled pmcf path id, replayable deterministically.
struct PmcfPathId {
    std::vector<uint8_t> move;     // per round
    std::vector<int64_t> iprime;   // per round, 1-based
};

PmcfPathId draw_pmcf_path_id(const PmcfCts& cts, CounterRng& rng);
// Replay from node v; returns end node; optionally records edges and the
// minimum edge class seen (INT_MAX when no edge traversed).
int replay_pmcf(const Graph& g, const PmcfCts& cts, int v, const PmcfPathId& id,
                std::vector<int>* edges_out = nullptr, int* min_class = nullptr);

}  // namespace croute
