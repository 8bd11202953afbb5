#pragma once

#include <climits>
#include <map>
#include <optional>
#include <vector>

#include "croute/config.hpp"
#include "croute/pmcf.hpp"

namespace croute {

// A concrete path through the PMCF CTS: two legs around an intermediate node.
struct SampledPath {
    PmcfPathId leg1, leg2;
    int mid = -1;
    int cls = INT_MAX;  // min edge class over both legs; INT_MAX for the empty path
};

struct PathSystem {
    int src = -1, dst = -1;
    int cls = INT_MAX;               // plurality class among raw samples
    std::vector<SampledPath> paths;  // retained paths, all of class `cls`
    int raw_samples = 0;
    double plurality_share = 0.0;    // |paths| / raw_samples
};

// Samples path systems against a fixed PMCF CTS. Second legs are drawn by
// rejection; draws that land elsewhere are pooled for later queries.
class PathSystemSampler {
public:
    PathSystemSampler(const Graph& g, const PmcfCts& pmcf, const Config& cfg, uint64_t seed)
        : g_(&g), pmcf_(&pmcf), cfg_(&cfg), rng_(seed, 0x706174687379731fULL) {}

    // M = sample_factor * Nclass * ln(n+4) concatenated samples, then keep the
    // plurality class.
    const PathSystem& system(int u, int v);
    int sample_budget() const;

    // Replays a sampled path; returns traversed edges of both legs.
    std::vector<int> edges_of(const SampledPath& p, int src) const;

private:
    SampledPath sample_one(int u, int v);
    std::optional<PmcfPathId> leg2_to(int w, int v);

    const Graph* g_;
    const PmcfCts* pmcf_;
    const Config* cfg_;
    CounterRng rng_;
    std::map<std::pair<int, int>, PathSystem> cache_;
    std::map<std::pair<int, int>, std::vector<PmcfPathId>> pool_;  // (mid, dst) -> spare ids
};

// Randomized rounding of path systems (probabilistic-method style: resample
// until the realized congestion clears 2 cong(P,d) + 6 ln m).
struct RoundedPaths {
    std::vector<std::vector<int>> chosen;  // per system: indices into paths (multiset)
    int attempts = 0;
    Rat fractional_congestion;  // cong(P, d)
    Rat realized_congestion;
};

RoundedPaths round_paths(const Graph& g, PathSystemSampler& sampler,
                         const std::vector<const PathSystem*>& systems,
                         const std::vector<int64_t>& demands, const Config& cfg, CounterRng& rng);

// Directed auxiliary arc with parallel arcs permitted.
struct AuxArc {
    int u = -1, v = -1;
    int64_t d = 0;
};

// CTS embedding a low-degree directed graph: routes <d(u,v): 1_u -> 1_v> per
// arc. Large demands are split class by class across helper nodes; packets
// pick stored continuations up mid-route (anticipative routing).
class EmbedCts {
public:
    struct SinglePath {
        PmcfPathId id1, id2;
        int mid = -1, dst = -1;
    };
    struct ArcPlan {
        int64_t d_total = 0;
        int64_t d_large = 0;           // routed via the split machinery
        int elim_round = -1;           // index into rounds
        int64_t fwd_lo = 0, fwd_hi = -1;  // global token range in rounds[elim_round].fwd
        std::optional<SinglePath> residual;  // routes d_total - d_large
    };
    struct Continuation {
        int64_t rev_token = -1;
        bool is_branch = false;
        int next_round = -1;
        int64_t lo = 0, hi = -1;
        std::optional<SinglePath> path;
    };
    struct Elim {
        int cls = -1;
        FlowTs fwd, rev;
        // fwd token id -> continuation; entry is stored at the token's landing node
        std::map<int64_t, Continuation> entries;
        std::map<int64_t, int> landing;  // fwd token id -> node (for locality grouping)
    };

    static EmbedCts build(const Graph& g, const std::vector<int>& cluster,
                          const std::vector<int64_t>& c, const Rat& measured_c,
                          const PmcfCts& pmcf, const std::vector<AuxArc>& arcs, const Config& cfg,
                          uint64_t seed, int64_t demand_slack = 1);

    const std::vector<AuxArc>& arcs() const { return arcs_; }
    const std::vector<int>& arcs_of_source(int u) const { return by_source_[u]; }
    const ArcPlan& plan(int a) const { return plans_[a]; }
    const std::vector<Elim>& rounds() const { return rounds_; }
    const PmcfCts& pmcf() const { return *pmcf_; }
    int elimination_rounds() const { return static_cast<int>(rounds_.size()); }

    // Construction-time audit results.
    int64_t max_storage_bits_node() const { return max_storage_bits_node_; }
    size_t table_bits(const Graph& g, int v) const;

    void serialize(const Graph& g, BitWriter& w) const;
    static EmbedCts deserialize(const Graph& g, const PmcfCts& pmcf, BitReader& r);
    bool equal_tables(const EmbedCts& o) const;
    void retain_only(int keep);
    void rebind_pmcf(const PmcfCts& pmcf) { pmcf_ = &pmcf; }

private:
    const PmcfCts* pmcf_ = nullptr;
    std::vector<AuxArc> arcs_;
    std::vector<std::vector<int>> by_source_;
    std::vector<ArcPlan> plans_;
    std::vector<Elim> rounds_;
    int64_t max_storage_bits_node_ = 0;

    friend void serialize_single_path(BitWriter&, const EmbedCts::SinglePath&, const PmcfCts&);
};

// Per-class hypercube embedding: routes <w_S(S_i): maj^(l)_S -> out^(l)_{S_i}>
// for each child S_i of class l, commodity encoded as the sorted child index.
class HypercubeCts {
public:
    struct Cube {
        int cls = -1;
        int dim = 0;
        std::vector<int64_t> owner;                    // id -> global node
        std::vector<std::vector<int64_t>> ids_of;      // global node -> owned ids (sorted)
        std::vector<std::pair<int, int64_t>> ranges;   // per child of this class: (child index, lo); size = norm
        // per id, per flipped bit: index of the aux arc owner(id) -> owner(id^bit),
        // or -1 when both ids share the owner. Stored with the owning node.
        std::vector<std::vector<int>> neighbor_arc;
    };

    static HypercubeCts build(const Graph& g, const std::vector<int>& cluster,
                              const std::vector<int64_t>& w_s, const Rat& measured_c,
                              const PmcfCts& pmcf,
                              const std::vector<std::vector<int>>& child_nodes,
                              const std::vector<int>& child_class,
                              const std::vector<int64_t>& child_norm,
                              const std::vector<std::vector<int64_t>>& child_out_cls,
                              const Config& cfg, uint64_t seed);

    const std::vector<Cube>& cubes() const { return cubes_; }
    const Cube* cube_for_class(int cls) const;
    const EmbedCts& embed() const { return embed_; }
    bool has_embed() const { return has_embed_; }
    // Range of cube ids assigned to child i (must be a class-cls child).
    std::pair<int64_t, int64_t> child_range(int child_index) const;  // (lo, size)
    int class_of_child(int child_index) const { return child_class_[child_index]; }

    size_t table_bits(const Graph& g, int v) const;
    void serialize(const Graph& g, BitWriter& w) const;
    static HypercubeCts deserialize(const Graph& g, const PmcfCts& pmcf, BitReader& r);
    void retain_only(int keep);
    void rebind_pmcf(const PmcfCts& pmcf) { embed_.rebind_pmcf(pmcf); }

private:
    void fill_neighbor_arcs();

    std::vector<Cube> cubes_;
    EmbedCts embed_;
    bool has_embed_ = false;
    std::vector<int> child_class_;
    std::vector<int64_t> child_norm_;
};

}  // namespace croute
