#pragma once

#include <vector>

#include "croute/config.hpp"
#include "croute/graph.hpp"

namespace croute {

// Certified congestion bound: dual <= optimum <= primal.
struct CongestionCertificate {
    Rat primal = 0;                   // congestion of the returned routing
    Rat dual = 0;                     // lower bound on the optimal congestion
    bool exact = false;               // solved by the exact LP (gap == 1)
    std::vector<Rat> per_edge_loads;  // loads of the primal routing

    Rat gap() const { return dual == 0 ? Rat(1) : Rat(primal / dual); }
    // Same routing scaled by g: exact scaling invariance.
    CongestionCertificate scaled(const Rat& g) const;
};

// Optimal (or certified near-optimal) congestion for routing demands d in g.
// Uses the exact edge-formulation LP when n * |aggregated sources| is below
// cfg.exact_lp_threshold, otherwise a multiplicative-weights max concurrent
// flow scheme iterated until the certified gap is at most 1 + cfg.oracle_eps.
CongestionCertificate opt_congestion(const Graph& g, const DemandMatrix& d, const Config& cfg);

// Congestion of the product multicommodity flow with demands
// c(u)c(v)/c(V) inside the induced subgraph g[cluster].
CongestionCertificate pmcf_congestion(const Graph& g, const std::vector<int>& cluster,
                                      const std::vector<int64_t>& c, const Config& cfg);

}  // namespace croute
