#pragma once

#include <vector>

#include "croute/flow_ts.hpp"
#include "croute/graph.hpp"

namespace croute {

// Exact minimum-congestion single-commodity flow with bal = mu_out - mu_in,
// supported inside `cluster` (node subset; empty = whole graph).
// Solved via Dinkelbach iteration over exact integer max-flows, so the
// returned congestion is the true optimum of this instance.
Flow min_congestion_flow(const Graph& g, const Distribution& mu_in, const Distribution& mu_out,
                         const std::vector<int>& cluster);

// Integral acyclic flow with the same balances and congestion <= ceil(cong(f)).
IntegralAcyclicFlow integralize_acyclic(const Graph& g, const Flow& f,
                                        const std::vector<int64_t>& mu,
                                        const std::vector<int64_t>& mu_out);

// Deterministic TS routing <mu(V): mu -> mu'> along an integral acyclic flow.
FlowTs build_flow_ts(const IntegralAcyclicFlow& flow, const std::vector<int64_t>& mu,
                     const std::vector<int64_t>& mu_out);

// Deterministic TS routing <min(totals): mu_in -> mu_out> for integral
// distributions bounded by the cluster weights c. Internally rescales to the
// smallest integral representation of min(totals) * normalized distributions.
FlowTs route_similar(const Graph& g, const std::vector<int64_t>& mu_in,
                     const std::vector<int64_t>& mu_out, const std::vector<int>& cluster,
                     const std::vector<int64_t>& c);

}  // namespace croute
