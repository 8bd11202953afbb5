#pragma once

#include <cstdint>
#include <vector>

namespace croute {

// Integer max-flow (Dinic). Deterministic: arcs are explored in insertion
// order, so results are reproducible.
class MaxFlow {
public:
    explicit MaxFlow(int n) : head_(n, -1), level_(n), it_(n) {}

    // Returns arc id; the reverse arc is id^1.
    int add_arc(int from, int to, int64_t capacity);
    int64_t run(int s, int t);

    int64_t flow_on(int arc) const { return arcs_[arc ^ 1].cap; }  // flow pushed through arc
    int64_t residual(int arc) const { return arcs_[arc].cap; }
    // Nodes reachable from s in the residual network (min cut side), valid after run().
    std::vector<char> min_cut_side(int s) const;

private:
    struct Arc {
        int to, next;
        int64_t cap;
    };
    bool bfs(int s, int t);
    int64_t dfs(int v, int t, int64_t limit);

    std::vector<Arc> arcs_;
    std::vector<int> head_, level_, it_;
};

}  // namespace croute
