#pragma once

#include <tuple>
#include <vector>

#include "croute/graph.hpp"

namespace fixtures {

// F1: single unit edge 0-1.
inline croute::Graph f1() { return croute::Graph(2, {{0, 1, 1}}); }

// F2: path 0-1-2-3 with unit capacities.
inline croute::Graph f2() {
    return croute::Graph(4, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}});
}

// F3: a --(4)-- c, c --(1)-- m_i --(1)-- b for i in 1..4.
// Nodes: a=0, c=1, m=2..5, b=6.
inline croute::Graph f3() {
    return croute::Graph(7, {{0, 1, 4},
                             {1, 2, 1},
                             {1, 3, 1},
                             {1, 4, 1},
                             {1, 5, 1},
                             {2, 6, 1},
                             {3, 6, 1},
                             {4, 6, 1},
                             {5, 6, 1}});
}
constexpr int F3_A = 0, F3_C = 1, F3_B = 6;

// F5: k x k grid with unit capacities (node (r,c) = r*k + c).
inline croute::Graph grid(int k) {
    std::vector<std::tuple<int, int, int64_t>> edges;
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) {
            if (c + 1 < k) edges.emplace_back(r * k + c, r * k + c + 1, 1);
            if (r + 1 < k) edges.emplace_back(r * k + c, (r + 1) * k + c, 1);
        }
    return croute::Graph(k * k, edges);
}
inline croute::Graph f5() { return grid(4); }

// Q_d hypercube with unit capacities.
inline croute::Graph hypercube(int d) {
    std::vector<std::tuple<int, int, int64_t>> edges;
    int n = 1 << d;
    for (int v = 0; v < n; ++v)
        for (int b = 0; b < d; ++b)
            if (!(v & (1 << b))) edges.emplace_back(v, v | (1 << b), 1);
    return croute::Graph(n, edges);
}

// K4 with unit capacities.
inline croute::Graph k4() {
    return croute::Graph(4, {{0, 1, 1}, {0, 2, 1}, {0, 3, 1}, {1, 2, 1}, {1, 3, 1}, {2, 3, 1}});
}

}  // namespace fixtures
