#pragma once

#include <vector>

#include "croute/rational.hpp"

namespace croute {

// Exact rational LP: minimize c*x subject to A x = b, x >= 0.
// Two-phase dense simplex with Bland's rule; tolerant of redundant rows.
struct LpResult {
    enum class Status { Optimal, Infeasible, Unbounded };
    Status status;
    Rat objective;
    std::vector<Rat> x;
};

LpResult solve_lp_min(std::vector<std::vector<Rat>> a, std::vector<Rat> b,
                      const std::vector<Rat>& c);

}  // namespace croute
