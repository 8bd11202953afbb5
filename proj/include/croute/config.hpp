#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace croute {

// All tunable constants in one place. A key=value file can override any field;
// every JSON report echoes the effective values for provenance.
struct Config {
    // Cut-matching game: rounds N = ceil(kappa * log2(|V'|)^2).
    int kappa = 10;
    // Randomized rounding: retry attempts before declaring failure.
    int rounding_retries = 100;
    // Path-system sampling: samples per pair M = sample_factor * Nclass * ln(n+4).
    int sample_factor = 64;
    // Table-size audit constants.
    int c1_table = 8;    // flow TS:   bits(v) <= c1*(deg(v)+1)*ceil(log2(n*W*ceil(cong)))
    int c2_storage = 96; // embedding: bits(z) <= c2*(deg(z)+1)*C*log2(n)^2*log2(2W)*log2(n*W)^3
    // Oracle.
    double oracle_eps = 0.05;     // target certified gap 1+eps
    int exact_lp_threshold = 64;  // use exact LP when n*|demand pairs| <= this
    // Simulation defaults.
    int mc_trials = 1000;
    int step_bound_mult = 64;  // fault after n*(header_bits+1)*step_bound_mult steps
    // Regression budgets (fitted once on the fixture family, then asserted).
    double ratio_budget = 64.0;   // scheme congestion / oracle primal
    double compact_budget = 520.0;  // max bits(v) / ((deg(v)+1)*log2(nW)^3)
    uint64_t seed = 12345;
    int jobs = 1;

    static Config from_file(const std::string& path);
    std::map<std::string, std::string> items() const;
};

}  // namespace croute
