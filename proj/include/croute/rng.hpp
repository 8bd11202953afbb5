#pragma once

#include <cstdint>

namespace croute {

// Counter-based RNG: every draw is a pure function of (seed, stream, counter),
// so per-packet streams are replayable and independent of execution order.
class CounterRng {
public:
    CounterRng(uint64_t seed, uint64_t stream) : seed_(seed), stream_(stream) {}

    uint64_t next() { return mix(seed_, stream_, counter_++); }

    // Unbiased uniform draw in [0, n).
    uint64_t below(uint64_t n) {
        if (n <= 1) return 0;
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do { v = next(); } while (v >= limit);
        return v % n;
    }

    bool coin() { return next() & 1u; }

    uint64_t counter() const { return counter_; }
    void set_counter(uint64_t c) { counter_ = c; }

    static uint64_t mix(uint64_t seed, uint64_t stream, uint64_t counter) {
        uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z += 0xbf58476d1ce4e5b9ULL * (counter + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    uint64_t seed_;
    uint64_t stream_;
    uint64_t counter_ = 0;
};

}  // namespace croute
