#include <algorithm>

#include "croute/pmcf.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace croute;

TEST_CASE("cut player produces balanced partitions") {
    SUBCASE("fresh state") {
        CutMatchingState st({0, 1}, {1, 1}, 99);
        auto mu1 = st.cut_partition();
        CHECK(mu1[0] + mu1[1] == st.virtual_count() / 2);
        CHECK(mu1[0] <= st.block_size(0));
        CHECK(mu1[1] <= st.block_size(1));
    }
    SUBCASE("two virtual nodes split one each side") {
        // single node, weight 1: |V'| = 2
        CutMatchingState st({0}, {1}, 1);
        auto mu1 = st.cut_partition();
        CHECK(mu1[0] == 1);
    }
    SUBCASE("potential does not increase, including at the uniform point") {
        CutMatchingState st({0, 1}, {1, 1}, 7);
        // valid round: all of block 0 maps into block 1 and vice versa
        std::vector<std::vector<int64_t>> k{{0, st.block_size(0)}, {st.block_size(1), 0}};
        double prev = st.potential();
        for (int round = 0; round < 60; ++round) {
            st.cut_partition();
            st.apply_round(k);
            double cur = st.potential();
            CHECK(cur <= prev + 1e-12);
            prev = cur;
        }
        CHECK(prev <= 1e-6);  // essentially uniform by now
        st.apply_round(k);
        CHECK(st.potential() <= prev + 1e-12);
    }
}

TEST_CASE("pmcf build on the unit edge") {
    Config cfg;
    Graph g = fixtures::f1();
    PmcfCts cts = PmcfCts::build(g, {0, 1}, {1, 1}, cfg, 11);
    CHECK(cts.rounds() >= 1);
    CHECK(cts.index_space() == 2LL * 2 * 2 * 2 * cts.rounds());
    CHECK(cts.path_id_bits() == static_cast<size_t>(cts.rounds()) * (1 + cts.index_width()));

    // potential trace never increases
    for (size_t i = 1; i < cts.potential_trace.size(); ++i)
        CHECK(cts.potential_trace[i] <= cts.potential_trace[i - 1] + 1e-12);

    // exact propagation: output within (1 +- 2/n) of normalized c, n = 2
    for (int src : {0, 1}) {
        auto mass = test_oracles::propagate_pmcf(g, cts, src);
        Rat total = 0;
        for (const Rat& m : mass) total += m;
        CHECK(total == Rat(1));
        for (int v = 0; v < 2; ++v) {
            Rat cbar(1, 2);
            CHECK(mass[v] >= cbar * Rat(0));       // 1 - 2/2 = 0
            CHECK(mass[v] <= cbar * Rat(2));       // 1 + 2/2 = 2
        }
    }
}

TEST_CASE("per-round mass preservation") {
    Config cfg;
    Graph g = fixtures::f2();
    std::vector<int64_t> c{1, 2, 2, 1};
    PmcfCts cts = PmcfCts::build(g, {0, 1, 2, 3}, c, cfg, 3);
    int n = 4;
    for (int k = 0; k < cts.rounds(); ++k) {
        const auto& rd = cts.round(k);
        auto a1 = rd.ts1.enumerate_arrivals(g);
        auto a2 = rd.ts2.enumerate_arrivals(g);
        for (int v = 0; v < 4; ++v) {
            CHECK(rd.ts1.count(v) + rd.ts2.count(v) == 2 * n * c[v]);
            CHECK(a1[v] + a2[v] == 2 * n * c[v]);
        }
    }
}

TEST_CASE("pmcf mixing on K4 with degree weights (exact propagation)") {
    Config cfg;
    Graph g = fixtures::k4();
    std::vector<int64_t> c{3, 3, 3, 3};
    PmcfCts cts = PmcfCts::build(g, {0, 1, 2, 3}, c, cfg, 17);
    int n = 4;
    for (int src = 0; src < 4; ++src) {
        auto mass = test_oracles::propagate_pmcf(g, cts, src);
        Rat total = 0;
        for (const Rat& m : mass) total += m;
        CHECK(total == Rat(1));
        for (int v = 0; v < 4; ++v) {
            Rat cbar(c[v], 12);
            CHECK(mass[v] >= cbar * (Rat(1) - Rat(2, n)));
            CHECK(mass[v] <= cbar * (Rat(1) + Rat(2, n)));
        }
    }
}

TEST_CASE("deterministic replay: identical path id gives identical edges") {
    Config cfg;
    Graph g = fixtures::f2();
    PmcfCts cts = PmcfCts::build(g, {0, 1, 2, 3}, {1, 2, 2, 1}, cfg, 23);
    CounterRng rng(5, 77);
    PmcfPathId id = draw_pmcf_path_id(cts, rng);
    std::vector<int> e1, e2;
    int t1 = replay_pmcf(g, cts, 1, id, &e1);
    int t2 = replay_pmcf(g, cts, 1, id, &e2);
    CHECK(t1 == t2);
    CHECK(e1 == e2);
}

TEST_CASE("pmcf serialization round-trip") {
    Config cfg;
    Graph g = fixtures::f1();
    PmcfCts cts = PmcfCts::build(g, {0, 1}, {1, 1}, cfg, 31);
    BitWriter w;
    cts.serialize(g, w);
    BitReader r(w.bytes().data(), w.bit_size());
    PmcfCts back = PmcfCts::deserialize(g, r);
    CHECK(back == cts);
    size_t per_node_total = 0;
    for (int v = 0; v < 2; ++v) per_node_total += cts.table_bits(g, v);
    CHECK(per_node_total <= w.bit_size());
}
