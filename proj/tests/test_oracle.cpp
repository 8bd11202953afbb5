#include "croute/oracle.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace croute;

TEST_CASE("opt_congestion on fixtures (exact LP path)") {
    Config cfg;
    SUBCASE("single forced edge") {
        Graph g = fixtures::f1();
        DemandMatrix d;
        d.add(0, 1, Rat(2));
        auto cert = opt_congestion(g, d, cfg);
        CHECK(cert.primal == Rat(2));
        CHECK(cert.gap() == Rat(1));
        CHECK(cert.exact);
    }
    SUBCASE("F3 d(a,b)=4 saturates both bottleneck cuts") {
        Graph g = fixtures::f3();
        DemandMatrix d;
        d.add(fixtures::F3_A, fixtures::F3_B, Rat(4));
        auto cert = opt_congestion(g, d, cfg);
        CHECK(cert.primal == Rat(1));
        CHECK(cert.gap() == Rat(1));
    }
    SUBCASE("all-zero demands") {
        Graph g = fixtures::f2();
        DemandMatrix d;
        auto cert = opt_congestion(g, d, cfg);
        CHECK(cert.primal == Rat(0));
    }
    SUBCASE("disconnected demand pair is an error") {
        Graph g(4, {{0, 1, 1}, {2, 3, 1}});
        DemandMatrix d;
        d.add(0, 2, Rat(1));
        CHECK_THROWS(opt_congestion(g, d, cfg));
    }
}

TEST_CASE("certificate soundness: loads reproduce the primal congestion") {
    Config cfg;
    Graph g = fixtures::f3();
    DemandMatrix d;
    d.add(0, 6, Rat(2));
    d.add(6, 1, Rat(1));
    auto cert = opt_congestion(g, d, cfg);
    Rat max_ratio = 0;
    for (int e = 0; e < g.edge_count(); ++e) {
        Rat r = cert.per_edge_loads[e] / g.edge(e).capacity;
        if (r > max_ratio) max_ratio = r;
    }
    CHECK(max_ratio == cert.primal);
}

TEST_CASE("scaling invariance is exact") {
    Config cfg;
    Graph g = fixtures::f3();
    DemandMatrix d, d3;
    d.add(0, 6, Rat(1));
    d.add(1, 6, Rat(1, 2));
    for (const auto& e : d.entries()) d3.add(e.src, e.dst, e.amount * Rat(7, 3));
    auto a = opt_congestion(g, d, cfg);
    auto b = opt_congestion(g, d3, cfg);
    CHECK(b.primal == a.primal * Rat(7, 3));
    for (int e = 0; e < g.edge_count(); ++e)
        CHECK(b.per_edge_loads[e] == a.per_edge_loads[e] * Rat(7, 3));
}

TEST_CASE("pmcf_congestion") {
    Config cfg;
    SUBCASE("unit edge with unit weights") {
        Graph g = fixtures::f1();
        auto cert = pmcf_congestion(g, {0, 1}, {1, 1}, cfg);
        CHECK(cert.primal == Rat(1));
        CHECK(cert.gap() == Rat(1));
    }
    SUBCASE("single-node cluster is trivial") {
        Graph g = fixtures::f2();
        auto cert = pmcf_congestion(g, {2}, {0, 0, 5, 0}, cfg);
        CHECK(cert.primal == Rat(0));
    }
    SUBCASE("zero weights are trivial") {
        Graph g = fixtures::f2();
        auto cert = pmcf_congestion(g, {0, 1, 2, 3}, {0, 0, 0, 0}, cfg);
        CHECK(cert.primal == Rat(0));
    }
    SUBCASE("K4 with degree weights") {
        // Frozen fixture constant: every ordered pair carries 9/12, the best
        // routing sends each pair's demand on its direct edge, giving 3/2
        // (matching the distance lower bound 9 * 1 / 6).
        Graph g = fixtures::k4();
        auto cert = pmcf_congestion(g, {0, 1, 2, 3}, {3, 3, 3, 3}, cfg);
        CHECK(cert.primal == Rat(3, 2));
        CHECK(cert.gap() == Rat(1));
    }
}

TEST_CASE("multiplicative-weights path certifies the requested gap") {
    Config cfg;
    cfg.exact_lp_threshold = 0;  // force the iterative solver
    Graph g = fixtures::grid(3);
    DemandMatrix d;
    // a permutation-style demand set
    for (int v = 0; v < 9; ++v) d.add(v, (v * 5 + 3) % 9, Rat(1));
    auto cert = opt_congestion(g, d, cfg);
    CHECK(cert.dual > 0);
    CHECK(to_double(cert.gap()) <= 1.0 + cfg.oracle_eps + 1e-9);
    // cross-check against the exact LP on the same instance
    Config exact_cfg;
    exact_cfg.exact_lp_threshold = 1 << 20;
    auto lp = opt_congestion(g, d, exact_cfg);
    CHECK(lp.exact);
    CHECK(to_double(cert.primal) >= to_double(lp.primal) - 1e-9);
    CHECK(to_double(cert.dual) <= to_double(lp.primal) + 1e-9);
}
