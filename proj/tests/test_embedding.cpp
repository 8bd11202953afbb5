#include <cmath>
#include <set>

#include "croute/embedding.hpp"
#include "croute/simulator.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace croute;

namespace {

struct PmcfFixture {
    Graph g;
    std::vector<int> cluster;
    std::vector<int64_t> c;
    PmcfCts pmcf;
    Config cfg;

    PmcfFixture(Graph graph, std::vector<int64_t> weights, uint64_t seed = 7)
        : g(std::move(graph)), c(std::move(weights)) {
        for (int v = 0; v < g.node_count(); ++v) cluster.push_back(v);
        pmcf = PmcfCts::build(g, cluster, c, cfg, seed);
    }
};

}  // namespace

TEST_CASE("path system sampling") {
    PmcfFixture fx(fixtures::f1(), {1, 1});
    PathSystemSampler sampler(fx.g, fx.pmcf, fx.cfg, 5);
    SUBCASE("only unit edges: every path has class 0, share 1") {
        const PathSystem& ps = sampler.system(0, 1);
        CHECK(ps.cls == 0);
        CHECK(ps.plurality_share == 1.0);
        for (const auto& p : ps.paths) CHECK(p.cls == 0);
    }
    SUBCASE("degenerate pair gives the empty path") {
        const PathSystem& ps = sampler.system(0, 0);
        CHECK(ps.cls == INT_MAX);
        REQUIRE(ps.paths.size() == 1);
        CHECK(sampler.edges_of(ps.paths[0], 0).empty());
    }
}

TEST_CASE("path systems on F3 cross the unit layer") {
    // every a->b walk must traverse a class-0 edge, so the system class is 0
    PmcfFixture fx(fixtures::f3(), {4, 8, 2, 2, 2, 2, 4}, 11);
    PathSystemSampler sampler(fx.g, fx.pmcf, fx.cfg, 5);
    const PathSystem& ps = sampler.system(fixtures::F3_A, fixtures::F3_B);
    CHECK(ps.cls == 0);
    for (const auto& p : ps.paths) {
        auto edges = sampler.edges_of(p, fixtures::F3_A);
        bool has_unit = false;
        for (int e : edges) has_unit |= fx.g.edge(e).cls == 0;
        CHECK(has_unit);
    }
}

TEST_CASE("round_paths cardinalities and threshold") {
    PmcfFixture fx(fixtures::f3(), {4, 8, 2, 2, 2, 2, 4}, 13);
    PathSystemSampler sampler(fx.g, fx.pmcf, fx.cfg, 19);
    CounterRng rng(3, 1);

    SUBCASE("class-3 system with demand 8 keeps exactly one path") {
        // synthesize: class computed from sampled paths; F3 has classes 0 and 2,
        // so use the a->c pair (pure class-2 paths exist) for a high class
        const PathSystem& ps = sampler.system(fixtures::F3_A, fixtures::F3_C);
        // demand equal to 2^cls rounds to a single path
        int64_t d = int64_t{1} << ps.cls;
        auto rounded = round_paths(fx.g, sampler, {&ps}, {d}, fx.cfg, rng);
        CHECK(rounded.chosen[0].size() == 1);
    }
    SUBCASE("ceil(2^-l d) paths are chosen (multiset)") {
        const PathSystem& ps = sampler.system(fixtures::F3_A, fixtures::F3_B);
        REQUIRE(ps.cls == 0);
        auto rounded = round_paths(fx.g, sampler, {&ps}, {3}, fx.cfg, rng);
        CHECK(rounded.chosen[0].size() == 3);  // ceil(3/1)
        CHECK(rounded.attempts <= fx.cfg.rounding_retries);
        double thr = 2.0 * to_double(rounded.fractional_congestion) +
                     6.0 * std::log(static_cast<double>(fx.g.edge_count()));
        CHECK(to_double(rounded.realized_congestion) <= thr);
    }
}

TEST_CASE("embed: single unit arc on F2 delivers with probability 1") {
    PmcfFixture fx(fixtures::f2(), {1, 2, 2, 1}, 29);
    std::vector<AuxArc> arcs{{0, 3, 1}};
    EmbedCts em = EmbedCts::build(fx.g, fx.cluster, fx.c, Rat(1), fx.pmcf, arcs, fx.cfg, 41);
    CHECK(em.elimination_rounds() == 0);  // unit demand is never large
    for (int trial = 0; trial < 200; ++trial) {
        auto [end, edges] = run_embed_arc(fx.g, em, 0, 99, trial);
        CHECK(end == 3);
        CHECK(!edges.empty());
    }
}

TEST_CASE("embed: large arc on F3 splits across helper nodes") {
    // d(a,b) = 4 with class-0 systems: one elimination round, 4 unit splits
    PmcfFixture fx(fixtures::f3(), {4, 8, 2, 2, 2, 2, 4}, 31);
    std::vector<AuxArc> arcs{{fixtures::F3_A, fixtures::F3_B, 4}};
    EmbedCts em = EmbedCts::build(fx.g, fx.cluster, fx.c, Rat(1), fx.pmcf, arcs, fx.cfg, 43);
    REQUIRE(em.elimination_rounds() >= 1);
    const auto& plan = em.plan(0);
    CHECK(plan.d_large == 4);
    CHECK(plan.fwd_hi - plan.fwd_lo + 1 == 4);
    CHECK(!plan.residual.has_value());  // demand was an exact multiple

    // helper entries live at endpoints of class-0 edges
    const auto& rd = em.rounds()[0];
    CHECK(rd.cls == 0);
    for (const auto& [tok, node] : rd.landing) {
        bool adjacent_unit = false;
        for (int e : fx.g.incident(node)) adjacent_unit |= fx.g.edge(e).cls == 0;
        CHECK(adjacent_unit);
        (void)tok;
    }

    for (int trial = 0; trial < 400; ++trial) {
        auto [end, edges] = run_embed_arc(fx.g, em, 0, 7, trial);
        CHECK(end == fixtures::F3_B);
        (void)edges;
    }
}

TEST_CASE("embed audits") {
    PmcfFixture fx(fixtures::f3(), {4, 8, 2, 2, 2, 2, 4}, 37);
    SUBCASE("demand totals above the node weight are rejected up front") {
        std::vector<AuxArc> arcs{{fixtures::F3_A, fixtures::F3_B, 100}};
        CHECK_THROWS_AS(
            EmbedCts::build(fx.g, fx.cluster, fx.c, Rat(1), fx.pmcf, arcs, fx.cfg, 1),
            std::invalid_argument);
    }
    SUBCASE("demand conservation and storage audit on a mixed arc set") {
        std::vector<AuxArc> arcs{{fixtures::F3_A, fixtures::F3_B, 4},
                                 {fixtures::F3_B, fixtures::F3_A, 3},
                                 {fixtures::F3_C, 2, 2}};
        EmbedCts em = EmbedCts::build(fx.g, fx.cluster, fx.c, Rat(1), fx.pmcf, arcs, fx.cfg, 3);
        CHECK(em.elimination_rounds() <= fx.g.num_classes());
        // storage audit: bits at each node within the declared budget
        double n = fx.g.node_count(), w = fx.g.max_capacity();
        double logs = std::pow(std::log2(n), 2) * std::log2(2 * w) * std::pow(std::log2(n * w), 3);
        double c_meas = 1.0;  // fixture uses measured C = 1
        for (int v = 0; v < fx.g.node_count(); ++v) {
            double budget = fx.cfg.c2_storage * (fx.g.degree(v) + 1.0) * c_meas * logs;
            CHECK(static_cast<double>(em.table_bits(fx.g, v)) <= budget);
        }
        // every arc delivers
        for (size_t a = 0; a < arcs.size(); ++a)
            for (int trial = 0; trial < 50; ++trial)
                CHECK(run_embed_arc(fx.g, em, static_cast<int>(a), 17, trial).first == arcs[a].v);
    }
}

TEST_CASE("embed serialization round-trip") {
    PmcfFixture fx(fixtures::f3(), {4, 8, 2, 2, 2, 2, 4}, 53);
    std::vector<AuxArc> arcs{{fixtures::F3_A, fixtures::F3_B, 4}, {1, 4, 2}};
    EmbedCts em = EmbedCts::build(fx.g, fx.cluster, fx.c, Rat(1), fx.pmcf, arcs, fx.cfg, 59);
    BitWriter w;
    em.serialize(fx.g, w);
    BitReader r(w.bytes().data(), w.bit_size());
    EmbedCts back = EmbedCts::deserialize(fx.g, fx.pmcf, r);
    CHECK(em.equal_tables(back));
}

TEST_CASE("replay invariant: stored path id pairs reach the recorded target") {
    PmcfFixture fx(fixtures::f3(), {4, 8, 2, 2, 2, 2, 4}, 61);
    std::vector<AuxArc> arcs{{fixtures::F3_A, fixtures::F3_B, 4}, {2, 5, 1}};
    EmbedCts em = EmbedCts::build(fx.g, fx.cluster, fx.c, Rat(1), fx.pmcf, arcs, fx.cfg, 67);
    auto check_path = [&](const EmbedCts::SinglePath& sp, int src) {
        int mid = replay_pmcf(fx.g, fx.pmcf, src, sp.id1);
        CHECK(mid == sp.mid);
        CHECK(replay_pmcf(fx.g, fx.pmcf, mid, sp.id2) == sp.dst);
    };
    for (size_t a = 0; a < arcs.size(); ++a)
        if (em.plan(a).residual) check_path(*em.plan(a).residual, arcs[a].u);
    for (const auto& rd : em.rounds())
        for (const auto& [tok, cont] : rd.entries)
            if (cont.path) {
                int z = rd.landing.at(tok);
                int back = rd.rev.walk(fx.g, z, cont.rev_token).first;
                check_path(*cont.path, back);
            }
}

TEST_CASE("hypercube construction on an imported-style child family") {
    // children of the F3 root: {a}, {c}, {m1..m4}, {b} with their real borders
    Graph g = fixtures::f3();
    Config cfg;
    std::vector<int> cluster{0, 1, 2, 3, 4, 5, 6};
    std::vector<int64_t> w_s{4, 8, 2, 2, 2, 2, 4};
    PmcfCts pmcf = PmcfCts::build(g, cluster, w_s, cfg, 71);

    std::vector<std::vector<int>> child_nodes{{0}, {1}, {2}, {3}, {4}, {5}, {6}};
    // child classes: {a}: class 2 (cap-4 edge); {c}: tie 4 vs 4 -> class 2;
    // {m_i}: class 0 (two unit edges); {b}: class 0 (four unit edges)
    std::vector<int> child_class{2, 2, 0, 0, 0, 0, 0};
    std::vector<int64_t> child_norm{1, 1, 2, 2, 2, 2, 4};
    std::vector<std::vector<int64_t>> child_out_cls{
        {4, 0, 0, 0, 0, 0, 0}, {0, 4, 0, 0, 0, 0, 0}, {0, 0, 2, 0, 0, 0, 0},
        {0, 0, 0, 2, 0, 0, 0}, {0, 0, 0, 0, 2, 0, 0}, {0, 0, 0, 0, 0, 2, 0},
        {0, 0, 0, 0, 0, 0, 4}};
    HypercubeCts cube = HypercubeCts::build(g, cluster, w_s, Rat(1), pmcf, child_nodes,
                                            child_class, child_norm, child_out_cls, cfg, 73);

    // class-2 cube: norms 1+1=2 -> dim 1; class-0 cube: 2*4+4=12 -> dim 4
    const auto* c2 = cube.cube_for_class(2);
    REQUIRE(c2);
    CHECK(c2->dim == 1);
    const auto* c0 = cube.cube_for_class(0);
    REQUIRE(c0);
    CHECK(c0->dim == 4);

    // every id is owned, and ownership respects the per-node bounds
    for (const auto* cb : {c2, c0}) {
        int64_t size = int64_t{1} << cb->dim;
        for (int64_t i = 0; i < size; ++i) CHECK(cb->owner[i] >= 0);
    }
    // per-node id counts within [x_v, 4 x_v]
    for (size_t i = 0; i < child_nodes.size(); ++i) {
        const auto* cb = cube.cube_for_class(child_class[i]);
        int64_t unit = int64_t{1} << child_class[i];
        for (int v : child_nodes[i]) {
            int64_t x = child_out_cls[i][v] / unit;
            int64_t owned = static_cast<int64_t>(cb->ids_of[v].size());
            CHECK(owned >= x);
            CHECK(owned <= 4 * x);
        }
    }
    // ranges recomputable from (class, norm) counts: lo = cumulative norms
    int64_t lo = 0;
    for (const auto& [idx, got_lo] : c0->ranges) {
        CHECK(got_lo == lo);
        lo += child_norm[idx];
    }
}

TEST_CASE("bit fixing: 000 -> 101 flips bit 0 then bit 2") {
    int64_t cur = 0b000, target = 0b101;
    std::vector<int> flipped;
    while (cur != target) {
        int64_t diff = cur ^ target;
        int bit = 0;
        while (!((diff >> bit) & 1)) ++bit;
        flipped.push_back(bit);
        cur ^= int64_t{1} << bit;
    }
    CHECK(flipped == std::vector<int>{0, 2});
}

TEST_CASE("minimal cube dimension: total norm 3 needs dim 2") {
    int64_t total = 3;
    int dim = 0;
    while ((int64_t{1} << dim) < total) ++dim;
    CHECK(dim == 2);
}
