#include <sstream>

#include "croute/graph.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace croute;

TEST_CASE("edge_class basics") {
    CHECK(edge_class(8) == 3);
    CHECK(edge_class(1) == 0);
    CHECK(edge_class(1024) == 10);
    CHECK_THROWS(edge_class(6));
    // identity on {0..log2 W}
    for (int l = 0; l <= 10; ++l) CHECK(edge_class(int64_t{1} << l) == l);
}

TEST_CASE("graph construction rejects bad input") {
    CHECK_THROWS(Graph(2, {{0, 0, 1}}));          // self loop
    CHECK_THROWS(Graph(2, {{0, 1, 3}}));          // not a power of two
    CHECK_THROWS(Graph(2, {{0, 1, 1}, {1, 0, 1}}));  // parallel edge
    Graph g = fixtures::f3();
    CHECK(g.max_capacity() == 4);
    CHECK(g.num_classes() == 3);
    CHECK(g.connected());
}

TEST_CASE("graph file parsing rounds capacities down with warning") {
    std::istringstream in("# comment\n0 1 6\n\n1 2 1  # inline\n");
    std::ostringstream warn;
    Graph g = Graph::parse(in, &warn);
    CHECK(g.edge(0).capacity == 4);
    CHECK(g.edge(1).capacity == 1);
    CHECK(warn.str().find("rounded down") != std::string::npos);
}

TEST_CASE("demand file parsing handles decimals exactly") {
    std::istringstream in("0 1 0.25\n1 0 2\n");
    DemandMatrix d = DemandMatrix::parse(in, 2);
    REQUIRE(d.entries().size() == 2);
    CHECK(d.entries()[0].amount == Rat(1, 4));
    CHECK(d.entries()[1].amount == Rat(2));
}

TEST_CASE("flow balance") {
    Graph g = fixtures::f1();
    Flow f(g);
    f.add(0, 0, Rat(1));  // f(0,1) = 1
    CHECK(f.balance(0) == Rat(-1));
    CHECK(f.balance(1) == Rat(1));

    // circulation on a triangle
    Graph tri(3, {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}});
    Flow c(tri);
    c.add(tri.edge_between(0, 1), 0, Rat(1));
    c.add(tri.edge_between(1, 2), 1, Rat(1));
    c.add(tri.edge_between(0, 2), 2, Rat(1));
    for (int v = 0; v < 3; ++v) CHECK(c.balance(v) == Rat(0));

    // conservation at an interior path node
    Graph p = fixtures::f2();
    Flow pf(p);
    pf.add(p.edge_between(0, 1), 0, Rat(2));
    pf.add(p.edge_between(1, 2), 1, Rat(2));
    CHECK(pf.balance(1) == Rat(0));
}

TEST_CASE("flow antisymmetry invariant") {
    Graph g = fixtures::f3();
    Flow f(g);
    f.add(0, 0, Rat(3, 2));
    f.add(3, 6, Rat(1, 3));
    for (int e = 0; e < g.edge_count(); ++e)
        CHECK(f.value(e, g.edge(e).u) == -f.value(e, g.edge(e).v));
    Rat total = 0;
    for (int v = 0; v < g.node_count(); ++v) total += f.balance(v);
    CHECK(total == Rat(0));
}

TEST_CASE("total congestion") {
    Graph g1 = fixtures::f1();
    Flow a(g1);
    a.add(0, 0, Rat(3));
    CHECK(total_congestion(std::vector<const Flow*>{&a}) == Rat(3));

    // F3: unit a->b flow split evenly over the four 2-paths
    Graph g3 = fixtures::f3();
    Flow s(g3);
    s.add(g3.edge_between(0, 1), 0, Rat(1));
    for (int m = 2; m <= 5; ++m) {
        s.add(g3.edge_between(1, m), 1, Rat(1, 4));
        s.add(g3.edge_between(m, 6), m, Rat(1, 4));
    }
    CHECK(total_congestion(std::vector<const Flow*>{&s}) == Rat(1, 4));

    // two unit flows sharing one capacity-2 edge
    Graph g2(2, {{0, 1, 2}});
    Flow f1(g2), f2(g2);
    f1.add(0, 0, Rat(1));
    f2.add(0, 0, Rat(1));
    CHECK(total_congestion(std::vector<const Flow*>{&f1, &f2}) == Rat(1));
}

TEST_CASE("total congestion is homogeneous") {
    Graph g = fixtures::f5();
    Flow f(g);
    f.add(0, 0, Rat(2, 3));
    f.add(5, g.edge(5).u, Rat(7, 5));
    f.add(11, g.edge(11).v, Rat(1, 7));
    for (Rat gamma : {Rat(0), Rat(1, 3), Rat(5), Rat(12, 7)}) {
        Flow scaled(g);
        for (int e = 0; e < g.edge_count(); ++e) scaled.set_oriented(e, f.oriented(e) * gamma);
        CHECK(total_congestion(std::vector<const Flow*>{&scaled}) == gamma * total_congestion(std::vector<const Flow*>{&f}));
    }
}
