#include <cmath>
#include <set>
#include <sstream>

#include "croute/decomposition.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace croute;

namespace {

void check_laminar(const DecompositionTree& t) {
    const Graph& g = t.graph();
    const Cluster& root = t.cluster(t.root());
    CHECK(root.size() == g.node_count());
    for (int id = 0; id < t.cluster_count(); ++id) {
        const Cluster& c = t.cluster(id);
        if (c.is_leaf()) {
            CHECK(c.size() == 1);
            continue;
        }
        std::set<int> merged;
        size_t total = 0;
        for (int ch : c.children) {
            const auto& nodes = t.cluster(ch).nodes;
            merged.insert(nodes.begin(), nodes.end());
            total += nodes.size();
            // balanced splitting: every child at most ceil(2|S|/3)
            CHECK(static_cast<int>(nodes.size()) <= (2 * c.size() + 2) / 3);
        }
        CHECK(total == merged.size());
        CHECK(merged == std::set<int>(c.nodes.begin(), c.nodes.end()));
    }
}

}  // namespace

TEST_CASE("build_tree on F1") {
    Config cfg;
    Graph g = fixtures::f1();
    auto t = DecompositionTree::build(g, cfg);
    CHECK(t.cluster_count() == 3);
    CHECK(t.height() == 1);
    check_laminar(t);
    const Cluster& root = t.cluster(t.root());
    CHECK(root.children.size() == 2);
    // root border is zero, children have out == 1 at their node
    for (int v = 0; v < 2; ++v) CHECK(root.out[v] == 0);
    for (int ch : root.children) {
        const Cluster& c = t.cluster(ch);
        CHECK(c.out[c.nodes[0]] == 1);
    }
    // measured root PMCF with w = (1,1) on a unit edge
    CHECK(root.pmcf.primal == Rat(1));
}

TEST_CASE("build_tree structure on F2 and the 4x4 grid") {
    Config cfg;
    for (auto g : {fixtures::f2(), fixtures::f5()}) {
        auto t = DecompositionTree::build(g, cfg);
        check_laminar(t);
        int n = g.node_count();
        double bound = std::log(n) / std::log(1.5) + 1;
        CHECK(t.height() <= static_cast<int>(bound));
        int leaves = 0;
        for (int id = 0; id < t.cluster_count(); ++id)
            if (t.cluster(id).is_leaf()) ++leaves;
        CHECK(leaves == n);
    }
}

TEST_CASE("build_tree rejects disconnected graphs") {
    Config cfg;
    Graph g(4, {{0, 1, 1}, {2, 3, 1}});
    CHECK_THROWS_WITH_AS(DecompositionTree::build(g, cfg), "build_tree: graph not connected",
                         std::invalid_argument);
}

TEST_CASE("cluster weights on an imported F3 tree") {
    Config cfg;
    Graph g = fixtures::f3();
    // root {all}; children {a,c} and {m1..m4, b}; singleton leaves below
    std::istringstream in(
        "0 0 -1 : 0 1 2 3 4 5 6\n"
        "1 1 0 : 0 1\n"
        "1 2 0 : 2 3 4 5 6\n"
        "2 3 1 : 0\n"
        "2 4 1 : 1\n"
        "2 5 2 : 2\n"
        "2 6 2 : 3\n"
        "2 7 2 : 4\n"
        "2 8 2 : 5\n"
        "2 9 2 : 6\n");
    auto t = DecompositionTree::parse(g, in, cfg);
    check_laminar(t);

    // S = {a,c}: border is four unit edges at c; class profile is pure class 0.
    int sac = -1;
    for (int id = 0; id < t.cluster_count(); ++id)
        if (t.cluster(id).nodes == std::vector<int>{0, 1}) sac = id;
    REQUIRE(sac >= 0);
    const Cluster& c = t.cluster(sac);
    CHECK(c.out[0] == 0);
    CHECK(c.out[1] == 4);
    CHECK(c.out_cls[0][1] == 4);
    CHECK(c.out_cls[2][1] == 0);
    CHECK(c.out_total == 4);

    // leaf {a} keeps its capacity-4 border edge
    int sa = t.leaf_of(0);
    CHECK(t.cluster(sa).out[0] == 4);
    CHECK(t.cluster(sa).out_cls[2][0] == 4);

    // w_S = sum over children of out_{S_i}, pointwise
    for (int id = 0; id < t.cluster_count(); ++id) {
        const Cluster& s = t.cluster(id);
        if (s.is_leaf()) continue;
        for (int v = 0; v < g.node_count(); ++v) {
            int64_t sum = 0;
            for (int ch : s.children) sum += t.cluster(ch).out[v];
            CHECK(s.w[v] == sum);
        }
    }
}

TEST_CASE("child numbering is recomputable from class/norm counts") {
    Config cfg;
    Graph g = fixtures::f3();
    auto t = DecompositionTree::build(g, cfg);
    for (int id = 0; id < t.cluster_count(); ++id) {
        const Cluster& c = t.cluster(id);
        for (size_t i = 1; i < c.children.size(); ++i) {
            bool le = std::make_pair(c.child_class[i - 1], c.child_norm[i - 1]) <=
                      std::make_pair(c.child_class[i], c.child_norm[i]);
            CHECK(le);
        }
        // the (class, norm) bucket boundaries alone determine each child's range
        std::map<std::pair<int, int64_t>, int> counts;
        for (size_t i = 0; i < c.children.size(); ++i)
            ++counts[{c.child_class[i], c.child_norm[i]}];
        size_t idx = 0;
        for (const auto& [key, cnt] : counts) {
            for (int j = 0; j < cnt; ++j, ++idx) {
                CHECK(c.child_class[idx] == key.first);
                CHECK(c.child_norm[idx] == key.second);
            }
        }
    }
}

TEST_CASE("import validation") {
    Config cfg;
    Graph g = fixtures::f1();
    SUBCASE("valid two-level tree") {
        std::istringstream in("0 0 -1 : 0 1\n1 1 0 : 0\n1 2 0 : 1\n");
        auto t = DecompositionTree::parse(g, in, cfg);
        CHECK(t.cluster_count() == 3);
        CHECK(t.height() == 1);
    }
    SUBCASE("overlapping children rejected") {
        std::istringstream in("0 0 -1 : 0 1\n1 1 0 : 0 1\n1 2 0 : 1\n");
        CHECK_THROWS(DecompositionTree::parse(g, in, cfg));
    }
    SUBCASE("missing leaf rejected") {
        std::istringstream in("0 0 -1 : 0 1\n1 1 0 : 0\n");
        CHECK_THROWS(DecompositionTree::parse(g, in, cfg));
    }
    SUBCASE("non-singleton childless cluster rejected") {
        std::istringstream in("0 0 -1 : 0 1\n");
        CHECK_THROWS(DecompositionTree::parse(g, in, cfg));
    }
}

TEST_CASE("export/import round-trip") {
    Config cfg;
    Graph g = fixtures::f5();
    auto t = DecompositionTree::build(g, cfg);
    std::ostringstream out;
    t.write(out);
    std::istringstream in(out.str());
    auto t2 = DecompositionTree::parse(g, in, cfg);
    CHECK(t2.cluster_count() == t.cluster_count());
    CHECK(t2.height() == t.height());
    // same laminar family: compare (depth, node-set) multisets
    auto canon = [](const DecompositionTree& tr) {
        std::multiset<std::pair<int, std::vector<int>>> s;
        for (int id = 0; id < tr.cluster_count(); ++id)
            s.insert({tr.cluster(id).depth, tr.cluster(id).nodes});
        return s;
    };
    CHECK(canon(t) == canon(t2));
}

TEST_CASE("border weight invariants") {
    Config cfg;
    Graph g = fixtures::f5();
    auto t = DecompositionTree::build(g, cfg);
    for (int id = 0; id < t.cluster_count(); ++id) {
        const Cluster& c = t.cluster(id);
        if (id == t.root()) {
            CHECK(c.out_total == 0);
        } else {
            CHECK(c.out_total > 0);
        }
        // out^(l) sums to out, pointwise
        for (int v : c.nodes) {
            int64_t sum = 0;
            for (int l = 0; l < g.num_classes(); ++l) sum += c.out_cls[l][v];
            CHECK(sum == c.out[v]);
        }
    }
}
