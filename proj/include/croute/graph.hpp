#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "croute/rational.hpp"

namespace croute {

struct GraphEdge {
    int u, v;
    int64_t capacity;  // power of two >= 1
    int cls;           // capacity == 2^cls
};

// Undirected weighted graph. Capacities are powers of two; the class of an
// edge with capacity 2^l is l. Immutable after construction.
class Graph {
public:
    Graph() = default;
    Graph(int n, const std::vector<std::tuple<int, int, int64_t>>& edges);

    static Graph load(const std::string& path, std::ostream* warnings = nullptr);
    static Graph parse(std::istream& in, std::ostream* warnings = nullptr);

    int node_count() const { return n_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    const std::vector<GraphEdge>& edges() const { return edges_; }
    const GraphEdge& edge(int e) const { return edges_[e]; }

    int64_t max_capacity() const { return max_capacity_; }  // W
    int num_classes() const { return num_classes_; }        // 1 + log2(W)

    // Incident edge indices of v, in increasing edge-index order.
    const std::vector<int>& incident(int v) const { return incident_[v]; }
    int degree(int v) const { return static_cast<int>(incident_[v].size()); }
    // Endpoint of edge e opposite to v.
    int other(int e, int v) const { const auto& ed = edges_[e]; return ed.u == v ? ed.v : ed.u; }
    // Edge index between u and v, or -1.
    int edge_between(int u, int v) const;

    bool connected() const;
    bool connected_within(const std::vector<int>& nodes) const;

private:
    int n_ = 0;
    std::vector<GraphEdge> edges_;
    std::vector<std::vector<int>> incident_;
    int64_t max_capacity_ = 1;
    int num_classes_ = 1;
};

// Class of a power-of-two capacity: edge_class(2^l) == l.
int edge_class(int64_t capacity);
bool is_power_of_two(int64_t v);
// Largest power of two <= v (v >= 1).
int64_t floor_power_of_two(int64_t v);

// Sparse nonnegative node weights.
class Distribution {
public:
    Distribution() = default;
    explicit Distribution(int n) : w_(n) {}

    int size() const { return static_cast<int>(w_.size()); }
    const Rat& operator[](int v) const { return w_[v]; }
    void set(int v, const Rat& x);
    void add(int v, const Rat& x);
    const Rat& total() const { return total_; }
    Rat normalized(int v) const { return total_ == 0 ? Rat(0) : Rat(w_[v] / total_); }
    std::vector<int> support() const;

    bool operator==(const Distribution&) const = default;

private:
    std::vector<Rat> w_;
    Rat total_ = 0;
};

// Antisymmetric oriented-edge function, stored as one signed value per
// undirected edge (positive = from edge.u to edge.v).
class Flow {
public:
    Flow() = default;
    explicit Flow(const Graph& g) : g_(&g), f_(g.edge_count()) {}

    const Graph& graph() const { return *g_; }
    // Signed flow from `from` across edge e.
    Rat value(int e, int from) const { return g_->edge(e).u == from ? f_[e] : Rat(-f_[e]); }
    const Rat& oriented(int e) const { return f_[e]; }  // in stored edge orientation
    void set_oriented(int e, const Rat& x) { f_[e] = x; }
    void add(int e, int from, const Rat& x) { f_[e] += (g_->edge(e).u == from) ? x : -x; }

    Rat balance(int v) const;          // sum of incoming flow at v
    Rat congestion() const;            // max_e |f(e)| / w(e)
    bool is_zero() const;

private:
    const Graph* g_ = nullptr;
    std::vector<Rat> f_;
};

// Max over edges of summed absolute flow over capacity.
Rat total_congestion(const std::vector<const Flow*>& flows);
Rat total_congestion(const std::vector<Flow>& flows);

struct DemandEntry {
    int src, dst;
    Rat amount;
};

class DemandMatrix {
public:
    void add(int src, int dst, const Rat& amount);
    const std::vector<DemandEntry>& entries() const { return entries_; }
    Rat total() const;
    bool empty() const { return entries_.empty(); }

    static DemandMatrix load(const std::string& path, int n);
    static DemandMatrix parse(std::istream& in, int n);

private:
    std::vector<DemandEntry> entries_;
};

}  // namespace croute
