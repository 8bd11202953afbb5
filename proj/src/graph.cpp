#include "croute/graph.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace croute {

bool is_power_of_two(int64_t v) { return v >= 1 && (v & (v - 1)) == 0; }

int edge_class(int64_t capacity) {
    if (!is_power_of_two(capacity)) throw std::invalid_argument("capacity is not a power of two");
    int l = 0;
    while ((int64_t{1} << l) < capacity) ++l;
    return l;
}

int64_t floor_power_of_two(int64_t v) {
    if (v < 1) throw std::invalid_argument("capacity must be positive");
    int64_t p = 1;
    while (p * 2 <= v) p *= 2;
    return p;
}

Graph::Graph(int n, const std::vector<std::tuple<int, int, int64_t>>& edges) : n_(n), incident_(n) {
    for (const auto& [u, v, c] : edges) {
        if (u < 0 || u >= n || v < 0 || v >= n) throw std::invalid_argument("edge endpoint out of range");
        if (u == v) throw std::invalid_argument("self-loops are not allowed");
        if (!is_power_of_two(c)) throw std::invalid_argument("capacity is not a power of two");
        if (edge_between(u, v) != -1) throw std::invalid_argument("parallel edge in input");
        int e = static_cast<int>(edges_.size());
        edges_.push_back({u, v, c, edge_class(c)});
        incident_[u].push_back(e);
        incident_[v].push_back(e);
        max_capacity_ = std::max(max_capacity_, c);
    }
    num_classes_ = 1 + edge_class(max_capacity_);
}

int Graph::edge_between(int u, int v) const {
    if (u < 0 || u >= n_) return -1;
    for (int e : incident_[u])
        if (other(e, u) == v) return e;
    return -1;
}

bool Graph::connected() const {
    if (n_ == 0) return false;
    std::vector<int> all(n_);
    for (int i = 0; i < n_; ++i) all[i] = i;
    return connected_within(all);
}

bool Graph::connected_within(const std::vector<int>& nodes) const {
    if (nodes.empty()) return false;
    std::vector<char> in_set(n_, 0), seen(n_, 0);
    for (int v : nodes) in_set[v] = 1;
    std::vector<int> stack{nodes[0]};
    seen[nodes[0]] = 1;
    size_t count = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int e : incident_[v]) {
            int u = other(e, v);
            if (in_set[u] && !seen[u]) {
                seen[u] = 1;
                ++count;
                stack.push_back(u);
            }
        }
    }
    return count == nodes.size();
}

Graph Graph::load(const std::string& path, std::ostream* warnings) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open graph file: " + path);
    return parse(in, warnings);
}

Graph Graph::parse(std::istream& in, std::ostream* warnings) {
    std::vector<std::tuple<int, int, int64_t>> edges;
    int max_node = -1;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        int64_t u, v, c;
        if (!(ls >> u)) continue;  // blank
        if (!(ls >> v >> c))
            throw std::runtime_error("graph file line " + std::to_string(lineno) + ": expected 'u v capacity'");
        if (u < 0 || v < 0) throw std::runtime_error("graph file line " + std::to_string(lineno) + ": negative node id");
        if (c < 1) throw std::runtime_error("graph file line " + std::to_string(lineno) + ": capacity must be positive");
        if (!is_power_of_two(c)) {
            int64_t rounded = floor_power_of_two(c);
            if (warnings)
                *warnings << "warning: line " << lineno << ": capacity " << c
                          << " rounded down to " << rounded << "\n";
            c = rounded;
        }
        edges.emplace_back(static_cast<int>(u), static_cast<int>(v), c);
        max_node = std::max<int64_t>(max_node, std::max(u, v));
    }
    if (max_node < 0) throw std::runtime_error("graph file has no edges");
    return Graph(max_node + 1, edges);
}

void Distribution::set(int v, const Rat& x) {
    if (x < 0) throw std::invalid_argument("distribution weights must be nonnegative");
    total_ += x - w_[v];
    w_[v] = x;
}

void Distribution::add(int v, const Rat& x) {
    set(v, w_[v] + x);
}

std::vector<int> Distribution::support() const {
    std::vector<int> out;
    for (int v = 0; v < size(); ++v)
        if (w_[v] != 0) out.push_back(v);
    return out;
}

Rat Flow::balance(int v) const {
    Rat b = 0;
    for (int e : g_->incident(v)) b += value(e, g_->other(e, v));
    return b;
}

Rat Flow::congestion() const {
    Rat c = 0;
    for (int e = 0; e < g_->edge_count(); ++e) {
        Rat r = rat_abs(f_[e]) / g_->edge(e).capacity;
        if (r > c) c = r;
    }
    return c;
}

bool Flow::is_zero() const {
    for (const Rat& x : f_)
        if (x != 0) return false;
    return true;
}

Rat total_congestion(const std::vector<const Flow*>& flows) {
    if (flows.empty()) return 0;
    const Graph& g = flows.front()->graph();
    Rat c = 0;
    for (int e = 0; e < g.edge_count(); ++e) {
        Rat load = 0;
        for (const Flow* f : flows) load += rat_abs(f->oriented(e));
        Rat r = load / g.edge(e).capacity;
        if (r > c) c = r;
    }
    return c;
}

Rat total_congestion(const std::vector<Flow>& flows) {
    std::vector<const Flow*> ptrs;
    ptrs.reserve(flows.size());
    for (const Flow& f : flows) ptrs.push_back(&f);
    return total_congestion(ptrs);
}

void DemandMatrix::add(int src, int dst, const Rat& amount) {
    if (amount < 0) throw std::invalid_argument("demands must be nonnegative");
    if (amount == 0) return;
    entries_.push_back({src, dst, amount});
}

Rat DemandMatrix::total() const {
    Rat t = 0;
    for (const auto& d : entries_) t += d.amount;
    return t;
}

DemandMatrix DemandMatrix::load(const std::string& path, int n) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open demand file: " + path);
    return parse(in, n);
}

DemandMatrix DemandMatrix::parse(std::istream& in, int n) {
    DemandMatrix d;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        int u, v;
        std::string amount;
        if (!(ls >> u)) continue;
        if (!(ls >> v >> amount))
            throw std::runtime_error("demand file line " + std::to_string(lineno) + ": expected 'u v amount'");
        if (u < 0 || u >= n || v < 0 || v >= n)
            throw std::runtime_error("demand file line " + std::to_string(lineno) + ": node id out of range");
        // Decimal amounts become exact rationals (e.g. 0.25 -> 1/4).
        Rat a;
        auto dot = amount.find('.');
        std::string digits = dot == std::string::npos
                                 ? amount
                                 : amount.substr(0, dot) + amount.substr(dot + 1);
        // strip leading zeros so the big-int parser cannot read octal
        size_t nz = digits.find_first_not_of('0');
        digits = nz == std::string::npos ? "0" : digits.substr(nz);
        Int den = 1;
        if (dot != std::string::npos)
            for (size_t i = dot + 1; i < amount.size(); ++i) den *= 10;
        a = Rat(Int(digits), den);
        if (a < 0) throw std::runtime_error("demand file line " + std::to_string(lineno) + ": negative demand");
        d.add(u, v, a);
    }
    return d;
}

}  // namespace croute
