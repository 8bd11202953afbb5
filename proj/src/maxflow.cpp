#include "croute/maxflow.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>

namespace croute {

int MaxFlow::add_arc(int from, int to, int64_t capacity) {
    if (capacity < 0) throw std::invalid_argument("negative arc capacity");
    int id = static_cast<int>(arcs_.size());
    arcs_.push_back({to, head_[from], capacity});
    head_[from] = id;
    arcs_.push_back({from, head_[to], 0});
    head_[to] = id + 1;
    return id;
}

bool MaxFlow::bfs(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<int> q;
    q.push(s);
    level_[s] = 0;
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (int a = head_[v]; a != -1; a = arcs_[a].next) {
            if (arcs_[a].cap > 0 && level_[arcs_[a].to] == -1) {
                level_[arcs_[a].to] = level_[v] + 1;
                q.push(arcs_[a].to);
            }
        }
    }
    return level_[t] != -1;
}

int64_t MaxFlow::dfs(int v, int t, int64_t limit) {
    if (v == t || limit == 0) return limit;
    int64_t pushed = 0;
    for (int& a = it_[v]; a != -1; a = arcs_[a].next) {
        int u = arcs_[a].to;
        if (arcs_[a].cap > 0 && level_[u] == level_[v] + 1) {
            int64_t got = dfs(u, t, std::min(limit - pushed, arcs_[a].cap));
            if (got > 0) {
                arcs_[a].cap -= got;
                arcs_[a ^ 1].cap += got;
                pushed += got;
                if (pushed == limit) return pushed;
            }
        }
    }
    level_[v] = -1;
    return pushed;
}

int64_t MaxFlow::run(int s, int t) {
    int64_t total = 0;
    while (bfs(s, t)) {
        it_ = head_;
        total += dfs(s, t, std::numeric_limits<int64_t>::max());
    }
    return total;
}

std::vector<char> MaxFlow::min_cut_side(int s) const {
    std::vector<char> seen(head_.size(), 0);
    std::vector<int> stack{s};
    seen[s] = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int a = head_[v]; a != -1; a = arcs_[a].next) {
            if (arcs_[a].cap > 0 && !seen[arcs_[a].to]) {
                seen[arcs_[a].to] = 1;
                stack.push_back(arcs_[a].to);
            }
        }
    }
    return seen;
}

}  // namespace croute
