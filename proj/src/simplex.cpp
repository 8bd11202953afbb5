#include "croute/simplex.hpp"

#include <algorithm>
#include <cstdint>
#include <stdexcept>

namespace croute {

namespace {

// Tableau: rows = constraints, one objective row at the end.
// Column layout: structural vars 0..n-1, then artificials, then RHS.
class Tableau {
public:
    Tableau(std::vector<std::vector<Rat>> a, std::vector<Rat> b)
        : m_(a.size()), n_(a.empty() ? 0 : a[0].size()), rows_(std::move(a)), rhs_(std::move(b)) {
        for (size_t i = 0; i < m_; ++i)
            if (rhs_[i] < 0) {
                for (auto& v : rows_[i]) v = -v;
                rhs_[i] = -rhs_[i];
            }
        basis_.resize(m_);
    }

    // Phase 1: artificial basis, minimize sum of artificials.
    bool phase1() {
        for (size_t i = 0; i < m_; ++i) {
            for (auto& row : rows_) row.push_back(0);
            rows_[i][n_ + i] = 1;
            basis_[i] = static_cast<int>(n_ + i);
        }
        obj_.assign(n_ + m_, 0);
        for (size_t j = n_; j < n_ + m_; ++j) obj_[j] = 1;
        obj_rhs_ = 0;
        price_out();
        run();
        if (obj_rhs_ != 0) return false;  // infeasible
        // Pivot artificials out of the basis where possible; rows that cannot
        // be pivoted are redundant and get frozen at zero.
        for (size_t i = 0; i < m_; ++i) {
            if (basis_[i] < static_cast<int>(n_)) continue;
            size_t j = 0;
            for (; j < n_; ++j)
                if (rows_[i][j] != 0) break;
            if (j < n_) pivot(i, j);
        }
        return true;
    }

    enum class P2 { Optimal, Unbounded };
    P2 phase2(const std::vector<Rat>& c) {
        obj_.assign(n_ + m_, 0);
        for (size_t j = 0; j < n_; ++j) obj_[j] = c[j];
        obj_rhs_ = 0;
        // Artificials may never re-enter the basis; ones left basic by
        // redundant rows stay at value zero.
        max_enter_ = n_;
        price_out();
        return run();
    }

    Rat objective() const { return -obj_rhs_; }
    std::vector<Rat> solution() const {
        std::vector<Rat> x(n_, Rat(0));
        for (size_t i = 0; i < m_; ++i)
            if (basis_[i] < static_cast<int>(n_)) x[basis_[i]] = rhs_[i];
        return x;
    }

private:
    void price_out() {
        for (size_t i = 0; i < m_; ++i) {
            Rat cb = obj_[basis_[i]];
            if (cb == 0) continue;
            for (size_t j = 0; j < obj_.size(); ++j) obj_[j] -= cb * rows_[i][j];
            obj_rhs_ -= cb * rhs_[i];
        }
    }

    P2 run() {
        while (true) {
            // Bland: entering = lowest-index column with negative reduced cost.
            size_t limit = std::min(obj_.size(), max_enter_);
            size_t enter = limit;
            for (size_t j = 0; j < limit; ++j)
                if (obj_[j] < 0) { enter = j; break; }
            if (enter == limit) return P2::Optimal;
            // Leaving: min ratio, ties by lowest basis index (Bland).
            size_t leave = m_;
            Rat best;
            for (size_t i = 0; i < m_; ++i) {
                if (rows_[i][enter] <= 0) continue;
                Rat ratio = rhs_[i] / rows_[i][enter];
                if (leave == m_ || ratio < best ||
                    (ratio == best && basis_[i] < basis_[leave]))
                    { leave = i; best = ratio; }
            }
            if (leave == m_) return P2::Unbounded;
            pivot(leave, enter);
        }
    }

    void pivot(size_t r, size_t c) {
        Rat p = rows_[r][c];
        for (auto& v : rows_[r]) v /= p;
        rhs_[r] /= p;
        for (size_t i = 0; i < m_; ++i) {
            if (i == r || rows_[i][c] == 0) continue;
            Rat factor = rows_[i][c];
            for (size_t j = 0; j < rows_[i].size(); ++j) rows_[i][j] -= factor * rows_[r][j];
            rhs_[i] -= factor * rhs_[r];
        }
        if (obj_[c] != 0) {
            Rat factor = obj_[c];
            for (size_t j = 0; j < obj_.size(); ++j) obj_[j] -= factor * rows_[r][j];
            obj_rhs_ -= factor * rhs_[r];
        }
        basis_[r] = static_cast<int>(c);
    }

    size_t m_, n_;
    std::vector<std::vector<Rat>> rows_;
    std::vector<Rat> rhs_;
    std::vector<Rat> obj_;
    Rat obj_rhs_ = 0;
    std::vector<int> basis_;
    size_t max_enter_ = SIZE_MAX;
};

}  // namespace

LpResult solve_lp_min(std::vector<std::vector<Rat>> a, std::vector<Rat> b,
                      const std::vector<Rat>& c) {
    if (a.size() != b.size()) throw std::invalid_argument("lp: row count mismatch");
    for (const auto& row : a)
        if (row.size() != c.size()) throw std::invalid_argument("lp: column count mismatch");
    Tableau t(std::move(a), std::move(b));
    if (!t.phase1()) return {LpResult::Status::Infeasible, Rat(0), {}};
    if (t.phase2(c) == Tableau::P2::Unbounded) return {LpResult::Status::Unbounded, Rat(0), {}};
    return {LpResult::Status::Optimal, t.objective(), t.solution()};
}

}  // namespace croute
