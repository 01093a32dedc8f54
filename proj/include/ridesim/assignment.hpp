#pragma once

// Exact batch assignment of candidate trips to vehicles:
//   max sum u_ij x_ij  s.t. each vehicle takes at most one trip,
//   each request is served by at most one chosen trip, x binary.
// Branch and bound over the conflict structure, warm-started by greedy packings and
// bounded by a bipartite matching relaxation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ridesim/matching.hpp"

namespace ridesim {

// Solver view of one candidate: its vehicle, 1-2 requests, and utility.
struct AssignmentOption {
    VehicleId vehicle;
    std::vector<OrderId> requests;
    double utility;
};

struct AssignmentSolution {
    std::vector<std::size_t> chosen; // option indices, ascending
    double objective = 0.0;
    bool proven_optimal = true;      // false when the node budget ran out
    std::uint64_t nodes = 0;
};

struct SolverOptions {
    std::uint64_t node_budget = 2'000'000;
};

namespace detail {

// Upper bound on the packing LP  max c.x  s.t.  A x <= 1, x >= 0  (A is 0/1), by a dense
// tableau simplex. The returned value comes from a dual solution repaired to exact
// feasibility, so it stays a valid bound under rounding. +inf if the pivot cap is hit.
inline double packing_lp_bound(std::size_t m, const std::vector<std::vector<std::uint32_t>>& cols,
                               const std::vector<double>& c, std::vector<double>* dual = nullptr) {
    const std::size_t n = cols.size();
    if (n == 0 || m == 0) return 0.0;
    const std::size_t width = n + m + 1;
    std::vector<double> t(m * width, 0.0), z(width, 0.0);
    std::vector<std::size_t> basis(m);
    for (std::size_t j = 0; j < n; ++j) {
        for (auto r : cols[j]) t[r * width + j] = 1.0;
        z[j] = -c[j];
    }
    for (std::size_t i = 0; i < m; ++i) {
        t[i * width + n + i] = 1.0;
        t[i * width + n + m] = 1.0;
        basis[i] = n + i;
    }
    constexpr double eps = 1e-11;
    int degenerate = 0;
    for (int iter = 0;; ++iter) {
        if (iter > 20000) return std::numeric_limits<double>::infinity();
        std::size_t enter = width;
        double most = -eps;
        for (std::size_t j = 0; j + 1 < width; ++j) {
            if (z[j] < most) {
                enter = j;
                if (degenerate > 50) break; // Bland's rule against cycling
                most = z[j];
            }
        }
        if (enter == width) break;
        std::size_t leave = m;
        double ratio = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double a = t[i * width + enter];
            if (a <= eps) continue;
            const double q = t[i * width + n + m] / a;
            if (leave == m || q < ratio - eps || (q <= ratio + eps && basis[i] < basis[leave])) {
                leave = i;
                ratio = q;
            }
        }
        if (leave == m) return std::numeric_limits<double>::infinity();
        degenerate = ratio <= eps ? degenerate + 1 : 0;
        double* prow = &t[leave * width];
        const double piv = prow[enter];
        for (std::size_t j = 0; j < width; ++j) prow[j] /= piv;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == leave) continue;
            double* row = &t[i * width];
            const double f = row[enter];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < width; ++j) row[j] -= f * prow[j];
        }
        const double f = z[enter];
        for (std::size_t j = 0; j < width; ++j) z[j] -= f * prow[j];
        basis[leave] = enter;
    }
    // Duals sit under the slack columns; make them feasible for every column exactly.
    std::vector<double> y(m);
    for (std::size_t i = 0; i < m; ++i) y[i] = std::max(0.0, z[n + i]);
    for (std::size_t j = 0; j < n; ++j) {
        double cover = 0.0;
        for (auto r : cols[j]) cover += y[r];
        if (cover < c[j]) y[cols[j].front()] += (c[j] - cover) * (1.0 + 1e-12) + 1e-12;
    }
    double bound = 0.0;
    for (double v : y) bound += v;
    if (dual) *dual = std::move(y);
    return bound;
}

// Branch and bound for one connected component of the conflict graph. Option utilities
// must be positive. Phase one finds the optimal value; phase two walks options in index
// order, preferring inclusion, so the first set reaching that value is the
// lexicographically smallest optimum.
class PackingSolver {
public:
    PackingSolver(std::span<const AssignmentOption> options, std::vector<std::size_t> items,
                  std::uint64_t& nodes, std::uint64_t budget)
        : opts_(options), items_(std::move(items)), nodes_(nodes), budget_(budget) {
        std::sort(items_.begin(), items_.end());
        // Dense resource ids: vehicles first, then requests.
        std::unordered_map<VehicleId, std::uint32_t> vid;
        std::unordered_map<OrderId, std::uint32_t> rid;
        for (auto it : items_) {
            const auto& o = opts_[it];
            if (!vid.count(o.vehicle)) vid.emplace(o.vehicle, static_cast<std::uint32_t>(vid.size()));
        }
        n_vehicles_ = vid.size();
        for (auto it : items_)
            for (auto r : opts_[it].requests)
                if (!rid.count(r)) rid.emplace(r, static_cast<std::uint32_t>(n_vehicles_ + rid.size()));
        n_resources_ = n_vehicles_ + rid.size();

        res_.resize(items_.size());
        touching_.assign(n_resources_, {});
        for (std::uint32_t k = 0; k < items_.size(); ++k) {
            const auto& o = opts_[items_[k]];
            res_[k].push_back(vid.at(o.vehicle));
            for (auto r : o.requests) res_[k].push_back(rid.at(r));
            for (auto r : res_[k]) touching_[r].push_back(k);
        }
        for (auto& t : touching_)
            std::sort(t.begin(), t.end(), [&](std::uint32_t a, std::uint32_t b) {
                const double ua = util(a), ub = util(b);
                return ua > ub || (ua == ub && a < b);
            });

        // Phase one branches over whichever side is scarcer, most valuable resources first.
        const bool on_vehicles = n_vehicles_ <= n_resources_ - n_vehicles_;
        for (std::uint32_t r = 0; r < n_resources_; ++r)
            if ((r < n_vehicles_) == on_vehicles) order_.push_back(r);
        std::stable_sort(order_.begin(), order_.end(), [&](std::uint32_t a, std::uint32_t b) {
            return util(touching_[a].front()) > util(touching_[b].front());
        });
        state_.assign(n_resources_, 0);
    }

    // Returns false if the node budget ran out; best() is then the incumbent.
    bool run() {
        excluded_.assign(items_.size(), 0);
        seed_incumbent();
        root_duals();
        fix_by_reduced_cost(best_value_ + 1e-9 * std::max(1.0, std::abs(best_value_)));
        dfs(0, 0.0);
        if (aborted_) return false;

        // Phase two: lexicographic tie-break at the optimal value.
        target_ = 0.0;
        for (auto k : best_local_) target_ += util(k);
        tol_ = 1e-9 * std::max(1.0, std::abs(target_));
        std::fill(state_.begin(), state_.end(), 0);
        stack_.clear();
        excluded_.assign(items_.size(), 0);
        fix_by_reduced_cost(target_ - tol_);
        if (!lex(0, 0.0)) {
            // Only reachable when the budget ran out; phase one's optimum stands.
            aborted_ = false;
        }
        return true;
    }

    std::vector<std::size_t> best() const {
        std::vector<std::size_t> out;
        for (auto k : best_local_) out.push_back(items_[k]);
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    double util(std::uint32_t k) const { return opts_[items_[k]].utility; }

    bool available(std::uint32_t k) const {
        if (excluded_[k]) return false;
        for (auto r : res_[k])
            if (state_[r]) return false;
        return true;
    }

    bool tick() {
        if (++nodes_ > budget_) aborted_ = true;
        return !aborted_;
    }

    // Sum over free vehicles of their best option, or over free requests of their best
    // per-request share, whichever is smaller. Only options with local index >= from count.
    double simple_bound(std::uint32_t from) const {
        double by_vehicle = 0.0, by_request = 0.0;
        for (std::uint32_t r = 0; r < n_resources_; ++r) {
            if (state_[r]) continue;
            double best = 0.0;
            for (auto k : touching_[r]) {
                if (k < from || !available(k)) continue;
                const double share = r < n_vehicles_ ? util(k) : util(k) / static_cast<double>(res_[k].size() - 1);
                best = std::max(best, share);
                if (r < n_vehicles_) break; // sorted by utility
            }
            (r < n_vehicles_ ? by_vehicle : by_request) += best;
        }
        return std::min(by_vehicle, by_request);
    }

    // Relaxation: a vehicle serves at most one request and a request is served at most
    // once, with edge weight the best option covering both. A pair option stands in for
    // each of its requests, so every packing maps to a matching of at least equal weight.
    struct Relaxation {
        double value = 0.0;
        std::vector<std::uint32_t> edge_options; // option behind each matched edge
    };

    Relaxation matching(std::uint32_t from, bool want_edges) const {
        Relaxation out;
        std::vector<int> row(n_resources_, -1), col(n_resources_, -1);
        std::vector<std::uint32_t> rows, cols;
        for (std::uint32_t k = from; k < items_.size(); ++k) {
            if (!available(k)) continue;
            const auto v = res_[k][0];
            if (row[v] < 0) {
                row[v] = static_cast<int>(rows.size());
                rows.push_back(v);
            }
            for (std::size_t x = 1; x < res_[k].size(); ++x) {
                const auto r = res_[k][x];
                if (col[r] < 0) {
                    col[r] = static_cast<int>(cols.size());
                    cols.push_back(r);
                }
            }
        }
        if (rows.empty()) return out;
        std::vector<std::vector<double>> w(rows.size(), std::vector<double>(cols.size(), 0.0));
        std::vector<std::vector<std::int64_t>> arg;
        if (want_edges) arg.assign(rows.size(), std::vector<std::int64_t>(cols.size(), -1));
        for (std::uint32_t k = from; k < items_.size(); ++k) {
            if (!available(k)) continue;
            const auto i = static_cast<std::size_t>(row[res_[k][0]]);
            for (std::size_t x = 1; x < res_[k].size(); ++x) {
                const auto j = static_cast<std::size_t>(col[res_[k][x]]);
                if (util(k) > w[i][j]) {
                    w[i][j] = util(k);
                    if (want_edges) arg[i][j] = k;
                }
            }
        }
        const bool transpose = rows.size() > cols.size();
        const std::size_t n = transpose ? cols.size() : rows.size();
        const std::size_t m = transpose ? rows.size() : cols.size();
        std::vector<std::vector<double>> cost(n, std::vector<double>(m));
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < m; ++b) cost[a][b] = -(transpose ? w[b][a] : w[a][b]);
        const auto assign = min_cost_assignment(cost);
        for (std::size_t a = 0; a < n; ++a) {
            const std::size_t i = transpose ? assign[a] : a;
            const std::size_t j = transpose ? a : assign[a];
            if (w[i][j] <= 0.0) continue;
            out.value += w[i][j];
            if (want_edges) out.edge_options.push_back(static_cast<std::uint32_t>(arg[i][j]));
        }
        return out;
    }

    // Root LP duals y give, for any packing x, value(x) <= sum(y) - sum_j d_j x_j with
    // reduced costs d_j = y(resources of j) - u_j >= 0.
    void root_duals() {
        std::vector<std::vector<std::uint32_t>> cols;
        std::vector<double> c;
        for (std::uint32_t k = 0; k < items_.size(); ++k) {
            cols.push_back(res_[k]);
            c.push_back(util(k));
        }
        std::vector<double> y;
        root_bound_ = packing_lp_bound(n_resources_, cols, c, &y);
        reduced_.assign(items_.size(), 0.0);
        if (!std::isfinite(root_bound_)) return;
        for (std::uint32_t k = 0; k < items_.size(); ++k) {
            double cover = 0.0;
            for (auto r : res_[k]) cover += y[r];
            reduced_[k] = std::max(0.0, cover - util(k));
        }
    }

    // Excludes options that cannot appear in any packing worth at least `threshold`.
    void fix_by_reduced_cost(double threshold) {
        if (!std::isfinite(root_bound_)) return;
        for (std::uint32_t k = 0; k < items_.size(); ++k)
            if (root_bound_ - reduced_[k] < threshold) excluded_[k] = 1;
    }

    // LP bound over available options with index >= from; optionally their reduced costs.
    double lp_bound(std::uint32_t from, std::vector<std::pair<std::uint32_t, double>>* reduced = nullptr) const {
        std::vector<int> row(n_resources_, -1);
        std::size_t m = 0;
        std::vector<std::vector<std::uint32_t>> cols;
        std::vector<double> c;
        std::vector<std::uint32_t> which;
        for (std::uint32_t k = from; k < items_.size(); ++k) {
            if (!available(k)) continue;
            std::vector<std::uint32_t> col;
            for (auto r : res_[k]) {
                if (row[r] < 0) row[r] = static_cast<int>(m++);
                col.push_back(static_cast<std::uint32_t>(row[r]));
            }
            cols.push_back(std::move(col));
            c.push_back(util(k));
            which.push_back(k);
        }
        std::vector<double> y;
        const double b = packing_lp_bound(m, cols, c, reduced ? &y : nullptr);
        if (reduced && std::isfinite(b) && !cols.empty()) {
            reduced->clear();
            for (std::size_t j = 0; j < cols.size(); ++j) {
                double cover = 0.0;
                for (auto r : cols[j]) cover += y[r];
                reduced->emplace_back(which[j], std::max(0.0, cover - c[j]));
            }
        }
        return b;
    }

    void consider(std::vector<std::uint32_t> picks, double value) {
        if (value > best_value_) {
            best_value_ = value;
            best_local_ = std::move(picks);
        }
    }

    // Greedy packings: by utility, and from the matching relaxation's edges.
    void seed_incumbent() {
        std::vector<std::uint32_t> by_u(items_.size());
        std::iota(by_u.begin(), by_u.end(), 0u);
        std::stable_sort(by_u.begin(), by_u.end(), [&](std::uint32_t a, std::uint32_t b) { return util(a) > util(b); });
        auto pack = [&](const std::vector<std::uint32_t>& first) {
            std::vector<std::uint32_t> picks;
            double value = 0.0;
            const std::vector<std::uint32_t>* lists[] = {&first, &by_u};
            for (const auto* list : lists)
                for (auto k : *list) {
                    if (!available(k)) continue;
                    for (auto r : res_[k]) state_[r] = 1;
                    picks.push_back(k);
                    value += util(k);
                }
            std::fill(state_.begin(), state_.end(), 0);
            consider(std::move(picks), value);
        };
        pack({});
        auto rel = matching(0, true);
        std::stable_sort(rel.edge_options.begin(), rel.edge_options.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return util(a) > util(b); });
        pack(rel.edge_options);
    }

    void dfs(std::size_t pos, double value) {
        if (!tick()) return;
        while (pos < order_.size() && state_[order_[pos]]) ++pos;
        if (pos == order_.size()) {
            consider(stack_, value);
            return;
        }
        const double need = best_value_ + 1e-9 * std::max(1.0, std::abs(best_value_));
        if (value + simple_bound(0) <= need || value + matching(0, false).value <= need) return;
        std::vector<std::pair<std::uint32_t, double>> reduced;
        const double b = lp_bound(0, &reduced);
        if (value + b <= need) return;
        std::vector<std::uint32_t> fixed;
        if (std::isfinite(b))
            for (const auto& [k, d] : reduced)
                if (value + b - d <= need) {
                    excluded_[k] = 1;
                    fixed.push_back(k);
                }

        const auto r = order_[pos];
        for (auto k : touching_[r]) {
            if (!available(k)) continue;
            for (auto x : res_[k]) state_[x] = 1;
            stack_.push_back(k);
            dfs(pos + 1, value + util(k));
            stack_.pop_back();
            for (auto x : res_[k]) state_[x] = 0;
            if (aborted_) break;
        }
        if (!aborted_) {
            state_[r] = 2; // left unused
            dfs(pos + 1, value);
            state_[r] = 0;
        }
        for (auto k : fixed) excluded_[k] = 0;
    }

    bool lex(std::uint32_t i, double value) {
        if (value >= target_ - tol_) {
            best_local_ = stack_;
            return true;
        }
        if (!tick()) return false;
        while (i < items_.size() && !available(i)) ++i;
        if (i == items_.size()) return false;
        const double need = target_ - tol_;
        if (value + simple_bound(i) < need || value + matching(i, false).value < need) return false;
        std::vector<std::pair<std::uint32_t, double>> reduced;
        const double b = lp_bound(i, &reduced);
        if (value + b < need) return false;

        // Options that cannot be part of a completion reaching the target.
        std::vector<std::uint32_t> fixed;
        if (std::isfinite(b))
            for (const auto& [k, d] : reduced)
                if (value + b - d < need) {
                    excluded_[k] = 1;
                    fixed.push_back(k);
                }
        bool found = false;
        while (i < items_.size() && !available(i)) ++i;
        if (i < items_.size()) {
            for (auto x : res_[i]) state_[x] = 1;
            stack_.push_back(i);
            found = lex(i + 1, value + util(i));
            stack_.pop_back();
            for (auto x : res_[i]) state_[x] = 0;
            if (!found && !aborted_) found = lex(i + 1, value);
        }
        for (auto k : fixed) excluded_[k] = 0;
        return found;
    }

    std::span<const AssignmentOption> opts_;
    std::vector<std::size_t> items_; // option indices, ascending
    std::uint64_t& nodes_;
    std::uint64_t budget_;
    std::size_t n_vehicles_ = 0, n_resources_ = 0;
    std::vector<std::vector<std::uint32_t>> res_;
    std::vector<std::vector<std::uint32_t>> touching_;
    std::vector<std::uint32_t> order_;
    std::vector<std::uint8_t> state_; // 0 free, 1 used, 2 closed
    std::vector<std::uint32_t> stack_;
    std::vector<std::uint32_t> best_local_;
    double best_value_ = 0.0;
    double target_ = 0.0, tol_ = 0.0;
    double root_bound_ = 0.0;
    std::vector<double> reduced_;
    std::vector<std::uint8_t> excluded_;
    bool aborted_ = false;
};

inline bool conflicts(const AssignmentOption& a, const AssignmentOption& b) {
    if (a.vehicle == b.vehicle) return true;
    for (auto x : a.requests)
        for (auto y : b.requests)
            if (x == y) return true;
    return false;
}

} // namespace detail

// Options with non-positive utility never raise the objective and are not selected.
// Among optimal selections the lexicographically smallest set of option indices wins.
inline AssignmentSolution solve_assignment(std::span<const AssignmentOption> options,
                                           const SolverOptions& cfg = {}) {
    AssignmentSolution sol;
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < options.size(); ++i)
        if (options[i].utility > 0.0) live.push_back(i);
    if (live.empty()) return sol;

    // Drop options dominated by another option of the same vehicle over a subset of its
    // requests with higher utility, or equal utility and a smaller index. Swapping in the
    // dominating option keeps any selection feasible and at least as good, and on ties
    // makes it lexicographically smaller, so the optimum is unchanged.
    {
        using Key = std::tuple<VehicleId, OrderId, OrderId>;
        auto better = [&](std::size_t a, std::size_t b) {
            return options[a].utility > options[b].utility ||
                   (options[a].utility == options[b].utility && a < b);
        };
        auto keys_of = [&](const AssignmentOption& o) {
            std::vector<Key> ks;
            auto r = o.requests;
            std::sort(r.begin(), r.end());
            constexpr OrderId none = std::numeric_limits<OrderId>::min();
            if (r.size() == 1) ks.emplace_back(o.vehicle, r[0], none);
            else if (r.size() == 2) {
                ks.emplace_back(o.vehicle, r[0], r[1]);
                ks.emplace_back(o.vehicle, r[0], none);
                ks.emplace_back(o.vehicle, r[1], none);
            }
            return ks;
        };
        std::map<Key, std::size_t> best;
        for (auto i : live)
            if (options[i].requests.size() == 1 || options[i].requests.size() == 2) {
                const auto k = keys_of(options[i]).front();
                auto [it, fresh] = best.emplace(k, i);
                if (!fresh && better(i, it->second)) it->second = i;
            }
        std::vector<std::size_t> kept;
        for (auto i : live) {
            bool dominated = false;
            for (const auto& k : keys_of(options[i])) {
                auto it = best.find(k);
                if (it != best.end() && it->second != i && better(it->second, i)) dominated = true;
            }
            if (!dominated) kept.push_back(i);
        }
        live = std::move(kept);
    }

    // Independent components of the vehicle/request conflict graph.
    std::unordered_map<std::int64_t, std::size_t> parent_of_key;
    std::vector<std::size_t> parent(live.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    auto unite = [&](std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    };
    for (std::size_t k = 0; k < live.size(); ++k) {
        const auto& o = options[live[k]];
        auto touch = [&](std::int64_t key) {
            auto [it, fresh] = parent_of_key.emplace(key, k);
            if (!fresh) unite(k, it->second);
        };
        touch(-1 - static_cast<std::int64_t>(o.vehicle)); // vehicles map to negative keys
        for (auto r : o.requests) touch(r);
    }
    std::vector<std::vector<std::size_t>> comps;
    std::unordered_map<std::size_t, std::size_t> comp_index;
    for (std::size_t k = 0; k < live.size(); ++k) {
        auto root = find(k);
        auto [it, fresh] = comp_index.emplace(root, comps.size());
        if (fresh) comps.emplace_back();
        comps[it->second].push_back(live[k]);
    }

    for (const auto& comp : comps) {
        if (comp.size() == 1) {
            sol.chosen.push_back(comp.front());
            ++sol.nodes;
            continue;
        }
        detail::PackingSolver solver(options, comp, sol.nodes, cfg.node_budget);
        if (!solver.run()) sol.proven_optimal = false;
        const auto picked = solver.best();
        sol.chosen.insert(sol.chosen.end(), picked.begin(), picked.end());
    }
    std::sort(sol.chosen.begin(), sol.chosen.end());
    for (auto i : sol.chosen) sol.objective += options[i].utility;
    return sol;
}

inline std::vector<AssignmentOption> to_options(std::span<const CandidateTrip> trips) {
    std::vector<AssignmentOption> out;
    out.reserve(trips.size());
    for (const auto& t : trips) out.push_back({t.vehicle, t.requests, t.utility});
    return out;
}

inline AssignmentSolution solve_assignment(std::span<const CandidateTrip> trips, const SolverOptions& cfg = {}) {
    const auto opts = to_options(trips);
    return solve_assignment(std::span<const AssignmentOption>(opts), cfg);
}

} // namespace ridesim
