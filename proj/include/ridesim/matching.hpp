#pragma once

// Trip pooling under the detour guarantee, candidate trip enumeration, and repositioning.

#include <algorithm>
#include <array>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ridesim/demand.hpp"
#include "ridesim/netgraph.hpp"
#include "ridesim/pricing.hpp"
#include "ridesim/vehicle.hpp"

namespace ridesim {

struct PooledRoute {
    std::array<Stop, 4> stops;
    double distance_m;            // first pickup to last dropoff
    std::array<double, 2> detour; // r1, r2
};

// Best co-riding order of two Share requests, starting at the first pickup. Orders in
// which the two customers never ride together over a positive distance are not pools.
inline std::optional<PooledRoute> pool_feasible(const Router& router, double max_detour,
                                                const Order& r1, const Order& r2) {
    const Stop p1{StopKind::Pickup, r1.id, r1.origin}, d1{StopKind::Dropoff, r1.id, r1.destination};
    const Stop p2{StopKind::Pickup, r2.id, r2.origin}, d2{StopKind::Dropoff, r2.id, r2.destination};
    const std::array<std::array<Stop, 4>, 4> orderings{{
        {p1, p2, d1, d2},
        {p1, p2, d2, d1},
        {p2, p1, d1, d2},
        {p2, p1, d2, d1},
    }};
    const std::array<PlanCustomer, 2> customers{{{r1.id, r1.trip_distance, false, 0.0},
                                                 {r2.id, r2.trip_distance, false, 0.0}}};
    std::optional<PooledRoute> best;
    for (const auto& stops : orderings) {
        auto plan = evaluate_plan(router, {stops[0].node, 0.0}, stops, customers, 2);
        if (!plan || !(plan->co_ride_m > 0.0)) continue;
        const double x1 = detour_ratio(plan->in_vehicle_m[0], r1.trip_distance);
        const double x2 = detour_ratio(plan->in_vehicle_m[1], r2.trip_distance);
        if (x1 > max_detour + kDetourSlack || x2 > max_detour + kDetourSlack) continue;
        if (!best || plan->total_m < best->distance_m) best = PooledRoute{stops, plan->total_m, {x1, x2}};
    }
    return best;
}

struct Insertion {
    std::vector<Stop> schedule;
    double added_m;
    double total_m;
    std::vector<std::pair<OrderId, double>> detours; // every customer in the new schedule
};

// Cheapest insertion of r's pickup and dropoff into the vehicle's remaining schedule that
// keeps capacity and every customer's detour within the guarantee. Scheduled customers
// (onboard or awaiting pickup) never exceed the vehicle capacity.
inline std::optional<Insertion> insertion_feasible(const Router& router, double max_detour,
                                                   const VehicleState& v, const Order& r) {
    if (v.passengers.size() >= static_cast<std::size_t>(v.capacity)) return std::nullopt;
    const Anchor anchor = anchor_of(v, router.network());
    auto customers = plan_customers(v);
    double old_total = 0.0;
    if (!v.schedule.empty()) {
        auto cur = evaluate_plan(router, anchor, v.schedule, customers, v.capacity);
        if (!cur) return std::nullopt;
        old_total = cur->total_m;
    }
    customers.push_back({r.id, r.trip_distance, false, 0.0});

    const Stop pick{StopKind::Pickup, r.id, r.origin}, drop{StopKind::Dropoff, r.id, r.destination};
    const std::size_t m = v.schedule.size();
    std::optional<Insertion> best;
    std::vector<Stop> trial;
    trial.reserve(m + 2);
    for (std::size_t i = 0; i <= m; ++i) {
        for (std::size_t j = i; j <= m; ++j) {
            trial.clear();
            trial.insert(trial.end(), v.schedule.begin(), v.schedule.begin() + static_cast<std::ptrdiff_t>(i));
            trial.push_back(pick);
            trial.insert(trial.end(), v.schedule.begin() + static_cast<std::ptrdiff_t>(i),
                         v.schedule.begin() + static_cast<std::ptrdiff_t>(j));
            trial.push_back(drop);
            trial.insert(trial.end(), v.schedule.begin() + static_cast<std::ptrdiff_t>(j), v.schedule.end());
            auto plan = evaluate_plan(router, anchor, trial, customers, v.capacity);
            if (!plan) continue;
            bool ok = true;
            for (std::size_t c = 0; c < customers.size() && ok; ++c)
                ok = detour_ratio(plan->in_vehicle_m[c], customers[c].trip_distance) <= max_detour + kDetourSlack;
            if (!ok) continue;
            const double added = plan->total_m - old_total;
            if (!best || added < best->added_m) {
                Insertion ins{trial, added, plan->total_m, {}};
                for (std::size_t c = 0; c < customers.size(); ++c)
                    ins.detours.emplace_back(customers[c].order,
                                             detour_ratio(plan->in_vehicle_m[c], customers[c].trip_distance));
                best = std::move(ins);
            }
        }
    }
    return best;
}

// --- candidate trips --------------------------------------------------------

struct BatchRequest {
    Order order;
    ServiceChoice choice;
    double fare; // upfront fare for the chosen service
};

struct CandidateTrip {
    enum class Kind { IdleSingle, Insertion, IdlePair };
    Kind kind;
    std::vector<OrderId> requests; // 1 or 2
    VehicleId vehicle;
    std::vector<Stop> schedule;    // the vehicle's full schedule if this trip is chosen
    double route_m;                // planned distance from the vehicle's position
    double added_m;                // distance added to the vehicle's current plan
    double price;                  // w_i
    double cost;                   // c_ij
    double utility;                // u_ij
    std::vector<double> detours;   // realized-plan detour ratio per request
};

inline double trip_utility(const CandidateTrip& t) { return t.price - t.cost; }

struct CandidateOptions {
    double max_detour = 0.3;
    double cost_per_km = 0.5;
};

// Solo choosers pair only with idle vehicles; Share choosers also with feasible insertions
// into vehicles carrying only Share customers, and in feasible pairs with idle vehicles.
inline std::vector<CandidateTrip> enumerate_candidate_trips(std::span<const BatchRequest> batch,
                                                            std::span<const VehicleState> vehicles,
                                                            const Router& router,
                                                            const CandidateOptions& opt) {
    const auto& net = router.network();
    std::vector<CandidateTrip> out;
    auto finish = [&](CandidateTrip t) {
        t.cost = opt.cost_per_km * t.added_m / 1000.0;
        t.utility = trip_utility(t);
        out.push_back(std::move(t));
    };

    std::vector<const VehicleState*> idle, shareable;
    for (const auto& v : vehicles) {
        if (v.idle()) idle.push_back(&v);
        else if (std::all_of(v.passengers.begin(), v.passengers.end(), [](const Passenger& p) { return p.share; }))
            shareable.push_back(&v);
    }

    for (const auto& b : batch) {
        for (const auto* v : idle) {
            const Anchor a = anchor_of(*v, net);
            const double pickup = router.distance(a.node, b.order.origin);
            if (pickup == kUnreachable) continue;
            CandidateTrip t{CandidateTrip::Kind::IdleSingle, {b.order.id}, v->id,
                            {{StopKind::Pickup, b.order.id, b.order.origin},
                             {StopKind::Dropoff, b.order.id, b.order.destination}},
                            a.offset_m + pickup + b.order.trip_distance, 0.0, b.fare, 0.0, 0.0, {0.0}};
            t.added_m = t.route_m;
            finish(std::move(t));
        }
    }

    for (const auto& b : batch) {
        if (b.choice != ServiceChoice::Share) continue;
        for (const auto* v : shareable) {
            auto ins = insertion_feasible(router, opt.max_detour, *v, b.order);
            if (!ins) continue;
            double own = 0.0;
            for (const auto& [id, x] : ins->detours)
                if (id == b.order.id) own = x;
            finish({CandidateTrip::Kind::Insertion, {b.order.id}, v->id, std::move(ins->schedule),
                    ins->total_m, ins->added_m, b.fare, 0.0, 0.0, {own}});
        }
    }

    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch[i].choice != ServiceChoice::Share) continue;
        for (std::size_t j = i + 1; j < batch.size(); ++j) {
            if (batch[j].choice != ServiceChoice::Share) continue;
            auto pool = pool_feasible(router, opt.max_detour, batch[i].order, batch[j].order);
            if (!pool) continue;
            for (const auto* v : idle) {
                if (v->capacity < 2) continue;
                const Anchor a = anchor_of(*v, net);
                const double pickup = router.distance(a.node, pool->stops[0].node);
                if (pickup == kUnreachable) continue;
                CandidateTrip t{CandidateTrip::Kind::IdlePair,
                                {batch[i].order.id, batch[j].order.id},
                                v->id,
                                {pool->stops.begin(), pool->stops.end()},
                                a.offset_m + pickup + pool->distance_m,
                                0.0,
                                batch[i].fare + batch[j].fare,
                                0.0,
                                0.0,
                                {pool->detour[0], pool->detour[1]}};
                t.added_m = t.route_m;
                finish(std::move(t));
            }
        }
    }
    return out;
}

// --- repositioning ----------------------------------------------------------

// Minimum-cost rectangular assignment (Hungarian method, rows <= cols).
// Returns the column assigned to each row.
inline std::vector<std::size_t> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
    const std::size_t n = cost.size();
    if (n == 0) return {};
    const std::size_t m = cost[0].size();
    if (m < n) throw Error("min_cost_assignment needs rows <= cols");
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), w(m + 1, 0.0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - w[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    w[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<std::size_t> row_to_col(n, 0);
    for (std::size_t j = 1; j <= m; ++j)
        if (p[j]) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

struct RelocationMove {
    VehicleId vehicle;
    OrderId target_order;
    NodeId target_node;
    double distance_m;
};

// One-to-one idle vehicle -> waiting request pairing minimizing total pickup distance.
inline std::vector<RelocationMove> reposition_idle(std::span<const VehicleState* const> idle,
                                                   std::span<const Order> waiting, const Router& router) {
    if (idle.empty() || waiting.empty()) return {};
    const auto& net = router.network();
    // Unreachable pairs get a cost larger than any feasible total so they are picked last.
    double big = 1.0;
    std::vector<std::vector<double>> d(idle.size(), std::vector<double>(waiting.size()));
    for (std::size_t i = 0; i < idle.size(); ++i) {
        const Anchor a = anchor_of(*idle[i], net);
        for (std::size_t j = 0; j < waiting.size(); ++j) {
            const double x = router.distance(a.node, waiting[j].origin);
            d[i][j] = x == kUnreachable ? kUnreachable : a.offset_m + x;
            if (x != kUnreachable) big += d[i][j];
        }
    }
    for (auto& row : d)
        for (auto& x : row)
            if (x == kUnreachable) x = big;

    std::vector<RelocationMove> moves;
    const bool by_vehicle = idle.size() <= waiting.size();
    std::vector<std::vector<double>> cost;
    if (by_vehicle) {
        cost = d;
    } else {
        cost.assign(waiting.size(), std::vector<double>(idle.size()));
        for (std::size_t i = 0; i < idle.size(); ++i)
            for (std::size_t j = 0; j < waiting.size(); ++j) cost[j][i] = d[i][j];
    }
    const auto match = min_cost_assignment(cost);
    for (std::size_t r = 0; r < match.size(); ++r) {
        const std::size_t vi = by_vehicle ? r : match[r];
        const std::size_t wj = by_vehicle ? match[r] : r;
        if (d[vi][wj] >= big) continue;
        moves.push_back({idle[vi]->id, waiting[wj].id, waiting[wj].origin, d[vi][wj]});
    }
    std::sort(moves.begin(), moves.end(),
              [](const RelocationMove& a, const RelocationMove& b) { return a.vehicle < b.vehicle; });
    return moves;
}

} // namespace ridesim
