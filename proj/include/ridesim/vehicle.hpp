#pragma once

// Vehicle state, route planning over a stop schedule, and constant-speed motion.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "ridesim/demand.hpp"
#include "ridesim/netgraph.hpp"

namespace ridesim {

using VehicleId = std::int32_t;

enum class StopKind : std::uint8_t { Pickup, Dropoff };

struct Stop {
    StopKind kind;
    OrderId order;
    NodeId node;

    friend bool operator==(const Stop&, const Stop&) = default;
};

// A customer assigned to a vehicle, onboard or awaiting pickup.
struct Passenger {
    OrderId order = 0;
    double trip_distance = 0.0;
    bool onboard = false;
    double pickup_odometer = 0.0;
    double shared_m = 0.0;
    bool share = false;
};

struct VehicleState {
    VehicleId id = 0;
    int capacity = 2;
    NodeId node = 0;            // last node reached
    double edge_progress = 0.0; // meters along the edge toward next_node()
    std::vector<Stop> schedule;
    std::vector<std::deque<NodeId>> legs; // legs[k]: nodes still to traverse to reach schedule[k]
    std::deque<NodeId> drift;             // relocation path, or the rest of an interrupted edge
    std::optional<OrderId> relocation_target;
    std::vector<Passenger> passengers;    // scheduled customers; onboard ones have onboard = true

    double odometer = 0.0;
    double loaded_m = 0.0; // distance driven with at least one customer onboard
    double group_start = 0.0;
    std::vector<OrderId> group; // customers onboard since the vehicle was last empty

    bool idle() const noexcept { return schedule.empty(); }

    std::size_t onboard_count() const noexcept {
        return static_cast<std::size_t>(
            std::count_if(passengers.begin(), passengers.end(), [](const Passenger& p) { return p.onboard; }));
    }

    const Passenger* passenger(OrderId id) const {
        for (const auto& p : passengers)
            if (p.order == id) return &p;
        return nullptr;
    }
    Passenger* passenger(OrderId id) {
        for (auto& p : passengers)
            if (p.order == id) return &p;
        return nullptr;
    }

    bool moving() const noexcept {
        return (!legs.empty() && !legs.front().empty()) || !drift.empty();
    }

    std::optional<NodeId> next_node() const {
        if (!legs.empty() && !legs.front().empty()) return legs.front().front();
        if (!drift.empty()) return drift.front();
        return std::nullopt;
    }
};

// Where a new plan can start: the vehicle's node, or the end of the edge it is on.
struct Anchor {
    NodeId node;
    double offset_m;
};

inline Anchor anchor_of(const VehicleState& v, const RoadNetwork& net) {
    if (v.edge_progress > 0.0) {
        if (auto next = v.next_node()) return {*next, net.edge_length(v.node, *next) - v.edge_progress};
    }
    return {v.node, 0.0};
}

// --- plan evaluation --------------------------------------------------------

struct PlanCustomer {
    OrderId order;
    double trip_distance;
    bool onboard;
    double traveled_m; // in-vehicle distance so far (onboard customers only)
};

struct PlanResult {
    double total_m = 0.0;                 // anchor offset + all legs
    std::vector<double> in_vehicle_m;     // aligned with the customer list
    double co_ride_m = 0.0;               // distance with two or more customers onboard
};

// Walks `stops` from the anchor. Fails on an unreachable leg or a capacity overflow.
inline std::optional<PlanResult> evaluate_plan(const Router& router, Anchor anchor,
                                               std::span<const Stop> stops,
                                               std::span<const PlanCustomer> customers, int capacity) {
    PlanResult r;
    r.in_vehicle_m.assign(customers.size(), 0.0);
    std::vector<double> picked_at(customers.size(), -1.0);
    int load = 0;
    for (const auto& c : customers) load += c.onboard;
    if (load > capacity) return std::nullopt;

    auto idx = [&](OrderId id) -> std::size_t {
        for (std::size_t i = 0; i < customers.size(); ++i)
            if (customers[i].order == id) return i;
        throw Error("plan stop references an unknown customer");
    };

    double cum = anchor.offset_m;
    NodeId at = anchor.node;
    for (const auto& s : stops) {
        const double leg = router.distance(at, s.node);
        if (leg == kUnreachable) return std::nullopt;
        if (load >= 2) r.co_ride_m += leg;
        cum += leg;
        at = s.node;
        const auto i = idx(s.order);
        if (s.kind == StopKind::Pickup) {
            if (++load > capacity) return std::nullopt;
            picked_at[i] = cum;
        } else {
            r.in_vehicle_m[i] = picked_at[i] >= 0.0 ? cum - picked_at[i] : customers[i].traveled_m + cum;
            --load;
        }
    }
    r.total_m = cum;
    return r;
}

inline double detour_ratio(double in_vehicle_m, double trip_m) { return (in_vehicle_m - trip_m) / trip_m; }

// Slack added to the detour comparison so that exact-boundary plans are not lost to rounding.
inline constexpr double kDetourSlack = 1e-12;

inline std::vector<PlanCustomer> plan_customers(const VehicleState& v) {
    std::vector<PlanCustomer> out;
    out.reserve(v.passengers.size() + 1);
    for (const auto& p : v.passengers)
        out.push_back({p.order, p.trip_distance, p.onboard, p.onboard ? v.odometer - p.pickup_odometer : 0.0});
    return out;
}

// Replaces the vehicle's schedule and lays out the node paths for each leg.
inline void set_plan(VehicleState& v, const Router& router, std::vector<Stop> schedule) {
    const auto& net = router.network();
    const Anchor a = anchor_of(v, net);
    const bool mid_edge = v.edge_progress > 0.0;
    v.schedule = std::move(schedule);
    v.legs.clear();
    v.drift.clear();
    v.relocation_target.reset();
    NodeId prev = a.node;
    for (const auto& s : v.schedule) {
        auto p = router.path(prev, s.node);
        if (!p) throw Error("planned leg is unreachable");
        v.legs.emplace_back(p->nodes.begin() + 1, p->nodes.end());
        prev = s.node;
    }
    if (mid_edge) {
        if (!v.legs.empty()) v.legs.front().push_front(a.node);
        else v.drift.push_back(a.node);
    }
}

// Sends an idle vehicle toward `target`; an empty route stops it (after finishing its edge).
inline void set_relocation(VehicleState& v, const Router& router, NodeId target, std::optional<OrderId> for_order) {
    const auto& net = router.network();
    const Anchor a = anchor_of(v, net);
    const bool mid_edge = v.edge_progress > 0.0;
    v.drift.clear();
    if (mid_edge) v.drift.push_back(a.node);
    auto p = router.path(a.node, target);
    if (!p) throw Error("relocation target unreachable");
    v.drift.insert(v.drift.end(), p->nodes.begin() + 1, p->nodes.end());
    v.relocation_target = v.drift.empty() ? std::nullopt : for_order;
}

inline void stop_relocation(VehicleState& v, const RoadNetwork& net) {
    if (!v.idle()) return;
    const bool mid_edge = v.edge_progress > 0.0;
    const Anchor a = anchor_of(v, net);
    v.drift.clear();
    if (mid_edge) v.drift.push_back(a.node);
    v.relocation_target.reset();
}

// --- motion -----------------------------------------------------------------

struct MotionEvent {
    enum class Kind { Pickup, Dropoff, GroupClosed };
    Kind kind;
    double time;
    VehicleId vehicle;
    NodeId node;
    OrderId order = -1;
    double in_vehicle_m = 0.0; // dropoff
    double shared_m = 0.0;     // dropoff
    std::vector<OrderId> group; // group closure
    double group_span_m = 0.0;
};

namespace detail {
inline void fire_stop(VehicleState& v, double time, std::vector<MotionEvent>& out) {
    const Stop s = v.schedule.front();
    v.schedule.erase(v.schedule.begin());
    v.legs.erase(v.legs.begin());
    Passenger* p = v.passenger(s.order);
    if (!p) throw Error("stop for a customer not assigned to the vehicle");
    if (s.kind == StopKind::Pickup) {
        if (v.onboard_count() == 0) {
            v.group.clear();
            v.group_start = v.odometer;
        }
        p->onboard = true;
        p->pickup_odometer = v.odometer;
        v.group.push_back(s.order);
        out.push_back({MotionEvent::Kind::Pickup, time, v.id, s.node, s.order});
    } else {
        MotionEvent e{MotionEvent::Kind::Dropoff, time, v.id, s.node, s.order};
        e.in_vehicle_m = v.odometer - p->pickup_odometer;
        e.shared_m = p->shared_m;
        out.push_back(std::move(e));
        v.passengers.erase(v.passengers.begin() + (p - v.passengers.data()));
        if (v.onboard_count() == 0) {
            MotionEvent g{MotionEvent::Kind::GroupClosed, time, v.id, s.node};
            g.group = std::move(v.group);
            g.group_span_m = v.odometer - v.group_start;
            v.group.clear();
            out.push_back(std::move(g));
        }
    }
}

inline void drive(VehicleState& v, double meters) {
    v.odometer += meters;
    const auto load = v.onboard_count();
    if (load >= 1) v.loaded_m += meters;
    if (load >= 2)
        for (auto& p : v.passengers)
            if (p.onboard) p.shared_m += meters;
}
} // namespace detail

// Advances one vehicle by dt seconds starting at t0. Stops reached within the tick fire
// in route order with interpolated timestamps.
inline void advance(VehicleState& v, const RoadNetwork& net, double t0, double dt, double speed_mps,
                    std::vector<MotionEvent>& out) {
    const double budget = dt * speed_mps;
    double consumed = 0.0;
    for (;;) {
        if (!v.schedule.empty() && v.legs.front().empty()) {
            detail::fire_stop(v, t0 + consumed / speed_mps, out);
            continue;
        }
        std::deque<NodeId>* path = nullptr;
        if (!v.schedule.empty()) path = &v.legs.front();
        else if (!v.drift.empty()) path = &v.drift;
        else break;

        const NodeId next = path->front();
        const double need = net.edge_length(v.node, next) - v.edge_progress;
        const double left = budget - consumed;
        if (need <= left) {
            detail::drive(v, need);
            consumed += need;
            v.node = next;
            v.edge_progress = 0.0;
            path->pop_front();
            if (path == &v.drift && v.drift.empty()) v.relocation_target.reset();
        } else {
            detail::drive(v, left);
            v.edge_progress += left;
            break;
        }
    }
}

} // namespace ridesim
