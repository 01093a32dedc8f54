#pragma once

// Discrete-time batch simulation of a ride-hailing platform with optional ride-sharing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "ridesim/assignment.hpp"
#include "ridesim/demand.hpp"
#include "ridesim/matching.hpp"
#include "ridesim/metrics.hpp"
#include "ridesim/netgraph.hpp"
#include "ridesim/pricing.hpp"
#include "ridesim/rng.hpp"
#include "ridesim/vehicle.hpp"

namespace ridesim {

struct SimConfig {
    double batch_interval = 30.0;
    double vehicle_speed = 8.33;      // m/s, ~30 km/h
    double horizon_start = 6 * 3600.0;
    double horizon_end = 12 * 3600.0;
    double tail = 2700.0;
    double abandonment_timeout = 600.0;
    int fleet_size = 500;
    int capacity = 2;
    double max_detour = 0.3;          // guaranteed detour ratio
    PricingParams pricing;
    double cost_per_km = 0.5;
    std::uint64_t solver_node_budget = 2'000'000;
    std::uint64_t seed = 1;
    bool pure_solo = false;           // platform offers solo-hailing only
    bool record_positions = true;     // fleet position samples for zone statistics
    EmissionModel emission;

    void validate() const {
        if (!(batch_interval > 0) || !(vehicle_speed > 0) || !(tail >= 0) || !(abandonment_timeout > 0))
            throw ConfigError("batch interval, speed and timeout must be positive");
        if (!(horizon_end > horizon_start)) throw ConfigError("horizon end must follow its start");
        if (fleet_size <= 0) throw ConfigError("fleet size must be positive");
        if (capacity < 1) throw ConfigError("capacity must be at least 1");
        if (!(max_detour > 0.0 && max_detour < 1.0)) throw ConfigError("detour guarantee must be in (0, 1)");
        if (!(cost_per_km >= 0)) throw ConfigError("cost_per_km must be non-negative");
        pricing.validate();
    }
};

inline std::string scenario_label(int capacity, double max_detour) {
    return "C" + std::to_string(capacity) + "-D" + std::to_string(static_cast<int>(std::lround(max_detour * 100)));
}

// --- event log --------------------------------------------------------------

enum class EventType { Request, Choice, Match, Pickup, Dropoff, Abandon, Reposition };

inline const char* to_string(EventType t) {
    switch (t) {
    case EventType::Request: return "request";
    case EventType::Choice: return "choice";
    case EventType::Match: return "match";
    case EventType::Pickup: return "pickup";
    case EventType::Dropoff: return "dropoff";
    case EventType::Abandon: return "abandon";
    case EventType::Reposition: return "reposition";
    }
    return "?";
}

struct Event {
    EventType type;
    double time;
    OrderId order = -1;
    VehicleId vehicle = -1;
    NodeId node = 0;
    std::optional<ServiceChoice> service; // choice events only
};

class EventLog {
public:
    void append(Event e) { events_.push_back(std::move(e)); }
    const std::vector<Event>& events() const noexcept { return events_; }
    std::size_t size() const noexcept { return events_.size(); }

    // One JSON object per line: type, time_s, order_id, vehicle_id, node (+ service on choices).
    void write_jsonl(std::ostream& os) const {
        for (const auto& e : events_) {
            nlohmann::ordered_json j;
            j["type"] = to_string(e.type);
            j["time_s"] = e.time;
            j["order_id"] = e.order >= 0 ? nlohmann::ordered_json(e.order) : nlohmann::ordered_json(nullptr);
            j["vehicle_id"] = e.vehicle >= 0 ? nlohmann::ordered_json(e.vehicle) : nlohmann::ordered_json(nullptr);
            j["node"] = e.node;
            if (e.service) j["service"] = to_string(*e.service);
            os << j.dump() << '\n';
        }
    }

    std::string to_jsonl() const {
        std::ostringstream os;
        write_jsonl(os);
        return os.str();
    }

private:
    std::vector<Event> events_;
};

// --- fleet ------------------------------------------------------------------

// Per-node origin frequencies, aligned with network.nodes().
inline std::vector<double> origin_weights(std::span<const Order> orders, const RoadNetwork& net) {
    std::vector<double> w(net.node_count(), 0.0);
    if (orders.empty()) return uniform_weights(net);
    for (const auto& o : orders) w[net.index_of(o.origin)] += 1.0;
    for (double& x : w) x /= static_cast<double>(orders.size());
    return w;
}

inline std::vector<VehicleState> init_fleet(const SimConfig& cfg, const std::vector<double>& weights,
                                            const RoadNetwork& net, Rng& rng) {
    if (net.empty()) throw Error("cannot place a fleet on an empty network");
    validate_weights(net, weights);
    std::vector<double> cum(weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) cum[i] = acc += weights[i];
    std::vector<VehicleState> fleet(static_cast<std::size_t>(cfg.fleet_size));
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        fleet[i].id = static_cast<VehicleId>(i);
        fleet[i].capacity = cfg.capacity;
        fleet[i].node = net.nodes()[rng.categorical(cum)].id;
    }
    return fleet;
}

// One motion tick for every vehicle.
inline std::vector<MotionEvent> step(std::vector<VehicleState>& fleet, const RoadNetwork& net, double t0,
                                     double dt, double speed_mps) {
    std::vector<MotionEvent> out;
    for (auto& v : fleet) advance(v, net, t0, dt, speed_mps, out);
    return out;
}

// --- simulation -------------------------------------------------------------

struct SimResult {
    EventLog log;
    std::vector<TripRecord> records; // admitted orders, in admission order
    FleetHistory fleet;
    SystemMetrics metrics;
};

class Simulation {
public:
    Simulation(SimConfig cfg, const Router& router, const ElasticityTable& elasticity,
               std::vector<Order> orders, std::optional<std::vector<double>> fleet_weights = std::nullopt)
        : cfg_(std::move(cfg)), router_(router), net_(router.network()), elasticity_(elasticity),
          orders_(std::move(orders)), choice_rng_(Rng::stream(cfg_.seed, stream_tag::kChoice)) {
        cfg_.validate();
        for (std::size_t i = 1; i < orders_.size(); ++i) {
            const auto& a = orders_[i - 1];
            const auto& b = orders_[i];
            if (b.request_time < a.request_time || (b.request_time == a.request_time && b.id < a.id))
                throw Error("order stream is not sorted by request time");
        }
        std::unordered_map<OrderId, char> seen;
        for (const auto& o : orders_) {
            if (!(o.trip_distance > 0.0)) throw Error("order " + std::to_string(o.id) + " has no trip distance");
            if (!seen.emplace(o.id, 1).second) throw Error("duplicate order id " + std::to_string(o.id));
        }

        std::vector<Order> in_horizon;
        for (const auto& o : orders_)
            if (o.request_time >= cfg_.horizon_start && o.request_time < cfg_.horizon_end) in_horizon.push_back(o);
        const auto weights = fleet_weights ? *fleet_weights : origin_weights(in_horizon, net_);
        Rng fleet_rng = Rng::stream(cfg_.seed, stream_tag::kFleet);
        fleet_ = init_fleet(cfg_, weights, net_, fleet_rng);
        p_share_ = cfg_.pure_solo ? 0.0 : acceptance_probability(elasticity_, cfg_.max_detour, cfg_.pricing.discount);
    }

    const std::vector<VehicleState>& fleet() const noexcept { return fleet_; }
    double share_probability() const noexcept { return p_share_; }

    SimResult run() {
        const double dt = cfg_.batch_interval;
        std::size_t next = 0;
        for (std::uint64_t k = 0;; ++k) {
            const double t = cfg_.horizon_start + static_cast<double>(k) * dt;
            const bool last = t >= cfg_.horizon_end;
            admit_until(t, next);
            flush();
            expire(t);
            if (cfg_.record_positions) sample_positions(t);
            const auto assigned = match(t);
            if (!last) reposition(t, assigned);
            if (last) {
                for (auto idx : waiting_) abandon(idx, t);
                waiting_.clear();
                for (auto& v : fleet_) stop_relocation(v, net_);
                move(t, dt);
                tail(t + dt);
                break;
            }
            move(t, dt);
        }
        flush();
        result_.fleet.vehicle_m = 0.0;
        result_.fleet.loaded_m = 0.0;
        for (const auto& v : fleet_) {
            result_.fleet.vehicle_m += v.odometer;
            result_.fleet.loaded_m += v.loaded_m;
        }
        result_.metrics = aggregate_metrics(result_.records, result_.fleet, cfg_.emission, cfg_.vehicle_speed,
                                            cfg_.pricing.pooled_trip_subsidy);
        return std::move(result_);
    }

private:
    void emit_pending(Event e) { pending_.push_back(std::move(e)); }

    void flush() {
        std::stable_sort(pending_.begin(), pending_.end(),
                         [](const Event& a, const Event& b) { return a.time < b.time; });
        for (auto& e : pending_) result_.log.append(std::move(e));
        pending_.clear();
    }

    void admit_until(double t, std::size_t& next) {
        while (next < orders_.size() && orders_[next].request_time <= t) {
            const Order& o = orders_[next++];
            if (o.request_time < cfg_.horizon_start || o.request_time >= cfg_.horizon_end) continue;
            const auto choice = choose_service(p_share_, choice_rng_);
            TripRecord r;
            r.order_id = o.id;
            r.origin = o.origin;
            r.destination = o.destination;
            r.request_time = o.request_time;
            r.choice = choice;
            r.original_distance = o.trip_distance;
            r.fare = choice == ServiceChoice::Share ? share_fare(cfg_.pricing, o.trip_distance)
                                                    : solo_fare(cfg_.pricing, o.trip_distance);
            const auto idx = result_.records.size();
            result_.records.push_back(r);
            record_of_[o.id] = idx;
            order_of_.push_back(o);
            waiting_.push_back(idx);
            emit_pending({EventType::Request, o.request_time, o.id, -1, o.origin});
            emit_pending({EventType::Choice, o.request_time, o.id, -1, o.origin, choice});
        }
    }

    void abandon(std::size_t idx, double t) {
        auto& r = result_.records[idx];
        r.outcome = Outcome::Abandoned;
        result_.log.append({EventType::Abandon, t, r.order_id, -1, r.origin});
    }

    // Orders that have waited the full timeout leave before this batch is matched.
    void expire(double t) {
        std::vector<std::size_t> keep;
        for (auto idx : waiting_) {
            if (t - result_.records[idx].request_time >= cfg_.abandonment_timeout) abandon(idx, t);
            else keep.push_back(idx);
        }
        waiting_ = std::move(keep);
    }

    void sample_positions(double t) {
        FleetHistory::Sample s{t, {}};
        s.nodes.reserve(fleet_.size());
        for (const auto& v : fleet_) s.nodes.push_back(v.node);
        result_.fleet.positions.push_back(std::move(s));
    }

    std::vector<char> match(double t) {
        std::vector<char> assigned(fleet_.size(), 0);
        if (!waiting_.empty()) {
            std::vector<BatchRequest> batch;
            batch.reserve(waiting_.size());
            for (auto idx : waiting_) {
                const auto& r = result_.records[idx];
                batch.push_back({order_of_[idx], r.choice, r.fare});
            }
            const auto trips = enumerate_candidate_trips(batch, fleet_, router_, {cfg_.max_detour, cfg_.cost_per_km});
            const auto sol = solve_assignment(std::span<const CandidateTrip>(trips), {cfg_.solver_node_budget});
            if (!sol.proven_optimal) ++result_.fleet.solver_budget_hits;

            std::vector<char> matched(result_.records.size(), 0);
            for (auto ti : sol.chosen) {
                const auto& trip = trips[ti];
                auto& v = fleet_[static_cast<std::size_t>(trip.vehicle)];
                for (auto id : trip.requests) {
                    const auto idx = record_of_.at(id);
                    auto& r = result_.records[idx];
                    Passenger p;
                    p.order = id;
                    p.trip_distance = r.original_distance;
                    p.share = r.choice == ServiceChoice::Share;
                    v.passengers.push_back(p);
                    r.vehicle = v.id;
                    r.matched_at = t;
                    r.matching_time = t - r.request_time;
                    matched[idx] = 1;
                    result_.log.append({EventType::Match, t, id, v.id, v.node});
                }
                set_plan(v, router_, trip.schedule);
                assigned[static_cast<std::size_t>(v.id)] = 1;
            }
            std::erase_if(waiting_, [&](std::size_t idx) { return matched[idx] != 0; });
        }
        double scheduled = 0.0;
        for (const auto& v : fleet_) scheduled += static_cast<double>(v.passengers.size());
        result_.fleet.scheduled_means.push_back(scheduled / static_cast<double>(fleet_.size()));
        return assigned;
    }

    void reposition(double t, const std::vector<char>& assigned) {
        std::vector<const VehicleState*> idle;
        for (const auto& v : fleet_)
            if (v.idle() && !assigned[static_cast<std::size_t>(v.id)]) idle.push_back(&v);
        std::vector<Order> waiting;
        for (auto idx : waiting_) waiting.push_back(order_of_[idx]);
        const auto moves = reposition_idle(std::span<const VehicleState* const>(idle), waiting, router_);

        std::vector<char> moved(fleet_.size(), 0);
        for (const auto& m : moves) {
            auto& v = fleet_[static_cast<std::size_t>(m.vehicle)];
            moved[static_cast<std::size_t>(m.vehicle)] = 1;
            if (v.relocation_target == m.target_order) continue;
            set_relocation(v, router_, m.target_node, m.target_order);
            if (v.relocation_target) result_.log.append({EventType::Reposition, t, m.target_order, v.id, m.target_node});
        }
        for (auto* p : idle)
            if (!moved[static_cast<std::size_t>(p->id)]) stop_relocation(fleet_[static_cast<std::size_t>(p->id)], net_);
    }

    void move(double t, double dt) {
        for (auto& e : step(fleet_, net_, t, dt, cfg_.vehicle_speed)) on_motion(e);
    }

    void on_motion(const MotionEvent& e) {
        switch (e.kind) {
        case MotionEvent::Kind::Pickup: {
            auto& r = result_.records[record_of_.at(e.order)];
            r.picked_at = e.time;
            r.pickup_time = e.time - r.matched_at;
            emit_pending({EventType::Pickup, e.time, e.order, e.vehicle, e.node});
            break;
        }
        case MotionEvent::Kind::Dropoff: {
            auto& r = result_.records[record_of_.at(e.order)];
            r.dropped_at = e.time;
            r.outcome = Outcome::Delivered;
            r.in_vehicle_distance = e.in_vehicle_m;
            r.shared_distance = e.shared_m;
            r.detour_distance = e.in_vehicle_m - r.original_distance;
            if (r.detour_distance < 0.0 && r.detour_distance > -1e-6 * r.original_distance) {
                r.detour_distance = 0.0;
                r.in_vehicle_distance = r.original_distance;
            }
            r.pooled = r.shared_distance > 0.0;
            emit_pending({EventType::Dropoff, e.time, e.order, e.vehicle, e.node});
            break;
        }
        case MotionEvent::Kind::GroupClosed: {
            if (e.group.size() < 2) break;
            double orig = 0.0;
            for (auto id : e.group) orig += result_.records[record_of_.at(id)].original_distance;
            const double each = (orig - e.group_span_m) / static_cast<double>(e.group.size());
            for (auto id : e.group) result_.records[record_of_.at(id)].saved_distance = each;
            break;
        }
        }
    }

    void tail(double t) {
        const double dt = cfg_.batch_interval;
        const double end = cfg_.horizon_end + cfg_.tail;
        const double hard_stop = end + 86400.0;
        auto busy = [&] {
            return std::any_of(fleet_.begin(), fleet_.end(), [](const VehicleState& v) { return !v.idle(); });
        };
        for (std::uint64_t k = 0;; ++k) {
            const double now = t + static_cast<double>(k) * dt;
            if (now >= end && !busy()) break;
            if (now >= hard_stop) throw Error("vehicles failed to finish their schedules");
            flush();
            move(now, dt);
        }
    }

    SimConfig cfg_;
    const Router& router_;
    const RoadNetwork& net_;
    const ElasticityTable& elasticity_;
    std::vector<Order> orders_;
    Rng choice_rng_;
    double p_share_ = 0.0;
    std::vector<VehicleState> fleet_;
    std::vector<std::size_t> waiting_;             // record indices, admission order
    std::vector<Order> order_of_;                  // per record index
    std::unordered_map<OrderId, std::size_t> record_of_;
    std::vector<Event> pending_;
    SimResult result_;
};

inline SimResult run_simulation(const SimConfig& cfg, const std::vector<Order>& orders, const Router& router,
                                const ElasticityTable& elasticity,
                                std::optional<std::vector<double>> fleet_weights = std::nullopt) {
    return Simulation(cfg, router, elasticity, orders, std::move(fleet_weights)).run();
}

} // namespace ridesim
