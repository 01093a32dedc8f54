#pragma once

// Per-trip distance accounting, system metrics, CO2 emissions and zone load statistics.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ridesim/csv.hpp"
#include "ridesim/demand.hpp"
#include "ridesim/netgraph.hpp"
#include "ridesim/vehicle.hpp"

namespace ridesim {

// --- emissions --------------------------------------------------------------

// CO2 factor in g/km. Speed-curve mode uses the COPERT rational form
//   EF(v) = (alpha + gamma v + epsilon v^2) / (1 + beta v + zeta v^2),  v in km/h.
struct EmissionModel {
    enum class Mode { Constant, SpeedCurve };
    Mode mode = Mode::SpeedCurve;
    double constant_g_per_km = 180.0;
    // Default curve: gasoline passenger car, fitted to typical urban CO2 factors
    // (~200 g/km at 30 km/h, ~165 g/km at 50 km/h).
    double alpha = 750.0;
    double beta = 0.134;
    double gamma = 5.35;
    double epsilon = 0.102;
    double zeta = 0.0;

    static EmissionModel constant(double g_per_km) {
        EmissionModel m;
        m.mode = Mode::Constant;
        m.constant_g_per_km = g_per_km;
        return m;
    }

    double factor(double speed_mps) const {
        if (!(speed_mps > 0.0)) throw Error("emission factor needs a positive speed");
        if (mode == Mode::Constant) return constant_g_per_km;
        const double v = speed_mps * 3.6;
        return (alpha + gamma * v + epsilon * v * v) / (1.0 + beta * v + zeta * v * v);
    }

    // emission_curve.csv: parameter,value with rows alpha, beta, gamma, epsilon, zeta.
    static EmissionModel load_curve(const std::string& path) {
        EmissionModel m;
        std::map<std::string, double*> slots{{"alpha", &m.alpha}, {"beta", &m.beta}, {"gamma", &m.gamma},
                                             {"epsilon", &m.epsilon}, {"zeta", &m.zeta}};
        for (const auto& row : csv::read(path, {"parameter", "value"})) {
            auto it = slots.find(row.fields[0]);
            auto v = csv::to_double(row.fields[1]);
            if (it == slots.end() || !v) throw ParseError(path, row.line, "unknown parameter or bad value");
            *it->second = *v;
        }
        for (double s = 0.5; s <= 40.0; s += 0.5)
            if (!(m.factor(s) > 0.0)) throw ParseError(path, 0, "curve is not positive on (0, 40] m/s");
        return m;
    }
};

inline double co2_for_leg(const EmissionModel& model, double distance_m, double speed_mps) {
    if (!(speed_mps > 0.0)) throw Error("co2_for_leg needs a positive speed");
    return distance_m / 1000.0 * model.factor(speed_mps);
}

// --- trip records -----------------------------------------------------------

enum class Outcome { Delivered, Abandoned, Pending };

struct TripRecord {
    OrderId order_id = 0;
    NodeId origin = 0;
    NodeId destination = 0;
    double request_time = 0.0;
    ServiceChoice choice = ServiceChoice::Solo;
    Outcome outcome = Outcome::Pending;
    VehicleId vehicle = -1;
    double matched_at = -1.0;
    double picked_at = -1.0;
    double dropped_at = -1.0;
    double matching_time = 0.0;
    double pickup_time = 0.0;
    double original_distance = 0.0;
    double in_vehicle_distance = 0.0;
    double shared_distance = 0.0;
    double detour_distance = 0.0;
    double saved_distance = 0.0;
    double fare = 0.0; // quoted upfront fare; charged only if delivered
    bool pooled = false;

    double detour_ratio() const { return detour_distance / original_distance; }
};

// --- pooled trip distance accounting ---------------------------------------

struct MemberDistances {
    OrderId order;
    double original_m;
    double in_vehicle_m;
    double shared_m;
    double detour_m;
    double saved_m; // equal split of the group's saved distance
};

// Distances for customers riding one realized route. `leg_m[k]` is the distance driven
// to reach stops[k] from the previous stop. A group is a maximal stretch with someone
// onboard; its saved distance is the members' original distances minus the distance
// driven over the stretch, split equally. Single-member groups save nothing.
inline std::vector<MemberDistances> trip_distances(std::span<const Stop> stops, std::span<const double> leg_m,
                                                   std::span<const Order> members) {
    if (stops.size() != leg_m.size()) throw Error("trip_distances: one leg distance per stop");
    std::vector<MemberDistances> out;
    for (const auto& m : members) out.push_back({m.id, m.trip_distance, 0.0, 0.0, 0.0, 0.0});
    auto idx = [&](OrderId id) -> std::size_t {
        for (std::size_t i = 0; i < out.size(); ++i)
            if (out[i].order == id) return i;
        throw Error("trip_distances: stop for an unknown member");
    };
    std::vector<char> onboard(out.size(), 0);
    std::vector<std::size_t> group;
    double span = 0.0;
    int load = 0;
    for (std::size_t k = 0; k < stops.size(); ++k) {
        const double d = leg_m[k];
        for (std::size_t i = 0; i < out.size(); ++i)
            if (onboard[i]) {
                out[i].in_vehicle_m += d;
                if (load >= 2) out[i].shared_m += d;
            }
        if (load > 0) span += d;
        const auto i = idx(stops[k].order);
        if (stops[k].kind == StopKind::Pickup) {
            if (load == 0) {
                group.clear();
                span = 0.0;
            }
            onboard[i] = 1;
            group.push_back(i);
            ++load;
        } else {
            onboard[i] = 0;
            --load;
            if (load == 0 && group.size() >= 2) {
                double orig = 0.0;
                for (auto g : group) orig += out[g].original_m;
                const double each = (orig - span) / static_cast<double>(group.size());
                for (auto g : group) out[g].saved_m = each;
            }
        }
    }
    for (auto& m : out) m.detour_m = m.in_vehicle_m - m.original_m;
    return out;
}

// --- system metrics ---------------------------------------------------------

// Fleet-level observations collected during a run.
struct FleetHistory {
    std::vector<double> scheduled_means; // mean scheduled customers per vehicle, after each assignment
    double vehicle_m = 0.0;              // all driving: service, deadhead, relocation
    double loaded_m = 0.0;
    std::uint64_t solver_budget_hits = 0;
    struct Sample {
        double time;
        std::vector<NodeId> nodes; // one entry per vehicle
    };
    std::vector<Sample> positions;
};

struct SystemMetrics {
    double revenue = 0.0;
    double service_rate = 0.0;
    double avg_scheduled_requests = 0.0;
    double emission_factor = 0.0; // g CO2 per delivered (original) km
    double mean_matching_time = 0.0;
    double mean_pickup_time = 0.0;
    double mean_waiting_time = 0.0;
    double ssr = 0.0;
    double sdr = 0.0;
    double ddr = 0.0;
    double sdr_mean_of_ratios = 0.0;
    double ddr_mean_of_ratios = 0.0;
    double mean_saved_distance = 0.0; // m per delivered Share customer
    double mean_saved_co2 = 0.0;      // g per delivered Share customer
    std::size_t admitted = 0;
    std::size_t delivered = 0;
    std::size_t abandoned = 0;
    std::size_t share_customers = 0;  // delivered Share choosers
    std::size_t pooled = 0;
    double vehicle_km = 0.0;
    double total_co2_g = 0.0;
    std::uint64_t solver_budget_hits = 0;
};

struct SharingRatios {
    std::size_t customers = 0;
    std::size_t pooled = 0;
    double ssr = 0.0, sdr = 0.0, ddr = 0.0;
    double sdr_mean_of_ratios = 0.0, ddr_mean_of_ratios = 0.0;
};

// SSR/SDR/DDR over delivered Share customers. Ratio-of-sums, with mean-of-ratios alongside.
template <typename Pred>
std::optional<SharingRatios> sharing_ratios(std::span<const TripRecord> records, Pred&& include) {
    SharingRatios s;
    double orig = 0.0, shared = 0.0, detour = 0.0;
    for (const auto& r : records) {
        if (r.outcome != Outcome::Delivered || r.choice != ServiceChoice::Share || !include(r)) continue;
        ++s.customers;
        s.pooled += r.pooled;
        orig += r.original_distance;
        shared += r.shared_distance;
        detour += r.detour_distance;
        s.sdr_mean_of_ratios += r.shared_distance / r.original_distance;
        s.ddr_mean_of_ratios += r.detour_distance / r.original_distance;
    }
    if (s.customers == 0) return std::nullopt;
    const double n = static_cast<double>(s.customers);
    s.ssr = static_cast<double>(s.pooled) / n;
    s.sdr = shared / orig;
    s.ddr = detour / orig;
    s.sdr_mean_of_ratios /= n;
    s.ddr_mean_of_ratios /= n;
    return s;
}

inline SystemMetrics aggregate_metrics(std::span<const TripRecord> records, const FleetHistory& fleet,
                                       const EmissionModel& emission, double speed_mps,
                                       double pooled_trip_subsidy = 0.0) {
    SystemMetrics m;
    double delivered_km = 0.0, match_sum = 0.0, pickup_sum = 0.0, saved_sum = 0.0;
    for (const auto& r : records) {
        ++m.admitted;
        if (r.outcome == Outcome::Abandoned) ++m.abandoned;
        if (r.outcome != Outcome::Delivered) continue;
        ++m.delivered;
        m.revenue += r.fare + (r.pooled ? pooled_trip_subsidy : 0.0);
        delivered_km += r.original_distance / 1000.0;
        match_sum += r.matching_time;
        pickup_sum += r.pickup_time;
        if (r.choice == ServiceChoice::Share) saved_sum += r.saved_distance;
    }
    if (m.admitted) m.service_rate = static_cast<double>(m.delivered) / static_cast<double>(m.admitted);
    if (m.delivered) {
        m.mean_matching_time = match_sum / static_cast<double>(m.delivered);
        m.mean_pickup_time = pickup_sum / static_cast<double>(m.delivered);
        m.mean_waiting_time = m.mean_matching_time + m.mean_pickup_time;
    }
    if (!fleet.scheduled_means.empty()) {
        double s = 0.0;
        for (double x : fleet.scheduled_means) s += x;
        m.avg_scheduled_requests = s / static_cast<double>(fleet.scheduled_means.size());
    }
    m.vehicle_km = fleet.vehicle_m / 1000.0;
    m.total_co2_g = co2_for_leg(emission, fleet.vehicle_m, speed_mps);
    if (delivered_km > 0.0) m.emission_factor = m.total_co2_g / delivered_km;

    if (auto s = sharing_ratios(records, [](const TripRecord&) { return true; })) {
        m.share_customers = s->customers;
        m.pooled = s->pooled;
        m.ssr = s->ssr;
        m.sdr = s->sdr;
        m.ddr = s->ddr;
        m.sdr_mean_of_ratios = s->sdr_mean_of_ratios;
        m.ddr_mean_of_ratios = s->ddr_mean_of_ratios;
        m.mean_saved_distance = saved_sum / static_cast<double>(s->customers);
        m.mean_saved_co2 = co2_for_leg(emission, m.mean_saved_distance, speed_mps);
    }
    m.solver_budget_hits = fleet.solver_budget_hits;
    return m;
}

// --- normalized load and zones ---------------------------------------------

// Demand-to-supply ratio: lambda [1/h] * mean distance [km] / (vehicles * speed [km/h]).
inline double normalized_load(double lambda_per_h, double mean_distance_km, double vehicles, double speed_kmh) {
    if (!(vehicles > 0.0) || !(speed_kmh > 0.0)) throw Error("normalized load needs positive supply");
    return lambda_per_h * mean_distance_km / (vehicles * speed_kmh);
}

enum class ZoneClass { Cold, Normal, Hot };

inline const char* to_string(ZoneClass c) {
    switch (c) {
    case ZoneClass::Cold: return "cold";
    case ZoneClass::Normal: return "normal";
    case ZoneClass::Hot: return "hot";
    }
    return "?";
}

inline ZoneClass classify_zone(double x) {
    if (x < 0.5) return ZoneClass::Cold;
    if (x > 2.0) return ZoneClass::Hot;
    return ZoneClass::Normal;
}

// rows x cols equal lon/lat cells over the network bounding box, times fixed-length slots.
class ZoneGrid {
public:
    ZoneGrid(const RoadNetwork& net, int rows, int cols, double start_s, double slot_s, int slots)
        : net_(&net), rows_(rows), cols_(cols), start_(start_s), slot_s_(slot_s), slots_(slots) {
        if (rows <= 0 || cols <= 0 || slots <= 0 || !(slot_s > 0)) throw Error("invalid zone grid");
        if (net.empty()) throw Error("zone grid over an empty network");
        min_lon_ = max_lon_ = net.nodes().front().lon;
        min_lat_ = max_lat_ = net.nodes().front().lat;
        for (const auto& n : net.nodes()) {
            min_lon_ = std::min(min_lon_, n.lon);
            max_lon_ = std::max(max_lon_, n.lon);
            min_lat_ = std::min(min_lat_, n.lat);
            max_lat_ = std::max(max_lat_, n.lat);
        }
        cell_.resize(net.node_count());
        for (std::uint32_t i = 0; i < net.node_count(); ++i) {
            const auto& n = net.node_at(i);
            cell_[i] = axis(n.lat, min_lat_, max_lat_, rows_) * cols_ + axis(n.lon, min_lon_, max_lon_, cols_);
        }
    }

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    int slots() const noexcept { return slots_; }
    int cells() const noexcept { return rows_ * cols_; }
    double slot_seconds() const noexcept { return slot_s_; }

    int cell_of(NodeId node) const { return cell_[net_->index_of(node)]; }

    // -1 outside the covered period.
    int slot_of(double t) const {
        if (t < start_) return -1;
        const auto s = static_cast<int>(std::floor((t - start_) / slot_s_));
        return s < slots_ ? s : -1;
    }

private:
    static int axis(double v, double lo, double hi, int n) {
        if (!(hi > lo)) return 0;
        const auto k = static_cast<int>(std::floor((v - lo) / (hi - lo) * n));
        return std::clamp(k, 0, n - 1);
    }

    const RoadNetwork* net_;
    int rows_, cols_;
    double start_, slot_s_;
    int slots_;
    double min_lon_, max_lon_, min_lat_, max_lat_;
    std::vector<int> cell_;
};

struct ZoneCell {
    int slot = 0;
    int cell = 0;
    std::size_t orders = 0;
    double lambda_per_h = 0.0;
    double mean_distance_km = 0.0;
    double vehicles = 0.0; // time-averaged count
    double speed_kmh = 0.0;
    double load = 0.0;     // normalized load; +inf when demand meets no supply
    ZoneClass cls = ZoneClass::Cold;
    std::optional<SharingRatios> sharing;
};

// Attributes each order to the cell and slot of its origin at request time; vehicle
// counts are averaged over the position samples falling in the slot.
inline std::vector<ZoneCell> zone_loads(const ZoneGrid& grid, std::span<const TripRecord> records,
                                        const FleetHistory& fleet, double speed_mps) {
    const int n_cells = grid.cells();
    std::vector<ZoneCell> out(static_cast<std::size_t>(grid.slots() * n_cells));
    for (int s = 0; s < grid.slots(); ++s)
        for (int c = 0; c < n_cells; ++c) {
            auto& z = out[static_cast<std::size_t>(s * n_cells + c)];
            z.slot = s;
            z.cell = c;
            z.speed_kmh = speed_mps * 3.6;
        }
    std::vector<double> dist_sum(out.size(), 0.0);
    std::vector<std::vector<const TripRecord*>> members(out.size());
    for (const auto& r : records) {
        const int s = grid.slot_of(r.request_time);
        if (s < 0) continue;
        const auto k = static_cast<std::size_t>(s * n_cells + grid.cell_of(r.origin));
        ++out[k].orders;
        dist_sum[k] += r.original_distance / 1000.0;
        members[k].push_back(&r);
    }
    std::vector<double> veh_sum(out.size(), 0.0);
    std::vector<std::size_t> samples(static_cast<std::size_t>(grid.slots()), 0);
    for (const auto& smp : fleet.positions) {
        const int s = grid.slot_of(smp.time);
        if (s < 0) continue;
        ++samples[static_cast<std::size_t>(s)];
        for (auto node : smp.nodes) veh_sum[static_cast<std::size_t>(s * n_cells + grid.cell_of(node))] += 1.0;
    }
    const double hours = grid.slot_seconds() / 3600.0;
    for (std::size_t k = 0; k < out.size(); ++k) {
        auto& z = out[k];
        const auto ns = samples[static_cast<std::size_t>(z.slot)];
        z.vehicles = ns ? veh_sum[k] / static_cast<double>(ns) : 0.0;
        z.lambda_per_h = static_cast<double>(z.orders) / hours;
        z.mean_distance_km = z.orders ? dist_sum[k] / static_cast<double>(z.orders) : 0.0;
        if (z.orders == 0) z.load = 0.0;
        else if (z.vehicles > 0.0) z.load = normalized_load(z.lambda_per_h, z.mean_distance_km, z.vehicles, z.speed_kmh);
        else z.load = std::numeric_limits<double>::infinity();
        z.cls = classify_zone(z.load);
        std::vector<TripRecord> rs;
        for (auto* r : members[k]) rs.push_back(*r);
        z.sharing = sharing_ratios(std::span<const TripRecord>(rs), [](const TripRecord&) { return true; });
    }
    return out;
}

// SSR/SDR/DDR per zone class; a class with no delivered Share customers is absent.
inline std::array<std::optional<SharingRatios>, 3> zone_stats(const ZoneGrid& grid,
                                                              std::span<const TripRecord> records,
                                                              std::span<const ZoneCell> cells) {
    std::array<std::optional<SharingRatios>, 3> out;
    const int n_cells = grid.cells();
    for (int c = 0; c < 3; ++c) {
        const auto want = static_cast<ZoneClass>(c);
        out[static_cast<std::size_t>(c)] = sharing_ratios(records, [&](const TripRecord& r) {
            const int s = grid.slot_of(r.request_time);
            if (s < 0) return false;
            return cells[static_cast<std::size_t>(s * n_cells + grid.cell_of(r.origin))].cls == want;
        });
    }
    return out;
}

} // namespace ridesim
