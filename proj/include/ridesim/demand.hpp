#pragma once

// Orders, demand generation, and the discount/detour acceptance model.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cctype>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "ridesim/csv.hpp"
#include "ridesim/errors.hpp"
#include "ridesim/netgraph.hpp"
#include "ridesim/rng.hpp"

namespace ridesim {

using OrderId = std::int64_t;

struct Order {
    OrderId id = 0;
    NodeId origin = 0;
    NodeId destination = 0;
    double request_time = 0.0;  // seconds from simulation day start
    double trip_distance = 0.0; // meters, shortest origin -> destination
};

enum class ServiceChoice { Solo, Share };

inline const char* to_string(ServiceChoice c) { return c == ServiceChoice::Solo ? "solo" : "share"; }

inline void sort_orders(std::vector<Order>& orders) {
    std::stable_sort(orders.begin(), orders.end(), [](const Order& a, const Order& b) {
        return a.request_time < b.request_time || (a.request_time == b.request_time && a.id < b.id);
    });
}

// --- timestamps -------------------------------------------------------------

struct WallClock {
    std::int64_t day;    // days since 1970-01-01 of the wall-clock date
    double second;       // seconds into that day
};

// Parses "YYYY-MM-DD[T ]HH:MM:SS[.fff][Z|+HH:MM|-HH:MM]". The wall-clock time as
// written is returned; a UTC offset is validated but not applied.
inline std::optional<WallClock> parse_iso8601(std::string_view s) {
    s = csv::trim(s);
    int y, mo, d, h, mi;
    char sep;
    int consumed = 0;
    std::string buf(s);
    if (std::sscanf(buf.c_str(), "%4d-%2d-%2d%c%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi, &consumed) != 6)
        return std::nullopt;
    if (sep != 'T' && sep != ' ') return std::nullopt;
    std::string_view rest = s.substr(static_cast<std::size_t>(consumed));
    double sec = 0.0;
    if (!rest.empty() && rest.front() == ':') {
        rest.remove_prefix(1);
        std::size_t n = 0;
        while (n < rest.size() && (std::isdigit(static_cast<unsigned char>(rest[n])) || rest[n] == '.')) ++n;
        auto v = csv::to_double(rest.substr(0, n));
        if (!v) return std::nullopt;
        sec = *v;
        rest.remove_prefix(n);
    }
    if (!rest.empty()) {
        if (rest == "Z") {
        } else if ((rest.front() == '+' || rest.front() == '-') && rest.size() == 6 && rest[3] == ':') {
            if (!csv::to_int(rest.substr(1, 2)) || !csv::to_int(rest.substr(4, 2))) return std::nullopt;
        } else {
            return std::nullopt;
        }
    }
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 || sec >= 61) return std::nullopt;
    return WallClock{sys_days{ymd}.time_since_epoch().count(), h * 3600.0 + mi * 60.0 + sec};
}

// --- ingestion --------------------------------------------------------------

struct IngestResult {
    std::vector<Order> orders;
    std::size_t sampled_out = 0;
    std::size_t dropped_zero_distance = 0;
    std::size_t dropped_unreachable = 0;
};

// Reads orders.csv, Bernoulli-samples records, snaps endpoints to nodes and routes them.
// request_time is measured from midnight of the earliest date in the file.
inline IngestResult ingest_orders(const std::string& path, const Router& router,
                                  double sample_fraction, Rng& rng) {
    if (!(sample_fraction > 0.0 && sample_fraction <= 1.0))
        throw ConfigError("sample_fraction must be in (0, 1]");
    const auto& net = router.network();
    const auto rows = csv::read(path, {"order_id", "origin_lon", "origin_lat", "dest_lon",
                                       "dest_lat", "request_time_iso8601"});
    if (rows.empty()) throw ParseError(path, 0, "no order records");

    struct Raw {
        OrderId id;
        LonLat o, d;
        WallClock t;
    };
    std::vector<Raw> raw;
    raw.reserve(rows.size());
    std::int64_t first_day = std::numeric_limits<std::int64_t>::max();
    for (const auto& row : rows) {
        auto id = csv::to_int(row.fields[0]);
        auto olon = csv::to_double(row.fields[1]);
        auto olat = csv::to_double(row.fields[2]);
        auto dlon = csv::to_double(row.fields[3]);
        auto dlat = csv::to_double(row.fields[4]);
        if (!id || !olon || !olat || !dlon || !dlat)
            throw ParseError(path, row.line, "malformed order record");
        auto t = parse_iso8601(row.fields[5]);
        if (!t) throw ParseError(path, row.line, "unparsable timestamp '" + row.fields[5] + "'");
        raw.push_back({*id, {*olon, *olat}, {*dlon, *dlat}, *t});
        first_day = std::min(first_day, t->day);
    }

    IngestResult out;
    for (const auto& r : raw) {
        // One draw per record, in file order, regardless of validity.
        if (rng.uniform() >= sample_fraction) {
            ++out.sampled_out;
            continue;
        }
        Order o;
        o.id = r.id;
        o.origin = snap_to_node(net, r.o);
        o.destination = snap_to_node(net, r.d);
        o.request_time = static_cast<double>(r.t.day - first_day) * 86400.0 + r.t.second;
        if (o.origin == o.destination) {
            ++out.dropped_zero_distance;
            continue;
        }
        o.trip_distance = router.distance(o.origin, o.destination);
        if (o.trip_distance == kUnreachable) {
            ++out.dropped_unreachable;
            continue;
        }
        out.orders.push_back(o);
    }
    sort_orders(out.orders);
    return out;
}

// --- synthetic demand -------------------------------------------------------

struct SyntheticDemandSpec {
    double start_s = 0.0;
    double horizon_s = 3600.0;
    double rate_per_h = 0.0;
    std::vector<double> node_weights; // aligned with network.nodes()
    double min_distance_m = 0.0;
    double max_distance_m = kUnreachable;
};

inline void validate_weights(const RoadNetwork& net, const std::vector<double>& w) {
    if (w.size() != net.node_count())
        throw ConfigError("node weights: expected " + std::to_string(net.node_count()) +
                          " entries, got " + std::to_string(w.size()));
    double sum = 0.0;
    for (double x : w) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw ConfigError("node weights must be non-negative");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw ConfigError("node weights must sum to 1");
}

inline std::vector<double> uniform_weights(const RoadNetwork& net) {
    return std::vector<double>(net.node_count(), 1.0 / static_cast<double>(net.node_count()));
}

// Gaussian bumps over a uniform floor, normalized. Each bump is (center, sigma_m, mass).
struct WeightBump {
    NodeId center;
    double sigma_m;
    double mass;
};

inline std::vector<double> bump_weights(const RoadNetwork& net, const std::vector<WeightBump>& bumps,
                                        double floor_mass) {
    std::vector<double> w(net.node_count(), floor_mass / static_cast<double>(net.node_count()));
    for (const auto& b : bumps) {
        const auto& c = net.node(b.center);
        std::vector<double> k(net.node_count());
        double total = 0.0;
        for (std::size_t i = 0; i < k.size(); ++i) {
            const auto& n = net.nodes()[i];
            const double d = haversine_m({c.lon, c.lat}, {n.lon, n.lat});
            k[i] = std::exp(-0.5 * (d / b.sigma_m) * (d / b.sigma_m));
            total += k[i];
        }
        for (std::size_t i = 0; i < k.size(); ++i) w[i] += b.mass * k[i] / total;
    }
    double sum = 0.0;
    for (double x : w) sum += x;
    for (double& x : w) x /= sum;
    return w;
}

inline std::vector<Order> generate_synthetic_orders(const SyntheticDemandSpec& spec,
                                                    const Router& router, Rng& rng) {
    const auto& net = router.network();
    if (!(spec.rate_per_h >= 0.0)) throw ConfigError("arrival rate must be non-negative");
    validate_weights(net, spec.node_weights);
    std::vector<double> cum(spec.node_weights.size());
    double acc = 0.0;
    std::size_t positive = 0;
    for (std::size_t i = 0; i < cum.size(); ++i) {
        acc += spec.node_weights[i];
        cum[i] = acc;
        positive += spec.node_weights[i] > 0.0;
    }
    if (positive < 2) throw ConfigError("node weights need at least two nodes with positive mass");

    std::vector<Order> out;
    if (spec.rate_per_h == 0.0) return out;
    const double rate_per_s = spec.rate_per_h / 3600.0;
    double t = spec.start_s;
    const double end = spec.start_s + spec.horizon_s;
    OrderId next_id = 0;
    for (;;) {
        t += rng.exponential(rate_per_s);
        if (t >= end) break;
        Order o;
        o.id = next_id++;
        o.request_time = t;
        bool found = false;
        for (int attempt = 0; attempt < 10000 && !found; ++attempt) {
            o.origin = net.nodes()[rng.categorical(cum)].id;
            do {
                o.destination = net.nodes()[rng.categorical(cum)].id;
            } while (o.destination == o.origin);
            o.trip_distance = router.distance(o.origin, o.destination);
            found = o.trip_distance != kUnreachable && o.trip_distance >= spec.min_distance_m &&
                    o.trip_distance <= spec.max_distance_m;
        }
        if (!found) throw ConfigError("distance filter rejects every sampled origin/destination pair");
        out.push_back(o);
    }
    return out;
}

// --- acceptance model -------------------------------------------------------

// Share-acceptance probability over (guaranteed detour ratio, discount ratio).
class ElasticityTable {
public:
    ElasticityTable(std::vector<double> detours, std::vector<double> discounts,
                    std::vector<std::vector<double>> acceptance)
        : detours_(std::move(detours)), discounts_(std::move(discounts)), p_(std::move(acceptance)) {
        if (detours_.empty() || discounts_.empty()) throw Error("elasticity table is empty");
        if (!std::is_sorted(detours_.begin(), detours_.end()) ||
            std::adjacent_find(detours_.begin(), detours_.end()) != detours_.end() ||
            !std::is_sorted(discounts_.begin(), discounts_.end()) ||
            std::adjacent_find(discounts_.begin(), discounts_.end()) != discounts_.end())
            throw Error("elasticity grid axes must be strictly increasing");
        if (discounts_.front() != 0.0) throw Error("elasticity grid must include discount 0");
        if (p_.size() != detours_.size()) throw Error("elasticity table shape mismatch");
        for (const auto& row : p_) {
            if (row.size() != discounts_.size()) throw Error("elasticity table shape mismatch");
            if (row.front() != 0.0) throw Error("acceptance at discount 0 must be 0");
            for (std::size_t j = 0; j < row.size(); ++j) {
                if (!(row[j] >= 0.0 && row[j] <= 1.0)) throw Error("acceptance outside [0,1]");
                if (j > 0 && row[j] < row[j - 1])
                    throw Error("acceptance must be non-decreasing in discount");
            }
        }
    }

    const std::vector<double>& detour_grid() const noexcept { return detours_; }
    const std::vector<double>& discount_grid() const noexcept { return discounts_; }
    double at(std::size_t detour_idx, std::size_t discount_idx) const { return p_[detour_idx][discount_idx]; }

    // Calibrated default. Anchors: (0.10, 0.05) <= 0.10, (0.10, 0.15) ~ 0.60, (0.50, 0.50) <= 0.30.
    static ElasticityTable default_table() {
        return ElasticityTable({0.10, 0.20, 0.30, 0.40, 0.50},
                               {0.00, 0.05, 0.10, 0.15, 0.20, 0.30, 0.40, 0.50},
                               {
                                   {0.00, 0.08, 0.35, 0.60, 0.72, 0.82, 0.88, 0.92},
                                   {0.00, 0.05, 0.22, 0.42, 0.55, 0.68, 0.76, 0.82},
                                   {0.00, 0.03, 0.12, 0.25, 0.36, 0.48, 0.57, 0.64},
                                   {0.00, 0.02, 0.06, 0.12, 0.18, 0.26, 0.34, 0.42},
                                   {0.00, 0.01, 0.03, 0.06, 0.10, 0.16, 0.22, 0.28},
                               });
    }

    // elasticity.csv: detour_ratio,discount_ratio,acceptance_prob over a full grid.
    static ElasticityTable load(const std::string& path) {
        std::map<double, std::map<double, double>> cells;
        std::vector<double> discounts;
        for (const auto& row : csv::read(path, {"detour_ratio", "discount_ratio", "acceptance_prob"})) {
            auto dr = csv::to_double(row.fields[0]);
            auto dc = csv::to_double(row.fields[1]);
            auto p = csv::to_double(row.fields[2]);
            if (!dr || !dc || !p) throw ParseError(path, row.line, "malformed elasticity record");
            if (!cells[*dr].emplace(*dc, *p).second)
                throw ParseError(path, row.line, "duplicate grid cell");
            discounts.push_back(*dc);
        }
        if (cells.empty()) throw ParseError(path, 0, "no elasticity records");
        std::sort(discounts.begin(), discounts.end());
        discounts.erase(std::unique(discounts.begin(), discounts.end()), discounts.end());
        std::vector<double> detours;
        std::vector<std::vector<double>> p;
        for (const auto& [dr, row] : cells) {
            if (row.size() != discounts.size())
                throw ParseError(path, 0, "grid is incomplete for detour ratio " + std::to_string(dr));
            detours.push_back(dr);
            std::vector<double> r;
            for (const auto& [dc, v] : row) r.push_back(v);
            p.push_back(std::move(r));
        }
        try {
            return ElasticityTable(std::move(detours), std::move(discounts), std::move(p));
        } catch (const Error& e) {
            throw ParseError(path, 0, e.what());
        }
    }

private:
    std::vector<double> detours_;
    std::vector<double> discounts_;
    std::vector<std::vector<double>> p_;
};

namespace detail {
// Bracketing index and weight for x on a sorted axis, clamped at both ends.
inline std::pair<std::size_t, double> bracket(const std::vector<double>& axis, double x) {
    if (axis.size() == 1 || x <= axis.front()) return {0, 0.0};
    if (x >= axis.back()) return {axis.size() - 2, 1.0};
    auto it = std::upper_bound(axis.begin(), axis.end(), x);
    const auto hi = static_cast<std::size_t>(it - axis.begin());
    const auto lo = hi - 1;
    return {lo, (x - axis[lo]) / (axis[hi] - axis[lo])};
}
} // namespace detail

// Bilinear interpolation on the grid, clamped outside it. Zero discount means no takers.
inline double acceptance_probability(const ElasticityTable& table, double detour, double discount) {
    if (discount <= 0.0) return 0.0;
    const auto& dr = table.detour_grid();
    const auto& dc = table.discount_grid();
    auto [i, wi] = detail::bracket(dr, detour);
    auto [j, wj] = detail::bracket(dc, discount);
    auto cell = [&](std::size_t a, std::size_t b) {
        return table.at(std::min(a, dr.size() - 1), std::min(b, dc.size() - 1));
    };
    const double p0 = (1 - wj) * cell(i, j) + wj * cell(i, j + 1);
    const double p1 = (1 - wj) * cell(i + 1, j) + wj * cell(i + 1, j + 1);
    return std::clamp((1 - wi) * p0 + wi * p1, 0.0, 1.0);
}

// One draw per call; Share with probability p_accept.
inline ServiceChoice choose_service(double p_accept, Rng& rng) {
    return rng.uniform() < p_accept ? ServiceChoice::Share : ServiceChoice::Solo;
}

} // namespace ridesim
