#pragma once

// Road network, routing, and along-route positioning.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ridesim/csv.hpp"
#include "ridesim/errors.hpp"

namespace ridesim {

using NodeId = std::int64_t;

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();
inline constexpr double kEarthRadiusM = 6371008.8;

struct Node {
    NodeId id;
    double lon;
    double lat;
};

struct Edge {
    NodeId from;
    NodeId to;
    double length_m;
};

struct LonLat {
    double lon;
    double lat;
};

inline double haversine_m(LonLat a, LonLat b) {
    constexpr double deg = 3.14159265358979323846 / 180.0;
    const double dlat = (b.lat - a.lat) * deg;
    const double dlon = (b.lon - a.lon) * deg;
    const double s1 = std::sin(dlat / 2);
    const double s2 = std::sin(dlon / 2);
    const double h = s1 * s1 + std::cos(a.lat * deg) * std::cos(b.lat * deg) * s2 * s2;
    return 2.0 * kEarthRadiusM * std::asin(std::sqrt(std::min(1.0, h)));
}

// Directed weighted graph, immutable after construction.
class RoadNetwork {
public:
    struct Arc {
        std::uint32_t to;
        double length_m;
    };

    RoadNetwork() = default;

    RoadNetwork(std::vector<Node> nodes, std::vector<Edge> edges)
        : nodes_(std::move(nodes)), edges_(std::move(edges)) {
        index_.reserve(nodes_.size());
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            if (!index_.emplace(nodes_[i].id, static_cast<std::uint32_t>(i)).second)
                throw Error("duplicate node id " + std::to_string(nodes_[i].id));
        }
        adjacency_.assign(nodes_.size(), {});
        for (const auto& e : edges_) {
            auto f = index_.find(e.from);
            auto t = index_.find(e.to);
            if (f == index_.end() || t == index_.end())
                throw Error("edge " + std::to_string(e.from) + "->" + std::to_string(e.to) +
                            " references an undefined node");
            if (!(e.length_m > 0.0) || !std::isfinite(e.length_m))
                throw Error("edge " + std::to_string(e.from) + "->" + std::to_string(e.to) +
                            " has non-positive length");
            adjacency_[f->second].push_back({t->second, e.length_m});
        }
        // Parallel edges: keep all, but order arcs by target id so iteration is stable.
        for (auto& arcs : adjacency_)
            std::stable_sort(arcs.begin(), arcs.end(), [&](const Arc& a, const Arc& b) {
                return nodes_[a.to].id < nodes_[b.to].id;
            });
        by_lat_.resize(nodes_.size());
        for (std::uint32_t i = 0; i < nodes_.size(); ++i) by_lat_[i] = i;
        std::sort(by_lat_.begin(), by_lat_.end(), [&](std::uint32_t a, std::uint32_t b) {
            return std::tie(nodes_[a].lat, nodes_[a].id) < std::tie(nodes_[b].lat, nodes_[b].id);
        });
    }

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    bool empty() const noexcept { return nodes_.empty(); }

    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }

    bool contains(NodeId id) const { return index_.count(id) != 0; }

    std::uint32_t index_of(NodeId id) const {
        auto it = index_.find(id);
        if (it == index_.end()) throw Error("unknown node id " + std::to_string(id));
        return it->second;
    }

    const Node& node_at(std::uint32_t idx) const { return nodes_[idx]; }
    const Node& node(NodeId id) const { return nodes_[index_of(id)]; }

    std::span<const Arc> arcs(std::uint32_t idx) const { return adjacency_[idx]; }

    // Shortest direct edge length from -> to, or kUnreachable when there is no such edge.
    double edge_length(NodeId from, NodeId to) const {
        const auto t = index_of(to);
        double best = kUnreachable;
        for (const auto& a : adjacency_[index_of(from)])
            if (a.to == t) best = std::min(best, a.length_m);
        return best;
    }

    // Node indices sorted by (lat, id). Used by the nearest-node sweep.
    const std::vector<std::uint32_t>& by_latitude() const noexcept { return by_lat_; }

private:
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::unordered_map<NodeId, std::uint32_t> index_;
    std::vector<std::vector<Arc>> adjacency_;
    std::vector<std::uint32_t> by_lat_;
};

inline RoadNetwork load_network(const std::string& nodes_path, const std::string& edges_path) {
    std::vector<Node> nodes;
    for (const auto& row : csv::read(nodes_path, {"node_id", "lon", "lat"})) {
        auto id = csv::to_int(row.fields[0]);
        auto lon = csv::to_double(row.fields[1]);
        auto lat = csv::to_double(row.fields[2]);
        if (!id || !lon || !lat) throw ParseError(nodes_path, row.line, "malformed node record");
        nodes.push_back({*id, *lon, *lat});
    }
    std::unordered_map<NodeId, bool> known;
    for (const auto& n : nodes)
        if (!known.emplace(n.id, true).second)
            throw ParseError(nodes_path, 0, "duplicate node id " + std::to_string(n.id));

    std::vector<Edge> edges;
    for (const auto& row : csv::read(edges_path, {"from_id", "to_id", "length_m"})) {
        auto from = csv::to_int(row.fields[0]);
        auto to = csv::to_int(row.fields[1]);
        auto len = csv::to_double(row.fields[2]);
        if (!from || !to || !len) throw ParseError(edges_path, row.line, "malformed edge record");
        if (!known.count(*from) || !known.count(*to))
            throw ParseError(edges_path, row.line, "dangling edge endpoint");
        if (!(*len > 0.0)) throw ParseError(edges_path, row.line, "non-positive edge length");
        edges.push_back({*from, *to, *len});
    }
    return RoadNetwork(std::move(nodes), std::move(edges));
}

// Directory form: expects nodes.csv and edges.csv inside `dir`.
inline RoadNetwork load_network(const std::filesystem::path& dir) {
    return load_network((dir / "nodes.csv").string(), (dir / "edges.csv").string());
}

// rows x cols lattice with two-way links of `spacing_m`. Node ids are row-major from 0.
inline RoadNetwork make_grid_network(int rows, int cols, double spacing_m,
                                     LonLat origin = {104.0, 30.6}) {
    if (rows <= 0 || cols <= 0 || !(spacing_m > 0))
        throw Error("grid network needs positive dimensions and spacing");
    constexpr double deg = 3.14159265358979323846 / 180.0;
    const double dlat = spacing_m / (kEarthRadiusM * deg);
    const double dlon = dlat / std::cos(origin.lat * deg);
    std::vector<Node> nodes;
    std::vector<Edge> edges;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            nodes.push_back({NodeId{r} * cols + c, origin.lon + c * dlon, origin.lat + r * dlat});
    auto id = [cols](int r, int c) { return NodeId{r} * cols + c; };
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            if (c + 1 < cols) {
                edges.push_back({id(r, c), id(r, c + 1), spacing_m});
                edges.push_back({id(r, c + 1), id(r, c), spacing_m});
            }
            if (r + 1 < rows) {
                edges.push_back({id(r, c), id(r + 1, c), spacing_m});
                edges.push_back({id(r + 1, c), id(r, c), spacing_m});
            }
        }
    return RoadNetwork(std::move(nodes), std::move(edges));
}

// Nearest node by great-circle distance, ties to the smallest id.
// Sweeps outward in latitude order; great-circle distance is bounded below by the
// meridian distance, so the sweep stops once that bound exceeds the best hit.
inline NodeId snap_to_node(const RoadNetwork& net, LonLat coord) {
    if (net.empty()) throw Error("cannot snap to an empty network");
    constexpr double deg = 3.14159265358979323846 / 180.0;
    const auto& order = net.by_latitude();
    auto it = std::lower_bound(order.begin(), order.end(), coord.lat,
                               [&](std::uint32_t i, double lat) { return net.node_at(i).lat < lat; });
    const auto start = static_cast<std::ptrdiff_t>(it - order.begin());

    double best = kUnreachable;
    NodeId best_id = 0;
    auto consider = [&](std::uint32_t i) {
        const auto& n = net.node_at(i);
        const double d = haversine_m(coord, {n.lon, n.lat});
        if (d < best || (d == best && n.id < best_id)) {
            best = d;
            best_id = n.id;
        }
    };
    auto out_of_reach = [&](std::uint32_t i) {
        const double bound = kEarthRadiusM * std::abs(net.node_at(i).lat - coord.lat) * deg;
        return bound > best * (1 + 1e-12) + 1e-9;
    };
    const auto n = static_cast<std::ptrdiff_t>(order.size());
    std::ptrdiff_t up = start, down = start - 1;
    bool up_open = up < n, down_open = down >= 0;
    while (up_open || down_open) {
        if (up_open) {
            if (out_of_reach(order[up])) up_open = false;
            else {
                consider(order[up]);
                up_open = ++up < n;
            }
        }
        if (down_open) {
            if (out_of_reach(order[down])) down_open = false;
            else {
                consider(order[down]);
                down_open = --down >= 0;
            }
        }
    }
    return best_id;
}

struct PathResult {
    double distance = 0.0;
    std::vector<NodeId> nodes;
};

// Single-source shortest-path tree over node indices.
struct ShortestPathTree {
    std::uint32_t source;
    std::vector<double> dist;
    std::vector<std::int64_t> pred; // -1 for source / unreached

    static ShortestPathTree build(const RoadNetwork& net, std::uint32_t source) {
        const auto n = net.node_count();
        ShortestPathTree t{source, std::vector<double>(n, kUnreachable),
                           std::vector<std::int64_t>(n, -1)};
        std::vector<char> settled(n, 0);
        using Item = std::tuple<double, NodeId, std::uint32_t>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        t.dist[source] = 0.0;
        pq.emplace(0.0, net.node_at(source).id, source);
        while (!pq.empty()) {
            auto [d, id, u] = pq.top();
            pq.pop();
            if (settled[u]) continue;
            settled[u] = 1;
            for (const auto& a : net.arcs(u)) {
                const double nd = d + a.length_m;
                if (nd < t.dist[a.to]) {
                    t.dist[a.to] = nd;
                    t.pred[a.to] = u;
                    pq.emplace(nd, net.node_at(a.to).id, a.to);
                } else if (nd == t.dist[a.to] && !settled[a.to] &&
                           id < net.node_at(static_cast<std::uint32_t>(t.pred[a.to])).id) {
                    t.pred[a.to] = u;
                }
            }
        }
        return t;
    }

    std::optional<PathResult> path_to(const RoadNetwork& net, std::uint32_t target) const {
        if (dist[target] == kUnreachable) return std::nullopt;
        PathResult r;
        r.distance = dist[target];
        for (std::int64_t v = target; v != -1; v = pred[static_cast<std::size_t>(v)])
            r.nodes.push_back(net.node_at(static_cast<std::uint32_t>(v)).id);
        std::reverse(r.nodes.begin(), r.nodes.end());
        return r;
    }
};

inline std::optional<PathResult> shortest_path(const RoadNetwork& net, NodeId source, NodeId target) {
    const auto s = net.index_of(source);
    const auto t = net.index_of(target);
    if (s == t) return PathResult{0.0, {source}};
    return ShortestPathTree::build(net, s).path_to(net, t);
}

// Shortest-path queries with an LRU memo of per-source trees. Thread-safe.
class Router {
public:
    explicit Router(const RoadNetwork& net, std::size_t capacity = 4096)
        : net_(&net), capacity_(std::max<std::size_t>(1, capacity)) {}

    const RoadNetwork& network() const noexcept { return *net_; }

    std::shared_ptr<const ShortestPathTree> tree(NodeId source) const {
        return tree_at(net_->index_of(source));
    }

    double distance(NodeId source, NodeId target) const {
        if (source == target) {
            net_->index_of(source);
            return 0.0;
        }
        const auto t = net_->index_of(target);
        return tree(source)->dist[t];
    }

    std::optional<PathResult> path(NodeId source, NodeId target) const {
        const auto t = net_->index_of(target);
        if (source == target) {
            net_->index_of(source);
            return PathResult{0.0, {source}};
        }
        return tree(source)->path_to(*net_, t);
    }

    std::size_t cached_trees() const {
        std::lock_guard lock(mu_);
        return lru_.size();
    }

private:
    using Entry = std::pair<std::uint32_t, std::shared_ptr<const ShortestPathTree>>;

    std::shared_ptr<const ShortestPathTree> tree_at(std::uint32_t s) const {
        {
            std::lock_guard lock(mu_);
            if (auto it = slots_.find(s); it != slots_.end()) {
                lru_.splice(lru_.begin(), lru_, it->second);
                return it->second->second;
            }
        }
        auto built = std::make_shared<const ShortestPathTree>(ShortestPathTree::build(*net_, s));
        std::lock_guard lock(mu_);
        if (auto it = slots_.find(s); it != slots_.end()) return it->second->second;
        lru_.emplace_front(s, built);
        slots_[s] = lru_.begin();
        if (lru_.size() > capacity_) {
            slots_.erase(lru_.back().first);
            lru_.pop_back();
        }
        return built;
    }

    const RoadNetwork* net_;
    std::size_t capacity_;
    mutable std::mutex mu_;
    mutable std::list<Entry> lru_;
    mutable std::unordered_map<std::uint32_t, std::list<Entry>::iterator> slots_;
};

struct RoutePosition {
    NodeId node;
    double meters;
};

// Constant-speed position along a route; saturates at the route end.
inline RoutePosition position_along_route(const RoadNetwork& net, const PathResult& route,
                                          double elapsed_s, double speed_mps) {
    if (route.nodes.empty()) throw Error("empty route");
    const double traveled = std::min(std::max(0.0, elapsed_s) * speed_mps, route.distance);
    if (traveled >= route.distance) return {route.nodes.back(), route.distance};
    double cum = 0.0;
    NodeId current = route.nodes.front();
    for (std::size_t i = 0; i + 1 < route.nodes.size(); ++i) {
        cum += net.edge_length(route.nodes[i], route.nodes[i + 1]);
        if (cum > traveled) break;
        current = route.nodes[i + 1];
    }
    return {current, traveled};
}

} // namespace ridesim
