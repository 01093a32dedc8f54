#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "ridesim/netgraph.hpp"

using namespace ridesim;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    auto d = fs::temp_directory_path() / ("ridesim_netgraph_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

// Random directed graph; lengths are small integers so path sums are exact.
RoadNetwork random_graph(std::mt19937_64& rng, int n, double density) {
    std::uniform_real_distribution<double> coord(0.0, 0.05);
    std::uniform_int_distribution<int> len(1, 20);
    std::bernoulli_distribution arc(density);
    std::vector<Node> nodes;
    for (int i = 0; i < n; ++i) nodes.push_back({i * 3 + 1, 104.0 + coord(rng), 30.6 + coord(rng)});
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && arc(rng)) edges.push_back({nodes[i].id, nodes[j].id, double(len(rng))});
    return RoadNetwork(nodes, edges);
}

std::vector<std::vector<double>> floyd_warshall(const RoadNetwork& net) {
    const auto n = net.node_count();
    std::vector<std::vector<double>> d(n, std::vector<double>(n, kUnreachable));
    for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
    for (const auto& e : net.edges()) {
        auto& x = d[net.index_of(e.from)][net.index_of(e.to)];
        x = std::min(x, e.length_m);
    }
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
    return d;
}

NodeId linear_nearest(const RoadNetwork& net, LonLat c) {
    double best = kUnreachable;
    NodeId id = 0;
    for (const auto& n : net.nodes()) {
        const double d = haversine_m(c, {n.lon, n.lat});
        if (d < best || (d == best && n.id < id)) {
            best = d;
            id = n.id;
        }
    }
    return id;
}

RoadNetwork line3() {
    // A=1 -> B=2 (3 m), B -> C=3 (4 m), A -> C (10 m)
    return RoadNetwork({{1, 104.0, 30.0}, {2, 104.001, 30.0}, {3, 104.002, 30.0}},
                       {{1, 2, 3.0}, {2, 3, 4.0}, {1, 3, 10.0}});
}

} // namespace

TEST(LoadNetwork, MinimalFile) {
    auto d = scratch_dir("minimal");
    write(d / "nodes.csv", "node_id,lon,lat\n1,104.0,30.0\n2,104.001,30.0\n");
    write(d / "edges.csv", "from_id,to_id,length_m\n1,2,100\n");
    auto net = load_network(d);
    EXPECT_EQ(net.node_count(), 2u);
    EXPECT_EQ(net.edge_count(), 1u);
    EXPECT_EQ(net.edge_length(1, 2), 100.0);
    EXPECT_EQ(net.edge_length(2, 1), kUnreachable);
}

TEST(LoadNetwork, DanglingEndpointIsRejected) {
    auto d = scratch_dir("dangling");
    write(d / "nodes.csv", "node_id,lon,lat\n1,104.0,30.0\n2,104.001,30.0\n");
    write(d / "edges.csv", "from_id,to_id,length_m\n1,9,100\n");
    EXPECT_THROW(load_network(d), Error);
}

TEST(LoadNetwork, NonPositiveLengthIsRejected) {
    auto d = scratch_dir("zero_len");
    write(d / "nodes.csv", "node_id,lon,lat\n1,104.0,30.0\n2,104.001,30.0\n");
    write(d / "edges.csv", "from_id,to_id,length_m\n1,2,0\n");
    EXPECT_THROW(load_network(d), Error);
}

TEST(LoadNetwork, ParseErrorCarriesLineNumber) {
    auto d = scratch_dir("bad_line");
    write(d / "nodes.csv", "node_id,lon,lat\n1,104.0,30.0\n2,abc,30.0\n");
    write(d / "edges.csv", "from_id,to_id,length_m\n1,2,5\n");
    try {
        load_network(d);
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(LoadNetwork, GridFileCountsMatchLines) {
    auto d = scratch_dir("grid4");
    write(d / "nodes.csv", "node_id,lon,lat\n0,104.0,30.0\n1,104.001,30.0\n2,104.0,30.001\n3,104.001,30.001\n");
    write(d / "edges.csv",
          "from_id,to_id,length_m\n0,1,96\n1,0,96\n0,2,111\n2,0,111\n1,3,111\n3,1,111\n2,3,96\n3,2,96\n");
    auto net = load_network(d);
    EXPECT_EQ(net.node_count(), 4u);
    EXPECT_EQ(net.edge_count(), 8u);
}

TEST(LoadNetwork, SampleCityLoads) {
    const fs::path dir = fs::path(RIDESIM_SOURCE_DIR) / "data" / "sample_city";
    auto net = load_network(dir);
    EXPECT_EQ(net.node_count(), 36u);
    EXPECT_EQ(net.edge_count(), 120u);
}

TEST(Snap, ExactNodeAndTieBreak) {
    RoadNetwork net({{7, 104.5, 30.0}, {3, 104.0, 30.0}, {5, 105.0, 31.0}}, {});
    EXPECT_EQ(snap_to_node(net, {105.0, 31.0}), 5);
    // Midpoint of 3 and 7 on the same parallel; dyadic values keep the tie exact.
    EXPECT_EQ(snap_to_node(net, {104.25, 30.0}), 3);
}

TEST(Snap, EmptyNetworkThrows) {
    RoadNetwork net;
    EXPECT_THROW(snap_to_node(net, {0, 0}), Error);
}

TEST(Snap, MatchesLinearScan) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-0.01, 0.06);
    for (int g = 0; g < 10; ++g) {
        auto net = random_graph(rng, 40, 0.05);
        for (int q = 0; q < 200; ++q) {
            LonLat c{104.0 + u(rng), 30.6 + u(rng)};
            ASSERT_EQ(snap_to_node(net, c), linear_nearest(net, c));
        }
    }
    // Grid nodes give many exact ties.
    auto grid = make_grid_network(6, 6, 250.0);
    for (const auto& a : grid.nodes())
        for (const auto& b : grid.nodes()) {
            LonLat mid{(a.lon + b.lon) / 2, (a.lat + b.lat) / 2};
            ASSERT_EQ(snap_to_node(grid, mid), linear_nearest(grid, mid));
        }
}

TEST(ShortestPath, Identity) {
    auto net = line3();
    auto p = shortest_path(net, 2, 2);
    ASSERT_TRUE(p);
    EXPECT_EQ(p->distance, 0.0);
    EXPECT_EQ(p->nodes, std::vector<NodeId>{2});
}

TEST(ShortestPath, ViaIntermediate) {
    auto net = line3();
    auto p = shortest_path(net, 1, 3);
    ASSERT_TRUE(p);
    EXPECT_EQ(p->distance, 7.0);
    EXPECT_EQ(p->nodes, (std::vector<NodeId>{1, 2, 3}));
}

TEST(ShortestPath, UnreachableAndUnknown) {
    auto net = line3();
    EXPECT_FALSE(shortest_path(net, 3, 1));
    EXPECT_THROW(shortest_path(net, 1, 42), Error);
}

TEST(ShortestPath, TiesPreferSmallerPredecessor) {
    // 1 -> {2, 3} -> 4 with equal lengths: the path runs through 2.
    RoadNetwork net({{1, 0, 0}, {3, 0, 0.001}, {2, 0.001, 0}, {4, 0.001, 0.001}},
                    {{1, 3, 5}, {1, 2, 5}, {3, 4, 5}, {2, 4, 5}});
    auto p = shortest_path(net, 1, 4);
    ASSERT_TRUE(p);
    EXPECT_EQ(p->nodes, (std::vector<NodeId>{1, 2, 4}));
}

TEST(ShortestPath, MatchesFloydWarshallOnRandomGraphs) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> size(2, 50);
    std::uniform_real_distribution<double> dens(0.03, 0.3);
    for (int g = 0; g < 50; ++g) {
        auto net = random_graph(rng, size(rng), dens(rng));
        auto fw = floyd_warshall(net);
        Router router(net);
        for (std::uint32_t i = 0; i < net.node_count(); ++i)
            for (std::uint32_t j = 0; j < net.node_count(); ++j) {
                const auto s = net.node_at(i).id, t = net.node_at(j).id;
                auto p = shortest_path(net, s, t);
                if (fw[i][j] == kUnreachable) {
                    ASSERT_FALSE(p);
                    ASSERT_EQ(router.distance(s, t), kUnreachable);
                    continue;
                }
                ASSERT_TRUE(p);
                ASSERT_EQ(p->distance, fw[i][j]);
                ASSERT_EQ(router.distance(s, t), fw[i][j]);
                // Path is consistent with its distance.
                ASSERT_EQ(p->nodes.front(), s);
                ASSERT_EQ(p->nodes.back(), t);
                double sum = 0.0;
                for (std::size_t k = 0; k + 1 < p->nodes.size(); ++k) sum += net.edge_length(p->nodes[k], p->nodes[k + 1]);
                ASSERT_EQ(sum, p->distance);
            }
    }
}

TEST(ShortestPath, TriangleInequality) {
    std::mt19937_64 rng(3);
    auto net = random_graph(rng, 30, 0.15);
    Router r(net);
    for (const auto& u : net.nodes())
        for (const auto& v : net.nodes())
            for (const auto& w : net.nodes()) {
                const double uv = r.distance(u.id, v.id), vw = r.distance(v.id, w.id), uw = r.distance(u.id, w.id);
                if (uv != kUnreachable && vw != kUnreachable) ASSERT_LE(uw, uv + vw);
            }
}

TEST(Router, CacheIsBounded) {
    auto net = make_grid_network(5, 5, 100.0);
    Router r(net, 4);
    for (const auto& n : net.nodes()) r.distance(n.id, 0);
    EXPECT_LE(r.cached_trees(), 4u);
    EXPECT_EQ(r.distance(24, 0), 800.0);
}

TEST(Position, StartEndAndMidway) {
    auto net = line3();
    auto route = *shortest_path(net, 1, 3); // 3 m + 4 m
    auto p0 = position_along_route(net, route, 0.0, 1.0);
    EXPECT_EQ(p0.node, 1);
    EXPECT_EQ(p0.meters, 0.0);
    auto p5 = position_along_route(net, route, 5.0, 1.0);
    EXPECT_EQ(p5.node, 2);
    EXPECT_EQ(p5.meters, 5.0);
    auto p9 = position_along_route(net, route, 9.0, 1.0);
    EXPECT_EQ(p9.node, 3);
    EXPECT_EQ(p9.meters, 7.0);
}

TEST(Position, MonotoneAndBounded) {
    auto net = make_grid_network(4, 4, 120.0);
    auto route = *shortest_path(net, 0, 15);
    double last = -1.0;
    for (double t = 0.0; t < 200.0; t += 0.7) {
        auto p = position_along_route(net, route, t, 5.0);
        EXPECT_GE(p.meters, last);
        EXPECT_LE(p.meters, route.distance);
        last = p.meters;
    }
}
