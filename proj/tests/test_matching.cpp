#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "ridesim/matching.hpp"

using namespace ridesim;

namespace {

// Two riders on one corridor (meters): A -2000- B -5000- C -1000- D, plus a direct A-D road of 6000.
// C1 travels A->D (6 km), C2 travels B->C (5 km).
RoadNetwork corridor_network() {
    std::vector<Node> nodes{{1, 104.00, 30.6}, {2, 104.02, 30.6}, {3, 104.07, 30.6}, {4, 104.08, 30.6}};
    std::vector<Edge> edges;
    auto two_way = [&](NodeId a, NodeId b, double m) {
        edges.push_back({a, b, m});
        edges.push_back({b, a, m});
    };
    two_way(1, 2, 2000);
    two_way(2, 3, 5000);
    two_way(3, 4, 1000);
    two_way(1, 4, 6000);
    return RoadNetwork(nodes, edges);
}

Order order(const Router& r, OrderId id, NodeId o, NodeId d) { return {id, o, d, 0.0, r.distance(o, d)}; }

// Line of n nodes spaced `gap` meters, two-way.
RoadNetwork line(int n, double gap) { return make_grid_network(1, n, gap); }

VehicleState idle_at(VehicleId id, NodeId node) {
    VehicleState v;
    v.id = id;
    v.node = node;
    return v;
}

// Vehicle at `node` carrying one onboard Share customer to `dest`, having already ridden `traveled`.
VehicleState carrying(VehicleId id, NodeId node, OrderId who, NodeId dest, double trip, double traveled) {
    VehicleState v = idle_at(id, node);
    v.odometer = 10000.0;
    Passenger p;
    p.order = who;
    p.trip_distance = trip;
    p.onboard = true;
    p.pickup_odometer = v.odometer - traveled;
    p.share = true;
    v.passengers.push_back(p);
    v.schedule.push_back({StopKind::Dropoff, who, dest});
    v.legs.emplace_back();
    return v;
}

// Exhaustive insertion oracle: every interleaving of the new pickup/dropoff into the
// existing schedule, checked by direct distance accumulation.
std::optional<double> brute_insertion(const Router& router, double max_detour, const VehicleState& v, const Order& r) {
    if (v.passengers.size() >= 2) return std::nullopt;
    const std::size_t m = v.schedule.size();
    std::optional<double> best;
    for (std::size_t i = 0; i <= m; ++i)
        for (std::size_t j = i; j <= m; ++j) {
            std::vector<Stop> s(v.schedule.begin(), v.schedule.end());
            s.insert(s.begin() + static_cast<std::ptrdiff_t>(j), {StopKind::Dropoff, r.id, r.destination});
            s.insert(s.begin() + static_cast<std::ptrdiff_t>(i), {StopKind::Pickup, r.id, r.origin});
            std::map<OrderId, double> picked, trip, ride;
            std::map<OrderId, bool> onboard;
            for (const auto& p : v.passengers) {
                trip[p.order] = p.trip_distance;
                if (p.onboard) {
                    picked[p.order] = -(v.odometer - p.pickup_odometer);
                    onboard[p.order] = true;
                }
            }
            trip[r.id] = r.trip_distance;
            int load = static_cast<int>(onboard.size());
            double cum = 0.0;
            NodeId at = v.node;
            bool ok = true;
            for (const auto& st : s) {
                const double d = router.distance(at, st.node);
                if (d == kUnreachable) ok = false;
                cum += d;
                at = st.node;
                if (st.kind == StopKind::Pickup) {
                    picked[st.order] = cum;
                    if (++load > 2) ok = false;
                } else {
                    ride[st.order] = cum - picked[st.order];
                    --load;
                }
            }
            for (const auto& [id, x] : ride)
                if ((x - trip[id]) / trip[id] > max_detour + 1e-12) ok = false;
            if (!ok) continue;
            if (!best || cum < *best) best = cum;
        }
    return best;
}

} // namespace

TEST(Pool, IdenticalItineraries) {
    auto net = line(5, 100);
    Router r(net);
    auto a = order(r, 1, 0, 4), b = order(r, 2, 0, 4);
    auto p = pool_feasible(r, 0.3, a, b);
    ASSERT_TRUE(p);
    EXPECT_EQ(p->distance_m, 400.0);
    EXPECT_EQ(p->detour[0], 0.0);
    EXPECT_EQ(p->detour[1], 0.0);
}

TEST(Pool, NestedCorridor) {
    auto net = corridor_network();
    Router r(net);
    auto c1 = order(r, 1, 1, 4), c2 = order(r, 2, 2, 3);
    ASSERT_EQ(c1.trip_distance, 6000.0);
    ASSERT_EQ(c2.trip_distance, 5000.0);
    auto p = pool_feasible(r, 1.0 / 3.0, c1, c2);
    ASSERT_TRUE(p);
    EXPECT_EQ(p->distance_m, 8000.0);
    EXPECT_DOUBLE_EQ(p->detour[0], 1.0 / 3.0);
    EXPECT_EQ(p->detour[1], 0.0);
    EXPECT_EQ(p->stops[0].node, 1);
    EXPECT_EQ(p->stops[3].node, 4);
    EXPECT_FALSE(pool_feasible(r, 0.3, c1, c2));
}

TEST(Pool, AntiparallelIsInfeasible) {
    auto net = line(2, 500);
    Router r(net);
    EXPECT_FALSE(pool_feasible(r, 0.3, order(r, 1, 0, 1), order(r, 2, 1, 0)));
    auto longer = line(6, 200);
    Router r2(longer);
    EXPECT_FALSE(pool_feasible(r2, 0.3, order(r2, 1, 0, 5), order(r2, 2, 5, 0)));
}

TEST(Pool, Symmetric) {
    auto net = make_grid_network(5, 5, 150.0);
    Router r(net);
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<NodeId> node(0, 24);
    int feasible = 0;
    for (int k = 0; k < 400; ++k) {
        NodeId a = node(rng), b = node(rng), c = node(rng), d = node(rng);
        if (a == b || c == d) continue;
        auto x = order(r, 1, a, b), y = order(r, 2, c, d);
        auto p = pool_feasible(r, 0.3, x, y), q = pool_feasible(r, 0.3, y, x);
        ASSERT_EQ(bool(p), bool(q));
        if (!p) continue;
        ++feasible;
        EXPECT_EQ(p->distance_m, q->distance_m);
        std::multiset<double> dp{p->detour[0], p->detour[1]}, dq{q->detour[0], q->detour[1]};
        EXPECT_EQ(dp, dq);
        EXPECT_LE(std::max(p->detour[0], p->detour[1]), 0.3 + 1e-12);
    }
    EXPECT_GT(feasible, 10);
}

TEST(Insertion, IdleVehicleAtOrigin) {
    auto net = line(5, 100);
    Router r(net);
    auto v = idle_at(0, 1);
    auto ins = insertion_feasible(r, 0.3, v, order(r, 7, 1, 4));
    ASSERT_TRUE(ins);
    ASSERT_EQ(ins->schedule.size(), 2u);
    EXPECT_EQ(ins->schedule[0], (Stop{StopKind::Pickup, 7, 1}));
    EXPECT_EQ(ins->schedule[1], (Stop{StopKind::Dropoff, 7, 4}));
    ASSERT_EQ(ins->detours.size(), 1u);
    EXPECT_EQ(ins->detours[0].second, 0.0);
    EXPECT_EQ(ins->added_m, 300.0);
}

TEST(Insertion, ZeroSlackOnboardCustomer) {
    auto net = line(5, 100);
    Router r(net);
    // Trip 400 m, already ridden 120 m with 400 m to go: detour exactly 0.3.
    auto v = carrying(0, 0, 1, 4, 400.0, 120.0);
    // Any stop before node 4 would stretch customer 1, so the new order must follow the dropoff.
    auto after = insertion_feasible(r, 0.3, v, order(r, 2, 2, 1));
    ASSERT_TRUE(after);
    EXPECT_EQ(after->schedule[0], (Stop{StopKind::Dropoff, 1, 4}));
    EXPECT_EQ(after->added_m, 300.0);
    // Riding along the same direction adds nothing and is accepted.
    auto ok = insertion_feasible(r, 0.3, v, order(r, 3, 1, 3));
    ASSERT_TRUE(ok);
    EXPECT_EQ(ok->added_m, 0.0);
}

TEST(Insertion, FullVehicleIsInfeasible) {
    auto net = line(5, 100);
    Router r(net);
    auto v = carrying(0, 0, 1, 4, 400.0, 0.0);
    Passenger p;
    p.order = 2;
    p.trip_distance = 400.0;
    p.share = true;
    v.passengers.push_back(p);
    EXPECT_FALSE(insertion_feasible(r, 0.5, v, order(r, 3, 1, 3)));
}

TEST(Insertion, MatchesExhaustiveOracle) {
    auto net = make_grid_network(5, 5, 120.0);
    Router r(net);
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<NodeId> node(0, 24);
    std::uniform_real_distribution<double> used(0.0, 1.0);
    int found = 0;
    for (int k = 0; k < 600; ++k) {
        const NodeId at = node(rng), dest = node(rng), o = node(rng), d = node(rng);
        if (at == dest || o == d) continue;
        const double trip = r.distance(at, dest) + 2 * 120.0 * (k % 3);
        const double delta = k % 2 ? 0.3 : 0.4;
        auto v = carrying(0, at, 1, dest, trip, used(rng) * delta * trip * 0.5);
        auto req = order(r, 2, o, d);
        auto ins = insertion_feasible(r, delta, v, req);
        auto oracle = brute_insertion(r, delta, v, req);
        ASSERT_EQ(bool(ins), bool(oracle)) << "case " << k;
        if (!ins) continue;
        ++found;
        EXPECT_DOUBLE_EQ(ins->total_m, *oracle);
        for (const auto& [id, x] : ins->detours) EXPECT_LE(x, delta + 1e-12);
    }
    EXPECT_GT(found, 30);
}

TEST(Candidates, SoloChooserNeedsIdleVehicle) {
    auto net = line(5, 100);
    Router r(net);
    std::vector<BatchRequest> batch{{order(r, 5, 1, 3), ServiceChoice::Solo, 10.0}};
    std::vector<VehicleState> fleet{carrying(0, 0, 1, 4, 400.0, 0.0)};
    EXPECT_TRUE(enumerate_candidate_trips(batch, fleet, r, {}).empty());
}

TEST(Candidates, MixedScene) {
    auto net = make_grid_network(4, 4, 200.0);
    Router r(net);
    // C1 Solo, C2 and C3 Share heading the same way; V1 idle, V2 carrying a Share customer.
    std::vector<BatchRequest> batch{{order(r, 1, 12, 0), ServiceChoice::Solo, 12.0},
                                    {order(r, 2, 0, 3), ServiceChoice::Share, 8.0},
                                    {order(r, 3, 1, 3), ServiceChoice::Share, 8.0}};
    std::vector<VehicleState> fleet{idle_at(0, 4), carrying(1, 0, 99, 3, 600.0, 0.0)};
    auto trips = enumerate_candidate_trips(batch, fleet, r, {0.3, 0.5});
    std::set<std::pair<std::vector<OrderId>, VehicleId>> got;
    for (const auto& t : trips) {
        got.insert({t.requests, t.vehicle});
        EXPECT_DOUBLE_EQ(t.utility, t.price - t.cost);
        EXPECT_DOUBLE_EQ(t.cost, 0.5 * t.added_m / 1000.0);
        for (double x : t.detours) EXPECT_LE(x, 0.3 + 1e-12);
    }
    const std::set<std::pair<std::vector<OrderId>, VehicleId>> want{
        {{1}, 0}, {{2}, 0}, {{3}, 0}, {{2}, 1}, {{3}, 1}, {{2, 3}, 0}};
    EXPECT_EQ(got, want);
    for (const auto& t : trips)
        if (t.requests.size() == 2) EXPECT_DOUBLE_EQ(t.price, 16.0);
}

TEST(Candidates, FailedPoolGivesSinglesOnly) {
    auto net = line(6, 200);
    Router r(net);
    std::vector<BatchRequest> batch{{order(r, 1, 0, 5), ServiceChoice::Share, 8.0},
                                    {order(r, 2, 5, 0), ServiceChoice::Share, 8.0}};
    std::vector<VehicleState> fleet{idle_at(0, 2)};
    auto trips = enumerate_candidate_trips(batch, fleet, r, {});
    ASSERT_EQ(trips.size(), 2u);
    for (const auto& t : trips) EXPECT_EQ(t.requests.size(), 1u);
}

TEST(Candidates, SoloCarryingVehicleTakesNoInsertions) {
    auto net = line(5, 100);
    Router r(net);
    auto v = carrying(0, 0, 1, 4, 400.0, 0.0);
    v.passengers[0].share = false;
    std::vector<BatchRequest> batch{{order(r, 5, 1, 3), ServiceChoice::Share, 8.0}};
    std::vector<VehicleState> fleet{v};
    EXPECT_TRUE(enumerate_candidate_trips(batch, fleet, r, {}).empty());
}

TEST(Utility, Arithmetic) {
    CandidateTrip t{CandidateTrip::Kind::IdleSingle, {1}, 0, {}, 0, 0, 19.0, 4.0, 0.0, {}};
    EXPECT_EQ(trip_utility(t), 15.0);
    CandidateTrip pool{CandidateTrip::Kind::IdlePair, {1, 2}, 0, {}, 0, 0, 15.2 + 12.0, 9.5, 0.0, {}};
    EXPECT_DOUBLE_EQ(trip_utility(pool), 17.7);
    CandidateTrip loss{CandidateTrip::Kind::IdleSingle, {1}, 0, {}, 0, 0, 10.0, 12.5, 0.0, {}};
    EXPECT_EQ(trip_utility(loss), -2.5);
}

TEST(Reposition, OneVehicleOneRequest) {
    auto net = line(5, 100);
    Router r(net);
    auto v = idle_at(3, 0);
    const VehicleState* idle[] = {&v};
    std::vector<Order> waiting{order(r, 9, 4, 2)};
    auto moves = reposition_idle(idle, waiting, r);
    ASSERT_EQ(moves.size(), 1u);
    EXPECT_EQ(moves[0].vehicle, 3);
    EXPECT_EQ(moves[0].target_order, 9);
    EXPECT_EQ(moves[0].target_node, 4);
    EXPECT_EQ(moves[0].distance_m, 400.0);
}

TEST(Reposition, CrossingDistances) {
    // d(v1,r1)=1, d(v1,r2)=5, d(v2,r1)=4, d(v2,r2)=2.
    RoadNetwork net({{10, 0, 0}, {11, 0, 0.001}, {20, 0.001, 0}, {21, 0.001, 0.001}, {30, 0.002, 0}, {31, 0.002, 0.001}},
                    {{10, 20, 1}, {10, 21, 5}, {11, 20, 4}, {11, 21, 2}, {20, 30, 1}, {21, 31, 1}});
    Router r(net);
    auto v1 = idle_at(0, 10), v2 = idle_at(1, 11);
    const VehicleState* idle[] = {&v1, &v2};
    std::vector<Order> waiting{{1, 20, 30, 0, 1}, {2, 21, 31, 0, 1}};
    auto moves = reposition_idle(idle, waiting, r);
    ASSERT_EQ(moves.size(), 2u);
    EXPECT_EQ(moves[0].target_order, 1);
    EXPECT_EQ(moves[1].target_order, 2);
    EXPECT_EQ(moves[0].distance_m + moves[1].distance_m, 3.0);
}

TEST(Reposition, NoWaitingNoMoves) {
    auto net = line(3, 100);
    Router r(net);
    auto v = idle_at(0, 0);
    const VehicleState* idle[] = {&v};
    EXPECT_TRUE(reposition_idle(idle, {}, r).empty());
}

TEST(Reposition, HungarianMatchesBruteForce) {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> cost(0, 30), dim(1, 6);
    for (int k = 0; k < 300; ++k) {
        const int n = dim(rng), m = n + dim(rng) - 1;
        std::vector<std::vector<double>> c(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(m)));
        for (auto& row : c)
            for (auto& x : row) x = cost(rng);
        auto a = min_cost_assignment(c);
        double got = 0.0;
        std::set<std::size_t> cols;
        for (std::size_t i = 0; i < a.size(); ++i) {
            got += c[i][a[i]];
            cols.insert(a[i]);
        }
        ASSERT_EQ(cols.size(), static_cast<std::size_t>(n));
        std::vector<std::size_t> perm(static_cast<std::size_t>(m));
        std::iota(perm.begin(), perm.end(), 0);
        double best = 1e18;
        do {
            double s = 0.0;
            for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) s += c[i][perm[i]];
            best = std::min(best, s);
        } while (std::next_permutation(perm.begin(), perm.end()));
        ASSERT_EQ(got, best) << "case " << k;
    }
}
