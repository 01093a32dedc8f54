#include <gtest/gtest.h>

#include <map>
#include <set>

#include "ridesim/engine.hpp"
#include "ridesim/metrics.hpp"

using namespace ridesim;

namespace {

TripRecord delivered(OrderId id, ServiceChoice c, double orig, double fare, double in_vehicle = -1,
                     double shared = 0.0) {
    TripRecord r;
    r.order_id = id;
    r.choice = c;
    r.outcome = Outcome::Delivered;
    r.original_distance = orig;
    r.in_vehicle_distance = in_vehicle < 0 ? orig : in_vehicle;
    r.detour_distance = r.in_vehicle_distance - orig;
    r.shared_distance = shared;
    r.pooled = shared > 0.0;
    r.fare = fare;
    return r;
}

} // namespace

TEST(TripDistances, NestedTrips) {
    // C1: A->D (6 km direct); C2: B->C (5 km). Route A -2- B -5- C -1- D.
    const std::vector<Stop> stops{{StopKind::Pickup, 1, 1}, {StopKind::Pickup, 2, 2},
                                  {StopKind::Dropoff, 2, 3}, {StopKind::Dropoff, 1, 4}};
    const std::vector<double> legs{0.0, 2.0, 5.0, 1.0};
    const std::vector<Order> members{{1, 1, 4, 0, 6.0}, {2, 2, 3, 0, 5.0}};
    auto d = trip_distances(stops, legs, members);
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(d[0].shared_m, 5.0);
    EXPECT_EQ(d[1].shared_m, 5.0);
    EXPECT_EQ(d[0].detour_m, 2.0);
    EXPECT_EQ(d[1].detour_m, 0.0);
    EXPECT_EQ(d[0].saved_m + d[1].saved_m, 3.0);
    EXPECT_EQ(d[0].saved_m, d[1].saved_m);
}

TEST(TripDistances, PerfectOverlap) {
    const std::vector<Stop> stops{{StopKind::Pickup, 1, 0}, {StopKind::Pickup, 2, 0},
                                  {StopKind::Dropoff, 1, 9}, {StopKind::Dropoff, 2, 9}};
    const std::vector<double> legs{0.0, 0.0, 7.0, 0.0};
    const std::vector<Order> members{{1, 0, 9, 0, 7.0}, {2, 0, 9, 0, 7.0}};
    auto d = trip_distances(stops, legs, members);
    for (const auto& m : d) {
        EXPECT_EQ(m.shared_m, 7.0);
        EXPECT_EQ(m.detour_m, 0.0);
    }
    EXPECT_EQ(d[0].saved_m + d[1].saved_m, 7.0);
}

TEST(TripDistances, UnpooledMember) {
    const std::vector<Stop> stops{{StopKind::Pickup, 1, 0}, {StopKind::Dropoff, 1, 5}};
    const std::vector<double> legs{3.0, 4.0};
    const std::vector<Order> members{{1, 0, 5, 0, 4.0}};
    auto d = trip_distances(stops, legs, members);
    EXPECT_EQ(d[0].shared_m, 0.0);
    EXPECT_EQ(d[0].detour_m, 0.0);
    EXPECT_EQ(d[0].saved_m, 0.0);
}

TEST(Emission, Legs) {
    auto c = EmissionModel::constant(200.0);
    EXPECT_EQ(co2_for_leg(c, 0.0, 8.0), 0.0);
    EXPECT_EQ(co2_for_leg(c, 5000.0, 8.0), 1000.0);
    EXPECT_THROW(co2_for_leg(c, 10.0, 0.0), Error);
}

TEST(Emission, ShippedCurveDecreasesTowardFreeFlow) {
    auto m = EmissionModel::load_curve(std::string(RIDESIM_SOURCE_DIR) + "/data/emission_curve.csv");
    EXPECT_GE(m.factor(30 / 3.6), m.factor(50 / 3.6));
    for (double v = 0.5; v <= 40.0; v += 0.5) EXPECT_GT(m.factor(v), 0.0);
    const EmissionModel def;
    EXPECT_EQ(m.factor(30 / 3.6), def.factor(30 / 3.6));
}

TEST(Aggregate, AllDeliveredNoPooling) {
    std::vector<TripRecord> rs{delivered(1, ServiceChoice::Solo, 3000, 13), delivered(2, ServiceChoice::Share, 4000, 12)};
    FleetHistory f;
    f.vehicle_m = 9000;
    f.scheduled_means = {0.5, 1.5};
    auto m = aggregate_metrics(rs, f, EmissionModel::constant(100), 8.0);
    EXPECT_EQ(m.service_rate, 1.0);
    EXPECT_EQ(m.ssr, 0.0);
    EXPECT_EQ(m.sdr, 0.0);
    EXPECT_EQ(m.ddr, 0.0);
    EXPECT_EQ(m.avg_scheduled_requests, 1.0);
    EXPECT_DOUBLE_EQ(m.emission_factor, 900.0 / 7.0);
}

TEST(Aggregate, TwoCustomerFixture) {
    // One pooled Share customer (fare 15.2) and one Solo customer (fare 19), plus an abandoned one.
    std::vector<TripRecord> rs{delivered(1, ServiceChoice::Solo, 5000, 19.0),
                               delivered(2, ServiceChoice::Share, 5000, 15.2, 6000, 4000)};
    TripRecord gone;
    gone.order_id = 3;
    gone.outcome = Outcome::Abandoned;
    gone.original_distance = 2000;
    gone.fare = 10;
    rs.push_back(gone);
    FleetHistory f;
    f.vehicle_m = 12000;
    auto m = aggregate_metrics(rs, f, EmissionModel::constant(150), 8.0);
    EXPECT_DOUBLE_EQ(m.revenue, 34.2);
    EXPECT_DOUBLE_EQ(m.service_rate, 2.0 / 3.0);
    EXPECT_EQ(m.ssr, 1.0);
    EXPECT_DOUBLE_EQ(m.sdr, 0.8);
    EXPECT_DOUBLE_EQ(m.ddr, 0.2);
    EXPECT_EQ(m.abandoned, 1u);
    auto sub = aggregate_metrics(rs, f, EmissionModel::constant(150), 8.0, 2.5);
    EXPECT_DOUBLE_EQ(sub.revenue, 36.7);
}

TEST(Aggregate, RatioOfSumsAndMeanOfRatios) {
    std::vector<TripRecord> rs{delivered(1, ServiceChoice::Share, 1000, 10, 1200, 500),
                               delivered(2, ServiceChoice::Share, 3000, 10, 3000, 0)};
    auto m = aggregate_metrics(rs, {}, EmissionModel::constant(150), 8.0);
    EXPECT_DOUBLE_EQ(m.ssr, 0.5);
    EXPECT_DOUBLE_EQ(m.ddr, 200.0 / 4000.0);
    EXPECT_DOUBLE_EQ(m.ddr_mean_of_ratios, 0.1);
    EXPECT_DOUBLE_EQ(m.sdr, 500.0 / 4000.0);
}

TEST(Aggregate, RevenueMatchesEventLog) {
    auto net = make_grid_network(8, 8, 400.0);
    Router router(net);
    SyntheticDemandSpec s{0, 3600, 500, uniform_weights(net)};
    Rng rng(7);
    auto orders = generate_synthetic_orders(s, router, rng);
    SimConfig c;
    c.horizon_start = 0;
    c.horizon_end = 3600;
    c.fleet_size = 30;
    c.pricing.discount = 0.2;
    auto res = run_simulation(c, orders, router, ElasticityTable::default_table());
    // Recompute revenue from dropoff events and the upfront fare rule.
    std::map<OrderId, Order> by_id;
    for (const auto& o : orders) by_id[o.id] = o;
    std::map<OrderId, ServiceChoice> choice;
    double revenue = 0.0;
    for (const auto& e : res.log.events()) {
        if (e.type == EventType::Choice) choice[e.order] = *e.service;
        if (e.type != EventType::Dropoff) continue;
        const auto d = by_id.at(e.order).trip_distance;
        revenue += choice.at(e.order) == ServiceChoice::Share ? share_fare(c.pricing, d) : solo_fare(c.pricing, d);
    }
    EXPECT_NEAR(res.metrics.revenue, revenue, 1e-9 * revenue);
    EXPECT_GT(res.metrics.pooled, 0u);
}

TEST(Load, Formula) {
    EXPECT_DOUBLE_EQ(normalized_load(100, 5, 50, 30), 1.0 / 3.0);
    EXPECT_EQ(normalized_load(60, 5, 10, 30), 1.0);
    EXPECT_EQ(normalized_load(0, 5, 10, 30), 0.0);
    EXPECT_THROW(normalized_load(1, 1, 0, 30), Error);
}

TEST(Load, Classes) {
    EXPECT_EQ(classify_zone(1.0 / 3.0), ZoneClass::Cold);
    EXPECT_EQ(classify_zone(2.5), ZoneClass::Hot);
    EXPECT_EQ(classify_zone(0.5), ZoneClass::Normal);
    EXPECT_EQ(classify_zone(2.0), ZoneClass::Normal);
}

TEST(Zones, CellsPartitionTheRegion) {
    auto net = make_grid_network(10, 10, 400.0);
    ZoneGrid g(net, 10, 10, 0, 1800, 4);
    std::set<int> cells;
    for (const auto& n : net.nodes()) {
        const int c = g.cell_of(n.id);
        ASSERT_GE(c, 0);
        ASSERT_LT(c, 100);
        cells.insert(c);
    }
    EXPECT_EQ(cells.size(), 100u);
    EXPECT_EQ(g.slot_of(-1), -1);
    EXPECT_EQ(g.slot_of(0), 0);
    EXPECT_EQ(g.slot_of(1799.9), 0);
    EXPECT_EQ(g.slot_of(7200), -1);
}

TEST(Zones, SingleCellEqualsGlobal) {
    auto net = make_grid_network(8, 8, 400.0);
    Router router(net);
    SyntheticDemandSpec s{0, 3600, 500, uniform_weights(net)};
    Rng rng(11);
    auto orders = generate_synthetic_orders(s, router, rng);
    SimConfig c;
    c.horizon_start = 0;
    c.horizon_end = 3600;
    c.fleet_size = 30;
    c.pricing.discount = 0.3;
    auto res = run_simulation(c, orders, router, ElasticityTable::default_table());
    ZoneGrid g(net, 1, 1, 0, 3600, 1);
    auto cells = zone_loads(g, res.records, res.fleet, c.vehicle_speed);
    ASSERT_EQ(cells.size(), 1u);
    EXPECT_NEAR(cells[0].vehicles, 30.0, 1e-12);
    EXPECT_EQ(cells[0].orders, res.records.size());
    auto stats = zone_stats(g, res.records, cells);
    const auto& cls = stats[static_cast<std::size_t>(cells[0].cls)];
    ASSERT_TRUE(cls);
    EXPECT_DOUBLE_EQ(cls->ssr, res.metrics.ssr);
    EXPECT_DOUBLE_EQ(cls->sdr, res.metrics.sdr);
    EXPECT_DOUBLE_EQ(cls->ddr, res.metrics.ddr);
    for (std::size_t k = 0; k < 3; ++k)
        if (k != static_cast<std::size_t>(cells[0].cls)) EXPECT_FALSE(stats[k]);
}

TEST(Zones, EmptyClassIsAbsent) {
    auto net = make_grid_network(2, 2, 400.0);
    ZoneGrid g(net, 2, 2, 0, 1800, 1);
    std::vector<TripRecord> none;
    FleetHistory f;
    auto cells = zone_loads(g, none, f, 8.0);
    auto stats = zone_stats(g, none, cells);
    for (const auto& s : stats) EXPECT_FALSE(s);
}
