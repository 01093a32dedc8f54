#pragma once

// Experiment grids: demand profiles x discounts x detour guarantees x seeds, run in
// parallel and written as CSV tables plus a reproducibility manifest.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ridesim/config.hpp"
#include "ridesim/engine.hpp"

namespace ridesim {

struct ProfileSpec {
    std::string name;

    // Network: a generated grid, or node/edge files.
    bool grid_network = true;
    int grid_rows = 10, grid_cols = 10;
    double grid_spacing_m = 400.0;
    std::filesystem::path nodes_path, edges_path;

    // Demand: synthetic Poisson arrivals, or an order file.
    bool synthetic = true;
    double rate_per_h = 600.0;
    std::vector<WeightBump> hotspots;
    double floor_mass = 1.0;
    std::filesystem::path orders_path;
    double sample_fraction = 1.0;

    bool uniform_fleet = false; // otherwise vehicles start where demand originates
};

struct ExperimentGrid {
    std::vector<ProfileSpec> profiles;
    std::vector<double> discounts{0.0, 0.1, 0.15, 0.2, 0.3, 0.4};
    std::vector<double> detours{0.2, 0.3, 0.4};
    std::vector<std::uint64_t> seeds{1};
    SimConfig base;
    std::optional<std::filesystem::path> elasticity_path;
    int zone_rows = 10, zone_cols = 10;
    double zone_slot_s = 1800.0;
    std::string config_hash;   // canonical config text
    std::vector<std::pair<std::string, std::string>> input_hashes; // file -> content hash

    void validate() const {
        if (profiles.empty()) throw ConfigError("no demand profiles configured");
        if (discounts.empty()) throw ConfigError("grid.discounts is empty");
        if (detours.empty()) throw ConfigError("grid.detours is empty");
        if (seeds.empty()) throw ConfigError("grid.seeds is empty");
        for (double d : discounts)
            if (!(d >= 0.0 && d < 1.0)) throw ConfigError("discounts must lie in [0, 1)");
        for (double d : detours)
            if (!(d > 0.0 && d < 1.0)) throw ConfigError("detour guarantees must lie in (0, 1)");
        if (zone_rows <= 0 || zone_cols <= 0 || !(zone_slot_s > 0.0)) throw ConfigError("invalid zone grid");
        base.validate();
    }
};

namespace detail {

inline std::vector<WeightBump> parse_hotspots(const std::string& text) {
    std::vector<WeightBump> out;
    if (csv::trim(text).empty()) return out;
    for (auto item : csv::split(text, ';')) {
        auto parts = csv::split(item, ':');
        if (parts.size() != 3) throw ConfigError("hotspot entries are node:sigma_m:mass");
        auto node = csv::to_int(parts[0]);
        auto sigma = csv::to_double(parts[1]);
        auto mass = csv::to_double(parts[2]);
        if (!node || !sigma || !mass || !(*sigma > 0) || !(*mass >= 0))
            throw ConfigError("bad hotspot entry '" + std::string(item) + "'");
        out.push_back({*node, *sigma, *mass});
    }
    return out;
}

} // namespace detail

// Reads an experiment config. Unknown keys are rejected.
inline ExperimentGrid parse_experiment(const Config& c) {
    ExperimentGrid g;
    SimConfig& s = g.base;
    s.batch_interval = c.num("sim.batch_interval_s", s.batch_interval);
    s.vehicle_speed = c.num("sim.speed_mps", s.vehicle_speed);
    s.horizon_start = c.num("sim.horizon_start_s", s.horizon_start);
    s.horizon_end = c.num("sim.horizon_end_s", s.horizon_end);
    s.tail = c.num("sim.tail_s", s.tail);
    s.abandonment_timeout = c.num("sim.timeout_s", s.abandonment_timeout);
    s.fleet_size = static_cast<int>(c.integer("sim.fleet_size", s.fleet_size));
    s.capacity = static_cast<int>(c.integer("sim.capacity", s.capacity));
    s.cost_per_km = c.num("sim.cost_per_km", s.cost_per_km);
    s.solver_node_budget = static_cast<std::uint64_t>(
        c.integer("sim.solver_node_budget", static_cast<long long>(s.solver_node_budget)));
    s.pricing.base_fare = c.num("pricing.base_fare", s.pricing.base_fare);
    s.pricing.per_km = c.num("pricing.per_km", s.pricing.per_km);
    s.pricing.min_fare = c.num("pricing.min_fare", s.pricing.min_fare);
    s.pricing.pooled_trip_subsidy = c.num("pricing.pooled_trip_subsidy", s.pricing.pooled_trip_subsidy);

    const auto mode = c.str("emission.mode", "curve");
    if (mode == "constant") s.emission = EmissionModel::constant(c.num("emission.g_per_km", 180.0));
    else if (mode == "curve") {
        if (c.has("emission.curve")) {
            const auto p = c.path("emission.curve");
            s.emission = EmissionModel::load_curve(p.string());
            g.input_hashes.emplace_back(p.string(), hex64(fnv1a(read_file(p))));
        }
    } else throw ConfigError("emission.mode must be 'constant' or 'curve'");

    if (c.has("elasticity")) {
        g.elasticity_path = c.path("elasticity");
        g.input_hashes.emplace_back(g.elasticity_path->string(), hex64(fnv1a(read_file(*g.elasticity_path))));
    }

    if (c.has("grid.discounts")) g.discounts = c.numbers("grid.discounts");
    if (c.has("grid.detours")) g.detours = c.numbers("grid.detours");
    if (c.has("grid.seeds")) {
        g.seeds.clear();
        for (const auto& x : c.list("grid.seeds")) {
            auto v = csv::to_int(x);
            if (!v || *v < 0) throw ConfigError("grid.seeds entries must be non-negative integers");
            g.seeds.push_back(static_cast<std::uint64_t>(*v));
        }
    }
    g.zone_rows = static_cast<int>(c.integer("zones.rows", g.zone_rows));
    g.zone_cols = static_cast<int>(c.integer("zones.cols", g.zone_cols));
    g.zone_slot_s = c.num("zones.slot_s", g.zone_slot_s);

    for (const auto& name : c.list("profiles")) {
        if (name.empty() || name.find_first_of(",;/\\ ") != std::string::npos)
            throw ConfigError("bad profile name '" + name + "'");
        const std::string k = "profile." + name + ".";
        ProfileSpec p;
        p.name = name;
        const auto net = c.str(k + "network", "grid");
        if (net == "grid") {
            p.grid_rows = static_cast<int>(c.integer(k + "grid.rows", p.grid_rows));
            p.grid_cols = static_cast<int>(c.integer(k + "grid.cols", p.grid_cols));
            p.grid_spacing_m = c.num(k + "grid.spacing_m", p.grid_spacing_m);
        } else if (net == "files") {
            p.grid_network = false;
            p.nodes_path = c.path(k + "nodes");
            p.edges_path = c.path(k + "edges");
            g.input_hashes.emplace_back(p.nodes_path.string(), hex64(fnv1a(read_file(p.nodes_path))));
            g.input_hashes.emplace_back(p.edges_path.string(), hex64(fnv1a(read_file(p.edges_path))));
        } else throw ConfigError(k + "network must be 'grid' or 'files'");

        const auto demand = c.str(k + "demand", "synthetic");
        if (demand == "synthetic") {
            p.rate_per_h = c.num(k + "rate_per_h", p.rate_per_h);
            p.hotspots = detail::parse_hotspots(c.str(k + "hotspots", ""));
            p.floor_mass = c.num(k + "floor_mass", p.floor_mass);
        } else if (demand == "orders") {
            p.synthetic = false;
            p.orders_path = c.path(k + "orders");
            p.sample_fraction = c.num(k + "sample_fraction", 1.0);
            g.input_hashes.emplace_back(p.orders_path.string(), hex64(fnv1a(read_file(p.orders_path))));
        } else throw ConfigError(k + "demand must be 'synthetic' or 'orders'");

        const auto fleet = c.str(k + "fleet_start", "demand");
        if (fleet != "demand" && fleet != "uniform") throw ConfigError(k + "fleet_start must be 'demand' or 'uniform'");
        p.uniform_fleet = fleet == "uniform";
        g.profiles.push_back(std::move(p));
    }

    if (auto extra = c.unused(); !extra.empty()) throw ConfigError("unknown config key '" + extra.front() + "'");
    g.config_hash = hex64(fnv1a(c.canonical()));
    g.validate();
    return g;
}

// --- one profile instantiated for a seed -------------------------------------

struct ProfileData {
    std::unique_ptr<RoadNetwork> net;
    std::unique_ptr<Router> router;
};

inline ProfileData load_profile_network(const ProfileSpec& p) {
    ProfileData d;
    d.net = std::make_unique<RoadNetwork>(
        p.grid_network ? make_grid_network(p.grid_rows, p.grid_cols, p.grid_spacing_m)
                       : load_network(p.nodes_path.string(), p.edges_path.string()));
    if (d.net->empty()) throw ConfigError("profile " + p.name + " has an empty network");
    d.router = std::make_unique<Router>(*d.net);
    return d;
}

inline std::vector<Order> profile_orders(const ProfileSpec& p, const SimConfig& base, const Router& router,
                                         std::uint64_t seed) {
    if (p.synthetic) {
        SyntheticDemandSpec spec;
        spec.start_s = base.horizon_start;
        spec.horizon_s = base.horizon_end - base.horizon_start;
        spec.rate_per_h = p.rate_per_h;
        spec.node_weights = p.hotspots.empty() ? uniform_weights(router.network())
                                               : bump_weights(router.network(), p.hotspots, p.floor_mass);
        Rng rng = Rng::stream(seed, stream_tag::kSynthetic);
        return generate_synthetic_orders(spec, router, rng);
    }
    Rng rng = Rng::stream(seed, stream_tag::kSampling);
    return ingest_orders(p.orders_path.string(), router, p.sample_fraction, rng).orders;
}

// --- results -----------------------------------------------------------------

struct CellKey {
    std::size_t profile;
    double discount;
    double detour;
    std::uint64_t seed;
};

struct CellResult {
    CellKey key;
    SystemMetrics metrics;
    std::array<std::optional<SharingRatios>, 3> by_class;
    std::vector<ZoneCell> zones;
};

struct CellFailure {
    CellKey key;
    std::string error;
};

struct ExperimentReport {
    std::vector<CellResult> rows;       // grid order; a theta = 0 baseline fills every detour column
    std::vector<CellFailure> failures;
    std::size_t runs = 0;               // simulations actually executed
};

inline std::vector<std::string> metrics_header() {
    std::vector<std::string> h{"profile", "scenario", "discount", "max_detour", "seed", "baseline",
                               "admitted", "delivered", "abandoned", "service_rate", "revenue",
                               "avg_scheduled_requests", "emission_factor_g_per_km", "total_co2_g", "vehicle_km",
                               "mean_matching_time_s", "mean_pickup_time_s", "mean_waiting_time_s",
                               "share_customers", "pooled", "ssr", "sdr", "ddr", "sdr_mean_of_ratios",
                               "ddr_mean_of_ratios", "mean_saved_distance_m", "mean_saved_co2_g",
                               "solver_budget_hits"};
    for (const char* cls : {"cold", "normal", "hot"})
        for (const char* m : {"ssr", "sdr", "ddr"}) h.push_back(std::string(m) + "_" + cls);
    return h;
}

inline std::vector<std::string> zones_header() {
    return {"profile", "scenario", "discount", "max_detour", "seed", "slot", "cell", "orders", "lambda_per_h",
            "mean_distance_km", "vehicles", "speed_kmh", "x", "class", "ssr", "sdr", "ddr"};
}

namespace detail {

inline std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
}

inline std::string cell_label(const ExperimentGrid& g, const CellKey& k) {
    return g.profiles[k.profile].name + "_" + scenario_label(g.base.capacity, k.detour) + "_T" +
           std::to_string(static_cast<int>(std::lround(k.discount * 100))) + "_S" + std::to_string(k.seed);
}

} // namespace detail

inline std::string metrics_csv(const ExperimentGrid& g, const ExperimentReport& rep) {
    std::ostringstream os;
    os << detail::join(metrics_header()) << '\n';
    auto f = [](double x) { return format_double(x); };
    for (const auto& r : rep.rows) {
        const auto& m = r.metrics;
        std::vector<std::string> v{g.profiles[r.key.profile].name, scenario_label(g.base.capacity, r.key.detour),
                                   f(r.key.discount), f(r.key.detour), std::to_string(r.key.seed),
                                   r.key.discount == 0.0 ? "1" : "0",
                                   std::to_string(m.admitted), std::to_string(m.delivered),
                                   std::to_string(m.abandoned), f(m.service_rate), f(m.revenue),
                                   f(m.avg_scheduled_requests), f(m.emission_factor), f(m.total_co2_g),
                                   f(m.vehicle_km), f(m.mean_matching_time), f(m.mean_pickup_time),
                                   f(m.mean_waiting_time), std::to_string(m.share_customers),
                                   std::to_string(m.pooled), f(m.ssr), f(m.sdr), f(m.ddr),
                                   f(m.sdr_mean_of_ratios), f(m.ddr_mean_of_ratios), f(m.mean_saved_distance),
                                   f(m.mean_saved_co2), std::to_string(m.solver_budget_hits)};
        for (const auto& c : r.by_class) {
            if (c) {
                v.push_back(f(c->ssr));
                v.push_back(f(c->sdr));
                v.push_back(f(c->ddr));
            } else v.insert(v.end(), 3, "");
        }
        os << detail::join(v) << '\n';
    }
    return os.str();
}

inline std::string zones_csv(const ExperimentGrid& g, const ExperimentReport& rep) {
    std::ostringstream os;
    os << detail::join(zones_header()) << '\n';
    auto f = [](double x) { return std::isinf(x) ? std::string("inf") : format_double(x); };
    for (const auto& r : rep.rows) {
        if (r.key.discount == 0.0 && r.key.detour != g.detours.front()) continue; // one copy per baseline
        const std::string head = g.profiles[r.key.profile].name + "," +
                                 scenario_label(g.base.capacity, r.key.detour) + "," + f(r.key.discount) + "," +
                                 f(r.key.detour) + "," + std::to_string(r.key.seed);
        for (const auto& z : r.zones) {
            if (z.orders == 0 && z.vehicles == 0.0) continue;
            os << head << ',' << z.slot << ',' << z.cell << ',' << z.orders << ',' << f(z.lambda_per_h) << ','
               << f(z.mean_distance_km) << ',' << f(z.vehicles) << ',' << f(z.speed_kmh) << ',' << f(z.load) << ','
               << to_string(z.cls);
            if (z.sharing) os << ',' << f(z.sharing->ssr) << ',' << f(z.sharing->sdr) << ',' << f(z.sharing->ddr);
            else os << ",,,";
            os << '\n';
        }
    }
    return os.str();
}

inline std::string failures_csv(const ExperimentGrid& g, const ExperimentReport& rep) {
    std::ostringstream os;
    os << "profile,discount,max_detour,seed,error\n";
    for (const auto& e : rep.failures) {
        std::string msg = e.error;
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        os << g.profiles[e.key.profile].name << ',' << format_double(e.key.discount) << ','
           << format_double(e.key.detour) << ',' << e.key.seed << ',' << msg << '\n';
    }
    return os.str();
}

inline std::string manifest_json(const ExperimentGrid& g, const ExperimentReport& rep, const Config& c) {
    nlohmann::ordered_json j;
    j["config_hash"] = g.config_hash;
    j["config"] = c.values();
    j["seeds"] = g.seeds;
    j["discounts"] = g.discounts;
    j["detours"] = g.detours;
    nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
    for (const auto& [file, hash] : g.input_hashes) inputs[file] = hash;
    j["inputs"] = inputs;
    j["cells"] = g.profiles.size() * g.discounts.size() * g.detours.size() * g.seeds.size();
    j["runs"] = rep.runs;
    j["failures"] = rep.failures.size();
    return j.dump(2) + "\n";
}

struct RunOptions {
    int jobs = 1;
    std::optional<std::filesystem::path> events_dir; // write one events.jsonl per run when set
};

// Runs every cell. A theta = 0 cell is the pure solo baseline; it does not depend on
// the detour guarantee, so it runs once per (profile, seed) and is reported under each detour.
inline ExperimentReport run_experiment_grid(const ExperimentGrid& g, const RunOptions& opt = {}) {
    g.validate();
    const auto elasticity =
        g.elasticity_path ? ElasticityTable::load(g.elasticity_path->string()) : ElasticityTable::default_table();

    struct Task {
        CellKey key;
        std::vector<std::size_t> rows; // report rows filled by this run
    };
    struct Instance {
        std::optional<ProfileData> data;
        std::vector<std::vector<Order>> orders; // per seed
        std::vector<std::string> error;         // per seed, empty if fine
    };

    ExperimentReport rep;
    std::vector<Instance> inst(g.profiles.size());
    for (std::size_t p = 0; p < g.profiles.size(); ++p) {
        auto& in = inst[p];
        in.orders.resize(g.seeds.size());
        in.error.assign(g.seeds.size(), "");
        try {
            in.data = load_profile_network(g.profiles[p]);
        } catch (const std::exception& e) {
            std::fill(in.error.begin(), in.error.end(), e.what());
            continue;
        }
        for (std::size_t s = 0; s < g.seeds.size(); ++s) {
            try {
                in.orders[s] = profile_orders(g.profiles[p], g.base, *in.data->router, g.seeds[s]);
            } catch (const std::exception& e) {
                in.error[s] = e.what();
            }
        }
    }

    // Grid order: profile, seed, discount, detour.
    std::vector<Task> tasks;
    std::vector<std::optional<CellResult>> slots;
    std::vector<std::string> slot_error;
    for (std::size_t p = 0; p < g.profiles.size(); ++p)
        for (std::size_t s = 0; s < g.seeds.size(); ++s)
            for (double theta : g.discounts) {
                std::optional<std::size_t> baseline_task;
                for (double delta : g.detours) {
                    const std::size_t row = slots.size();
                    slots.emplace_back();
                    slot_error.emplace_back();
                    if (theta == 0.0) {
                        if (!baseline_task) {
                            baseline_task = tasks.size();
                            tasks.push_back({{p, 0.0, g.detours.front(), g.seeds[s]}, {}});
                        }
                        tasks[*baseline_task].rows.push_back(row);
                    } else {
                        tasks.push_back({{p, theta, delta, g.seeds[s]}, {row}});
                    }
                }
            }
    std::vector<CellKey> row_keys;
    for (std::size_t p = 0; p < g.profiles.size(); ++p)
        for (std::size_t s = 0; s < g.seeds.size(); ++s)
            for (double theta : g.discounts)
                for (double delta : g.detours) row_keys.push_back({p, theta, delta, g.seeds[s]});

    auto seed_index = [&](std::uint64_t seed) {
        return static_cast<std::size_t>(std::find(g.seeds.begin(), g.seeds.end(), seed) - g.seeds.begin());
    };

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> runs{0};
    std::mutex write_mu;
    auto worker = [&] {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= tasks.size()) return;
            const auto& task = tasks[t];
            const auto& in = inst[task.key.profile];
            const auto si = seed_index(task.key.seed);
            try {
                if (!in.error[si].empty()) throw Error(in.error[si]);
                SimConfig cfg = g.base;
                cfg.seed = task.key.seed;
                cfg.max_detour = task.key.detour;
                cfg.pricing.discount = task.key.discount;
                cfg.pure_solo = task.key.discount == 0.0;
                std::optional<std::vector<double>> fleet_weights;
                if (g.profiles[task.key.profile].uniform_fleet) fleet_weights = uniform_weights(*in.data->net);
                auto res = run_simulation(cfg, in.orders[si], *in.data->router, elasticity, fleet_weights);
                ++runs;

                const int slots_n = std::max(1, static_cast<int>(std::ceil((cfg.horizon_end - cfg.horizon_start) / g.zone_slot_s)));
                ZoneGrid zg(*in.data->net, g.zone_rows, g.zone_cols, cfg.horizon_start, g.zone_slot_s, slots_n);
                auto zones = zone_loads(zg, res.records, res.fleet, cfg.vehicle_speed);
                auto by_class = zone_stats(zg, res.records, zones);

                if (opt.events_dir) {
                    const auto path = *opt.events_dir / (detail::cell_label(g, task.key) + ".jsonl");
                    std::ofstream os(path, std::ios::binary);
                    if (!os) throw Error("cannot write " + path.string());
                    res.log.write_jsonl(os);
                }
                std::lock_guard lock(write_mu);
                for (auto row : task.rows) slots[row] = CellResult{row_keys[row], res.metrics, by_class, zones};
            } catch (const std::exception& e) {
                std::lock_guard lock(write_mu);
                for (auto row : task.rows) slot_error[row] = e.what();
            }
        }
    };
    const int jobs = std::max(1, opt.jobs);
    if (jobs == 1) worker();
    else {
        std::vector<std::thread> pool;
        for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (std::size_t r = 0; r < slots.size(); ++r) {
        if (slots[r]) rep.rows.push_back(std::move(*slots[r]));
        else rep.failures.push_back({row_keys[r], slot_error[r]});
    }
    rep.runs = runs.load();
    return rep;
}

// Writes metrics.csv, zones.csv, failures.csv and manifest.json into `dir`.
inline void write_report(const std::filesystem::path& dir, const ExperimentGrid& g, const ExperimentReport& rep,
                         const Config& c) {
    std::filesystem::create_directories(dir);
    auto put = [&](const char* name, const std::string& text) {
        std::ofstream os(dir / name, std::ios::binary);
        if (!os) throw Error("cannot write " + (dir / name).string());
        os << text;
    };
    put("metrics.csv", metrics_csv(g, rep));
    put("zones.csv", zones_csv(g, rep));
    put("failures.csv", failures_csv(g, rep));
    put("manifest.json", manifest_json(g, rep, c));
}

} // namespace ridesim
