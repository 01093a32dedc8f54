// Command-line front end: simulate an experiment grid, tabulate revenue-ratio
// scenarios, render charts.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "ridesim/charts.hpp"
#include "ridesim/experiment.hpp"
#include "ridesim/scenario_grid.hpp"

namespace fs = std::filesystem;
using namespace ridesim;

namespace {

int cmd_simulate(const fs::path& config_path, bool emit_events, const fs::path& out_dir, int jobs) {
    Config cfg = Config::load(config_path);
    if (const char* env = std::getenv("SIM_SEED")) {
        if (!csv::to_int(env) || *csv::to_int(env) < 0) throw ConfigError("SIM_SEED must be a non-negative integer");
        cfg.set("grid.seeds", env);
    }
    const auto grid = parse_experiment(cfg);

    RunOptions opt;
    opt.jobs = jobs > 0 ? jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (emit_events) {
        opt.events_dir = out_dir / "events";
        fs::create_directories(*opt.events_dir);
    }
    const auto report = run_experiment_grid(grid, opt);
    write_report(out_dir, grid, report, cfg);

    std::cout << "runs: " << report.runs << ", rows: " << report.rows.size()
              << ", failed cells: " << report.failures.size() << "\n"
              << "results in " << out_dir.string() << "\n";
    for (const auto& f : report.failures)
        std::cerr << "cell failed: " << grid.profiles[f.key.profile].name << " discount=" << f.key.discount
                  << " detour=" << f.key.detour << " seed=" << f.key.seed << ": " << f.error << "\n";
    return report.failures.empty() ? 0 : 1;
}

int cmd_scenario(const std::optional<fs::path>& grid_path, const fs::path& out_dir) {
    scenario::SurfaceGrid g;
    if (grid_path) g = scenario::parse_surface_grid(Config::load(*grid_path));
    g.validate();
    fs::create_directories(out_dir);
    std::ofstream(out_dir / "scenario.csv", std::ios::binary) << scenario::surface_csv(g);
    std::ofstream(out_dir / "scenario.svg", std::ios::binary) << scenario::surface_svg(g);
    std::cout << "wrote " << (out_dir / "scenario.csv").string() << " and scenario.svg\n";
    return 0;
}

int cmd_charts(const fs::path& in, const fs::path& out_dir) {
    const auto table = read_metrics_csv(in.string());
    const auto summary = render_charts(table, out_dir);
    for (const auto& w : summary.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "wrote " << summary.files.size() << " charts to " << out_dir.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ride-hailing simulator with mixed solo and shared service"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "Run every cell of an experiment grid");
    fs::path config, sim_out = "results";
    bool emit_events = false;
    int jobs = 0;
    sim->add_option("--config", config, "Experiment config file")->required()->check(CLI::ExistingFile);
    sim->add_flag("--emit-events", emit_events, "Write one events JSONL file per run");
    sim->add_option("--out", sim_out, "Output directory");
    sim->add_option("--jobs", jobs, "Parallel runs (default: hardware threads)")->check(CLI::NonNegativeNumber);

    auto* sc = app.add_subcommand("scenario", "Tabulate the share/solo revenue ratio");
    std::optional<fs::path> grid;
    fs::path sc_out = ".";
    sc->add_option("--grid", grid, "Scenario grid file (defaults apply when omitted)")->check(CLI::ExistingFile);
    sc->add_option("--out", sc_out, "Output directory");

    auto* ch = app.add_subcommand("charts", "Render SVG charts from metrics.csv");
    fs::path charts_in, charts_out = "charts";
    ch->add_option("--in", charts_in, "metrics.csv produced by simulate")->required()->check(CLI::ExistingFile);
    ch->add_option("--out", charts_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        if (sim->parsed()) return cmd_simulate(config, emit_events, sim_out, jobs);
        if (sc->parsed()) return cmd_scenario(grid, sc_out);
        if (ch->parsed()) return cmd_charts(charts_in, charts_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
