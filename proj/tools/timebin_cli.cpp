#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "timebin/scenario.hpp"

int main(int argc, char** argv) {
    CLI::App app{"time-bin entanglement simulator"};
    app.set_version_flag("--version", "timebin 0.1.0");

    std::string scenario_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> trains;
    int workers = 0;
    bool quiet = false;

    app.add_option("--scenario", scenario_path, "scenario file (key = value lines)")
        ->required();
    app.add_option("--out", out_dir, "output directory (created if missing)");
    app.add_option("--seed", seed, "override the scenario seed");
    app.add_option("--trains", trains, "override the trains per phase point");
    app.add_option("--workers", workers, "worker threads (0 = hardware concurrency)")
        ->check(CLI::NonNegativeNumber);
    app.add_flag("--quiet", quiet, "suppress progress output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 2 : 0;
    }

    timebin::cli::ScenarioFile scenario;
    try {
        scenario = timebin::cli::parse_scenario(scenario_path);
    } catch (const timebin::cli::scenario_error& e) {
        std::cerr << "error: scenario: " << scenario_path << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: scenario: " << scenario_path << ": " << e.what() << '\n';
        return 2;
    }

    timebin::cli::ExecOptions options;
    options.out_dir = out_dir;
    options.seed_override = seed;
    options.trains_override = trains;
    options.workers = workers;
    options.quiet = quiet;

    try {
        timebin::cli::execute(scenario, options);
    } catch (const timebin::cli::scenario_error& e) {
        std::cerr << "error: config: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: config: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: runtime: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
