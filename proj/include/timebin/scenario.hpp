#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "timebin/montecarlo.hpp"

namespace timebin::cli {

enum class ScenarioKind { run, scan, sweep_d, sweep_mu, budget };

struct scenario_error : std::runtime_error {
    scenario_error(int line_, std::string key_, const std::string& message)
        : std::runtime_error(line_ > 0
                                 ? "line " + std::to_string(line_) + ": key '" + key_ +
                                       "': " + message
                                 : "key '" + key_ + "': " + message),
          line(line_),
          key(std::move(key_)) {}
    int line;
    std::string key;
};

// Declarative experiment description; strict key = value format, unknown
// keys rejected.
struct ScenarioFile {
    ScenarioKind kind = ScenarioKind::run;

    // pump train
    std::optional<int> d;
    double mu = 0.0;
    double phase_step = 0.0;
    double bin_spacing_ns = 13.0;
    double edge_attenuation = 1.0;

    // analyzer
    double delta_a = 0.0;
    double delta_b = 0.0;
    double t_s = 0.5;
    double t_l = 0.5;

    // noise + detection
    double phase_noise_sigma = 0.0;
    double eta_a = 1.0;
    double eta_b = 1.0;
    double dark_rate_a = 0.0;
    double dark_rate_b = 0.0;
    bool gated_b = false;
    double gate_width_ns = 1.0;

    // execution
    std::int64_t n_trains = 100000;
    double coincidence_window_ns = 1.0;
    std::uint64_t seed = 0;
    int n_phases = 12;
    double histogram_bin_ns = 1.0;
    bool export_records = false;

    // sweeps and budget
    std::vector<int> sweep_d;
    std::vector<double> sweep_mu;
    double v_residual = 1.0;
    std::optional<double> factor_dimension;
    std::optional<double> factor_multipair;
    std::optional<double> factor_misalign;
    std::optional<double> factor_phase_noise;
    std::optional<double> factor_residual;

    montecarlo::ExperimentConfig experiment_config() const;
};

ScenarioFile parse_scenario(const std::string& path);
ScenarioFile parse_scenario_text(const std::string& text);

struct ExecOptions {
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed_override;
    std::optional<std::int64_t> trains_override;
    int workers = 0;
    bool quiet = false;
};

// Runs the scenario and writes its CSV outputs plus manifest.json (config
// echo, wall time) and summary.json (deterministic results). Returns the
// list of files written.
std::vector<std::string> execute(const ScenarioFile& scenario, const ExecOptions& options);

} // namespace timebin::cli
