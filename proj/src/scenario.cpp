#include "timebin/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "timebin/analysis.hpp"
#include "timebin/noise.hpp"

namespace timebin::cli {

namespace {

using json = nlohmann::json;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct RawEntry {
    int line;
    std::string value;
};

class KeyTable {
public:
    void insert(int line, const std::string& key, const std::string& value) {
        if (entries_.count(key))
            throw scenario_error(line, key, "duplicate key");
        entries_[key] = {line, value};
    }

    std::optional<RawEntry> take(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        RawEntry e = it->second;
        entries_.erase(it);
        return e;
    }

    void reject_leftovers() const {
        if (!entries_.empty()) {
            const auto& [key, e] = *entries_.begin();
            throw scenario_error(e.line, key, "unknown key");
        }
    }

private:
    std::map<std::string, RawEntry> entries_;
};

double parse_double(const RawEntry& e, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw scenario_error(e.line, key, "expected a number, got '" + e.value + "'");
    }
}

std::int64_t parse_int(const RawEntry& e, const std::string& key) {
    try {
        std::size_t pos = 0;
        const std::int64_t v = std::stoll(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw scenario_error(e.line, key, "expected an integer, got '" + e.value + "'");
    }
}

std::uint64_t parse_u64(const RawEntry& e, const std::string& key) {
    try {
        std::size_t pos = 0;
        const std::uint64_t v = std::stoull(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw scenario_error(e.line, key, "expected an unsigned integer, got '" + e.value + "'");
    }
}

bool parse_bool(const RawEntry& e, const std::string& key) {
    if (e.value == "true" || e.value == "1") return true;
    if (e.value == "false" || e.value == "0") return false;
    throw scenario_error(e.line, key, "expected true/false, got '" + e.value + "'");
}

template <typename T, typename Fn>
std::vector<T> parse_list(const RawEntry& e, const std::string& key, Fn parse_one) {
    std::vector<T> out;
    std::stringstream ss(e.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw scenario_error(e.line, key, "empty list element");
        out.push_back(parse_one(RawEntry{e.line, item}, key));
    }
    if (out.empty()) throw scenario_error(e.line, key, "empty list");
    return out;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::vector<double> phase_grid(int n_phases) {
    std::vector<double> theta(n_phases);
    for (int i = 0; i < n_phases; ++i)
        theta[i] = 2.0 * M_PI * i / n_phases;
    return theta;
}

double mean_dark_level(const montecarlo::ScanResult& scan) {
    if (scan.counts_dark.empty()) return 0.0;
    double s = 0.0;
    for (auto c : scan.counts_dark) s += static_cast<double>(c);
    return s / static_cast<double>(scan.counts_dark.size());
}

} // namespace

montecarlo::ExperimentConfig ScenarioFile::experiment_config() const {
    if (!d) throw scenario_error(0, "d", "required for this scenario kind");
    montecarlo::ExperimentConfig cfg;
    cfg.train = edge_attenuation < 1.0
                    ? qstate::make_envelope_train(*d, phase_step, mu, bin_spacing_ns,
                                                  edge_attenuation)
                    : qstate::make_uniform_train(*d, phase_step, mu, bin_spacing_ns);
    cfg.analyzer.delta_a = delta_a;
    cfg.analyzer.delta_b = delta_b;
    cfg.analyzer.t_s = t_s;
    cfg.analyzer.t_l = t_l;
    cfg.phase_noise_sigma = phase_noise_sigma;
    cfg.detector_a.efficiency = eta_a;
    cfg.detector_a.dark_rate = dark_rate_a;
    cfg.detector_b.efficiency = eta_b;
    cfg.detector_b.dark_rate = dark_rate_b;
    cfg.detector_b.gated = gated_b;
    cfg.detector_b.gate_width_ns = gate_width_ns;
    cfg.n_trains = n_trains;
    cfg.coincidence_window_ns = coincidence_window_ns;
    cfg.seed = seed;
    return cfg;
}

ScenarioFile parse_scenario_text(const std::string& text) {
    KeyTable keys;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw scenario_error(lineno, line, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw scenario_error(lineno, key.empty() ? line : key, "expected 'key = value'");
        keys.insert(lineno, key, value);
    }

    ScenarioFile s;

    const auto kind = keys.take("kind");
    if (!kind) throw scenario_error(0, "kind", "missing required key");
    if (kind->value == "run") s.kind = ScenarioKind::run;
    else if (kind->value == "scan") s.kind = ScenarioKind::scan;
    else if (kind->value == "sweep-d") s.kind = ScenarioKind::sweep_d;
    else if (kind->value == "sweep-mu") s.kind = ScenarioKind::sweep_mu;
    else if (kind->value == "budget") s.kind = ScenarioKind::budget;
    else
        throw scenario_error(kind->line, "kind",
                             "must be one of run, scan, sweep-d, sweep-mu, budget");

    auto take_double = [&](const char* key, double& dst) {
        if (auto e = keys.take(key)) dst = parse_double(*e, key);
    };
    auto take_bool = [&](const char* key, bool& dst) {
        if (auto e = keys.take(key)) dst = parse_bool(*e, key);
    };

    int d_line = 0;
    if (auto e = keys.take("d")) {
        d_line = e->line;
        const auto v = parse_int(*e, "d");
        if (v < 1) throw scenario_error(e->line, "d", "constraint violated: d >= 1");
        if (v > 4096) throw scenario_error(e->line, "d", "constraint violated: d <= 4096");
        s.d = static_cast<int>(v);
    }
    int mu_line = 0;
    if (auto e = keys.take("mu")) {
        mu_line = e->line;
        s.mu = parse_double(*e, "mu");
        if (s.mu < 0.0) throw scenario_error(e->line, "mu", "constraint violated: mu >= 0");
    }
    take_double("phase_step", s.phase_step);
    if (auto e = keys.take("bin_spacing_ns")) {
        s.bin_spacing_ns = parse_double(*e, "bin_spacing_ns");
        if (!(s.bin_spacing_ns > 0.0))
            throw scenario_error(e->line, "bin_spacing_ns", "constraint violated: > 0");
    }
    if (auto e = keys.take("edge_attenuation")) {
        s.edge_attenuation = parse_double(*e, "edge_attenuation");
        if (!(s.edge_attenuation > 0.0) || s.edge_attenuation > 1.0)
            throw scenario_error(e->line, "edge_attenuation",
                                 "constraint violated: in (0, 1]");
    }
    take_double("delta_a", s.delta_a);
    take_double("delta_b", s.delta_b);
    take_double("t_s", s.t_s);
    take_double("t_l", s.t_l);
    if (auto e = keys.take("phase_noise_sigma")) {
        s.phase_noise_sigma = parse_double(*e, "phase_noise_sigma");
        if (s.phase_noise_sigma < 0.0)
            throw scenario_error(e->line, "phase_noise_sigma", "constraint violated: >= 0");
    }
    for (auto [key, dst] : {std::pair<const char*, double*>{"eta_a", &s.eta_a},
                            {"eta_b", &s.eta_b}}) {
        if (auto e = keys.take(key)) {
            *dst = parse_double(*e, key);
            if (*dst < 0.0 || *dst > 1.0)
                throw scenario_error(e->line, key, "constraint violated: in [0, 1]");
        }
    }
    take_double("dark_rate_a", s.dark_rate_a);
    take_double("dark_rate_b", s.dark_rate_b);
    take_bool("gated_b", s.gated_b);
    take_double("gate_width_ns", s.gate_width_ns);
    if (auto e = keys.take("n_trains")) {
        s.n_trains = parse_int(*e, "n_trains");
        if (s.n_trains < 1)
            throw scenario_error(e->line, "n_trains", "constraint violated: n_trains >= 1");
    }
    take_double("coincidence_window_ns", s.coincidence_window_ns);
    if (auto e = keys.take("seed")) s.seed = parse_u64(*e, "seed");
    if (auto e = keys.take("n_phases")) {
        const auto v = parse_int(*e, "n_phases");
        if (v < 3)
            throw scenario_error(e->line, "n_phases", "constraint violated: n_phases >= 3");
        s.n_phases = static_cast<int>(v);
    }
    take_double("histogram_bin_ns", s.histogram_bin_ns);
    take_bool("export_records", s.export_records);
    if (auto e = keys.take("sweep_d")) {
        s.sweep_d.clear();
        for (auto v : parse_list<std::int64_t>(*e, "sweep_d", parse_int)) {
            if (v < 1) throw scenario_error(e->line, "sweep_d", "constraint violated: d >= 1");
            s.sweep_d.push_back(static_cast<int>(v));
        }
    }
    if (auto e = keys.take("sweep_mu")) {
        s.sweep_mu = parse_list<double>(*e, "sweep_mu", parse_double);
        for (double v : s.sweep_mu)
            if (v < 0.0)
                throw scenario_error(e->line, "sweep_mu", "constraint violated: mu >= 0");
    }
    if (auto e = keys.take("v_residual")) {
        s.v_residual = parse_double(*e, "v_residual");
        if (s.v_residual < 0.0 || s.v_residual > 1.0)
            throw scenario_error(e->line, "v_residual", "constraint violated: in [0, 1]");
    }
    for (auto [key, dst] :
         {std::pair<const char*, std::optional<double>*>{"factor_dimension", &s.factor_dimension},
          {"factor_multipair", &s.factor_multipair},
          {"factor_misalign", &s.factor_misalign},
          {"factor_phase_noise", &s.factor_phase_noise},
          {"factor_residual", &s.factor_residual}}) {
        if (auto e = keys.take(key)) {
            const double v = parse_double(*e, key);
            if (v < 0.0 || v > 1.0)
                throw scenario_error(e->line, key, "constraint violated: in [0, 1]");
            *dst = v;
        }
    }

    keys.reject_leftovers();

    // cross-key constraints
    switch (s.kind) {
        case ScenarioKind::run:
        case ScenarioKind::scan:
            if (!s.d) throw scenario_error(0, "d", "required for kind run/scan");
            break;
        case ScenarioKind::sweep_d:
            if (s.sweep_d.empty())
                throw scenario_error(0, "sweep_d", "required for kind sweep-d");
            if (s.d)
                throw scenario_error(d_line, "d",
                                     "conflicts with sweep_d (the sweep sets d per point)");
            break;
        case ScenarioKind::sweep_mu:
            if (s.sweep_mu.empty())
                throw scenario_error(0, "sweep_mu", "required for kind sweep-mu");
            if (!s.d) throw scenario_error(0, "d", "required for kind sweep-mu");
            if (mu_line)
                throw scenario_error(mu_line, "mu",
                                     "conflicts with sweep_mu (the sweep sets mu per point)");
            break;
        case ScenarioKind::budget:
            break;
    }
    if (!s.sweep_d.empty() && s.kind != ScenarioKind::sweep_d)
        throw scenario_error(0, "sweep_d", "only valid for kind sweep-d");
    if (!s.sweep_mu.empty() && s.kind != ScenarioKind::sweep_mu)
        throw scenario_error(0, "sweep_mu", "only valid for kind sweep-mu");
    return s;
}

ScenarioFile parse_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw scenario_error(0, path, "cannot open scenario file");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str());
}

namespace {

json scenario_echo(const ScenarioFile& s) {
    json j;
    switch (s.kind) {
        case ScenarioKind::run: j["kind"] = "run"; break;
        case ScenarioKind::scan: j["kind"] = "scan"; break;
        case ScenarioKind::sweep_d: j["kind"] = "sweep-d"; break;
        case ScenarioKind::sweep_mu: j["kind"] = "sweep-mu"; break;
        case ScenarioKind::budget: j["kind"] = "budget"; break;
    }
    if (s.d) j["d"] = *s.d;
    j["mu"] = s.mu;
    j["phase_step"] = s.phase_step;
    j["bin_spacing_ns"] = s.bin_spacing_ns;
    j["edge_attenuation"] = s.edge_attenuation;
    j["delta_a"] = s.delta_a;
    j["delta_b"] = s.delta_b;
    j["t_s"] = s.t_s;
    j["t_l"] = s.t_l;
    j["phase_noise_sigma"] = s.phase_noise_sigma;
    j["eta_a"] = s.eta_a;
    j["eta_b"] = s.eta_b;
    j["dark_rate_a"] = s.dark_rate_a;
    j["dark_rate_b"] = s.dark_rate_b;
    j["gated_b"] = s.gated_b;
    j["gate_width_ns"] = s.gate_width_ns;
    j["n_trains"] = s.n_trains;
    j["coincidence_window_ns"] = s.coincidence_window_ns;
    j["seed"] = s.seed;
    j["n_phases"] = s.n_phases;
    j["histogram_bin_ns"] = s.histogram_bin_ns;
    j["export_records"] = s.export_records;
    if (!s.sweep_d.empty()) j["sweep_d"] = s.sweep_d;
    if (!s.sweep_mu.empty()) j["sweep_mu"] = s.sweep_mu;
    j["v_residual"] = s.v_residual;
    if (s.factor_dimension) j["factor_dimension"] = *s.factor_dimension;
    if (s.factor_multipair) j["factor_multipair"] = *s.factor_multipair;
    if (s.factor_misalign) j["factor_misalign"] = *s.factor_misalign;
    if (s.factor_phase_noise) j["factor_phase_noise"] = *s.factor_phase_noise;
    if (s.factor_residual) j["factor_residual"] = *s.factor_residual;
    return j;
}

class OutputWriter {
public:
    explicit OutputWriter(const std::string& dir) : dir_(dir) {
        std::filesystem::create_directories(dir_);
    }

    std::ofstream open(const std::string& name) {
        const auto path = dir_ / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write output file: " + path.string());
        written_.push_back(path.string());
        return out;
    }

    const std::vector<std::string>& written() const { return written_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> written_;
};

} // namespace

std::vector<std::string> execute(const ScenarioFile& scenario_in, const ExecOptions& options) {
    const auto t_start = std::chrono::steady_clock::now();

    ScenarioFile scenario = scenario_in;
    if (options.seed_override) scenario.seed = *options.seed_override;
    if (options.trains_override) {
        if (*options.trains_override < 1)
            throw scenario_error(0, "n_trains", "constraint violated: n_trains >= 1");
        scenario.n_trains = *options.trains_override;
    }

    OutputWriter out(options.out_dir);
    json summary;
    const auto thetas = phase_grid(scenario.n_phases);

    auto configure = [&](int d, double mu) {
        ScenarioFile point = scenario;
        point.d = d;
        point.mu = mu;
        auto cfg = point.experiment_config();
        cfg.workers = options.workers;
        return cfg;
    };

    switch (scenario.kind) {
        case ScenarioKind::run: {
            auto cfg = scenario.experiment_config();
            cfg.workers = options.workers;
            const auto res = montecarlo::run_experiment(cfg, scenario.export_records, 0,
                                                        scenario.histogram_bin_ns);
            {
                auto f = out.open("histogram.csv");
                f << "dt_ns,count\n";
                for (std::size_t i = 0; i < res.histogram.counts.size(); ++i)
                    f << fmt(res.histogram.bin_center(i)) << ',' << res.histogram.counts[i]
                      << '\n';
            }
            if (scenario.export_records) {
                auto f = out.open("records.csv");
                f << "train_index,t_a_ns,t_b_ns,origin\n";
                for (const auto& r : res.records)
                    f << r.train_index << ',' << fmt(r.t_a_ns) << ',' << fmt(r.t_b_ns) << ','
                      << montecarlo::to_string(r.origin) << '\n';
            }
            summary["windowed_counts"] = {{"dt0", res.win0},
                                          {"dt0_self", res.win0_self},
                                          {"dt0_cross", res.win0_cross},
                                          {"dt0_dark", res.win0_dark},
                                          {"side_minus", res.win_side_minus},
                                          {"side_plus", res.win_side_plus},
                                          {"far_minus", res.win_far_minus},
                                          {"far_plus", res.win_far_plus}};
            summary["pairs_generated"] = res.pairs_generated;
            break;
        }
        case ScenarioKind::scan: {
            auto cfg = scenario.experiment_config();
            cfg.workers = options.workers;
            const auto scan = montecarlo::scan_phase(cfg, thetas);
            {
                auto f = out.open("scan.csv");
                f << "theta_rad,counts,exposure\n";
                for (std::size_t i = 0; i < scan.theta.size(); ++i)
                    f << fmt(scan.theta[i]) << ',' << scan.counts[i] << ',' << scan.exposure
                      << '\n';
            }
            auto fringe = analysis::to_fringe_scan(scan);
            fringe.accidental_level = mean_dark_level(scan);
            const auto fit = analysis::fit_fringe(fringe);
            const auto net = analysis::net_visibility(fit, fringe.accidental_level);
            json fit_json = {{"visibility", fit.visibility},
                             {"visibility_err", fit.visibility_err},
                             {"phase_offset", fit.phase_offset},
                             {"mean_level", fit.mean_level},
                             {"accidentals", fringe.accidental_level},
                             {"reduced_chisq", fit.reduced_chisq},
                             {"net_visibility", net.value},
                             {"net_visibility_err", net.err}};
            out.open("fit.json") << fit_json.dump(2) << '\n';
            summary["fit"] = fit_json;
            break;
        }
        case ScenarioKind::sweep_d: {
            auto f = out.open("sweep_d.csv");
            f << "d,V_net,V_err,V_eq4_prediction\n";
            double num = 0.0, den = 0.0;
            const double v_static =
                noise::visibility_misalignment(scenario.t_s, scenario.t_l) *
                noise::visibility_phase_noise(1.0, scenario.phase_noise_sigma, 1) *
                scenario.v_residual;
            for (int d : scenario.sweep_d) {
                const auto cfg = configure(d, scenario.mu);
                const auto scan = montecarlo::scan_phase(cfg, thetas);
                auto fringe = analysis::to_fringe_scan(scan);
                fringe.accidental_level = mean_dark_level(scan);
                const auto fit = analysis::fit_fringe(fringe);
                const auto net = analysis::net_visibility(fit, fringe.accidental_level);
                const double x = noise::analytic_visibility_d(d, 1.0);
                const double pred =
                    x * v_static * noise::visibility_multipair(scenario.mu, d, 1.0);
                f << d << ',' << fmt(net.value) << ',' << fmt(net.err) << ',' << fmt(pred)
                  << '\n';
                if (net.err > 0.0) {
                    const double w = 1.0 / (net.err * net.err);
                    num += w * x * net.value;
                    den += w * x * x;
                }
            }
            if (den > 0.0) {
                summary["v_max_fit"] = num / den;
                summary["v_max_fit_err"] = 1.0 / std::sqrt(den);
            }
            break;
        }
        case ScenarioKind::sweep_mu: {
            auto f = out.open("sweep_mu.csv");
            f << "mu,V_net,V_err,V_eq7_prediction\n";
            const double v_base =
                noise::analytic_visibility_d(*scenario.d, 1.0) *
                noise::visibility_misalignment(scenario.t_s, scenario.t_l) *
                noise::visibility_phase_noise(1.0, scenario.phase_noise_sigma, 1) *
                scenario.v_residual;
            for (double mu : scenario.sweep_mu) {
                const auto cfg = configure(*scenario.d, mu);
                const auto scan = montecarlo::scan_phase(cfg, thetas);
                auto fringe = analysis::to_fringe_scan(scan);
                fringe.accidental_level = mean_dark_level(scan);
                const auto fit = analysis::fit_fringe(fringe);
                const auto net = analysis::net_visibility(fit, fringe.accidental_level);
                const double pred = noise::visibility_multipair(mu, *scenario.d, v_base);
                f << fmt(mu) << ',' << fmt(net.value) << ',' << fmt(net.err) << ','
                  << fmt(pred) << '\n';
            }
            break;
        }
        case ScenarioKind::budget: {
            noise::VisibilityBudget b;
            if (scenario.d)
                b = noise::visibility_budget(*scenario.d, scenario.mu, scenario.t_s,
                                             scenario.t_l, scenario.phase_noise_sigma,
                                             scenario.v_residual);
            b = noise::budget_from_factors(
                scenario.factor_dimension.value_or(b.v_d),
                scenario.factor_multipair.value_or(b.v_multipair),
                scenario.factor_misalign.value_or(b.v_misalign),
                scenario.factor_phase_noise.value_or(b.v_phase_noise),
                scenario.factor_residual.value_or(scenario.d ? b.v_residual
                                                             : scenario.v_residual));
            auto f = out.open("budget.csv");
            f << "v_d,v_multipair,v_misalign,v_phase_noise,v_residual,v_total,v_max\n";
            f << fmt(b.v_d) << ',' << fmt(b.v_multipair) << ',' << fmt(b.v_misalign) << ','
              << fmt(b.v_phase_noise) << ',' << fmt(b.v_residual) << ',' << fmt(b.v_total)
              << ',' << fmt(b.v_max()) << '\n';
            summary["budget"] = {{"v_d", b.v_d},
                                 {"v_multipair", b.v_multipair},
                                 {"v_misalign", b.v_misalign},
                                 {"v_phase_noise", b.v_phase_noise},
                                 {"v_residual", b.v_residual},
                                 {"v_total", b.v_total},
                                 {"v_max", b.v_max()}};
            break;
        }
    }

    if (!summary.empty())
        out.open("summary.json") << summary.dump(2) << '\n';

    const auto t_end = std::chrono::steady_clock::now();
    json manifest;
    manifest["tool"] = "timebin";
    manifest["version"] = "0.1.0";
    manifest["seed"] = scenario.seed;
    manifest["scenario"] = scenario_echo(scenario);
    manifest["workers"] = options.workers;
    if (options.seed_override) manifest["seed_override"] = *options.seed_override;
    if (options.trains_override) manifest["trains_override"] = *options.trains_override;
    manifest["wall_time_s"] =
        std::chrono::duration<double>(t_end - t_start).count();
    out.open("manifest.json") << manifest.dump(2) << '\n';

    if (!options.quiet) {
        for (const auto& path : out.written()) std::cout << "wrote " << path << '\n';
        if (summary.contains("v_max_fit"))
            std::cout << "V_max fit: " << summary["v_max_fit"].get<double>() << " +- "
                      << summary["v_max_fit_err"].get<double>() << '\n';
        if (summary.contains("budget"))
            std::cout << "budget v_total: " << summary["budget"]["v_total"].get<double>()
                      << " (imperfections only: " << summary["budget"]["v_max"].get<double>()
                      << ")\n";
    }
    return out.written();
}

} // namespace timebin::cli
