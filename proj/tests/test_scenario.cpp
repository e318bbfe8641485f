#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "timebin/scenario.hpp"

using namespace timebin::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("timebin_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(TIMEBIN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

} // namespace

TEST_CASE("minimal scan scenario fills documented defaults") {
    const auto s = parse_scenario_text("kind = scan\nd = 4\n");
    CHECK(s.kind == ScenarioKind::scan);
    CHECK(*s.d == 4);
    CHECK(s.mu == 0.0);
    CHECK(s.bin_spacing_ns == 13.0);
    CHECK(s.t_s == 0.5);
    CHECK(s.t_l == 0.5);
    CHECK(s.eta_a == 1.0);
    CHECK(s.n_trains == 100000);
    CHECK(s.n_phases == 12);
    CHECK(s.seed == 0);
    CHECK_FALSE(s.gated_b);
}

TEST_CASE("comments and spacing are tolerated") {
    const auto s = parse_scenario_text(
        "# fringe scan\n"
        "kind = scan   # trailing comment\n"
        "\n"
        "  d=3\n"
        "mu = 0.25\n");
    CHECK(*s.d == 3);
    CHECK(s.mu == 0.25);
}

TEST_CASE("unknown keys are rejected with line and key") {
    try {
        parse_scenario_text("kind = run\nd = 2\nbogus_knob = 7\n");
        FAIL("expected scenario_error");
    } catch (const scenario_error& e) {
        CHECK(e.line == 3);
        CHECK(e.key == "bogus_knob");
    }
}

TEST_CASE("constraint violations name the key") {
    try {
        parse_scenario_text("kind = run\nd = 0\n");
        FAIL("expected scenario_error");
    } catch (const scenario_error& e) {
        CHECK(e.key == "d");
        CHECK(std::string(e.what()).find("d >= 1") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_scenario_text("kind = run\nd = 2\nmu = -1\n"), scenario_error);
    CHECK_THROWS_AS(parse_scenario_text("kind = run\nd = 2\neta_a = 1.5\n"), scenario_error);
    CHECK_THROWS_AS(parse_scenario_text("kind = run\nd = two\n"), scenario_error);
    CHECK_THROWS_AS(parse_scenario_text("kind = orbit\n"), scenario_error);
    CHECK_THROWS_AS(parse_scenario_text("kind = run\nd = 2\nd = 3\n"), scenario_error);
    CHECK_THROWS_AS(parse_scenario_text("kind = run\nd 2\n"), scenario_error);
}

TEST_CASE("kind-specific requirements") {
    CHECK_THROWS_AS(parse_scenario_text("kind = run\n"), scenario_error); // d missing
    CHECK_THROWS_AS(parse_scenario_text("kind = sweep-d\n"), scenario_error);
    CHECK_THROWS_AS(parse_scenario_text("kind = sweep-mu\nd = 4\n"), scenario_error);
    // fixed d conflicts with a d sweep
    try {
        parse_scenario_text("kind = sweep-d\nsweep_d = 2, 4\nd = 3\n");
        FAIL("expected scenario_error");
    } catch (const scenario_error& e) {
        CHECK(e.key == "d");
    }
    CHECK_THROWS_AS(parse_scenario_text("kind = sweep-mu\nd = 4\nsweep_mu = 0.1\nmu = 0.2\n"),
                    scenario_error);
    CHECK_THROWS_AS(parse_scenario_text("kind = run\nd = 2\nsweep_mu = 0.1, 0.2\n"),
                    scenario_error);
    const auto s = parse_scenario_text("kind = sweep-d\nsweep_d = 2, 5, 8\n");
    CHECK(s.sweep_d == std::vector<int>{2, 5, 8});
}

TEST_CASE("budget scenario writes the factor table") {
    const auto dir = fresh_dir("budget");
    const auto s = parse_scenario_text(
        "kind = budget\n"
        "factor_multipair = 0.97\n"
        "factor_misalign = 0.96\n"
        "factor_phase_noise = 0.99\n");
    ExecOptions opt;
    opt.out_dir = dir.string();
    opt.quiet = true;
    const auto files = execute(s, opt);
    CHECK(files.size() == 3); // budget.csv, summary.json, manifest.json

    const auto csv = slurp(dir / "budget.csv");
    CHECK(csv.find("v_d,v_multipair,v_misalign,v_phase_noise,v_residual,v_total,v_max") !=
          std::string::npos);
    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary["budget"]["v_max"].get<double>() == doctest::Approx(0.921888));
    fs::remove_all(dir);
}

TEST_CASE("run scenario writes histogram and records") {
    const auto dir = fresh_dir("run");
    const auto s = parse_scenario_text(
        "kind = run\n"
        "d = 3\n"
        "mu = 0.1\n"
        "n_trains = 5000\n"
        "seed = 5\n"
        "export_records = true\n");
    ExecOptions opt;
    opt.out_dir = dir.string();
    opt.quiet = true;
    execute(s, opt);
    CHECK(fs::exists(dir / "histogram.csv"));
    CHECK(fs::exists(dir / "records.csv"));
    CHECK(fs::exists(dir / "manifest.json"));
    const auto records = slurp(dir / "records.csv");
    CHECK(records.rfind("train_index,t_a_ns,t_b_ns,origin", 0) == 0);
    CHECK(records.find(",self") != std::string::npos);
    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary["windowed_counts"]["dt0"].get<std::int64_t>() > 0);
    fs::remove_all(dir);
}

TEST_CASE("scan output is byte-identical across worker counts") {
    const auto s = parse_scenario_text(
        "kind = scan\n"
        "d = 4\n"
        "mu = 0.2\n"
        "phase_noise_sigma = 0.1\n"
        "dark_rate_a = 0.001\n"
        "dark_rate_b = 0.001\n"
        "n_trains = 4096\n"
        "n_phases = 6\n"
        "seed = 77\n");
    const auto dir1 = fresh_dir("scan_w1");
    const auto dir4 = fresh_dir("scan_w4");
    ExecOptions opt;
    opt.quiet = true;
    opt.out_dir = dir1.string();
    opt.workers = 1;
    execute(s, opt);
    opt.out_dir = dir4.string();
    opt.workers = 4;
    execute(s, opt);
    CHECK(slurp(dir1 / "scan.csv") == slurp(dir4 / "scan.csv"));
    CHECK(slurp(dir1 / "fit.json") == slurp(dir4 / "fit.json"));
    CHECK(slurp(dir1 / "summary.json") == slurp(dir4 / "summary.json"));
    fs::remove_all(dir1);
    fs::remove_all(dir4);
}

TEST_CASE("overrides replace scenario values and land in the manifest") {
    const auto dir = fresh_dir("override");
    const auto s = parse_scenario_text("kind = run\nd = 2\nmu = 0.05\nn_trains = 50000\n");
    ExecOptions opt;
    opt.out_dir = dir.string();
    opt.quiet = true;
    opt.seed_override = 123;
    opt.trains_override = 2000;
    execute(s, opt);
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["seed"].get<std::uint64_t>() == 123);
    CHECK(manifest["scenario"]["n_trains"].get<std::int64_t>() == 2000);
    CHECK(manifest["trains_override"].get<std::int64_t>() == 2000);
    CHECK(manifest.contains("wall_time_s"));
    fs::remove_all(dir);
}

TEST_CASE("cli exit codes") {
    const auto dir = fresh_dir("cli");
    const auto good = dir / "good.scn";
    const auto bad_key = dir / "bad_key.scn";
    const auto bad_value = dir / "bad_value.scn";
    spit(good, "kind = budget\nfactor_multipair = 0.97\n");
    spit(bad_key, "kind = budget\nnope = 1\n");
    spit(bad_value, "kind = run\nd = 0\n");

    CHECK(run_cli("--scenario " + good.string() + " --out " + (dir / "out").string() +
                  " --quiet") == 0);
    CHECK(run_cli("--scenario " + bad_key.string()) == 2);
    CHECK(run_cli("--scenario " + bad_value.string()) == 2);
    CHECK(run_cli("--scenario " + (dir / "missing.scn").string()) == 2);
    CHECK(run_cli("") == 2); // --scenario is required
    CHECK(fs::exists(dir / "out" / "budget.csv"));
    fs::remove_all(dir);
}

TEST_CASE("cli runs a small sweep end to end") {
    const auto dir = fresh_dir("cli_sweep");
    spit(dir / "sweep.scn",
         "kind = sweep-mu\n"
         "d = 4\n"
         "sweep_mu = 0.1, 0.3\n"
         "n_trains = 3000\n"
         "n_phases = 6\n"
         "seed = 9\n");
    CHECK(run_cli("--scenario " + (dir / "sweep.scn").string() + " --out " +
                  (dir / "out").string() + " --trains 2000 --quiet") == 0);
    const auto csv = slurp(dir / "out" / "sweep_mu.csv");
    CHECK(csv.rfind("mu,V_net,V_err,V_eq7_prediction", 0) == 0);
    // header plus one row per mu
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    fs::remove_all(dir);
}
