#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mtmfg/runner.hpp"

using namespace mtmfg;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Coarse 1-D scenario that exercises every run mode quickly.
Scenario tiny_scenario(double alpha) {
    const json j = json::parse(R"({
      "domain": {"shape": "interval", "a": 0.0, "b": 1.0},
      "target": {"region": "points", "points": [[0.0]]},
      "congestion": {"kernel": "tent", "kernel_radius": 0.2,
                     "k_min": 0.5, "k_max": 1.0, "alpha": 0.0},
      "initial_mass": {"mode": "uniform_box", "box_min": [0.4], "box_max": [0.6],
                       "count": 24, "seed": 3},
      "grid": {"dx": 0.02},
      "equilibrium": {"max_iterations": 10, "tol_displacement": 0.02,
                      "tol_optimality": 0.1}
    })");
    std::vector<std::string> errors;
    Scenario s = scenario_from_json(j, false, &errors);
    REQUIRE(errors.empty());
    s.law.alpha = alpha;
    return s;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("run modes produce complete artifact directories") {
    RunOptions opt;
    opt.threads = 1;

    SUBCASE("solve-ocp") {
        Scenario s = tiny_scenario(0.0);
        s.output.dump_value_field = true;
        s.output.dump_trajectories = true;
        s.output.csv_slices = true;
        opt.mode = RunMode::kSolveOcp;
        opt.out_dir = fresh_dir("mtmfg_run_ocp").string();
        const RunOutput out = run_scenario(s, opt);
        CHECK(out.metrics["arrival"]["reached"].get<int>() == 24);
        CHECK(out.metrics["arrival"]["max_abs_tau_minus_phi"].get<double>() <= 0.1);
        CHECK(fs::exists(fs::path(opt.out_dir) / "manifest.json"));
        CHECK(fs::exists(fs::path(opt.out_dir) / "metrics.json"));
        CHECK(fs::exists(fs::path(opt.out_dir) / "timings.json"));
        CHECK(fs::exists(fs::path(opt.out_dir) / "value_field.mfgb"));
        CHECK(fs::exists(fs::path(opt.out_dir) / "trajectories.json"));
        CHECK(fs::exists(fs::path(opt.out_dir) / "phi_slice_0.csv"));
        fs::remove_all(opt.out_dir);
    }

    SUBCASE("equilibrium with per-iteration dumps") {
        Scenario s = tiny_scenario(0.3);
        s.output.per_iteration_dumps = true;
        opt.mode = RunMode::kEquilibrium;
        opt.out_dir = fresh_dir("mtmfg_run_eq").string();
        const RunOutput out = run_scenario(s, opt);
        CHECK(out.metrics["verdict"].get<std::string>() == "converged");
        CHECK(out.metrics["iterations"].get<int>() >= 1);
        CHECK(fs::exists(fs::path(opt.out_dir) / "value_iter_1.mfgb"));
        fs::remove_all(opt.out_dir);
    }

    SUBCASE("penalty-study sweeps eps") {
        Scenario s = tiny_scenario(0.0);
        s.penalty.sweep = {0.05, 0.2};
        opt.mode = RunMode::kPenaltyStudy;
        opt.out_dir = fresh_dir("mtmfg_run_pen").string();
        const RunOutput out = run_scenario(s, opt);
        CHECK(out.metrics["rows"].size() == 2);
        CHECK(out.metrics["epsilon_threshold"].get<double>() == doctest::Approx(0.25));
        // eps below the threshold keeps trajectories essentially inside
        CHECK(out.metrics["rows"][0]["max_excursion"].get<double>() <= 2 * 0.02);
        fs::remove_all(opt.out_dir);
    }

    SUBCASE("audit emits a full residual report") {
        Scenario s = tiny_scenario(0.2);
        s.output.dump_residual_grid = true;
        opt.mode = RunMode::kAudit;
        opt.out_dir = fresh_dir("mtmfg_run_audit").string();
        const RunOutput out = run_scenario(s, opt);
        const json& audit = out.metrics["audit"];
        CHECK(audit["continuity"].size() == 12);
        CHECK(audit["initial_w1_gap"].get<double>() == 0.0);
        CHECK(audit["upsilon_fraction"].get<double>() == doctest::Approx(1.0));
        CHECK(audit.contains("outflow_worst_mass"));
        CHECK(audit.contains("boundary_worst_probe"));
        CHECK(audit.contains("gamma_max_abs_phi"));
        CHECK(fs::exists(fs::path(opt.out_dir) / "hj_residual.mfgb"));
        fs::remove_all(opt.out_dir);
    }
}

TEST_CASE("run metrics are deterministic without an output directory") {
    Scenario s = tiny_scenario(0.3);
    RunOptions opt;
    opt.mode = RunMode::kEquilibrium;
    opt.seed = 11;
    const RunOutput a = run_scenario(s, opt);
    const RunOutput b = run_scenario(s, opt);
    CHECK(a.metrics.dump() == b.metrics.dump());
    CHECK(a.manifest["seed"].get<std::uint64_t>() == 11);
}

TEST_CASE("seed override flows into the manifest and the sampling") {
    Scenario s = tiny_scenario(0.0);
    RunOptions opt;
    opt.mode = RunMode::kSolveOcp;
    opt.seed = 5;
    const RunOutput a = run_scenario(s, opt);
    opt.seed = 6;
    const RunOutput b = run_scenario(s, opt);
    CHECK(a.manifest["scenario"]["initial_mass"]["seed"] !=
          b.manifest["scenario"]["initial_mass"]["seed"]);
}
