#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mtmfg/runner.hpp"
#include "mtmfg/scenario.hpp"

namespace {

int exit_code_for(mtmfg::ErrorCategory c) {
    switch (c) {
        case mtmfg::ErrorCategory::kConfig: return 2;
        case mtmfg::ErrorCategory::kHorizon: return 3;
        case mtmfg::ErrorCategory::kSolver: return 4;
        case mtmfg::ErrorCategory::kGeometry: return 5;
        case mtmfg::ErrorCategory::kIo: return 6;
        case mtmfg::ErrorCategory::kInternal: return 7;
    }
    return 1;
}

void print_error(const mtmfg::Error& e) {
    nlohmann::json j = {{"error", {{"category", mtmfg::error_category_name(e.category())},
                                   {"message", e.what()}}}};
    std::cerr << j.dump(2) << std::endl;
}

int default_threads() {
    if (const char* env = std::getenv("MTMFG_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

// Sets a dotted-path key ("penalty.eps") in a scenario JSON document.
// Integral values are stored as integers so integer-typed fields (seeds,
// counts) accept swept values.
void set_json_path(nlohmann::json& root, const std::string& path, double value) {
    nlohmann::json* cur = &root;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (dot == std::string::npos) {
            if (value == std::floor(value) && std::abs(value) < 9e15)
                (*cur)[key] = static_cast<std::int64_t>(value);
            else
                (*cur)[key] = value;
            return;
        }
        cur = &(*cur)[key];
        start = dot + 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Minimal-time mean field games with state constraints"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string mode_str = "solve-ocp";
    std::uint64_t seed = 0;
    int threads = default_threads();
    bool allow_eps_override = false;

    auto add_common = [&](CLI::App* cmd, bool needs_out) {
        cmd->add_option("--config", config_path, "Scenario config file (JSON)")->required();
        cmd->add_flag("--allow-eps-override", allow_eps_override,
                      "Accept eps values at or above the admissible threshold");
        if (needs_out) {
            cmd->add_option("--out", out_dir, "Output artifact directory")->required();
            cmd->add_option("--mode", mode_str,
                            "Run mode: solve-ocp | equilibrium | penalty-study | audit");
            cmd->add_option("--seed", seed, "Override the scenario seed (0 keeps it)");
            cmd->add_option("--threads", threads,
                            "Worker thread count (default MTMFG_THREADS or 1)");
        }
    };

    CLI::App* validate = app.add_subcommand("validate", "Validate a scenario config");
    add_common(validate, false);

    CLI::App* run = app.add_subcommand("run", "Execute one run");
    add_common(run, true);

    CLI::App* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
    add_common(sweep, true);
    std::string sweep_param;
    std::vector<double> sweep_values;
    sweep->add_option("--param", sweep_param, "Dotted scenario key to sweep (e.g. penalty.eps)")
        ->required();
    sweep->add_option("--values", sweep_values, "Sweep values")->delimiter(',')->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            const mtmfg::Scenario s = mtmfg::scenario_from_file(config_path, allow_eps_override);
            nlohmann::json echo = {{"valid", true}, {"scenario", mtmfg::scenario_to_json(s)}};
            std::cout << echo.dump(2) << std::endl;
            return 0;
        }

        mtmfg::RunOptions opt;
        opt.mode = mtmfg::run_mode_from_string(mode_str);
        opt.seed = seed;
        opt.threads = threads;

        if (run->parsed()) {
            const mtmfg::Scenario s = mtmfg::scenario_from_file(config_path, allow_eps_override);
            opt.out_dir = out_dir;
            const mtmfg::RunOutput output = mtmfg::run_scenario(s, opt);
            std::cout << output.metrics.dump(2) << std::endl;
            return 0;
        }

        if (sweep->parsed()) {
            std::ifstream in(config_path);
            mtmfg::require(in.good(), mtmfg::ErrorCategory::kIo,
                           "cannot read config file: " + config_path);
            nlohmann::json base;
            in >> base;
            if (base.is_object() && base.contains("scenario")) base = base.at("scenario");

            std::filesystem::create_directories(out_dir);
            nlohmann::json summary = nlohmann::json::array();
            for (std::size_t i = 0; i < sweep_values.size(); ++i) {
                nlohmann::json doc = base;
                set_json_path(doc, sweep_param, sweep_values[i]);
                std::vector<std::string> errors;
                const mtmfg::Scenario s =
                    mtmfg::scenario_from_json(doc, allow_eps_override, &errors);
                if (!errors.empty()) {
                    std::string msg = "invalid scenario in sweep step " + std::to_string(i) + ":";
                    for (const std::string& e : errors) msg += "\n  - " + e;
                    mtmfg::fail(mtmfg::ErrorCategory::kConfig, msg);
                }
                mtmfg::RunOptions step = opt;
                step.out_dir =
                    (std::filesystem::path(out_dir) / ("sweep_" + std::to_string(i))).string();
                const mtmfg::RunOutput output = mtmfg::run_scenario(s, step);
                summary.push_back({{"index", i},
                                   {"param", sweep_param},
                                   {"value", sweep_values[i]},
                                   {"out", step.out_dir},
                                   {"metrics", output.metrics}});
            }
            mtmfg::write_json_file(std::filesystem::path(out_dir) / "sweep_summary.json", summary);
            std::cout << summary.dump(2) << std::endl;
            return 0;
        }
    } catch (const mtmfg::Error& e) {
        print_error(e);
        return exit_code_for(e.category());
    } catch (const std::exception& e) {
        nlohmann::json j = {{"error", {{"category", "internal"}, {"message", e.what()}}}};
        std::cerr << j.dump(2) << std::endl;
        return 7;
    }
    return 1;
}
