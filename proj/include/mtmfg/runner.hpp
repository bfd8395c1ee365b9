#pragma once

#include <string>

#include "mtmfg/artifacts.hpp"
#include "mtmfg/residuals.hpp"
#include "mtmfg/scenario.hpp"

namespace mtmfg {

enum class RunMode { kSolveOcp, kEquilibrium, kPenaltyStudy, kAudit };

RunMode run_mode_from_string(const std::string& s);
const char* run_mode_name(RunMode m);

struct RunOptions {
    RunMode mode{RunMode::kSolveOcp};
    std::uint64_t seed{0};  // 0 keeps the scenario seed
    int threads{1};
    std::string out_dir;    // empty: compute metrics without writing artifacts
    std::string tool_version{"0.1.0"};
};

struct RunOutput {
    nlohmann::json manifest;
    nlohmann::json metrics;
    nlohmann::json timings;
};

/// Executes one run: writes manifest.json, metrics.json, timings.json and the
/// selected dumps into a staged output directory (atomically renamed on
/// success) and returns the documents.
RunOutput run_scenario(const Scenario& scenario, const RunOptions& options);

}  // namespace mtmfg
