#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtmfg/equilibrium.hpp"
#include "mtmfg/penalty.hpp"

namespace mtmfg {

struct GridParams {
    double dx{0.01};
    double dt{0.0};       // 0 -> dx / k_max
    double dt_traj{0.0};  // 0 -> dt / 2
};

struct PenaltyConfig {
    double eps{0.0};               // 0 -> 0.9 * eps0
    double safety_factor{0.9};
    std::vector<double> sweep;     // penalty-study eps values; empty -> default bracket
    double margin_cap{0.3};
};

struct OutputFlags {
    bool dump_value_field{false};
    bool dump_speed_field{false};
    bool dump_trajectories{false};
    bool dump_density{false};
    bool dump_residual_grid{false};
    bool per_iteration_dumps{false};
    bool csv_slices{false};
};

/// Fully resolved run description: geometry, interaction law, initial mass,
/// discretization, equilibrium and penalization parameters.
struct Scenario {
    DomainSpec domain;
    TargetSpec target;
    CongestionLaw law;
    InitialMassSpec initial_mass;
    GridParams grid;
    SolverParams solver;
    EquilibriumConfig equilibrium;
    PenaltyConfig penalty;
    OutputFlags output;

    double dt_effective() const;
    double dt_traj_effective() const;
    SpaceGrid make_grid() const;
    TimeGrid make_tgrid() const;  // horizon from solver.t_hor or the published bound
    PenaltyParams penalty_params() const;
    double epsilon_threshold_value() const;
};

/// Parses and validates a scenario. Unknown keys and violated constraints are
/// collected into `errors` (field paths included); returns the scenario with
/// all defaults materialized when errors is empty.
Scenario scenario_from_json(const nlohmann::json& j, bool allow_eps_override,
                            std::vector<std::string>* errors);

/// Loads from a file; accepts either a bare scenario or a manifest with a
/// "scenario" member (so a run can be replayed from its own manifest).
Scenario scenario_from_file(const std::string& path, bool allow_eps_override);

/// Full echo with every default resolved.
nlohmann::json scenario_to_json(const Scenario& s);

}  // namespace mtmfg
