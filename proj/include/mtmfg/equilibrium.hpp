#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mtmfg/congestion.hpp"
#include "mtmfg/transport.hpp"

namespace mtmfg {

struct EquilibriumConfig {
    int max_iterations{30};
    double tol_displacement{0.01};
    double tol_optimality{0.02};
    int stall_patience{5};
    int displacement_stride{4};   // field time slices between W1 probes
    double lambda_constant{0.0};  // 0 -> harmonic averaging 1/(n+1)

    void validate() const;
};

struct EquilibriumReport {
    std::vector<double> displacement;  // sup_t W1(m^(n), m^(n-1)) per iteration
    std::vector<double> optimality;    // equilibrium residual per iteration
    std::string verdict;               // "converged" | "stalled"
    std::string stop_reason;           // "tolerance_met" | "displacement_stall" | "iteration_limit"
    int iterations{0};
    std::vector<std::string> artifacts;  // optional per-iteration dump index
};

struct BestResponse {
    FlowMeasure q;
    SpeedField k;
    ValueField phi;
};

/// Freezes the interaction speeds along the measure timeline, solves the
/// value function, and integrates one optimal trajectory per particle of m0.
BestResponse best_response(const std::vector<ParticleEnsemble>& timeline,
                           const CongestionLaw& law, const ParticleEnsemble& m0,
                           const DomainSpec& dom, const TargetSpec& tgt, const SpaceGrid& grid,
                           const TimeGrid& tgrid, const SolverParams& params,
                           const IntegratorParams& ip = {});

struct EquilibriumResult {
    FlowMeasure q;
    EquilibriumReport report;
    SpeedField k;    // k_Q frozen from the final bundle's own pushforwards
    ValueField phi;  // value function of OCP(k_Q)
};

/// Observer invoked once per iteration with the iterate's value field and
/// trajectory bundle (used for optional per-iteration artifact dumps).
using IterationSink = std::function<void(int iteration, const ValueField& phi,
                                         const FlowMeasure& q)>;

/// Damped fixed-point (fictitious-play) iteration: the best response to the
/// current speed state is computed, pushforward speeds are averaged into the
/// state with weight lambda_n, and displacement/optimality residuals decide
/// convergence. Stalls are reported in the verdict, never thrown.
EquilibriumResult fixed_point(const ParticleEnsemble& m0, const CongestionLaw& law,
                              const DomainSpec& dom, const TargetSpec& tgt, const SpaceGrid& grid,
                              const TimeGrid& tgrid, const EquilibriumConfig& config,
                              const SolverParams& params, const IntegratorParams& ip = {},
                              const IterationSink& sink = {});

struct ResidualDetail {
    double residual{0.0};
    SpeedField k;    // k_Q
    ValueField phi;  // value function against k_Q
};

/// Optimality defect of a bundle against its own induced dynamics:
/// max over particles of (tau_i - phi_Q(0, gamma_i(0)))_+ .
ResidualDetail equilibrium_residual_detail(const FlowMeasure& q, const CongestionLaw& law,
                                           const DomainSpec& dom, const TargetSpec& tgt,
                                           const SpaceGrid& grid, const TimeGrid& tgrid,
                                           const SolverParams& params);
double equilibrium_residual(const FlowMeasure& q, const CongestionLaw& law, const DomainSpec& dom,
                            const TargetSpec& tgt, const SpaceGrid& grid, const TimeGrid& tgrid,
                            const SolverParams& params);

}  // namespace mtmfg
