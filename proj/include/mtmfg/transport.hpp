#pragma once

#include <functional>
#include <vector>

#include "mtmfg/ensemble.hpp"
#include "mtmfg/trajectories.hpp"

namespace mtmfg {

/// Weighted trajectory bundle representing a measure on path space. All
/// member trajectories share the sampling step.
struct FlowMeasure {
    std::vector<Trajectory> trajectories;
    std::vector<double> weights;
    double time_horizon{0.0};

    std::size_t size() const { return trajectories.size(); }

    /// horizon = 0 derives the last recorded sample time of the bundle.
    static FlowMeasure from_trajectories(std::vector<Trajectory> trajs,
                                         std::vector<double> weights, double horizon = 0.0);
};

/// Spatial distribution at time t: positions gamma_i(t) with the bundle
/// weights. Throws kConfig when t exceeds the bundle horizon.
ParticleEnsemble pushforward(const FlowMeasure& q, double t);

struct W1Options {
    int exact_limit{2000};   // max total support for the exact solver
    int strata{512};         // coarsening size per side beyond the limit
};

struct W1Result {
    double value{0.0};
    double subsample_bound{0.0};  // extra error bound when coarsened; 0 if exact
};

/// Exact Wasserstein-1 distance with Euclidean ground cost: CDF matching in
/// d=1, exact min-cost flow on the bipartite support graph in d=2. Ensembles
/// larger than the exact limit are stratified-coarsened and the coarsening
/// error bound is reported.
W1Result w1_detail(const ParticleEnsemble& mu, const ParticleEnsemble& nu,
                   const W1Options& opt = {});
double w1(const ParticleEnsemble& mu, const ParticleEnsemble& nu, const W1Options& opt = {});

/// Dual lower bound: max over the probe set of |integral of Phi d(mu - nu)|.
/// Probes are verified 1-Lipschitz on the ensembles' support samples and
/// rejected otherwise.
double w1_dual_lower_bound(const ParticleEnsemble& mu, const ParticleEnsemble& nu,
                           const std::vector<std::function<double(const Vec2&)>>& probes);

}  // namespace mtmfg
