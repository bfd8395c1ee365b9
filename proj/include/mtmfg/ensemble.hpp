#pragma once

#include <cstdint>
#include <vector>

#include "mtmfg/geometry.hpp"
#include "mtmfg/vec.hpp"

namespace mtmfg {

/// Weighted particle cloud representing a probability measure on the domain
/// closure. Weights are nonnegative and sum to one.
struct ParticleEnsemble {
    std::vector<Vec2> positions;
    std::vector<double> weights;

    std::size_t size() const { return positions.size(); }

    /// Throws unless weights sum to 1 within 1e-12 and positions lie in the
    /// closure within `pos_tol`.
    void validate(const DomainSpec& dom, double pos_tol = 1e-9) const;

    static ParticleEnsemble dirac(const Vec2& x);
    static ParticleEnsemble equal_weights(std::vector<Vec2> pts);
};

enum class InitialMassMode { kUniformBox, kGaussianClipped, kPointList };

struct InitialMassSpec {
    InitialMassMode mode{InitialMassMode::kUniformBox};
    Vec2 box_min{0.0, 0.0};
    Vec2 box_max{1.0, 1.0};
    Vec2 mean{0.0, 0.0};
    double sigma{0.1};
    std::vector<Vec2> points;
    int count{100};
    std::uint64_t seed{1};
};

/// Deterministic stratified sampling of the initial measure: the box (or the
/// 3-sigma Gaussian box) is cut into `count` near-square cells, one jittered
/// point per cell, jitter driven by the seed. Samples falling outside the
/// closure are redrawn within their cell (bounded retries, then the cell
/// center projection is used).
ParticleEnsemble sample_initial_mass(const InitialMassSpec& spec, const DomainSpec& dom);

}  // namespace mtmfg
