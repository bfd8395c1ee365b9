#pragma once

#include <vector>

#include "mtmfg/ensemble.hpp"
#include "mtmfg/geometry.hpp"
#include "mtmfg/grid.hpp"

namespace mtmfg {

enum class KernelProfile { kTent, kTruncatedQuadratic };

struct EtaSpec {
    bool arrived_discount{false};  // eta = 0 within discount_radius of the target
    double value{1.0};
    double discount_radius{0.0};
};

/// Congestion-dependent speed law
///   K(mu, x) = g( sum_i w_i chi(x - y_i) eta(y_i) ),
/// with a compactly supported radial kernel chi (chi(0) = 1, unnormalized),
/// a weight eta on the closure, and the clamped affine profile
///   g(s) = clamp(k_max - alpha s, k_min, k_max).
struct CongestionLaw {
    KernelProfile kernel{KernelProfile::kTent};
    double kernel_radius{0.2};
    EtaSpec eta;
    double k_min{0.5};
    double k_max{1.0};
    double alpha{0.0};

    double chi(double r) const;
    double chi_lipschitz() const;  // tent: 1/r_chi, truncated quadratic: 2/r_chi
    double eta_at(const DomainSpec& dom, const TargetSpec& tgt, const Vec2& y) const;
    double eta_sup() const { return eta.value; }
    double g(double s) const;

    /// Published spatial Lipschitz constant of x -> K(mu, x):
    /// Lip(g) * Lip(chi) * sup eta * total mass (= 1).
    double lipschitz() const { return alpha * chi_lipschitz() * eta_sup(); }

    void validate() const;
};

/// Speed samples on a space-time grid: multilinear in space, linear in time,
/// constant extrapolation beyond the final time. Nodes outside the closure
/// carry the value at their closest domain point.
struct SpeedField {
    SpaceGrid grid;
    TimeGrid tgrid;
    double k_min{0.0};
    double k_max{0.0};
    std::vector<std::vector<double>> slices;  // tgrid.nt + 1 slices

    double eval(double t, const Vec2& x) const;
    const std::vector<double>& slice(int j) const { return slices[j]; }

    static SpeedField constant(const SpaceGrid& g, const TimeGrid& tg, double value);
};

/// Local congestion density sum_i w_i chi(x - y_i) eta(y_i).
double local_density(const CongestionLaw& law, const DomainSpec& dom, const TargetSpec& tgt,
                     const ParticleEnsemble& ens, const Vec2& x);

/// Interaction speed K(mu, x) = g(local_density).
double speed(const CongestionLaw& law, const DomainSpec& dom, const TargetSpec& tgt,
             const ParticleEnsemble& ens, const Vec2& x);

/// Freezes k(t_j, x_i) = speed(law, m_{t_j}, x_i) along a measure timeline
/// covering the grid horizon (one ensemble per time slice).
SpeedField freeze(const CongestionLaw& law, const DomainSpec& dom, const TargetSpec& tgt,
                  const std::vector<ParticleEnsemble>& timeline, const SpaceGrid& grid,
                  const TimeGrid& tgrid, int threads = 1);

}  // namespace mtmfg
