#pragma once

#include "mtmfg/congestion.hpp"
#include "mtmfg/geometry.hpp"

namespace mtmfg {

/// Parameters of the penalized (unconstrained) problem. The admissible
/// threshold eps0 = min(eps_star, k_min / (L + C k_max)) guarantees that
/// penalized optimal trajectories started in the closure never leave it.
struct PenaltyParams {
    double eps{0.0};         // penalization width, > 0
    double eps_star{0.0};    // geometry band bound, <= domain band width
    double c_curv{0.0};      // Lipschitz constant of grad d on the band

    /// Derives eps_star = band_width/2 and the matching curvature bound.
    static PenaltyParams for_domain(const DomainSpec& dom, double eps);

    void validate(const DomainSpec& dom) const;
};

/// Penalized speed k_eps(t, x) = k(t, x) (1 - d_Omega(x)/eps)_+ with k
/// extended outside the closure by evaluation at the closest domain point
/// (the SpeedField already stores that extension at outside nodes).
double penalized_speed(const SpeedField& k, const DomainSpec& dom, double eps, double t,
                       const Vec2& x);

/// eps0 = min(eps_star, k_min / (L + c_curv k_max)). All speed arguments must
/// be positive; L and c_curv may be zero (the ratio is then +infinity).
double epsilon_threshold(double k_min, double k_max, double lipschitz, double c_curv,
                         double eps_star);

}  // namespace mtmfg
