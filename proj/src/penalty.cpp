#include "mtmfg/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mtmfg {

PenaltyParams PenaltyParams::for_domain(const DomainSpec& dom, double eps) {
    PenaltyParams p;
    p.eps = eps;
    p.eps_star = 0.5 * dom.band_width();
    p.c_curv = dom.curvature_bound(p.eps_star);
    return p;
}

void PenaltyParams::validate(const DomainSpec& dom) const {
    require(eps > 0.0, ErrorCategory::kConfig, "penalization width eps must be positive");
    require(eps_star > 0.0 && eps_star <= dom.band_width(), ErrorCategory::kConfig,
            "eps_star must lie in (0, band width]");
    require(c_curv >= 0.0, ErrorCategory::kConfig, "curvature bound must be nonnegative");
}

double penalized_speed(const SpeedField& k, const DomainSpec& dom, double eps, double t,
                       const Vec2& x) {
    require(eps > 0.0, ErrorCategory::kConfig, "penalized_speed requires eps > 0");
    const double d = domain_distance(dom, x);
    if (d >= eps) return 0.0;
    const double base = d == 0.0 ? k.eval(t, x) : k.eval(t, closest_domain_point(dom, x));
    return base * (1.0 - d / eps);
}

double epsilon_threshold(double k_min, double k_max, double lipschitz, double c_curv,
                         double eps_star) {
    require(k_min > 0.0 && k_max > 0.0, ErrorCategory::kConfig,
            "epsilon_threshold requires positive speed bounds");
    require(eps_star > 0.0, ErrorCategory::kConfig, "epsilon_threshold requires eps_star > 0");
    require(lipschitz >= 0.0 && c_curv >= 0.0, ErrorCategory::kConfig,
            "epsilon_threshold requires nonnegative L and curvature bound");
    const double denom = lipschitz + c_curv * k_max;
    const double ratio = denom > 0.0 ? k_min / denom : std::numeric_limits<double>::infinity();
    return std::min(eps_star, ratio);
}

}  // namespace mtmfg
