#include "mtmfg/grid.hpp"

#include <algorithm>
#include <cmath>

namespace mtmfg {

double SpaceGrid::interpolate(const std::vector<double>& values, const Vec2& x) const {
    double fx = (x.x - origin.x) / dx;
    fx = std::min(std::max(fx, 0.0), static_cast<double>(nx - 1));
    int i0 = static_cast<int>(fx);
    if (i0 >= nx - 1) i0 = nx - 2;
    if (nx == 1) i0 = 0;
    const double wx = nx == 1 ? 0.0 : fx - i0;
    const int i1 = nx == 1 ? 0 : i0 + 1;

    if (dim == 1 || ny == 1) {
        return (1.0 - wx) * values[i0] + wx * values[i1];
    }

    double fy = (x.y - origin.y) / dx;
    fy = std::min(std::max(fy, 0.0), static_cast<double>(ny - 1));
    int j0 = static_cast<int>(fy);
    if (j0 >= ny - 1) j0 = ny - 2;
    const double wy = fy - j0;
    const int j1 = j0 + 1;

    const double v00 = values[index(i0, j0)];
    const double v10 = values[index(i1, j0)];
    const double v01 = values[index(i0, j1)];
    const double v11 = values[index(i1, j1)];
    return (1.0 - wy) * ((1.0 - wx) * v00 + wx * v10) + wy * ((1.0 - wx) * v01 + wx * v11);
}

SpaceGrid SpaceGrid::cover(const DomainSpec& dom, double dx, double margin) {
    require(dx > 0.0, ErrorCategory::kConfig, "grid spacing must be positive");
    Vec2 lo, hi;
    dom.bounding_box(&lo, &hi);
    const int extra = static_cast<int>(std::ceil(margin / dx + 1e-9));
    SpaceGrid g;
    g.dim = dom.dim;
    g.dx = dx;
    g.origin = {lo.x - extra * dx, dom.dim == 1 ? 0.0 : lo.y - extra * dx};
    g.nx = static_cast<int>(std::ceil((hi.x - lo.x) / dx - 1e-9)) + 1 + 2 * extra;
    g.ny = dom.dim == 1 ? 1 : static_cast<int>(std::ceil((hi.y - lo.y) / dx - 1e-9)) + 1 + 2 * extra;
    return g;
}

NodeFlags classify_nodes(const SpaceGrid& g, const DomainSpec& dom, const TargetSpec& tgt,
                         double target_snap, double band_margin) {
    NodeFlags nf;
    nf.target_snap = target_snap;
    nf.flags.assign(g.count(), 0);
    for (int idx = 0; idx < g.count(); ++idx) {
        const Vec2 x = g.point(idx);
        const double sd = signed_distance(dom, x);
        std::uint8_t f = 0;
        if (sd <= 1e-12) {
            f |= NodeFlags::kInDomain;
            if (target_distance(dom, tgt, x) <= target_snap) f |= NodeFlags::kTarget;
        } else if (sd <= band_margin) {
            f |= NodeFlags::kBand;
        }
        nf.flags[idx] = f;
    }
    return nf;
}

}  // namespace mtmfg
