#include "mtmfg/congestion.hpp"

#include <algorithm>
#include <cmath>

#include "mtmfg/parallel.hpp"

namespace mtmfg {

namespace {

// Uniform-grid cell list for kernel-radius culling of density queries.
struct CellIndex {
    const ParticleEnsemble* ens{nullptr};
    double cell{0.0};
    Vec2 lo;
    int nx{0}, ny{0};
    std::vector<std::vector<int>> bins;

    CellIndex(const ParticleEnsemble& e, double radius) : ens(&e), cell(std::max(radius, 1e-12)) {
        Vec2 hi = e.positions.front();
        lo = hi;
        for (const Vec2& p : e.positions) {
            lo.x = std::min(lo.x, p.x);
            lo.y = std::min(lo.y, p.y);
            hi.x = std::max(hi.x, p.x);
            hi.y = std::max(hi.y, p.y);
        }
        nx = static_cast<int>((hi.x - lo.x) / cell) + 1;
        ny = static_cast<int>((hi.y - lo.y) / cell) + 1;
        bins.resize(static_cast<std::size_t>(nx) * ny);
        for (int i = 0; i < static_cast<int>(e.positions.size()); ++i)
            bins[bin_of(e.positions[i])].push_back(i);
    }

    int bin_of(const Vec2& p) const {
        int bx = static_cast<int>((p.x - lo.x) / cell);
        int by = static_cast<int>((p.y - lo.y) / cell);
        bx = std::min(std::max(bx, 0), nx - 1);
        by = std::min(std::max(by, 0), ny - 1);
        return by * nx + bx;
    }

    template <typename Fn>
    void for_neighbors(const Vec2& x, Fn&& fn) const {
        const int bx = static_cast<int>(std::floor((x.x - lo.x) / cell));
        const int by = static_cast<int>(std::floor((x.y - lo.y) / cell));
        for (int j = by - 1; j <= by + 1; ++j) {
            if (j < 0 || j >= ny) continue;
            for (int i = bx - 1; i <= bx + 1; ++i) {
                if (i < 0 || i >= nx) continue;
                for (int idx : bins[static_cast<std::size_t>(j) * nx + i]) fn(idx);
            }
        }
    }
};

double density_with_index(const CongestionLaw& law, const DomainSpec& dom, const TargetSpec& tgt,
                          const ParticleEnsemble& ens, const CellIndex& index, const Vec2& x) {
    double s = 0.0;
    index.for_neighbors(x, [&](int i) {
        const double c = law.chi((x - ens.positions[i]).norm());
        if (c > 0.0) s += ens.weights[i] * c * law.eta_at(dom, tgt, ens.positions[i]);
    });
    return s;
}

}  // namespace

double CongestionLaw::chi(double r) const {
    const double s = r / kernel_radius;
    if (s >= 1.0) return 0.0;
    switch (kernel) {
        case KernelProfile::kTent:
            return 1.0 - s;
        case KernelProfile::kTruncatedQuadratic:
            return 1.0 - s * s;
    }
    return 0.0;
}

double CongestionLaw::chi_lipschitz() const {
    switch (kernel) {
        case KernelProfile::kTent:
            return 1.0 / kernel_radius;
        case KernelProfile::kTruncatedQuadratic:
            return 2.0 / kernel_radius;
    }
    return 0.0;
}

double CongestionLaw::eta_at(const DomainSpec& dom, const TargetSpec& tgt, const Vec2& y) const {
    if (eta.arrived_discount && target_distance(dom, tgt, y) <= eta.discount_radius) return 0.0;
    return eta.value;
}

double CongestionLaw::g(double s) const {
    return std::min(std::max(k_max - alpha * s, k_min), k_max);
}

void CongestionLaw::validate() const {
    require(k_min > 0.0, ErrorCategory::kConfig, "congestion law requires k_min > 0");
    require(k_max >= k_min, ErrorCategory::kConfig, "congestion law requires k_max >= k_min");
    require(alpha >= 0.0, ErrorCategory::kConfig, "congestion law requires alpha >= 0");
    require(kernel_radius > 0.0, ErrorCategory::kConfig, "kernel radius must be positive");
    require(eta.value >= 0.0, ErrorCategory::kConfig, "eta must be nonnegative");
}

double local_density(const CongestionLaw& law, const DomainSpec& dom, const TargetSpec& tgt,
                     const ParticleEnsemble& ens, const Vec2& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const double c = law.chi((x - ens.positions[i]).norm());
        if (c > 0.0) s += ens.weights[i] * c * law.eta_at(dom, tgt, ens.positions[i]);
    }
    return s;
}

double speed(const CongestionLaw& law, const DomainSpec& dom, const TargetSpec& tgt,
             const ParticleEnsemble& ens, const Vec2& x) {
    return law.g(local_density(law, dom, tgt, ens, x));
}

double SpeedField::eval(double t, const Vec2& x) const {
    if (tgrid.nt == 0) return grid.interpolate(slices[0], x);
    double ft = t / tgrid.dt;
    ft = std::min(std::max(ft, 0.0), static_cast<double>(tgrid.nt));
    int j0 = static_cast<int>(ft);
    if (j0 >= tgrid.nt) j0 = tgrid.nt - 1;
    const double w = ft - j0;
    const double v0 = grid.interpolate(slices[j0], x);
    const double v1 = grid.interpolate(slices[j0 + 1], x);
    return (1.0 - w) * v0 + w * v1;
}

SpeedField SpeedField::constant(const SpaceGrid& g, const TimeGrid& tg, double value) {
    SpeedField f;
    f.grid = g;
    f.tgrid = tg;
    f.k_min = value;
    f.k_max = value;
    f.slices.assign(tg.nt + 1, std::vector<double>(g.count(), value));
    return f;
}

SpeedField freeze(const CongestionLaw& law, const DomainSpec& dom, const TargetSpec& tgt,
                  const std::vector<ParticleEnsemble>& timeline, const SpaceGrid& grid,
                  const TimeGrid& tgrid, int threads) {
    law.validate();
    require(static_cast<int>(timeline.size()) == tgrid.nt + 1, ErrorCategory::kConfig,
            "freeze: timeline must provide one ensemble per time slice");

    SpeedField f;
    f.grid = grid;
    f.tgrid = tgrid;
    f.k_min = law.k_min;
    f.k_max = law.k_max;
    f.slices.assign(tgrid.nt + 1, std::vector<double>(grid.count(), law.k_max));

    // Outside nodes carry the speed at their closest domain point, the
    // constant-in-normal-direction extension used by the penalized dynamics.
    std::vector<Vec2> query(grid.count());
    for (int idx = 0; idx < grid.count(); ++idx) {
        const Vec2 x = grid.point(idx);
        query[idx] = domain_contains(dom, x, 0.0) ? x : closest_domain_point(dom, x);
    }

    for (int j = 0; j <= tgrid.nt; ++j) {
        const ParticleEnsemble& m = timeline[j];
        const CellIndex index(m, law.kernel_radius);
        std::vector<double>& out = f.slices[j];
        parallel_for(grid.count(), threads, [&](int idx) {
            out[idx] = law.g(density_with_index(law, dom, tgt, m, index, query[idx]));
        });
    }
    return f;
}

}  // namespace mtmfg
