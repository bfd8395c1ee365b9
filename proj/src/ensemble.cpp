#include "mtmfg/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mtmfg {

namespace {

// Deterministic uniform double in [0,1) from a 64-bit generator; avoids the
// implementation-defined std distributions so runs are reproducible anywhere.
double next_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

void ParticleEnsemble::validate(const DomainSpec& dom, double pos_tol) const {
    require(positions.size() == weights.size(), ErrorCategory::kConfig,
            "ensemble positions/weights size mismatch");
    require(!positions.empty(), ErrorCategory::kConfig, "empty particle ensemble");
    double s = 0.0;
    for (double w : weights) {
        require(w >= 0.0, ErrorCategory::kConfig, "negative particle weight");
        s += w;
    }
    require(std::abs(s - 1.0) <= 1e-12, ErrorCategory::kConfig,
            "particle weights must sum to 1 within 1e-12");
    for (const Vec2& p : positions)
        require(domain_contains(dom, p, pos_tol), ErrorCategory::kConfig,
                "particle outside the domain closure");
}

ParticleEnsemble ParticleEnsemble::dirac(const Vec2& x) {
    ParticleEnsemble e;
    e.positions = {x};
    e.weights = {1.0};
    return e;
}

ParticleEnsemble ParticleEnsemble::equal_weights(std::vector<Vec2> pts) {
    ParticleEnsemble e;
    const double w = 1.0 / static_cast<double>(pts.size());
    e.weights.assign(pts.size(), w);
    e.positions = std::move(pts);
    return e;
}

ParticleEnsemble sample_initial_mass(const InitialMassSpec& spec, const DomainSpec& dom) {
    require(spec.count > 0, ErrorCategory::kConfig, "initial mass particle count must be positive");

    if (spec.mode == InitialMassMode::kPointList) {
        require(!spec.points.empty(), ErrorCategory::kConfig, "empty initial point list");
        ParticleEnsemble e = ParticleEnsemble::equal_weights(spec.points);
        e.validate(dom);
        return e;
    }

    Vec2 lo = spec.box_min, hi = spec.box_max;
    if (spec.mode == InitialMassMode::kGaussianClipped) {
        lo = spec.mean - Vec2{3.0 * spec.sigma, 3.0 * spec.sigma};
        hi = spec.mean + Vec2{3.0 * spec.sigma, 3.0 * spec.sigma};
    }
    require(hi.x >= lo.x && (dom.dim == 1 || hi.y >= lo.y), ErrorCategory::kConfig,
            "initial mass box must satisfy box_min <= box_max");

    // Stratify into a kx-by-ky cell lattice, near-square cells, kx*ky >= count.
    const double wx = std::max(hi.x - lo.x, 1e-12);
    const double wy = dom.dim == 1 ? 1.0 : std::max(hi.y - lo.y, 1e-12);
    int kx, ky;
    if (dom.dim == 1) {
        kx = spec.count;
        ky = 1;
    } else {
        kx = std::max(1, static_cast<int>(std::round(std::sqrt(spec.count * wx / wy))));
        ky = (spec.count + kx - 1) / kx;
        while (kx * ky < spec.count) ++kx;
    }

    std::mt19937_64 rng(spec.seed * 0x9e3779b97f4a7c15ULL + 0x2545F4914F6CDD1DULL);
    ParticleEnsemble e;
    e.positions.reserve(spec.count);
    int placed = 0;
    for (int cell = 0; cell < kx * ky && placed < spec.count; ++cell) {
        const int ci = cell % kx;
        const int cj = cell / kx;
        const Vec2 cell_lo{lo.x + wx * ci / kx, dom.dim == 1 ? 0.0 : lo.y + wy * cj / ky};
        const Vec2 cell_sz{wx / kx, dom.dim == 1 ? 0.0 : wy / ky};
        Vec2 p;
        bool ok = false;
        for (int attempt = 0; attempt < 64; ++attempt) {
            p = {cell_lo.x + next_unit(rng) * cell_sz.x,
                 dom.dim == 1 ? 0.0 : cell_lo.y + next_unit(rng) * cell_sz.y};
            if (spec.mode == InitialMassMode::kGaussianClipped) {
                // Accept-reject against the Gaussian profile inside the box.
                const double r2 = (p - spec.mean).norm2() / (spec.sigma * spec.sigma);
                if (next_unit(rng) > std::exp(-0.5 * r2)) continue;
            }
            if (domain_contains(dom, p, 0.0)) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            const Vec2 c = cell_lo + 0.5 * cell_sz;
            p = closest_domain_point(dom, c);
            if (!domain_contains(dom, p, 1e-9)) continue;  // cell fully outside, skip
        }
        e.positions.push_back(p);
        ++placed;
    }
    // Cells fully outside the domain may leave a shortfall; top up with
    // box-wide draws so the requested count is met whenever possible.
    for (int attempt = 0; placed < spec.count && attempt < 4096; ++attempt) {
        Vec2 p{lo.x + next_unit(rng) * wx, dom.dim == 1 ? 0.0 : lo.y + next_unit(rng) * wy};
        if (spec.mode == InitialMassMode::kGaussianClipped) {
            const double r2 = (p - spec.mean).norm2() / (spec.sigma * spec.sigma);
            if (next_unit(rng) > std::exp(-0.5 * r2)) continue;
        }
        if (!domain_contains(dom, p, 0.0)) continue;
        e.positions.push_back(p);
        ++placed;
    }
    require(!e.positions.empty(), ErrorCategory::kConfig,
            "initial mass region does not intersect the domain");
    e.weights.assign(e.positions.size(), 1.0 / static_cast<double>(e.positions.size()));
    e.validate(dom);
    return e;
}

}  // namespace mtmfg
