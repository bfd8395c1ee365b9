#pragma once

#include <cstdint>
#include <vector>

#include "mtmfg/geometry.hpp"
#include "mtmfg/vec.hpp"

namespace mtmfg {

/// Uniform Cartesian grid over a bounding box. dim = 1 grids have ny = 1 and
/// ignore the y coordinate everywhere.
struct SpaceGrid {
    Vec2 origin{0.0, 0.0};
    double dx{0.0};
    int nx{0};
    int ny{1};
    int dim{2};

    int count() const { return nx * ny; }
    int index(int i, int j) const { return j * nx + i; }
    Vec2 point(int i, int j) const { return {origin.x + i * dx, origin.y + j * dx}; }
    Vec2 point(int idx) const { return point(idx % nx, idx / nx); }

    /// Multilinear interpolation of nodal values, clamped to the box.
    double interpolate(const std::vector<double>& values, const Vec2& x) const;

    /// Builds a grid covering the domain bounding box expanded by `margin`,
    /// with nodes aligned so that the domain box corner sits on a node.
    static SpaceGrid cover(const DomainSpec& dom, double dx, double margin);
};

/// Node classification against a domain/target pair.
struct NodeFlags {
    static constexpr std::uint8_t kInDomain = 1;  // inside the closure (tol 1e-12)
    static constexpr std::uint8_t kTarget = 2;    // snapped onto the target set
    static constexpr std::uint8_t kBand = 4;      // outside, within the extension band

    std::vector<std::uint8_t> flags;
    double target_snap{0.0};

    bool in_domain(int idx) const { return flags[idx] & kInDomain; }
    bool target(int idx) const { return flags[idx] & kTarget; }
    bool band(int idx) const { return flags[idx] & kBand; }
};

/// Classifies nodes: in-domain, target (d_Gamma <= target_snap), outside band
/// (within band_margin of the closure).
NodeFlags classify_nodes(const SpaceGrid& g, const DomainSpec& dom, const TargetSpec& tgt,
                         double target_snap, double band_margin);

/// Uniform time grid {t_j = j dt, j = 0..nt}.
struct TimeGrid {
    double dt{0.0};
    int nt{0};  // number of steps; nt + 1 slices

    double horizon() const { return nt * dt; }
    double time(int j) const { return j * dt; }
};

}  // namespace mtmfg
