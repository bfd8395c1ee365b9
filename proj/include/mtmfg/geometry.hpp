#pragma once

#include <vector>

#include "mtmfg/errors.hpp"
#include "mtmfg/vec.hpp"

namespace mtmfg {

enum class ShapeKind { kInterval, kDisk, kAnnulus, kRoundedRectangle };

/// Constrained domain given by an analytic primitive. Signed distances and
/// outward normals are exact, so boundary regularity holds up to roundoff.
struct DomainSpec {
    ShapeKind shape{ShapeKind::kDisk};
    int dim{2};

    // interval (dim = 1)
    double a{0.0};
    double b{1.0};

    // disk / annulus / rounded rectangle (dim = 2)
    Vec2 center{0.0, 0.0};
    double radius{1.0};        // disk
    double r_inner{0.5};       // annulus
    double r_outer{1.0};       // annulus
    Vec2 half_widths{1.0, 0.5};  // rounded rectangle (outer box half sizes)
    double corner_radius{0.1};   // rounded rectangle

    static DomainSpec interval(double a, double b);
    static DomainSpec disk(Vec2 center, double radius);
    static DomainSpec annulus(Vec2 center, double r_inner, double r_outer);
    static DomainSpec rounded_rectangle(Vec2 center, Vec2 half_widths, double corner_radius);

    /// Width of the band around the boundary on which the signed distance is
    /// C^{1,1}: min(r, half-width) for disk/interval, (r_out - r_in)/2 for the
    /// annulus, the corner radius for the rounded rectangle.
    double band_width() const;

    /// Lipschitz constant of the gradient of the signed distance on the band
    /// {|d| <= eps}. Requires eps < clearance().
    double curvature_bound(double eps) const;

    /// Smallest curvature clearance of the shape (radius of the tightest
    /// concave/convex arc); curvature_bound(eps) = 1/(clearance - eps).
    double clearance() const;

    /// Published geodesic-to-Euclidean factor D: every pair of points in the
    /// closure is joined by an in-domain path of length <= D |x - y|.
    double geodesic_factor() const;

    /// Axis-aligned bounding box of the closure.
    void bounding_box(Vec2* lo, Vec2* hi) const;
};

/// Signed distance to the boundary: negative inside, zero on the boundary,
/// positive outside. 1-Lipschitz, defined on all of R^d.
double signed_distance(const DomainSpec& dom, const Vec2& x);

/// Distance to the closure (zero inside).
double domain_distance(const DomainSpec& dom, const Vec2& x);

bool domain_contains(const DomainSpec& dom, const Vec2& x, double tol = 0.0);

/// Outward unit normal, equal to the gradient of the signed distance.
/// Requires |signed_distance(x)| < band_width().
Vec2 outward_normal(const DomainSpec& dom, const Vec2& x);

/// Nearest point of the closure. Requires |signed_distance(x)| < band_width().
Vec2 project_to_domain(const DomainSpec& dom, const Vec2& x);

/// Nearest point of the closure, defined (with a deterministic tie-break) for
/// every x in R^d. Used to extend fields outside the domain.
Vec2 closest_domain_point(const DomainSpec& dom, const Vec2& x);

enum class TargetRegion { kPoints, kBoundaryArc, kFullBoundary, kBox };
enum class ArcBoundary { kOuter, kInner };

/// Target set: closed, nonempty, contained in the domain closure.
struct TargetSpec {
    TargetRegion region{TargetRegion::kFullBoundary};

    std::vector<Vec2> points;            // kPoints
    double angle_min{0.0};               // kBoundaryArc, radians
    double angle_max{0.0};
    ArcBoundary arc_boundary{ArcBoundary::kOuter};  // annulus arcs
    Vec2 box_min{0.0, 0.0};              // kBox (intersected with the closure)
    Vec2 box_max{0.0, 0.0};

    static TargetSpec point_set(std::vector<Vec2> pts);
    static TargetSpec boundary_arc(double angle_min, double angle_max,
                                   ArcBoundary which = ArcBoundary::kOuter);
    static TargetSpec full_boundary();
    static TargetSpec box(Vec2 lo, Vec2 hi);
};

/// Distance to the target set; zero exactly on it, 1-Lipschitz.
double target_distance(const DomainSpec& dom, const TargetSpec& tgt, const Vec2& x);

/// Nearest point of the target set (deterministic tie-break).
Vec2 target_nearest_point(const DomainSpec& dom, const TargetSpec& tgt, const Vec2& x);

bool target_contains(const DomainSpec& dom, const TargetSpec& tgt, const Vec2& x, double tol);

/// Checks basic consistency: the target is nonempty, closed by construction,
/// and intersects the domain closure. Throws Error(kConfig) on violation.
void validate_geometry(const DomainSpec& dom, const TargetSpec& tgt);

}  // namespace mtmfg
