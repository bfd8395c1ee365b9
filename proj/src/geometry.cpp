#include "mtmfg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mtmfg {

namespace {

constexpr double kPi = 3.14159265358979323846;

double clampd(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

Vec2 clamp_to_box(const Vec2& x, const Vec2& lo, const Vec2& hi) {
    return {clampd(x.x, lo.x, hi.x), clampd(x.y, lo.y, hi.y)};
}

// Rounded rectangle helper: offset of |p| against the core box.
Vec2 rrect_q(const DomainSpec& d, const Vec2& x) {
    const Vec2 p = x - d.center;
    const double cx = d.half_widths.x - d.corner_radius;
    const double cy = d.half_widths.y - d.corner_radius;
    return {std::abs(p.x) - cx, std::abs(p.y) - cy};
}

double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a < 0.0) a += 2.0 * kPi;
    return a;
}

// Radius of the circle carrying a boundary arc of `dom`.
double arc_radius(const DomainSpec& dom, const TargetSpec& tgt) {
    switch (dom.shape) {
        case ShapeKind::kDisk:
            return dom.radius;
        case ShapeKind::kAnnulus:
            return tgt.arc_boundary == ArcBoundary::kInner ? dom.r_inner : dom.r_outer;
        default:
            fail(ErrorCategory::kConfig, "boundary arcs are only defined for disk and annulus domains");
    }
}

Vec2 arc_nearest(const DomainSpec& dom, const TargetSpec& tgt, const Vec2& x) {
    const double r = arc_radius(dom, tgt);
    const Vec2 p = x - dom.center;
    const double span = tgt.angle_max - tgt.angle_min;
    if (span >= 2.0 * kPi - 1e-12) {
        // full circle
        const Vec2 u = p.norm() > 0.0 ? p.normalized() : Vec2{1.0, 0.0};
        return dom.center + r * u;
    }
    const double theta = std::atan2(p.y, p.x);
    const double rel = wrap_angle(theta - tgt.angle_min);
    double phi;
    if (rel <= span) {
        phi = theta;
    } else {
        // outside the angular range: nearest endpoint
        const Vec2 e0{r * std::cos(tgt.angle_min), r * std::sin(tgt.angle_min)};
        const Vec2 e1{r * std::cos(tgt.angle_max), r * std::sin(tgt.angle_max)};
        return (p - e0).norm2() <= (p - e1).norm2() ? dom.center + e0 : dom.center + e1;
    }
    return dom.center + Vec2{r * std::cos(phi), r * std::sin(phi)};
}

// Exact projection onto (box intersect domain closure) for convex domains,
// via Dykstra's alternating projections.
Vec2 project_box_domain(const DomainSpec& dom, const TargetSpec& tgt, const Vec2& x) {
    if (dom.shape == ShapeKind::kAnnulus)
        fail(ErrorCategory::kConfig, "box targets require a convex domain (interval, disk, rounded rectangle)");
    Vec2 y = x;
    Vec2 p{0.0, 0.0}, q{0.0, 0.0};
    for (int it = 0; it < 200; ++it) {
        const Vec2 y0 = y;
        Vec2 z = y + p;
        Vec2 zb = clamp_to_box(z, tgt.box_min, tgt.box_max);
        p = z - zb;
        z = zb + q;
        Vec2 zd = closest_domain_point(dom, z);
        q = z - zd;
        y = zd;
        if ((y - y0).norm() < 1e-14 && it > 2) break;
    }
    return y;
}

}  // namespace

DomainSpec DomainSpec::interval(double a, double b) {
    require(b > a, ErrorCategory::kConfig, "interval requires a < b");
    DomainSpec d;
    d.shape = ShapeKind::kInterval;
    d.dim = 1;
    d.a = a;
    d.b = b;
    return d;
}

DomainSpec DomainSpec::disk(Vec2 center, double radius) {
    require(radius > 0.0, ErrorCategory::kConfig, "disk requires radius > 0");
    DomainSpec d;
    d.shape = ShapeKind::kDisk;
    d.dim = 2;
    d.center = center;
    d.radius = radius;
    return d;
}

DomainSpec DomainSpec::annulus(Vec2 center, double r_inner, double r_outer) {
    require(r_inner > 0.0 && r_outer > r_inner, ErrorCategory::kConfig,
            "annulus requires 0 < r_inner < r_outer");
    DomainSpec d;
    d.shape = ShapeKind::kAnnulus;
    d.dim = 2;
    d.center = center;
    d.r_inner = r_inner;
    d.r_outer = r_outer;
    return d;
}

DomainSpec DomainSpec::rounded_rectangle(Vec2 center, Vec2 half_widths, double corner_radius) {
    require(half_widths.x > 0.0 && half_widths.y > 0.0, ErrorCategory::kConfig,
            "rounded rectangle requires positive half widths");
    require(corner_radius > 0.0 && corner_radius <= std::min(half_widths.x, half_widths.y),
            ErrorCategory::kConfig,
            "corner radius must lie in (0, min(half_widths)] for a C^{1,1} boundary");
    DomainSpec d;
    d.shape = ShapeKind::kRoundedRectangle;
    d.dim = 2;
    d.center = center;
    d.half_widths = half_widths;
    d.corner_radius = corner_radius;
    return d;
}

double DomainSpec::band_width() const {
    switch (shape) {
        case ShapeKind::kInterval:
            return 0.5 * (b - a);
        case ShapeKind::kDisk:
            return radius;
        case ShapeKind::kAnnulus:
            return 0.5 * (r_outer - r_inner);
        case ShapeKind::kRoundedRectangle:
            return corner_radius;
    }
    return 0.0;
}

double DomainSpec::clearance() const {
    switch (shape) {
        case ShapeKind::kInterval:
            return std::numeric_limits<double>::infinity();
        case ShapeKind::kDisk:
            return radius;
        case ShapeKind::kAnnulus:
            return r_inner;
        case ShapeKind::kRoundedRectangle:
            return corner_radius;
    }
    return 0.0;
}

double DomainSpec::curvature_bound(double eps) const {
    const double c = clearance();
    if (!std::isfinite(c)) return 0.0;
    require(eps < c, ErrorCategory::kConfig, "curvature bound requires eps < shape clearance");
    return 1.0 / (c - eps);
}

double DomainSpec::geodesic_factor() const {
    // Convex shapes: straight segments stay inside; 1.05 absorbs the marching
    // overhead of the path producer. The annulus wraps around the hole; the
    // supremum over point pairs is pi/2, reached on the inner boundary.
    switch (shape) {
        case ShapeKind::kInterval:
        case ShapeKind::kDisk:
        case ShapeKind::kRoundedRectangle:
            return 1.05;
        case ShapeKind::kAnnulus:
            return 1.75;
    }
    return 1.05;
}

void DomainSpec::bounding_box(Vec2* lo, Vec2* hi) const {
    switch (shape) {
        case ShapeKind::kInterval:
            *lo = {a, 0.0};
            *hi = {b, 0.0};
            return;
        case ShapeKind::kDisk:
            *lo = center - Vec2{radius, radius};
            *hi = center + Vec2{radius, radius};
            return;
        case ShapeKind::kAnnulus:
            *lo = center - Vec2{r_outer, r_outer};
            *hi = center + Vec2{r_outer, r_outer};
            return;
        case ShapeKind::kRoundedRectangle:
            *lo = center - half_widths;
            *hi = center + half_widths;
            return;
    }
}

double signed_distance(const DomainSpec& dom, const Vec2& x) {
    switch (dom.shape) {
        case ShapeKind::kInterval:
            return std::max(dom.a - x.x, x.x - dom.b);
        case ShapeKind::kDisk:
            return (x - dom.center).norm() - dom.radius;
        case ShapeKind::kAnnulus: {
            const double rho = (x - dom.center).norm();
            return std::max(dom.r_inner - rho, rho - dom.r_outer);
        }
        case ShapeKind::kRoundedRectangle: {
            const Vec2 q = rrect_q(dom, x);
            const Vec2 qp{std::max(q.x, 0.0), std::max(q.y, 0.0)};
            return qp.norm() + std::min(std::max(q.x, q.y), 0.0) - dom.corner_radius;
        }
    }
    return 0.0;
}

double domain_distance(const DomainSpec& dom, const Vec2& x) {
    return std::max(signed_distance(dom, x), 0.0);
}

bool domain_contains(const DomainSpec& dom, const Vec2& x, double tol) {
    return signed_distance(dom, x) <= tol;
}

Vec2 outward_normal(const DomainSpec& dom, const Vec2& x) {
    const double sd = signed_distance(dom, x);
    require(std::abs(sd) < dom.band_width(), ErrorCategory::kGeometry,
            "outward_normal: point outside the boundary regularity band");
    switch (dom.shape) {
        case ShapeKind::kInterval:
            return x.x - dom.a < dom.b - x.x ? Vec2{-1.0, 0.0} : Vec2{1.0, 0.0};
        case ShapeKind::kDisk: {
            const Vec2 p = x - dom.center;
            return p.norm() > 0.0 ? p.normalized() : Vec2{1.0, 0.0};
        }
        case ShapeKind::kAnnulus: {
            const Vec2 p = x - dom.center;
            const double rho = p.norm();
            const Vec2 u = rho > 0.0 ? p.normalized() : Vec2{1.0, 0.0};
            // Outward from the annulus points into the hole on the inner side.
            return rho - dom.r_outer >= dom.r_inner - rho ? u : -u;
        }
        case ShapeKind::kRoundedRectangle: {
            const Vec2 p = x - dom.center;
            const Vec2 q = rrect_q(dom, x);
            const double sx = p.x >= 0.0 ? 1.0 : -1.0;
            const double sy = p.y >= 0.0 ? 1.0 : -1.0;
            if (q.x > 0.0 && q.y > 0.0) {
                const Vec2 n = Vec2{sx * q.x, sy * q.y}.normalized();
                return n.norm2() > 0.0 ? n : Vec2{sx, 0.0};
            }
            if (q.x > q.y) return {sx, 0.0};
            return {0.0, sy};
        }
    }
    return {1.0, 0.0};
}

Vec2 closest_domain_point(const DomainSpec& dom, const Vec2& x) {
    switch (dom.shape) {
        case ShapeKind::kInterval:
            return {clampd(x.x, dom.a, dom.b), 0.0};
        case ShapeKind::kDisk: {
            const Vec2 p = x - dom.center;
            const double rho = p.norm();
            if (rho <= dom.radius) return x;
            return dom.center + (dom.radius / rho) * p;
        }
        case ShapeKind::kAnnulus: {
            const Vec2 p = x - dom.center;
            const double rho = p.norm();
            if (rho >= dom.r_inner && rho <= dom.r_outer) return x;
            const Vec2 u = rho > 0.0 ? p.normalized() : Vec2{1.0, 0.0};
            return dom.center + (rho < dom.r_inner ? dom.r_inner : dom.r_outer) * u;
        }
        case ShapeKind::kRoundedRectangle: {
            const double sd = signed_distance(dom, x);
            if (sd <= 0.0) return x;
            // Outside: clamp against the core box, then push out by the radius.
            const Vec2 p = x - dom.center;
            const double cx = dom.half_widths.x - dom.corner_radius;
            const double cy = dom.half_widths.y - dom.corner_radius;
            const Vec2 cl{clampd(p.x, -cx, cx), clampd(p.y, -cy, cy)};
            const Vec2 dir = (p - cl).norm() > 0.0 ? (p - cl).normalized() : Vec2{1.0, 0.0};
            return dom.center + cl + dom.corner_radius * dir;
        }
    }
    return x;
}

Vec2 project_to_domain(const DomainSpec& dom, const Vec2& x) {
    require(std::abs(signed_distance(dom, x)) < dom.band_width(), ErrorCategory::kGeometry,
            "project_to_domain: point outside the boundary regularity band");
    return closest_domain_point(dom, x);
}

TargetSpec TargetSpec::point_set(std::vector<Vec2> pts) {
    TargetSpec t;
    t.region = TargetRegion::kPoints;
    t.points = std::move(pts);
    return t;
}

TargetSpec TargetSpec::boundary_arc(double angle_min, double angle_max, ArcBoundary which) {
    TargetSpec t;
    t.region = TargetRegion::kBoundaryArc;
    t.angle_min = angle_min;
    t.angle_max = angle_max;
    t.arc_boundary = which;
    return t;
}

TargetSpec TargetSpec::full_boundary() {
    TargetSpec t;
    t.region = TargetRegion::kFullBoundary;
    return t;
}

TargetSpec TargetSpec::box(Vec2 lo, Vec2 hi) {
    TargetSpec t;
    t.region = TargetRegion::kBox;
    t.box_min = lo;
    t.box_max = hi;
    return t;
}

Vec2 target_nearest_point(const DomainSpec& dom, const TargetSpec& tgt, const Vec2& x) {
    switch (tgt.region) {
        case TargetRegion::kPoints: {
            require(!tgt.points.empty(), ErrorCategory::kConfig, "empty target point set");
            Vec2 best = tgt.points.front();
            double bd = (x - best).norm2();
            for (const Vec2& p : tgt.points) {
                const double d2 = (x - p).norm2();
                if (d2 < bd || (d2 == bd && lex_less(p, best))) {
                    bd = d2;
                    best = p;
                }
            }
            return best;
        }
        case TargetRegion::kBoundaryArc:
            if (dom.dim == 1)
                fail(ErrorCategory::kConfig, "boundary arcs are not defined in dimension 1");
            return arc_nearest(dom, tgt, x);
        case TargetRegion::kFullBoundary: {
            if (dom.dim == 1)
                return x.x - dom.a <= dom.b - x.x ? Vec2{dom.a, 0.0} : Vec2{dom.b, 0.0};
            const double sd = signed_distance(dom, x);
            if (std::abs(sd) < dom.band_width()) {
                const Vec2 n = outward_normal(dom, x);
                return x - sd * n;
            }
            // Deep queries (e.g. disk center): handle radially per shape.
            switch (dom.shape) {
                case ShapeKind::kDisk: {
                    const Vec2 p = x - dom.center;
                    const Vec2 u = p.norm() > 0.0 ? p.normalized() : Vec2{1.0, 0.0};
                    return dom.center + dom.radius * u;
                }
                case ShapeKind::kAnnulus: {
                    const Vec2 p = x - dom.center;
                    const double rho = p.norm();
                    const Vec2 u = rho > 0.0 ? p.normalized() : Vec2{1.0, 0.0};
                    const double mid = 0.5 * (dom.r_inner + dom.r_outer);
                    return dom.center + (rho <= mid ? dom.r_inner : dom.r_outer) * u;
                }
                default: {
                    // Rounded rectangle interior beyond the band: step toward the
                    // nearest wall along the core-box clamp direction.
                    const Vec2 p = x - dom.center;
                    const double cx = dom.half_widths.x - dom.corner_radius;
                    const double cy = dom.half_widths.y - dom.corner_radius;
                    const double gx = cx - std::abs(p.x);
                    const double gy = cy - std::abs(p.y);
                    Vec2 n;
                    if (gx < gy)
                        n = {p.x >= 0.0 ? 1.0 : -1.0, 0.0};
                    else
                        n = {0.0, p.y >= 0.0 ? 1.0 : -1.0};
                    return x - signed_distance(dom, x) * n;
                }
            }
        }
        case TargetRegion::kBox: {
            if (dom.dim == 1) {
                const double lo = std::max(tgt.box_min.x, dom.a);
                const double hi = std::min(tgt.box_max.x, dom.b);
                require(lo <= hi, ErrorCategory::kConfig, "box target does not intersect the domain");
                return {clampd(x.x, lo, hi), 0.0};
            }
            const Vec2 cand = clamp_to_box(x, tgt.box_min, tgt.box_max);
            if (domain_contains(dom, cand, 0.0)) return cand;
            return project_box_domain(dom, tgt, x);
        }
    }
    return x;
}

double target_distance(const DomainSpec& dom, const TargetSpec& tgt, const Vec2& x) {
    return (x - target_nearest_point(dom, tgt, x)).norm();
}

bool target_contains(const DomainSpec& dom, const TargetSpec& tgt, const Vec2& x, double tol) {
    return target_distance(dom, tgt, x) <= tol;
}

void validate_geometry(const DomainSpec& dom, const TargetSpec& tgt) {
    if (dom.dim == 1)
        require(dom.shape == ShapeKind::kInterval, ErrorCategory::kConfig,
                "dimension 1 requires an interval domain");

    switch (tgt.region) {
        case TargetRegion::kPoints: {
            require(!tgt.points.empty(), ErrorCategory::kConfig, "target point set must be nonempty");
            for (const Vec2& p : tgt.points)
                require(domain_contains(dom, p, 1e-9), ErrorCategory::kConfig,
                        "target point outside the domain closure");
            break;
        }
        case TargetRegion::kBoundaryArc: {
            require(dom.shape == ShapeKind::kDisk || dom.shape == ShapeKind::kAnnulus,
                    ErrorCategory::kConfig, "boundary arcs require a disk or annulus domain");
            require(tgt.angle_max > tgt.angle_min, ErrorCategory::kConfig,
                    "boundary arc requires angle_min < angle_max");
            break;
        }
        case TargetRegion::kFullBoundary:
            break;
        case TargetRegion::kBox: {
            require(tgt.box_max.x >= tgt.box_min.x &&
                        (dom.dim == 1 || tgt.box_max.y >= tgt.box_min.y),
                    ErrorCategory::kConfig, "box target requires box_min <= box_max");
            // Nonempty intersection: the projection limit must land in both sets.
            const Vec2 probe = target_nearest_point(dom, tgt, 0.5 * (tgt.box_min + tgt.box_max));
            const bool in_box = probe.x >= tgt.box_min.x - 1e-7 && probe.x <= tgt.box_max.x + 1e-7 &&
                                (dom.dim == 1 || (probe.y >= tgt.box_min.y - 1e-7 &&
                                                  probe.y <= tgt.box_max.y + 1e-7));
            require(domain_contains(dom, probe, 1e-7) && in_box, ErrorCategory::kConfig,
                    "box target does not intersect the domain closure");
            break;
        }
    }
}

const char* error_category_name(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::kConfig: return "config";
        case ErrorCategory::kGeometry: return "geometry";
        case ErrorCategory::kHorizon: return "horizon";
        case ErrorCategory::kSolver: return "solver";
        case ErrorCategory::kIo: return "io";
        case ErrorCategory::kInternal: return "internal";
    }
    return "unknown";
}

}  // namespace mtmfg
