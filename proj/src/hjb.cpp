#include "mtmfg/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mtmfg/parallel.hpp"

namespace mtmfg {

namespace {

constexpr double kTwoPi = 6.283185307179586476925;
constexpr double kBig = 1e8;

std::vector<Vec2> direction_set(int dim, int n_dir) {
    if (dim == 1) return {{1.0, 0.0}, {-1.0, 0.0}};
    require(n_dir >= 4, ErrorCategory::kConfig, "n_dir must be at least 4 in dimension 2");
    std::vector<Vec2> dirs(n_dir);
    for (int m = 0; m < n_dir; ++m) {
        const double a = kTwoPi * m / n_dir;
        dirs[m] = {std::cos(a), std::sin(a)};
    }
    return dirs;
}

// Fast nodal bilinear interpolation (hot path of the solver).
struct Interp {
    const SpaceGrid* g;
    const double* v;

    double operator()(const Vec2& x) const {
        const SpaceGrid& gr = *g;
        double fx = (x.x - gr.origin.x) / gr.dx;
        fx = std::min(std::max(fx, 0.0), static_cast<double>(gr.nx - 1));
        int i0 = static_cast<int>(fx);
        if (i0 >= gr.nx - 1) i0 = gr.nx - 2;
        if (gr.nx == 1) i0 = 0;
        const double wx = gr.nx == 1 ? 0.0 : fx - i0;
        const int i1 = gr.nx == 1 ? 0 : i0 + 1;
        if (gr.ny == 1) return (1.0 - wx) * v[i0] + wx * v[i1];
        double fy = (x.y - gr.origin.y) / gr.dx;
        fy = std::min(std::max(fy, 0.0), static_cast<double>(gr.ny - 1));
        int j0 = static_cast<int>(fy);
        if (j0 >= gr.ny - 1) j0 = gr.ny - 2;
        const double wy = fy - j0;
        const int r0 = j0 * gr.nx, r1 = r0 + gr.nx;
        const double a = (1.0 - wx) * v[r0 + i0] + wx * v[r0 + i1];
        const double b = (1.0 - wx) * v[r1 + i0] + wx * v[r1 + i1];
        return (1.0 - wy) * a + wy * b;
    }
};

// Shared precomputed state of one solve.
struct SolveContext {
    const DomainSpec* dom{nullptr};
    const TargetSpec* tgt{nullptr};
    SpaceGrid grid;
    double dt{0.0};
    bool constrained{true};
    double clip{0.0};  // projection clip distance for feet (one cell)

    std::vector<Vec2> pts;
    std::vector<std::uint8_t> active;
    std::vector<std::uint8_t> target;
    std::vector<double> d_gamma;
    std::vector<std::uint8_t> seg_ok;     // straight run to the target stays inside
    std::vector<double> pen_factor;      // (1 - d/eps)_+, 1 inside; constrained: 1
    std::vector<Vec2> dirs;

    // Outside-band extension: weighted averages of nearby in-domain nodes.
    std::vector<int> band_nodes;
    std::vector<std::vector<std::pair<int, double>>> band_wts;

    Vec2 box_lo, box_hi;

    double node_speed_penalized(const SpeedField& k, double t, int idx,
                                const std::vector<Vec2>& kquery) const {
        return pen_factor[idx] == 0.0 ? 0.0 : pen_factor[idx] * k.eval(t, kquery[idx]);
    }
};

bool segment_inside(const DomainSpec& dom, const Vec2& a, const Vec2& b, double tol) {
    for (int s = 1; s <= 6; ++s) {
        const double w = s / 7.0;
        if (signed_distance(dom, a + w * (b - a)) > tol) return false;
    }
    return true;
}

SolveContext make_context(const SpeedField& k, const DomainSpec& dom, const TargetSpec& tgt,
                          const SpaceGrid& grid, double dt, const SolverParams& params,
                          bool constrained, double eps, const NodeFlags& nodes) {
    SolveContext ctx;
    ctx.dom = &dom;
    ctx.tgt = &tgt;
    ctx.grid = grid;
    ctx.dt = dt;
    ctx.constrained = constrained;
    ctx.clip = grid.dx;
    ctx.dirs = direction_set(dom.dim, params.n_dir);
    ctx.box_lo = grid.origin;
    ctx.box_hi = {grid.origin.x + (grid.nx - 1) * grid.dx,
                  grid.origin.y + (grid.ny - 1) * grid.dx};

    const int n = grid.count();
    ctx.pts.resize(n);
    ctx.active.assign(n, 0);
    ctx.target.assign(n, 0);
    ctx.d_gamma.assign(n, 0.0);
    ctx.seg_ok.assign(n, 0);
    ctx.pen_factor.assign(n, 1.0);

    const double direct_radius = 3.0 * k.k_max * dt;
    for (int idx = 0; idx < n; ++idx) {
        const Vec2 x = grid.point(idx);
        ctx.pts[idx] = x;
        const double sd = signed_distance(dom, x);
        const bool inside = sd <= 1e-12;
        ctx.d_gamma[idx] = target_distance(dom, tgt, x);
        ctx.target[idx] = nodes.flags.empty()
                              ? (inside && ctx.d_gamma[idx] <= nodes.target_snap)
                              : nodes.target(idx);
        if (constrained) {
            ctx.active[idx] = inside;
            ctx.pen_factor[idx] = 1.0;
        } else {
            const double d = std::max(sd, 0.0);
            ctx.pen_factor[idx] = std::max(1.0 - d / eps, 0.0);
            // The outermost ribbon of the penalized band, where the speed
            // decays below 2% of its base, counts as unreachable; keeping it
            // out of the active set keeps the sweep operator monotone.
            ctx.active[idx] = ctx.pen_factor[idx] > 0.02;
        }
        if (ctx.active[idx] && ctx.d_gamma[idx] <= direct_radius) {
            const Vec2 p = target_nearest_point(dom, tgt, x);
            ctx.seg_ok[idx] =
                !constrained || segment_inside(dom, x, p, 0.25 * grid.dx) ? 1 : 0;
        }
    }

    // Extension stencils for outside nodes within one band of the boundary.
    // Active nodes of the penalized solve are genuine unknowns and are never
    // overwritten by the extension.
    const double band_margin = 2.5 * grid.dx;
    for (int idx = 0; idx < n; ++idx) {
        if (ctx.active[idx]) continue;
        const Vec2 x = ctx.pts[idx];
        const double sd = signed_distance(dom, x);
        if (sd <= 1e-12 || sd > band_margin) continue;
        const Vec2 p = closest_domain_point(dom, x);
        const int ci = idx % grid.nx;
        const int cj = idx / grid.nx;
        std::vector<std::pair<int, double>> wts;
        double wsum = 0.0;
        for (int dj = -2; dj <= 2; ++dj) {
            const int j = cj + dj;
            if (j < 0 || j >= grid.ny) continue;
            for (int di = -2; di <= 2; ++di) {
                const int i = ci + di;
                if (i < 0 || i >= grid.nx) continue;
                const int nidx = grid.index(i, j);
                if (signed_distance(dom, ctx.pts[nidx]) > 1e-12) continue;
                const double w = 1.0 / ((ctx.pts[nidx] - p).norm() + 0.25 * grid.dx);
                wts.emplace_back(nidx, w);
                wsum += w;
            }
        }
        if (wts.empty()) continue;
        for (auto& e : wts) e.second /= wsum;
        ctx.band_nodes.push_back(idx);
        ctx.band_wts.push_back(std::move(wts));
    }
    return ctx;
}

void fill_band(const SolveContext& ctx, std::vector<double>& values) {
    for (std::size_t b = 0; b < ctx.band_nodes.size(); ++b) {
        double v = 0.0;
        for (const auto& [nidx, w] : ctx.band_wts[b]) v += w * values[nidx];
        values[ctx.band_nodes[b]] = v;
    }
}

// One semi-Lagrangian update of a single node against the `src` slice, over
// pseudo-time h (the physical step for backward slices; possibly stretched
// for stationary sweeps where the dynamics are autonomous).
double update_node(const SolveContext& ctx, int idx, double kv, const double* src, double h) {
    if (ctx.target[idx]) return 0.0;
    const Vec2 x = ctx.pts[idx];
    const Interp interp{&ctx.grid, src};
    double best = h + src[idx];  // stay in place
    if (kv > 1e-12) {
        if (ctx.seg_ok[idx] && ctx.d_gamma[idx] <= 3.0 * kv * h)
            best = std::min(best, ctx.d_gamma[idx] / kv);
        const double step = h * kv;
        for (const Vec2& u : ctx.dirs) {
            Vec2 foot{x.x + step * u.x, x.y + step * u.y};
            if (ctx.constrained) {
                const double sd = signed_distance(*ctx.dom, foot);
                if (sd > ctx.clip) continue;
                if (sd > 1e-12) foot = closest_domain_point(*ctx.dom, foot);
            } else {
                if (foot.x < ctx.box_lo.x || foot.x > ctx.box_hi.x ||
                    (ctx.grid.ny > 1 && (foot.y < ctx.box_lo.y || foot.y > ctx.box_hi.y)))
                    continue;
            }
            const double v = ctx.dt + interp(foot);
            if (v < best) best = v;
        }
    }
    return std::min(best, kBig);
}

// Gauss-Seidel stationary sweeps with alternating orderings. `speed` holds
// the per-node speed; returns the converged slice. When `stretch_h` is set
// (penalized solves, where speeds decay to zero off the domain), the
// autonomous update runs with a per-node pseudo-step landing feet exactly one
// cell away, which keeps the relaxation rate uniform across the fringe.
std::vector<double> stationary_sweeps(const SolveContext& ctx, const std::vector<double>& speed,
                                      const SolverParams& params, bool stretch_h) {
    const int n = ctx.grid.count();
    std::vector<double> values(n, kBig);
    for (int idx = 0; idx < n; ++idx)
        if (ctx.target[idx]) values[idx] = 0.0;
    fill_band(ctx, values);

    const int nx = ctx.grid.nx, ny = ctx.grid.ny;
    const int n_orders = ny == 1 ? 2 : 4;
    double resid = kBig;
    for (int sweep = 0; sweep < params.max_sweeps; ++sweep) {
        resid = 0.0;
        for (int ord = 0; ord < n_orders; ++ord) {
            const bool flip_i = ord & 1;
            const bool flip_j = ord & 2;
            for (int jj = 0; jj < ny; ++jj) {
                const int j = flip_j ? ny - 1 - jj : jj;
                for (int ii = 0; ii < nx; ++ii) {
                    const int i = flip_i ? nx - 1 - ii : ii;
                    const int idx = ctx.grid.index(i, j);
                    if (!ctx.active[idx]) continue;
                    const double h =
                        stretch_h ? ctx.grid.dx / std::max(speed[idx], 1e-9) : ctx.dt;
                    const double v = update_node(ctx, idx, speed[idx], values.data(), h);
                    const double d = std::abs(v - values[idx]);
                    if (d > resid) resid = d;
                    values[idx] = v;
                }
            }
        }
        fill_band(ctx, values);
        if (resid < params.sweep_tol) return values;
    }
    std::ostringstream msg;
    msg << "stationary sweeps did not converge: residual " << resid << " after "
        << params.max_sweeps << " sweep sets (tolerance " << params.sweep_tol << ")";
    fail(ErrorCategory::kSolver, msg.str());
}

// One backward time step: dst(t) from src(t + dt) with speeds at time t.
void backward_step(const SolveContext& ctx, const std::vector<double>& speed,
                   const std::vector<double>& src, std::vector<double>& dst, int threads) {
    const int n = ctx.grid.count();
    dst.assign(n, kBig);
    const double* sp = src.data();
    parallel_for(n, threads, [&](int idx) {
        if (ctx.active[idx])
            dst[idx] = update_node(ctx, idx, speed[idx], sp, ctx.dt);
        else
            dst[idx] = src[idx];  // carried, overwritten for band nodes below
    });
    fill_band(ctx, dst);
}

ValueField solve_common(const SpeedField& k, const DomainSpec& dom, const TargetSpec& tgt,
                        const SolverParams& params, bool constrained, double eps,
                        const SpaceGrid& grid) {
    require(k.k_max > 0.0, ErrorCategory::kConfig, "speed field with nonpositive k_max");
    const double dt = k.tgrid.dt;
    require(dt > 0.0, ErrorCategory::kConfig, "speed field needs a positive time step");
    require(dt <= grid.dx / k.k_max + 1e-12, ErrorCategory::kConfig,
            "CFL violation: dt must satisfy dt <= dx / k_max");

    ValueField phi;
    phi.grid = grid;
    phi.dom = dom;
    phi.tgt = tgt;
    phi.params = params;
    phi.big = kBig;
    phi.penalized = !constrained;
    phi.eps = eps;
    phi.nodes = classify_nodes(grid, dom, tgt, 1e-9, 2.5 * grid.dx);
    phi.t_bound = time_bound(dom, tgt, grid, k.k_min);

    const double t_hor = params.t_hor > 0.0 ? params.t_hor : params.horizon_factor * phi.t_bound;
    require(t_hor > 0.0, ErrorCategory::kConfig, "nonpositive horizon");
    phi.tgrid.dt = dt;
    phi.tgrid.nt = std::max(1, static_cast<int>(std::ceil(t_hor / dt - 1e-9)));

    SolveContext ctx = make_context(k, dom, tgt, grid, dt, params, constrained, eps, phi.nodes);

    // Per-slice speed samples.
    std::vector<Vec2> kquery;
    if (!constrained) {
        kquery.resize(grid.count());
        for (int idx = 0; idx < grid.count(); ++idx) {
            const Vec2 x = grid.point(idx);
            kquery[idx] = domain_contains(dom, x, 0.0) ? x : closest_domain_point(dom, x);
        }
    }
    auto speed_slice = [&](double t) {
        std::vector<double> s(grid.count(), 0.0);
        if (constrained) {
            for (int idx = 0; idx < grid.count(); ++idx)
                s[idx] = ctx.active[idx] ? k.eval(t, ctx.pts[idx]) : 0.0;
        } else {
            for (int idx = 0; idx < grid.count(); ++idx)
                s[idx] = ctx.active[idx] ? ctx.node_speed_penalized(k, t, idx, kquery) : 0.0;
        }
        return s;
    };

    const int nt = phi.tgrid.nt;
    phi.slices.assign(nt + 1, {});

    // Terminal slice: stationary problem with the final (extrapolated) speeds.
    const double t_final = phi.tgrid.time(nt);
    phi.slices[nt] = stationary_sweeps(ctx, speed_slice(t_final), params, !constrained);

    // Horizon check: one more backward step with the speeds just before the
    // horizon must agree with the same step under the frozen final speeds;
    // otherwise the speed timeline is still evolving at T_hor and the
    // stationary terminal condition is not justified.
    {
        std::vector<double> before, frozen;
        backward_step(ctx, speed_slice(t_final - dt), phi.slices[nt], before, params.threads);
        backward_step(ctx, speed_slice(t_final), phi.slices[nt], frozen, params.threads);
        double resid = 0.0;
        for (int idx = 0; idx < grid.count(); ++idx) {
            if (!ctx.active[idx] || !phi.reached(phi.slices[nt][idx])) continue;
            resid = std::max(resid, std::abs(before[idx] - frozen[idx]));
        }
        const double tol = std::max(50.0 * params.sweep_tol, 0.01 * dt);
        if (resid > tol) {
            std::ostringstream msg;
            msg << "horizon too small: terminal slice not stationary (residual " << resid
                << " > " << tol << "); increase t_hor";
            fail(ErrorCategory::kHorizon, msg.str());
        }
    }

    for (int j = nt - 1; j >= 0; --j)
        backward_step(ctx, speed_slice(phi.tgrid.time(j)), phi.slices[j + 1], phi.slices[j],
                      params.threads);
    return phi;
}

struct RateScan {
    std::vector<Vec2> dirs;      // admissible directions, direction-grid order
    std::vector<int> index;      // position on the full direction circle
    std::vector<double> rates;
    int n_dir_total{0};
};

RateScan scan_rates(const ValueField& phi, const SpeedField& k, double t, const Vec2& x,
                    bool cone_filter) {
    // The penalized problem is unconstrained: probe the full circle with the
    // penalized dynamics. The constrained field restricts to the inward cone.
    if (!phi.penalized) {
        require(domain_contains(phi.dom, x, 1e-9), ErrorCategory::kGeometry,
                "descent scan requires a point in the domain closure");
    }
    require(target_distance(phi.dom, phi.tgt, x) > 1e-9, ErrorCategory::kGeometry,
            "descent directions are undefined on the target set");

    const std::vector<Vec2> dirs = direction_set(phi.dom.dim, phi.params.n_dir);
    const double sd = signed_distance(phi.dom, x);
    const bool near_boundary = cone_filter && !phi.penalized && sd >= -0.5 * phi.grid.dx;
    Vec2 n{0.0, 0.0};
    if (near_boundary) n = outward_normal(phi.dom, x);
    // Wall-tangent directions sit exactly on the cone edge; one direction
    // cell of slack keeps them admissible under roundoff (slightly outward
    // feet are projected back by the integrator and the solver alike).
    const double cone_tol =
        phi.dom.dim == 1 ? 1e-9 : std::sin(kTwoPi / phi.params.n_dir);

    RateScan scan;
    scan.n_dir_total = static_cast<int>(dirs.size());
    double k_local = k.eval(t, x);
    if (phi.penalized) {
        const double d = std::max(sd, 0.0);
        k_local = d >= phi.eps ? 0.0
                               : (d == 0.0 ? k_local : k.eval(t, closest_domain_point(phi.dom, x))) *
                                     (1.0 - d / phi.eps);
    }
    const double k0 = std::max(k_local, 1e-12);
    const double base = phi.eval(t, x);
    // Probes are clamped near the target: the value rises again beyond it
    // (time to come back), so overshooting feet would mask the descent.
    const double d_target = target_distance(phi.dom, phi.tgt, x);
    const double probe_cap = std::max(2.0 * phi.grid.dx, 0.9 * d_target);
    for (int m = 0; m < static_cast<int>(dirs.size()); ++m) {
        const Vec2& u = dirs[m];
        if (near_boundary && u.dot(n) > cone_tol) continue;
        double rate = -kBig;
        for (double steps : phi.params.h_probe_steps) {
            const double ell = std::min(steps * phi.grid.dx, probe_cap);
            const double h = ell / k0;
            const Vec2 foot = x + ell * u;
            const double v = phi.eval(t + h, foot);
            rate = std::max(rate, (v - base) / h);
        }
        scan.dirs.push_back(u);
        scan.index.push_back(m);
        scan.rates.push_back(rate);
    }
    return scan;
}

// Sub-cell refinement of a direction on the scan circle: parabola fit of the
// rates around the given full-circle index. Keeps the reported direction a
// continuous function of the probe point instead of snapping to the grid.
Vec2 refine_direction(const RateScan& scan, const Vec2& unit) {
    const int M = scan.n_dir_total;
    if (M == 2) return unit;
    std::vector<double> rate_of(M, kBig);
    for (std::size_t i = 0; i < scan.index.size(); ++i) rate_of[scan.index[i]] = scan.rates[i];
    const double cell = kTwoPi / M;
    const double angle0 = std::atan2(unit.y, unit.x);
    int m0 = static_cast<int>(std::lround(angle0 / cell));
    m0 = ((m0 % M) + M) % M;
    const int ml = (m0 + M - 1) % M, mr = (m0 + 1) % M;
    if (rate_of[m0] >= 0.5 * kBig || rate_of[ml] >= 0.5 * kBig || rate_of[mr] >= 0.5 * kBig)
        return unit;
    const double denom = rate_of[ml] - 2.0 * rate_of[m0] + rate_of[mr];
    if (denom <= 1e-12) return unit;
    double delta = 0.5 * (rate_of[ml] - rate_of[mr]) / denom;
    delta = std::min(std::max(delta, -0.6), 0.6);
    const double angle = (m0 + delta) * cell;
    return {std::cos(angle), std::sin(angle)};
}

// Splits the selected directions into circular clusters (gap of more than one
// skipped direction breaks a cluster) and reports the single-cluster mean.
NormalizedGradient cluster_mean(const RateScan& scan, const std::vector<int>& selected) {
    NormalizedGradient out;
    if (selected.empty()) {
        out.status = NormalizedGradient::Status::kNoDescent;
        return out;
    }
    const int M = scan.n_dir_total;
    if (M == 2) {  // dimension 1
        if (selected.size() > 1) {
            out.status = NormalizedGradient::Status::kNonUnique;
            return out;
        }
        out.status = NormalizedGradient::Status::kOk;
        out.direction = -scan.dirs[selected[0]];
        return out;
    }

    std::vector<int> ids;
    ids.reserve(selected.size());
    for (int s : selected) ids.push_back(scan.index[s]);
    std::sort(ids.begin(), ids.end());

    // Circular gaps between consecutive selected directions.
    int max_gap = 0, max_gap_pos = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const int next = ids[(i + 1) % ids.size()] + (i + 1 == ids.size() ? M : 0);
        const int gap = next - ids[i];
        if (gap > max_gap) {
            max_gap = gap;
            max_gap_pos = static_cast<int>(i);
        }
    }
    // Cluster = everything outside the largest gap. Any other gap above two
    // cells means several distinct clusters.
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (static_cast<int>(i) == max_gap_pos) continue;
        const int next = ids[(i + 1) % ids.size()] + (i + 1 == ids.size() ? M : 0);
        if (next - ids[i] > 2) {
            out.status = NormalizedGradient::Status::kNonUnique;
            return out;
        }
    }
    const int first = ids[(max_gap_pos + 1) % ids.size()];
    int span = ids[max_gap_pos] - first;
    if (span < 0) span += M;
    const double diameter = kTwoPi * span / M;
    if (diameter > 0.5 * 3.14159265358979323846 + 1e-12) {
        out.status = NormalizedGradient::Status::kNonUnique;
        return out;
    }

    Vec2 mean{0.0, 0.0};
    for (int s : selected) mean += scan.dirs[s];
    Vec2 unit = mean.normalized(1e-9);
    if (unit.norm2() == 0.0) {
        out.status = NormalizedGradient::Status::kNonUnique;
        return out;
    }
    out.status = NormalizedGradient::Status::kOk;
    out.direction = -refine_direction(scan, unit);
    return out;
}

}  // namespace

double SolverParams::tol_w_effective(double dx, int dim) const {
    double min_steps = 1e300;
    for (double s : h_probe_steps) min_steps = std::min(min_steps, s);
    require(min_steps > 0.0 && min_steps < 1e300, ErrorCategory::kConfig,
            "h_probe_steps must contain positive entries");
    if (tol_w > 0.0) return tol_w;
    const double from_grid = 10.0 * dx / min_steps;
    const double floor =
        dim == 1 ? 1e-6 : 2.0 * (1.0 - std::cos(kTwoPi / static_cast<double>(n_dir)));
    return std::max(from_grid, floor);
}

double ValueField::eval(double t, const Vec2& x) const {
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

ValueField ValueField::from_function(const SpaceGrid& g, const TimeGrid& tg, const DomainSpec& dom,
                                     const TargetSpec& tgt, const SolverParams& params,
                                     const std::function<double(double, const Vec2&)>& fn) {
    ValueField phi;
    phi.grid = g;
    phi.tgrid = tg;
    phi.dom = dom;
    phi.tgt = tgt;
    phi.params = params;
    phi.nodes = classify_nodes(g, dom, tgt, 1e-9, 2.5 * g.dx);
    phi.slices.assign(tg.nt + 1, std::vector<double>(g.count(), 0.0));
    double tb = 0.0;
    for (int j = 0; j <= tg.nt; ++j)
        for (int idx = 0; idx < g.count(); ++idx) {
            phi.slices[j][idx] = fn(tg.time(j), g.point(idx));
            if (phi.nodes.in_domain(idx)) tb = std::max(tb, phi.slices[j][idx]);
        }
    phi.t_bound = tb;
    return phi;
}

double time_bound(const DomainSpec& dom, const TargetSpec& tgt, const SpaceGrid& grid,
                  double k_min) {
    require(k_min > 0.0, ErrorCategory::kConfig, "time bound requires k_min > 0");
    double dmax = 0.0;
    for (int idx = 0; idx < grid.count(); ++idx) {
        const Vec2 x = grid.point(idx);
        if (!domain_contains(dom, x, 1e-12)) continue;
        dmax = std::max(dmax, target_distance(dom, tgt, x));
    }
    return dom.geodesic_factor() * dmax / k_min;
}

std::vector<double> solve_stationary(const std::vector<double>& k_slice, const DomainSpec& dom,
                                     const TargetSpec& tgt, const SpaceGrid& grid, double dt,
                                     const SolverParams& params) {
    require(static_cast<int>(k_slice.size()) == grid.count(), ErrorCategory::kConfig,
            "speed slice size does not match the grid");
    double kmax = 0.0;
    for (double v : k_slice) kmax = std::max(kmax, v);
    require(dt > 0.0 && dt <= grid.dx / std::max(kmax, 1e-12) + 1e-12, ErrorCategory::kConfig,
            "CFL violation in solve_stationary");
    SpeedField kateach;  // only bounds are consulted by make_context
    kateach.k_max = kmax;
    NodeFlags nodes = classify_nodes(grid, dom, tgt, 1e-9, 2.5 * grid.dx);
    SolveContext ctx = make_context(kateach, dom, tgt, grid, dt, params, true, 0.0, nodes);
    return stationary_sweeps(ctx, k_slice, params, false);
}

ValueField solve_value(const SpeedField& k, const DomainSpec& dom, const TargetSpec& tgt,
                       const SolverParams& params) {
    return solve_common(k, dom, tgt, params, true, 0.0, k.grid);
}

ValueField solve_value_penalized(const SpeedField& k, const DomainSpec& dom, const TargetSpec& tgt,
                                 double eps, const SolverParams& params, double margin_cap) {
    require(eps > 0.0, ErrorCategory::kConfig, "penalized solve requires eps > 0");
    const double margin = std::min(eps, margin_cap) + 2.0 * k.grid.dx;
    const SpaceGrid wide = SpaceGrid::cover(dom, k.grid.dx, margin);
    return solve_common(k, dom, tgt, params, false, eps, wide);
}

double descent_rate(const ValueField& phi, const SpeedField& k, double t, const Vec2& x,
                    const Vec2& u) {
    require(domain_contains(phi.dom, x, 1e-9), ErrorCategory::kGeometry,
            "descent_rate requires a point in the domain closure");
    require(target_distance(phi.dom, phi.tgt, x) > 1e-9, ErrorCategory::kGeometry,
            "descent_rate is undefined on the target set");
    const double sd = signed_distance(phi.dom, x);
    if (sd >= -0.5 * phi.grid.dx) {
        const Vec2 n = outward_normal(phi.dom, x);
        require(u.dot(n) <= 1e-9, ErrorCategory::kGeometry,
                "descent_rate: direction leaves the closed inward cone at the boundary");
    }
    const double k0 = std::max(k.eval(t, x), 1e-12);
    const double base = phi.eval(t, x);
    const double probe_cap =
        std::max(2.0 * phi.grid.dx, 0.9 * target_distance(phi.dom, phi.tgt, x));
    double rate = -kBig;
    for (double steps : phi.params.h_probe_steps) {
        const double ell = std::min(steps * phi.grid.dx, probe_cap);
        const double h = ell / k0;
        const Vec2 foot = x + ell * u;
        rate = std::max(rate, (phi.eval(t + h, foot) - base) / h);
    }
    return rate;
}

std::vector<Vec2> maximal_descent_directions(const ValueField& phi, const SpeedField& k, double t,
                                             const Vec2& x, double tol_w) {
    const RateScan scan = scan_rates(phi, k, t, x, true);
    std::vector<Vec2> out;
    for (std::size_t i = 0; i < scan.dirs.size(); ++i)
        if (scan.rates[i] <= -1.0 + tol_w) out.push_back(scan.dirs[i]);
    return out;
}

NormalizedGradient normalized_gradient(const ValueField& phi, const SpeedField& k, double t,
                                       const Vec2& x) {
    const RateScan scan = scan_rates(phi, k, t, x, true);
    const double tol_w = phi.params.tol_w_effective(phi.grid.dx, phi.dom.dim);
    std::vector<int> selected;
    for (std::size_t i = 0; i < scan.dirs.size(); ++i)
        if (scan.rates[i] <= -1.0 + tol_w) selected.push_back(static_cast<int>(i));
    return cluster_mean(scan, selected);
}

FeedbackDirection feedback_direction(const ValueField& phi, const SpeedField& k, double t,
                                     const Vec2& x) {
    // No cone filter here: the integrator projects wall-crossing steps, and
    // an unfiltered scan keeps the feedback direction continuous along walls
    // (a hard cone toggles the admissible set as the path grazes the band).
    const RateScan scan = scan_rates(phi, k, t, x, false);
    require(!scan.dirs.empty(), ErrorCategory::kInternal, "empty admissible direction set");
    const double tol_w = phi.params.tol_w_effective(phi.grid.dx, phi.dom.dim);
    std::vector<int> selected;
    for (std::size_t i = 0; i < scan.dirs.size(); ++i)
        if (scan.rates[i] <= -1.0 + tol_w) selected.push_back(static_cast<int>(i));

    FeedbackDirection fb;
    const NormalizedGradient ng = cluster_mean(scan, selected);
    if (ng.status == NormalizedGradient::Status::kOk) {
        fb.u = -ng.direction;
        fb.unique = true;
        double best = kBig;
        for (std::size_t i = 0; i < scan.dirs.size(); ++i) best = std::min(best, scan.rates[i]);
        fb.rate = best;
        return fb;
    }
    // Tie-break: minimize the descent rate, then lexicographic order; the
    // chosen direction gets the same sub-cell refinement as the unique case
    // so the steering stays continuous where clusters split from noise.
    int best = 0;
    for (std::size_t i = 1; i < scan.dirs.size(); ++i) {
        if (scan.rates[i] < scan.rates[best] - 1e-12 ||
            (std::abs(scan.rates[i] - scan.rates[best]) <= 1e-12 &&
             lex_less(scan.dirs[i], scan.dirs[best])))
            best = static_cast<int>(i);
    }
    fb.u = refine_direction(scan, scan.dirs[best]);
    fb.unique = false;
    fb.rate = scan.rates[best];
    return fb;
}

double measured_space_lipschitz(const ValueField& phi) {
    double lip = 0.0;
    const SpaceGrid& g = phi.grid;
    for (const auto& slice : phi.slices) {
        for (int j = 0; j < g.ny; ++j) {
            for (int i = 0; i < g.nx; ++i) {
                const int idx = g.index(i, j);
                if (!phi.nodes.in_domain(idx) || !phi.reached(slice[idx])) continue;
                auto probe = [&](int i2, int j2, double dist) {
                    if (i2 < 0 || i2 >= g.nx || j2 < 0 || j2 >= g.ny) return;
                    const int n2 = g.index(i2, j2);
                    if (!phi.nodes.in_domain(n2) || !phi.reached(slice[n2])) return;
                    lip = std::max(lip, std::abs(slice[idx] - slice[n2]) / dist);
                };
                probe(i + 1, j, g.dx);
                probe(i, j + 1, g.dx);
                probe(i + 1, j + 1, g.dx * std::sqrt(2.0));
                probe(i + 1, j - 1, g.dx * std::sqrt(2.0));
            }
        }
    }
    return lip;
}

double measured_spacetime_lipschitz(const ValueField& phi) {
    double lip = measured_space_lipschitz(phi);
    for (int j = 0; j + 1 <= phi.tgrid.nt; ++j) {
        const auto& a = phi.slices[j];
        const auto& b = phi.slices[j + 1];
        for (int idx = 0; idx < phi.grid.count(); ++idx) {
            if (!phi.nodes.in_domain(idx) || !phi.reached(a[idx]) || !phi.reached(b[idx]))
                continue;
            lip = std::max(lip, std::abs(a[idx] - b[idx]) / phi.tgrid.dt);
        }
    }
    return lip;
}

double lipschitz_paper_bound(double geodesic_factor, double k_min, double k_max, double lipschitz,
                             double t_bound) {
    return geodesic_factor * k_max / (k_min * k_min) *
           std::exp(t_bound * lipschitz * k_max * k_max / (k_min * k_min));
}

}  // namespace mtmfg
