#include "mtmfg/residuals.hpp"

#include <algorithm>
#include <cmath>

namespace mtmfg {

namespace {

double bump1(double s) {
    const double a = std::abs(s);
    if (a >= 1.0 - 1e-8) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

double bump1_deriv(double s) {
    const double a = std::abs(s);
    if (a >= 1.0 - 1e-8) return 0.0;
    const double q = 1.0 - s * s;
    return bump1(s) * (-2.0 * s / (q * q));
}

}  // namespace

double BumpTest::value(double t, const Vec2& x, int dim) const {
    double v = bump1((t - t_center) / t_width) * bump1((x.x - center.x) / width.x);
    if (dim == 2) v *= bump1((x.y - center.y) / width.y);
    return v;
}

double BumpTest::dt(double t, const Vec2& x, int dim) const {
    double v = bump1_deriv((t - t_center) / t_width) / t_width;
    v *= bump1((x.x - center.x) / width.x);
    if (dim == 2) v *= bump1((x.y - center.y) / width.y);
    return v;
}

Vec2 BumpTest::grad(double t, const Vec2& x, int dim) const {
    const double bt = bump1((t - t_center) / t_width);
    const double bx = bump1((x.x - center.x) / width.x);
    const double dbx = bump1_deriv((x.x - center.x) / width.x) / width.x;
    if (dim == 1) return {bt * dbx, 0.0};
    const double by = bump1((x.y - center.y) / width.y);
    const double dby = bump1_deriv((x.y - center.y) / width.y) / width.y;
    return {bt * dbx * by, bt * bx * dby};
}

std::vector<BumpTest> default_test_functions(const DomainSpec& dom, const TargetSpec& tgt,
                                             const SpaceGrid& grid, double t_hor) {
    Vec2 lo, hi;
    dom.bounding_box(&lo, &hi);
    const double diam = (hi - lo).norm();

    std::vector<int> candidates;
    double dmax = 0.0;
    for (int idx = 0; idx < grid.count(); ++idx) {
        const Vec2 x = grid.point(idx);
        if (!domain_contains(dom, x, 0.0)) continue;
        dmax = std::max(dmax, target_distance(dom, tgt, x));
    }
    for (int idx = 0; idx < grid.count(); ++idx) {
        const Vec2 x = grid.point(idx);
        if (!domain_contains(dom, x, 0.0)) continue;
        if (target_distance(dom, tgt, x) >= 0.2 * dmax) candidates.push_back(idx);
    }
    require(!candidates.empty(), ErrorCategory::kConfig,
            "no interior region available for continuity test functions");

    std::vector<BumpTest> tests;
    const double fractions[3] = {0.25, 0.5, 0.75};
    const double t_centers[4] = {0.2, 0.4, 0.6, 0.8};
    for (double fq : fractions) {
        const Vec2 c = grid.point(candidates[static_cast<std::size_t>(fq * (candidates.size() - 1))]);
        const double dG = target_distance(dom, tgt, c);
        const double w = std::min(0.25 * diam, 0.85 * dG);
        for (double tf : t_centers) {
            BumpTest b;
            b.center = c;
            b.width = {w, w};
            b.t_center = tf * t_hor;
            b.t_width = 0.19 * t_hor;
            tests.push_back(b);
        }
    }
    return tests;
}

std::vector<double> continuity_residual(const FlowMeasure& q, const ValueField& phi,
                                        const SpeedField& k,
                                        const std::vector<BumpTest>& tests) {
    const int dim = phi.dom.dim;
    const double t_hor = q.time_horizon;

    // Reject supports touching t = 0 or the target set.
    for (const BumpTest& b : tests) {
        require(b.t_center - b.t_width > 1e-12, ErrorCategory::kConfig,
                "continuity test support touches t = 0");
        double min_dG = 1e300;
        const int samples = 7;
        for (int i = 0; i < samples; ++i)
            for (int j = 0; j < (dim == 2 ? samples : 1); ++j) {
                const Vec2 p{b.center.x + b.width.x * (2.0 * i / (samples - 1) - 1.0),
                             dim == 2 ? b.center.y + b.width.y * (2.0 * j / (samples - 1) - 1.0)
                                      : 0.0};
                min_dG = std::min(min_dG, target_distance(phi.dom, phi.tgt, p));
            }
        require(min_dG > 1e-9, ErrorCategory::kConfig,
                "continuity test support touches the target set");
    }

    std::vector<double> lhs(tests.size(), 0.0), rhs(tests.size(), 0.0);
    for (std::size_t i = 0; i < q.size(); ++i) {
        const Trajectory& tr = q.trajectories[i];
        const double wq = q.weights[i];
        const int steps = static_cast<int>(std::floor(t_hor / tr.dt + 1e-9));
        for (int s = 0; s <= steps; ++s) {
            const double t = s * tr.dt;
            const double quad = wq * tr.dt * ((s == 0 || s == steps) ? 0.5 : 1.0);
            const Vec2 x = tr.position(t);

            bool any = false;
            for (const BumpTest& b : tests)
                if (b.value(t, x, dim) > 0.0 || std::abs(b.dt(t, x, dim)) > 0.0) {
                    any = true;
                    break;
                }
            if (!any) continue;

            // Transport velocity direction: the normalized gradient of phi,
            // falling back to the realized control where it is not unique.
            Vec2 grad_hat;
            const NormalizedGradient ng = normalized_gradient(phi, k, t, x);
            if (ng.status == NormalizedGradient::Status::kOk) {
                grad_hat = ng.direction;
            } else {
                const int ci = std::min(static_cast<int>((t - tr.t0) / tr.dt),
                                        static_cast<int>(tr.controls.size()) - 1);
                const Vec2 u = ci >= 0 && !tr.controls.empty() ? tr.controls[ci] : Vec2{0.0, 0.0};
                grad_hat = -u.normalized(1e-12);
            }
            const double kv = k.eval(t, x);
            for (std::size_t b = 0; b < tests.size(); ++b) {
                lhs[b] += quad * tests[b].dt(t, x, dim);
                rhs[b] += quad * tests[b].grad(t, x, dim).dot(grad_hat) * kv;
            }
        }
    }

    std::vector<double> out(tests.size(), 0.0);
    for (std::size_t b = 0; b < tests.size(); ++b) out[b] = std::abs(lhs[b] - rhs[b]);
    return out;
}

HjResidualStats hj_residual(const ValueField& phi, const SpeedField& k) {
    HjResidualStats stats;
    const SpaceGrid& g = phi.grid;
    const double dx = g.dx;
    const double dt = phi.tgrid.dt;
    const int nt = phi.tgrid.nt;

    // Target condition.
    for (int idx = 0; idx < g.count(); ++idx) {
        if (!phi.nodes.target(idx)) continue;
        for (int j = 0; j <= nt; ++j)
            stats.gamma_max_abs_phi = std::max(stats.gamma_max_abs_phi,
                                               std::abs(phi.slices[j][idx]));
    }

    // Interior residuals with kink filtering.
    struct Candidate {
        double residual;
        double disagreement;
    };
    std::vector<Candidate> cands;
    auto in_ok = [&](int i, int j2) {
        if (i < 0 || i >= g.nx || j2 < 0 || j2 >= g.ny) return false;
        const int idx = g.index(i, j2);
        return phi.nodes.in_domain(idx) && !phi.nodes.target(idx);
    };
    for (int j = 1; j + 1 <= nt; ++j) {
        const auto& cur = phi.slices[j];
        const auto& prev = phi.slices[j - 1];
        const auto& next = phi.slices[j + 1];
        const double t = phi.tgrid.time(j);
        for (int jy = 0; jy < g.ny; ++jy) {
            for (int ix = 0; ix < g.nx; ++ix) {
                const int idx = g.index(ix, jy);
                if (!phi.nodes.in_domain(idx) || phi.nodes.target(idx)) continue;
                if (!in_ok(ix - 1, jy) || !in_ok(ix + 1, jy)) continue;
                if (g.ny > 1 && (!in_ok(ix, jy - 1) || !in_ok(ix, jy + 1))) continue;
                if (!phi.reached(cur[idx])) continue;
                const int xm = g.index(ix - 1, jy), xp = g.index(ix + 1, jy);
                if (!phi.reached(cur[xm]) || !phi.reached(cur[xp])) continue;
                const double dpx = (cur[xp] - cur[idx]) / dx;
                const double dmx = (cur[idx] - cur[xm]) / dx;
                double gx = 0.5 * (dpx + dmx);
                double disagreement = std::abs(dpx - dmx);
                double gy = 0.0;
                if (g.ny > 1) {
                    const int ym = g.index(ix, jy - 1), yp = g.index(ix, jy + 1);
                    if (!phi.reached(cur[ym]) || !phi.reached(cur[yp])) continue;
                    const double dpy = (cur[yp] - cur[idx]) / dx;
                    const double dmy = (cur[idx] - cur[ym]) / dx;
                    gy = 0.5 * (dpy + dmy);
                    disagreement = std::max(disagreement, std::abs(dpy - dmy));
                }
                if (!phi.reached(prev[idx]) || !phi.reached(next[idx])) continue;
                const double pt = (next[idx] - prev[idx]) / (2.0 * dt);
                const double kv = k.eval(t, g.point(idx));
                const double res = std::abs(-pt + std::hypot(gx, gy) * kv - 1.0);
                cands.push_back({res, disagreement});
            }
        }
    }
    if (!cands.empty()) {
        std::vector<double> dis(cands.size());
        for (std::size_t i = 0; i < cands.size(); ++i) dis[i] = cands[i].disagreement;
        std::nth_element(dis.begin(), dis.begin() + dis.size() / 2, dis.end());
        const double median = dis[dis.size() / 2];
        std::vector<double> eligible;
        for (const Candidate& c : cands)
            if (c.disagreement <= 3.0 * median + 1e-12) eligible.push_back(c.residual);
        if (!eligible.empty()) {
            std::sort(eligible.begin(), eligible.end());
            stats.nodes = static_cast<int>(eligible.size());
            stats.max = eligible.back();
            stats.p95 = eligible[static_cast<std::size_t>(0.95 * (eligible.size() - 1))];
        }
    }

    // Boundary supersolution probe at wall nodes off the target.
    const double h = 2.0 * dx;
    double worst = 1e300;
    int nprobe = 0;
    for (int idx = 0; idx < g.count(); ++idx) {
        if (!phi.nodes.in_domain(idx) || phi.nodes.target(idx)) continue;
        const Vec2 x = g.point(idx);
        const double sd = signed_distance(phi.dom, x);
        if (sd < -1.0 * dx) continue;
        if (target_distance(phi.dom, phi.tgt, x) <= 3.0 * dx) continue;
        const Vec2 n = outward_normal(phi.dom, x);
        const Vec2 inner = x - h * n;
        if (!domain_contains(phi.dom, inner, 0.0)) continue;
        ++nprobe;
        for (int j = 0; j <= nt; ++j) {
            const double t = phi.tgrid.time(j);
            const double outer_v = phi.eval(t, x);
            if (!phi.reached(outer_v)) continue;
            const double inner_v = phi.eval(t, inner);
            worst = std::min(worst, (outer_v - inner_v) / h);
        }
    }
    stats.boundary_nodes = nprobe;
    stats.boundary_worst_probe = nprobe > 0 && worst < 1e300 ? worst : 0.0;
    return stats;
}

std::vector<double> hj_residual_grid(const ValueField& phi, const SpeedField& k) {
    const SpaceGrid& g = phi.grid;
    const double dx = g.dx;
    const double dt = phi.tgrid.dt;
    std::vector<double> out(g.count(), -1.0);
    auto usable = [&](int i, int j2) {
        if (i < 0 || i >= g.nx || j2 < 0 || j2 >= g.ny) return false;
        const int idx = g.index(i, j2);
        return static_cast<bool>(phi.nodes.in_domain(idx));
    };
    for (int j = 1; j + 1 <= phi.tgrid.nt; ++j) {
        const auto& cur = phi.slices[j];
        const auto& prev = phi.slices[j - 1];
        const auto& next = phi.slices[j + 1];
        const double t = phi.tgrid.time(j);
        for (int jy = 0; jy < g.ny; ++jy) {
            for (int ix = 0; ix < g.nx; ++ix) {
                const int idx = g.index(ix, jy);
                if (!phi.nodes.in_domain(idx) || phi.nodes.target(idx)) continue;
                if (!usable(ix - 1, jy) || !usable(ix + 1, jy)) continue;
                if (g.ny > 1 && (!usable(ix, jy - 1) || !usable(ix, jy + 1))) continue;
                if (!phi.reached(cur[idx]) || !phi.reached(prev[idx]) ||
                    !phi.reached(next[idx]))
                    continue;
                const double gx = (cur[g.index(ix + 1, jy)] - cur[g.index(ix - 1, jy)]) / (2 * dx);
                const double gy = g.ny > 1 ? (cur[g.index(ix, jy + 1)] - cur[g.index(ix, jy - 1)]) /
                                                 (2 * dx)
                                           : 0.0;
                if (!phi.reached(cur[g.index(ix + 1, jy)]) ||
                    !phi.reached(cur[g.index(ix - 1, jy)]))
                    continue;
                const double pt = (next[idx] - prev[idx]) / (2.0 * dt);
                const double res =
                    std::abs(-pt + std::hypot(gx, gy) * k.eval(t, g.point(idx)) - 1.0);
                out[idx] = std::max(out[idx], res);
            }
        }
    }
    return out;
}

std::vector<OutflowEntry> outflow_boundary_check(const FlowMeasure& q, const ValueField& phi,
                                                 const SpeedField& k, int time_stride,
                                                 int* checked) {
    const SpaceGrid& g = phi.grid;
    const double dx = g.dx;
    const double tol_w = phi.params.tol_w_effective(dx, phi.dom.dim);

    std::vector<int> wall_nodes;
    for (int idx = 0; idx < g.count(); ++idx) {
        if (!phi.nodes.in_domain(idx) || phi.nodes.target(idx)) continue;
        const Vec2 x = g.point(idx);
        if (signed_distance(phi.dom, x) < -0.5 * dx) continue;
        if (target_distance(phi.dom, phi.tgt, x) <= std::max(3.0 * dx, phi.nodes.target_snap + 2.0 * dx))
            continue;
        wall_nodes.push_back(idx);
    }

    std::vector<OutflowEntry> out;
    int nchecked = 0;
    for (int j = 1; j <= phi.tgrid.nt; j += std::max(time_stride, 1)) {
        const double t = phi.tgrid.time(j);
        if (t > q.time_horizon) break;
        ParticleEnsemble m;
        bool have_m = false;
        for (int idx : wall_nodes) {
            const Vec2 x = g.point(idx);
            const Vec2 n = outward_normal(phi.dom, x);
            std::vector<Vec2> w;
            try {
                w = maximal_descent_directions(phi, k, t, x, tol_w);
            } catch (const Error&) {
                continue;  // degenerate geometry query, skip the node
            }
            bool inward = false;
            for (const Vec2& u : w)
                if (u.dot(n) < -tol_w) {
                    inward = true;
                    break;
                }
            ++nchecked;
            if (!inward) continue;
            if (!have_m) {
                m = pushforward(q, t);
                have_m = true;
            }
            double mass = 0.0;
            for (std::size_t p = 0; p < m.size(); ++p)
                if ((m.positions[p] - x).norm() <= 2.0 * dx) mass += m.weights[p];
            out.push_back({t, x, mass});
        }
    }
    if (checked) *checked = nchecked;
    return out;
}

double upsilon_coverage(const FlowMeasure& q, const ValueField& phi, int time_stride) {
    double min_fraction = 1.0;
    for (int j = 1; j <= phi.tgrid.nt; j += std::max(time_stride, 1)) {
        const double t = phi.tgrid.time(j);
        if (t > q.time_horizon) break;
        double covered = 0.0, total = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            const Trajectory& tr = q.trajectories[i];
            total += q.weights[i];
            // Reached bundles are either strictly between start and arrival
            // (Upsilon) or already on the target; unreached mass is neither.
            if (tr.reached) covered += q.weights[i];
        }
        if (total > 0.0) min_fraction = std::min(min_fraction, covered / total);
    }
    return min_fraction;
}

ResidualReport audit_pair(const FlowMeasure& q, const ValueField& phi, const SpeedField& k,
                          const ParticleEnsemble& m0, const std::vector<BumpTest>& tests,
                          int time_stride) {
    ResidualReport rep;
    rep.continuity = continuity_residual(q, phi, k, tests);
    const HjResidualStats hj = hj_residual(phi, k);
    rep.hj_max = hj.max;
    rep.hj_p95 = hj.p95;
    rep.hj_nodes = hj.nodes;
    rep.gamma_max_abs_phi = hj.gamma_max_abs_phi;
    rep.boundary_worst_probe = hj.boundary_worst_probe;
    rep.boundary_nodes = hj.boundary_nodes;
    rep.outflow = outflow_boundary_check(q, phi, k, time_stride, &rep.outflow_checked);
    for (const OutflowEntry& e : rep.outflow)
        rep.outflow_worst_mass = std::max(rep.outflow_worst_mass, e.mass);
    rep.upsilon_fraction = upsilon_coverage(q, phi, time_stride);
    rep.initial_w1_gap = w1(pushforward(q, 0.0), m0);
    return rep;
}

}  // namespace mtmfg
