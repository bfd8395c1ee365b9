#include "mtmfg/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mtmfg/penalty.hpp"

namespace mtmfg {

namespace {

struct StepDynamics {
    bool penalized{false};
    double eps{0.0};

    double speed(const ValueField& phi, const SpeedField& k, double t, const Vec2& x) const {
        if (penalized) return penalized_speed(k, phi.dom, eps, t, x);
        return k.eval(t, x);
    }
};

Trajectory run_integrator(const ValueField& phi, const SpeedField& k, double t0, const Vec2& x0,
                          const IntegratorParams& ip, const StepDynamics& dyn,
                          double* max_excursion) {
    require(t0 >= 0.0, ErrorCategory::kConfig, "start time must be nonnegative");
    if (!dyn.penalized)
        require(domain_contains(phi.dom, x0, 1e-9), ErrorCategory::kGeometry,
                "trajectory start outside the domain closure");

    Trajectory tr;
    tr.t0 = t0;
    tr.x0 = x0;
    tr.dt = ip.dt > 0.0 ? ip.dt : 0.5 * phi.tgrid.dt;
    const double horizon = ip.horizon > 0.0 ? ip.horizon : phi.tgrid.horizon();
    require(tr.dt > 0.0, ErrorCategory::kConfig, "trajectory step must be positive");
    const double rho_a = k.k_max * tr.dt;

    tr.positions.push_back(x0);
    if (max_excursion) *max_excursion = domain_distance(phi.dom, x0);

    Vec2 x = x0;
    double t = t0;

    auto finalize = [&](const Vec2& from, double now) {
        const double d = target_distance(phi.dom, phi.tgt, from);
        const double kv = std::max(dyn.speed(phi, k, now, from), 1e-12);
        tr.tau = (now - t0) + d / kv;
        tr.reached = true;
        tr.arrival = target_nearest_point(phi.dom, phi.tgt, from);
        if (tr.arrival_leg_start < 0)
            tr.arrival_leg_start = static_cast<int>(tr.controls.size());
        if (d > 0.0) {
            tr.controls.push_back((tr.arrival - from) * (1.0 / (kv * tr.dt)));
            tr.positions.push_back(tr.arrival);
        }
    };

    if (target_distance(phi.dom, phi.tgt, x0) <= rho_a) {
        finalize(x0, t0);
        return tr;
    }

    auto direct_leg = [&](double now, const Vec2& from, Vec2* u_out) {
        // Final approach: within a few steps of the target the descent probes
        // straddle it and turn noisy; walk straight at the nearest target
        // point instead (the same shortcut the value solver applies).
        const double d = target_distance(phi.dom, phi.tgt, from);
        const double kv = dyn.speed(phi, k, now, from);
        if (d > std::max(3.0 * kv * tr.dt, 3.0 * phi.grid.dx)) return false;
        const Vec2 p = target_nearest_point(phi.dom, phi.tgt, from);
        if (!dyn.penalized) {
            for (int s = 1; s <= 4; ++s) {
                const double w = s / 5.0;
                if (signed_distance(phi.dom, from + w * (p - from)) > 0.25 * phi.grid.dx)
                    return false;
            }
        }
        if (tr.arrival_leg_start < 0)
            tr.arrival_leg_start = static_cast<int>(tr.controls.size());
        *u_out = (p - from).normalized(1e-12);
        return u_out->norm2() > 0.0;
    };

    // The raw feedback direction carries sub-cell jumps wherever the
    // interpolated field has kinks; steering through a first-order filter
    // with a fixed time constant (about one cell-crossing time) keeps the
    // applied control Lipschitz uniformly in the step size, at the price of
    // an O(dx) spatial lag.
    const double steer_tc = 2.0 * phi.grid.dx / std::max(k.k_max, 1e-12);
    const double blend = std::min(1.0, tr.dt / steer_tc);
    Vec2 u_filt{0.0, 0.0};
    bool have_filter = false;

    const int max_steps = static_cast<int>(std::ceil((horizon - t0) / tr.dt - 1e-9));
    for (int i = 0; i < max_steps; ++i) {
        Vec2 u;
        if (!direct_leg(t, x, &u)) {
            const Vec2 raw = feedback_direction(phi, k, t, x).u;
            if (have_filter) {
                const Vec2 mixed = (1.0 - blend) * u_filt + blend * raw;
                u_filt = mixed.norm() > 1e-9 ? mixed.normalized() : raw;
            } else {
                u_filt = raw;
                have_filter = true;
            }
            u = u_filt;
        }
        const double kv = dyn.speed(phi, k, t, x);
        Vec2 xn = x + (tr.dt * kv) * u;
        if (!dyn.penalized) {
            const double sd = signed_distance(phi.dom, xn);
            if (sd > 1e-12) xn = closest_domain_point(phi.dom, xn);
        }
        tr.controls.push_back(u);
        tr.positions.push_back(xn);
        t += tr.dt;
        if (max_excursion)
            *max_excursion = std::max(*max_excursion, domain_distance(phi.dom, xn));
        if (target_distance(phi.dom, phi.tgt, xn) <= rho_a) {
            finalize(xn, t);
            return tr;
        }
        x = xn;
    }
    tr.reached = false;
    tr.tau = horizon - t0;
    return tr;
}

}  // namespace

Vec2 Trajectory::position(double t) const {
    if (positions.empty()) return x0;
    if (t <= t0) return positions.front();
    const double f = (t - t0) / dt;
    const int i = static_cast<int>(f);
    if (i >= static_cast<int>(positions.size()) - 1) return positions.back();
    const double w = f - i;
    return (1.0 - w) * positions[i] + w * positions[i + 1];
}

Trajectory integrate(const ValueField& phi, const SpeedField& k, double t0, const Vec2& x0,
                     const IntegratorParams& ip) {
    Trajectory tr = run_integrator(phi, k, t0, x0, ip, {}, nullptr);
    if (!tr.reached) {
        std::ostringstream msg;
        msg << "trajectory from (" << t0 << ", " << x0.x << ", " << x0.y
            << ") did not reach the target before the horizon";
        fail(ErrorCategory::kHorizon, msg.str());
    }
    return tr;
}

Trajectory integrate_or_partial(const ValueField& phi, const SpeedField& k, double t0,
                                const Vec2& x0, const IntegratorParams& ip) {
    return run_integrator(phi, k, t0, x0, ip, {}, nullptr);
}

PenalizedTrajectory integrate_penalized(const ValueField& phi_eps, const SpeedField& k,
                                        double eps, double t0, const Vec2& x0,
                                        const IntegratorParams& ip) {
    StepDynamics dyn;
    dyn.penalized = true;
    dyn.eps = eps;
    PenalizedTrajectory out;
    out.traj = run_integrator(phi_eps, k, t0, x0, ip, dyn, &out.max_excursion);
    return out;
}

double dpp_audit(const Trajectory& traj, const ValueField& phi) {
    const double phi0 = phi.eval(traj.t0, traj.x0);
    double worst = 0.0;
    const double span = traj.tau;
    for (std::size_t i = 0; i < traj.positions.size(); ++i) {
        const double t = traj.t0 + static_cast<double>(i) * traj.dt;
        if (t - traj.t0 > span + 1e-12) break;
        const double v = phi.eval(t, traj.positions[i]) + (t - traj.t0) - phi0;
        worst = std::max(worst, std::abs(v));
    }
    if (traj.reached) {
        const double v =
            phi.eval(traj.arrival_time(), traj.position(traj.arrival_time())) + traj.tau - phi0;
        worst = std::max(worst, std::abs(v));
    }
    return worst;
}

double control_regularity(const Trajectory& traj) {
    require(traj.reached, ErrorCategory::kConfig,
            "control_regularity requires a finite arrival time");
    int m = static_cast<int>(traj.controls.size());
    if (traj.arrival_leg_start >= 0) m = std::min(m, traj.arrival_leg_start);
    double worst = 0.0;
    for (int i = 1; i + 2 < m; ++i)
        worst = std::max(worst, (traj.controls[i + 1] - traj.controls[i]).norm() / traj.dt);
    return worst;
}

}  // namespace mtmfg
