#pragma once

#include <vector>

#include "mtmfg/hjb.hpp"

namespace mtmfg {

/// Time-sampled trajectory of one agent. Positions are constant before the
/// start time and after arrival; controls live in the closed unit ball.
struct Trajectory {
    double t0{0.0};
    Vec2 x0;
    double dt{0.0};                // sample spacing
    std::vector<Vec2> positions;   // samples at t0 + i dt
    std::vector<Vec2> controls;    // control applied on [t_i, t_{i+1})
    double tau{0.0};               // arrival time after t0; infinity-flag below
    bool reached{false};
    Vec2 arrival;                  // point on the target (valid when reached)
    int arrival_leg_start{-1};     // first control index of the final approach

    double arrival_time() const { return t0 + tau; }

    /// Position at an arbitrary time (constant before t0 and after arrival,
    /// piecewise linear in between).
    Vec2 position(double t) const;
};

struct IntegratorParams {
    double dt{0.0};            // trajectory step; 0 -> half the field step
    double horizon{0.0};       // 0 -> field horizon
};

/// Integrates the optimal feedback gamma' = -k grad^ phi with explicit Euler
/// steps projected to the closure, stopping within the arrival radius
/// rho_a = k_max dt of the target. Throws kHorizon when the target is not
/// reached before the horizon; integrate_or_partial returns the partial
/// trajectory instead (reached = false, tau = horizon).
Trajectory integrate(const ValueField& phi, const SpeedField& k, double t0, const Vec2& x0,
                     const IntegratorParams& ip = {});
Trajectory integrate_or_partial(const ValueField& phi, const SpeedField& k, double t0,
                                const Vec2& x0, const IntegratorParams& ip = {});

/// Penalized variant: free feet (no projection), speed k_eps, used by the
/// penalization studies. Reports the largest excursion d_Omega along the way.
struct PenalizedTrajectory {
    Trajectory traj;
    double max_excursion{0.0};
};
PenalizedTrajectory integrate_penalized(const ValueField& phi_eps, const SpeedField& k,
                                        double eps, double t0, const Vec2& x0,
                                        const IntegratorParams& ip = {});

/// Max over samples in [t0, t0 + tau] of |phi(t, gamma(t)) + (t - t0) - phi(t0, x0)|.
/// Partial trajectories are audited over their recorded span.
double dpp_audit(const Trajectory& traj, const ValueField& phi);

/// Max discrete control slope |u_{i+1} - u_i| / dt over the open arrival
/// interval, excluding the recorded final-approach leg (the steering there
/// walks straight at the target rather than following the feedback).
/// Requires a finite arrival time.
double control_regularity(const Trajectory& traj);

}  // namespace mtmfg
