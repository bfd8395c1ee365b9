#pragma once

#include <functional>
#include <vector>

#include "mtmfg/congestion.hpp"
#include "mtmfg/geometry.hpp"
#include "mtmfg/grid.hpp"

namespace mtmfg {

/// Discretization parameters of the semi-Lagrangian value solver.
struct SolverParams {
    int n_dir{64};              // direction samples on the unit circle ({-1,+1} in d=1)
    double sweep_tol{1e-9};     // stationary sweep fixed-point tolerance
    int max_sweeps{500};        // sweep-set budget before a solver error
    std::vector<double> h_probe_steps{10.0, 20.0};  // descent probe lengths, in dx units
    double tol_w{0.0};          // 0 -> max(10 dx / min step, direction floor)
    double t_hor{0.0};          // 0 -> horizon_factor * T_bound
    double horizon_factor{1.25};
    int threads{1};

    /// W-set detection threshold: 10 dx / (min probe steps), floored at twice
    /// the direction-grid resolution of the descent rate.
    double tol_w_effective(double dx, int dim) const;
};

/// Value function phi(t, x) on the speed field's space-time grid. Slices hold
/// every grid node; nodes outside the closure carry a first-order extension
/// so that interpolation stays meaningful for feet that graze the boundary.
struct ValueField {
    SpaceGrid grid;
    TimeGrid tgrid;
    DomainSpec dom;
    TargetSpec tgt;
    NodeFlags nodes;
    SolverParams params;
    double t_bound{0.0};        // published bound D max d_Gamma / K_min
    double big{1e8};            // unreached sentinel
    bool penalized{false};
    double eps{0.0};            // penalization width when penalized
    std::vector<std::vector<double>> slices;

    /// Interpolated value, constant beyond the final time.
    double eval(double t, const Vec2& x) const;

    bool reached(double value) const { return value < 0.5 * big; }

    /// Builds a field from an analytic function (test oracles).
    static ValueField from_function(const SpaceGrid& g, const TimeGrid& tg, const DomainSpec& dom,
                                    const TargetSpec& tgt, const SolverParams& params,
                                    const std::function<double(double, const Vec2&)>& fn);
};

/// Published upper bound on the minimal time: D max_x d_Gamma(x) / K_min.
double time_bound(const DomainSpec& dom, const TargetSpec& tgt, const SpaceGrid& grid,
                  double k_min);

/// Stationary value: fixed point of phi(x) = min_u [h + phi(x + h k(x) u)]
/// with feet leaving the closure rejected (or clipped within one cell) and
/// phi = 0 on the target. Gauss-Seidel sweeps with alternating orderings.
std::vector<double> solve_stationary(const std::vector<double>& k_slice, const DomainSpec& dom,
                                     const TargetSpec& tgt, const SpaceGrid& grid, double dt,
                                     const SolverParams& params);

/// Backward semi-Lagrangian solve of the state-constrained problem:
/// terminal slice from solve_stationary, then
/// phi(t, x) = min_u [dt + phi(t + dt, x + dt k(t, x) u)] over admissible feet.
ValueField solve_value(const SpeedField& k, const DomainSpec& dom, const TargetSpec& tgt,
                       const SolverParams& params);

/// Unconstrained penalized variant on an expanded grid, with speed
/// k_eps = k(proj x) (1 - d_Omega(x)/eps)_+ and free feet.
ValueField solve_value_penalized(const SpeedField& k, const DomainSpec& dom, const TargetSpec& tgt,
                                 double eps, const SolverParams& params, double margin_cap = 0.3);

/// Descent rate of phi at (t, x) along a unit direction u:
/// max over probe lengths h of [phi(t + h, x + h k(t,x) u) - phi(t, x)] / h.
/// Probes through the field's outside extension when feet leave the closure.
/// Throws kGeometry for points on the target or outward u at the boundary.
double descent_rate(const ValueField& phi, const SpeedField& k, double t, const Vec2& x,
                    const Vec2& u);

/// Sampled directions of maximal descent: all direction-grid u in the closed
/// inward cone with descent_rate <= -1 + tol_w. May be empty.
std::vector<Vec2> maximal_descent_directions(const ValueField& phi, const SpeedField& k, double t,
                                             const Vec2& x, double tol_w);

struct NormalizedGradient {
    enum class Status { kOk, kNonUnique, kNoDescent };
    Status status{Status::kNoDescent};
    Vec2 direction;  // the normalized gradient (optimal control is its opposite)
};

/// Normalized gradient: when the maximal-descent set forms a single tight
/// angular cluster, returns minus its renormalized mean. Distinct clusters or
/// a degenerate spread report kNonUnique; an empty set reports kNoDescent.
NormalizedGradient normalized_gradient(const ValueField& phi, const SpeedField& k, double t,
                                       const Vec2& x);

/// One feedback direction for trajectory integration: the descent direction
/// from the normalized gradient when unique, otherwise the sampled direction
/// minimizing the descent rate (lexicographic tie-break).
struct FeedbackDirection {
    Vec2 u;
    bool unique{false};
    double rate{0.0};
};
FeedbackDirection feedback_direction(const ValueField& phi, const SpeedField& k, double t,
                                     const Vec2& x);

/// Measured Lipschitz constants of the computed field (audits).
double measured_space_lipschitz(const ValueField& phi);
double measured_spacetime_lipschitz(const ValueField& phi);

/// Loose paper-style Lipschitz bound (D K_max / K_min^2) exp(T L K_max^2 / K_min^2).
double lipschitz_paper_bound(double geodesic_factor, double k_min, double k_max, double lipschitz,
                             double t_bound);

}  // namespace mtmfg
