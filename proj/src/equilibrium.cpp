#include "mtmfg/equilibrium.hpp"

#include <algorithm>
#include <cmath>

namespace mtmfg {

namespace {

std::vector<ParticleEnsemble> pushforward_timeline(const FlowMeasure& q, const TimeGrid& tgrid) {
    std::vector<ParticleEnsemble> timeline;
    timeline.reserve(tgrid.nt + 1);
    for (int j = 0; j <= tgrid.nt; ++j) timeline.push_back(pushforward(q, tgrid.time(j)));
    return timeline;
}

double sup_displacement(const std::vector<ParticleEnsemble>& a,
                        const std::vector<ParticleEnsemble>& b, int stride) {
    double worst = 0.0;
    const int last = static_cast<int>(a.size()) - 1;
    for (int j = 0; j <= last; j += std::max(stride, 1)) worst = std::max(worst, w1(a[j], b[j]));
    worst = std::max(worst, w1(a[last], b[last]));
    return worst;
}

double bundle_residual(const FlowMeasure& q, const ValueField& phi) {
    double worst = 0.0;
    for (const Trajectory& tr : q.trajectories) {
        const double predicted = phi.eval(tr.t0, tr.x0);
        const double realized = tr.reached ? tr.tau : q.time_horizon - tr.t0;
        worst = std::max(worst, std::max(realized - predicted, 0.0));
    }
    return worst;
}

}  // namespace

void EquilibriumConfig::validate() const {
    require(max_iterations >= 1, ErrorCategory::kConfig, "max_iterations must be >= 1");
    require(tol_displacement > 0.0 && tol_optimality > 0.0, ErrorCategory::kConfig,
            "equilibrium tolerances must be positive");
    require(lambda_constant >= 0.0 && lambda_constant <= 1.0, ErrorCategory::kConfig,
            "lambda must lie in (0, 1] (0 selects the harmonic schedule)");
    require(stall_patience >= 2, ErrorCategory::kConfig, "stall patience must be >= 2");
}

BestResponse best_response(const std::vector<ParticleEnsemble>& timeline,
                           const CongestionLaw& law, const ParticleEnsemble& m0,
                           const DomainSpec& dom, const TargetSpec& tgt, const SpaceGrid& grid,
                           const TimeGrid& tgrid, const SolverParams& params,
                           const IntegratorParams& ip) {
    BestResponse br;
    br.k = freeze(law, dom, tgt, timeline, grid, tgrid, params.threads);
    SolverParams sp = params;
    sp.t_hor = tgrid.horizon();
    br.phi = solve_value(br.k, dom, tgt, sp);

    std::vector<Trajectory> trajs(m0.size());
    for (std::size_t i = 0; i < m0.size(); ++i)
        trajs[i] = integrate_or_partial(br.phi, br.k, 0.0, m0.positions[i], ip);
    br.q = FlowMeasure::from_trajectories(std::move(trajs), m0.weights, tgrid.horizon());
    return br;
}

ResidualDetail equilibrium_residual_detail(const FlowMeasure& q, const CongestionLaw& law,
                                           const DomainSpec& dom, const TargetSpec& tgt,
                                           const SpaceGrid& grid, const TimeGrid& tgrid,
                                           const SolverParams& params) {
    ResidualDetail rd;
    const std::vector<ParticleEnsemble> timeline = pushforward_timeline(q, tgrid);
    rd.k = freeze(law, dom, tgt, timeline, grid, tgrid, params.threads);
    SolverParams sp = params;
    sp.t_hor = tgrid.horizon();
    rd.phi = solve_value(rd.k, dom, tgt, sp);
    rd.residual = bundle_residual(q, rd.phi);
    return rd;
}

double equilibrium_residual(const FlowMeasure& q, const CongestionLaw& law, const DomainSpec& dom,
                            const TargetSpec& tgt, const SpaceGrid& grid, const TimeGrid& tgrid,
                            const SolverParams& params) {
    return equilibrium_residual_detail(q, law, dom, tgt, grid, tgrid, params).residual;
}

EquilibriumResult fixed_point(const ParticleEnsemble& m0, const CongestionLaw& law,
                              const DomainSpec& dom, const TargetSpec& tgt, const SpaceGrid& grid,
                              const TimeGrid& tgrid, const EquilibriumConfig& config,
                              const SolverParams& params, const IntegratorParams& ip,
                              const IterationSink& sink) {
    config.validate();
    law.validate();
    m0.validate(dom);

    // Bootstrap best response against the resting crowd.
    std::vector<ParticleEnsemble> rest(tgrid.nt + 1, m0);
    BestResponse br = best_response(rest, law, m0, dom, tgt, grid, tgrid, params, ip);
    std::vector<ParticleEnsemble> m_prev = pushforward_timeline(br.q, tgrid);

    // Fictitious-play state: averaged speed samples, seeded with the
    // bootstrap response's own induced speeds.
    SpeedField k_state = freeze(law, dom, tgt, m_prev, grid, tgrid, params.threads);

    EquilibriumResult result;
    result.q = br.q;
    EquilibriumReport& rep = result.report;
    rep.verdict = "stalled";
    rep.stop_reason = "iteration_limit";

    for (int n = 1; n <= config.max_iterations; ++n) {
        SolverParams sp = params;
        sp.t_hor = tgrid.horizon();
        ValueField phi = solve_value(k_state, dom, tgt, sp);
        std::vector<Trajectory> trajs(m0.size());
        for (std::size_t i = 0; i < m0.size(); ++i)
            trajs[i] = integrate_or_partial(phi, k_state, 0.0, m0.positions[i], ip);
        FlowMeasure q_n =
            FlowMeasure::from_trajectories(std::move(trajs), m0.weights, tgrid.horizon());

        const std::vector<ParticleEnsemble> m_n = pushforward_timeline(q_n, tgrid);
        const double disp = sup_displacement(m_n, m_prev, config.displacement_stride);

        // Average the induced speeds into the state.
        const SpeedField k_hat = freeze(law, dom, tgt, m_n, grid, tgrid, params.threads);
        const double lambda =
            config.lambda_constant > 0.0 ? config.lambda_constant : 1.0 / (n + 1.0);
        for (int j = 0; j <= tgrid.nt; ++j)
            for (int idx = 0; idx < grid.count(); ++idx)
                k_state.slices[j][idx] =
                    (1.0 - lambda) * k_state.slices[j][idx] + lambda * k_hat.slices[j][idx];

        // Optimality defect against the bundle's own induced dynamics.
        SolverParams rp = params;
        rp.t_hor = tgrid.horizon();
        ValueField phi_q = solve_value(k_hat, dom, tgt, rp);
        const double resid = bundle_residual(q_n, phi_q);

        rep.displacement.push_back(disp);
        rep.optimality.push_back(resid);
        rep.iterations = n;
        if (sink) sink(n, phi_q, q_n);
        result.q = q_n;
        result.k = k_hat;
        result.phi = phi_q;
        m_prev = m_n;

        if (disp <= config.tol_displacement && resid <= config.tol_optimality) {
            rep.verdict = "converged";
            rep.stop_reason = "tolerance_met";
            return result;
        }
        if (static_cast<int>(rep.displacement.size()) >= config.stall_patience) {
            bool non_decreasing = true;
            const std::size_t last = rep.displacement.size() - 1;
            for (int w = 0; w < config.stall_patience - 1; ++w)
                if (rep.displacement[last - w] < rep.displacement[last - w - 1] * (1.0 - 1e-12)) {
                    non_decreasing = false;
                    break;
                }
            if (non_decreasing) {
                rep.verdict = "stalled";
                rep.stop_reason = "displacement_stall";
                return result;
            }
        }
    }
    return result;
}

}  // namespace mtmfg
