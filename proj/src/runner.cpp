#include "mtmfg/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

namespace mtmfg {

using nlohmann::json;

namespace {

class PhaseTimer {
  public:
    explicit PhaseTimer(json* sink) : sink_(sink) {}

    template <typename Fn>
    auto time(const std::string& name, Fn&& fn) {
        const auto start = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            record(name, start);
        } else {
            auto out = fn();
            record(name, start);
            return out;
        }
    }

  private:
    void record(const std::string& name, std::chrono::steady_clock::time_point start) {
        const double s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        (*sink_)[name] = s;
    }
    json* sink_;
};

json field_stats(const ValueField& phi) {
    double vmin = 1e300, vmax = 0.0;
    int reached = 0, total = 0;
    const auto& slice0 = phi.slices.front();
    for (int idx = 0; idx < phi.grid.count(); ++idx) {
        if (!phi.nodes.in_domain(idx)) continue;
        ++total;
        if (!phi.reached(slice0[idx])) continue;
        ++reached;
        vmin = std::min(vmin, slice0[idx]);
        vmax = std::max(vmax, slice0[idx]);
    }
    return {{"nodes_in_domain", total},
            {"nodes_reached", reached},
            {"phi0_min", reached ? vmin : 0.0},
            {"phi0_max", reached ? vmax : 0.0}};
}

json lipschitz_block(const Scenario& s, const ValueField& phi) {
    const double paper = lipschitz_paper_bound(s.domain.geodesic_factor(), s.law.k_min,
                                               s.law.k_max, s.law.lipschitz(), phi.t_bound);
    return {{"measured_space", measured_space_lipschitz(phi)},
            {"measured_spacetime", measured_spacetime_lipschitz(phi)},
            {"paper_bound", paper}};
}

json hj_block(const HjResidualStats& hj) {
    return {{"max", hj.max},
            {"p95", hj.p95},
            {"eligible_nodes", hj.nodes},
            {"gamma_max_abs_phi", hj.gamma_max_abs_phi},
            {"boundary_worst_probe", hj.boundary_worst_probe},
            {"boundary_nodes", hj.boundary_nodes}};
}

json audit_block(const ResidualReport& rep) {
    json outflow = json::array();
    for (const OutflowEntry& e : rep.outflow)
        outflow.push_back({{"t", e.t}, {"x", {e.x.x, e.x.y}}, {"mass", e.mass}});
    return {{"continuity", rep.continuity},
            {"hj_max", rep.hj_max},
            {"hj_p95", rep.hj_p95},
            {"hj_nodes", rep.hj_nodes},
            {"gamma_max_abs_phi", rep.gamma_max_abs_phi},
            {"boundary_worst_probe", rep.boundary_worst_probe},
            {"boundary_nodes", rep.boundary_nodes},
            {"outflow", outflow},
            {"outflow_worst_mass", rep.outflow_worst_mass},
            {"outflow_checked", rep.outflow_checked},
            {"upsilon_fraction", rep.upsilon_fraction},
            {"initial_w1_gap", rep.initial_w1_gap},
            {"neighborhood_radius", "2*dx (discretization choice for the boundary condition)"}};
}

struct Prepared {
    ParticleEnsemble m0;
    SpaceGrid grid;
    TimeGrid tgrid;
    SolverParams solver;
    IntegratorParams ip;
};

Prepared prepare(const Scenario& s, int threads) {
    Prepared p;
    p.m0 = sample_initial_mass(s.initial_mass, s.domain);
    p.grid = s.make_grid();
    p.tgrid = s.make_tgrid();
    p.solver = s.solver;
    p.solver.threads = std::max(threads, 1);
    p.solver.t_hor = p.tgrid.horizon();
    p.ip.dt = s.dt_traj_effective();
    return p;
}

void dump_common(const Scenario& s, const StagedDir& out, const ValueField& phi,
                 const SpeedField& k, const FlowMeasure* q, json* artifact_index) {
    json artifacts = json::array();
    if (s.output.dump_value_field) {
        write_grid_binary(out.path() / "value_field.mfgb", phi.grid, phi.tgrid, phi.slices);
        artifacts.push_back("value_field.mfgb");
    }
    if (s.output.dump_speed_field) {
        write_grid_binary(out.path() / "speed_field.mfgb", k.grid, k.tgrid, k.slices);
        artifacts.push_back("speed_field.mfgb");
    }
    if (s.output.csv_slices) {
        const int picks[3] = {0, phi.tgrid.nt / 2, phi.tgrid.nt};
        for (int j : picks) {
            std::ostringstream name;
            name << "phi_slice_" << j << ".csv";
            std::ofstream csv(out.path() / name.str());
            csv.precision(17);
            csv << (s.domain.dim == 1 ? "x,phi\n" : "x,y,phi\n");
            for (int idx = 0; idx < phi.grid.count(); ++idx) {
                if (!phi.nodes.in_domain(idx)) continue;
                const Vec2 x = phi.grid.point(idx);
                if (s.domain.dim == 1)
                    csv << x.x << ',' << phi.slices[j][idx] << '\n';
                else
                    csv << x.x << ',' << x.y << ',' << phi.slices[j][idx] << '\n';
            }
            artifacts.push_back(name.str());
        }
    }
    if (q && s.output.dump_trajectories) {
        json sidecar = json::array();
        for (std::size_t i = 0; i < q->size(); ++i) {
            const std::string name = "trajectory_" + std::to_string(i) + ".csv";
            write_trajectory_csv(out.path() / name, q->trajectories[i], s.domain.dim);
            sidecar.push_back({{"file", name},
                               {"tau", q->trajectories[i].tau},
                               {"reached", q->trajectories[i].reached},
                               {"dpp_audit", dpp_audit(q->trajectories[i], phi)}});
        }
        write_json_file(out.path() / "trajectories.json", sidecar);
        artifacts.push_back("trajectories.json");
    }
    if (q && s.output.dump_density) {
        const ParticleEnsemble snap = pushforward(*q, 0.5 * phi.tgrid.horizon());
        write_grid_binary(out.path() / "density_mid.mfgb", phi.grid, TimeGrid{0.0, 0},
                          {rasterize_density(snap, phi.grid, 2.0 * phi.grid.dx)});
        artifacts.push_back("density_mid.mfgb");
    }
    *artifact_index = artifacts;
}

json metrics_solve_ocp(const Scenario& s, const Prepared& p, const StagedDir* out,
                       json* artifact_index, PhaseTimer& timer) {
    const std::vector<ParticleEnsemble> rest(p.tgrid.nt + 1, p.m0);
    const SpeedField k = timer.time("freeze", [&] {
        return freeze(s.law, s.domain, s.target, rest, p.grid, p.tgrid, p.solver.threads);
    });
    const ValueField phi =
        timer.time("solve_value", [&] { return solve_value(k, s.domain, s.target, p.solver); });

    std::vector<Trajectory> trajs(p.m0.size());
    timer.time("trajectories", [&] {
        for (std::size_t i = 0; i < p.m0.size(); ++i)
            trajs[i] = integrate_or_partial(phi, k, 0.0, p.m0.positions[i], p.ip);
    });

    int reached = 0;
    double max_dpp = 0.0, max_gap = 0.0;
    for (const Trajectory& tr : trajs) {
        if (!tr.reached) continue;
        ++reached;
        max_dpp = std::max(max_dpp, dpp_audit(tr, phi));
        max_gap = std::max(max_gap, std::abs(tr.tau - phi.eval(0.0, tr.x0)));
    }

    json m;
    m["t_bound"] = phi.t_bound;
    m["t_hor"] = p.tgrid.horizon();
    m["field"] = field_stats(phi);
    m["arrival"] = {{"particles", p.m0.size()},
                    {"reached", reached},
                    {"max_dpp_audit", max_dpp},
                    {"max_abs_tau_minus_phi", max_gap}};
    m["lipschitz"] = lipschitz_block(s, phi);
    m["hj"] = hj_block(hj_residual(phi, k));

    if (out) {
        FlowMeasure q = FlowMeasure::from_trajectories(trajs, p.m0.weights, p.tgrid.horizon());
        dump_common(s, *out, phi, k, &q, artifact_index);
    }
    return m;
}

json metrics_equilibrium(const Scenario& s, const Prepared& p, const StagedDir* out,
                         json* artifact_index, PhaseTimer& timer, EquilibriumResult* result_out) {
    json iteration_files = json::array();
    IterationSink sink;
    if (out && s.output.per_iteration_dumps) {
        sink = [&](int n, const ValueField& phi, const FlowMeasure& q) {
            std::ostringstream vname;
            vname << "value_iter_" << n << ".mfgb";
            write_grid_binary(out->path() / vname.str(), phi.grid, phi.tgrid, phi.slices);
            iteration_files.push_back(vname.str());
            std::ostringstream dname;
            dname << "density_iter_" << n << ".mfgb";
            const ParticleEnsemble snap = pushforward(q, 0.5 * phi.tgrid.horizon());
            write_grid_binary(out->path() / dname.str(), phi.grid, TimeGrid{0.0, 0},
                              {rasterize_density(snap, phi.grid, 2.0 * phi.grid.dx)});
            iteration_files.push_back(dname.str());
        };
    }
    EquilibriumResult res = timer.time("fixed_point", [&] {
        return fixed_point(p.m0, s.law, s.domain, s.target, p.grid, p.tgrid, s.equilibrium,
                           p.solver, p.ip, sink);
    });
    for (const auto& f : iteration_files) res.report.artifacts.push_back(f.get<std::string>());
    json m;
    m["iterations"] = res.report.iterations;
    m["displacement"] = res.report.displacement;
    m["optimality"] = res.report.optimality;
    m["verdict"] = res.report.verdict;
    m["stop_reason"] = res.report.stop_reason;
    m["final_residual"] =
        res.report.optimality.empty() ? 0.0 : res.report.optimality.back();
    m["final_displacement"] =
        res.report.displacement.empty() ? 0.0 : res.report.displacement.back();
    m["t_hor"] = p.tgrid.horizon();
    m["lipschitz"] = lipschitz_block(s, res.phi);
    m["iteration_artifacts"] = res.report.artifacts;

    if (out) dump_common(s, *out, res.phi, res.k, &res.q, artifact_index);
    if (result_out) *result_out = std::move(res);
    return m;
}

json metrics_penalty_study(const Scenario& s, const Prepared& p, const StagedDir* out,
                           json* artifact_index, PhaseTimer& timer) {
    const double eps0 = s.epsilon_threshold_value();
    std::vector<double> sweep = s.penalty.sweep;
    if (sweep.empty())
        sweep = {0.45 * eps0, s.penalty.safety_factor * eps0, 5.0 * eps0};

    const std::vector<ParticleEnsemble> rest(p.tgrid.nt + 1, p.m0);
    const SpeedField k = freeze(s.law, s.domain, s.target, rest, p.grid, p.tgrid,
                                p.solver.threads);
    const ValueField phi =
        timer.time("solve_constrained", [&] { return solve_value(k, s.domain, s.target, p.solver); });

    const int starts = std::min<std::size_t>(p.m0.size(), 100);
    json rows = json::array();
    for (double eps : sweep) {
        const ValueField phi_eps = timer.time("solve_eps_" + std::to_string(eps), [&] {
            return solve_value_penalized(k, s.domain, s.target, eps, p.solver,
                                         s.penalty.margin_cap);
        });
        double excursion = 0.0, gap = 0.0;
        for (int i = 0; i < starts; ++i) {
            const Vec2 x0 = p.m0.positions[i];
            const PenalizedTrajectory pt = integrate_penalized(phi_eps, k, eps, 0.0, x0, p.ip);
            excursion = std::max(excursion, pt.max_excursion);
            gap = std::max(gap, std::abs(phi_eps.eval(0.0, x0) - phi.eval(0.0, x0)));
        }
        rows.push_back({{"eps", eps},
                        {"max_excursion", excursion},
                        {"max_abs_phi_gap", gap},
                        {"hole_witness", excursion > 2.0 * s.grid.dx}});
    }

    json m;
    m["epsilon_threshold"] = eps0;
    m["eps_star"] = PenaltyParams::for_domain(s.domain, 1.0).eps_star;
    m["c_curv"] = PenaltyParams::for_domain(s.domain, 1.0).c_curv;
    m["rows"] = rows;
    m["starts"] = starts;
    if (out) dump_common(s, *out, phi, k, nullptr, artifact_index);
    return m;
}

json metrics_audit(const Scenario& s, const Prepared& p, const StagedDir* out,
                   json* artifact_index, PhaseTimer& timer) {
    EquilibriumResult res;
    json m = metrics_equilibrium(s, p, nullptr, artifact_index, timer, &res);
    const std::vector<BumpTest> tests =
        default_test_functions(s.domain, s.target, p.grid, p.tgrid.horizon());
    const ResidualReport rep = timer.time("audit", [&] {
        return audit_pair(res.q, res.phi, res.k, p.m0, tests, s.equilibrium.displacement_stride);
    });
    m["audit"] = audit_block(rep);
    if (out) {
        dump_common(s, *out, res.phi, res.k, &res.q, artifact_index);
        if (s.output.dump_residual_grid) {
            write_grid_binary(out->path() / "hj_residual.mfgb", res.phi.grid, TimeGrid{0.0, 0},
                              {hj_residual_grid(res.phi, res.k)});
            artifact_index->push_back("hj_residual.mfgb");
        }
    }
    return m;
}

}  // namespace

RunMode run_mode_from_string(const std::string& s) {
    if (s == "solve-ocp") return RunMode::kSolveOcp;
    if (s == "equilibrium") return RunMode::kEquilibrium;
    if (s == "penalty-study") return RunMode::kPenaltyStudy;
    if (s == "audit") return RunMode::kAudit;
    fail(ErrorCategory::kConfig, "unknown mode '" + s +
                                     "' (expected solve-ocp, equilibrium, penalty-study, audit)");
}

const char* run_mode_name(RunMode m) {
    switch (m) {
        case RunMode::kSolveOcp: return "solve-ocp";
        case RunMode::kEquilibrium: return "equilibrium";
        case RunMode::kPenaltyStudy: return "penalty-study";
        case RunMode::kAudit: return "audit";
    }
    return "unknown";
}

RunOutput run_scenario(const Scenario& scenario_in, const RunOptions& options) {
    Scenario scenario = scenario_in;
    if (options.seed != 0) scenario.initial_mass.seed = options.seed;

    RunOutput out;
    out.manifest = {{"tool", "mtmfg"},
                    {"version", options.tool_version},
                    {"mode", run_mode_name(options.mode)},
                    {"seed", scenario.initial_mass.seed},
                    {"threads", options.threads},
                    {"scenario", scenario_to_json(scenario)}};

    PhaseTimer timer(&out.timings);
    const Prepared p = prepare(scenario, options.threads);

    std::unique_ptr<StagedDir> staged;
    if (!options.out_dir.empty()) staged = std::make_unique<StagedDir>(options.out_dir);

    json artifact_index = json::array();
    json metrics;
    switch (options.mode) {
        case RunMode::kSolveOcp:
            metrics = metrics_solve_ocp(scenario, p, staged.get(), &artifact_index, timer);
            break;
        case RunMode::kEquilibrium:
            metrics = metrics_equilibrium(scenario, p, staged.get(), &artifact_index, timer,
                                          nullptr);
            break;
        case RunMode::kPenaltyStudy:
            metrics = metrics_penalty_study(scenario, p, staged.get(), &artifact_index, timer);
            break;
        case RunMode::kAudit:
            metrics = metrics_audit(scenario, p, staged.get(), &artifact_index, timer);
            break;
    }
    metrics["mode"] = run_mode_name(options.mode);
    metrics["artifacts"] = artifact_index;
    out.metrics = metrics;

    if (staged) {
        write_json_file(staged->path() / "manifest.json", out.manifest);
        write_json_file(staged->path() / "metrics.json", out.metrics);
        write_json_file(staged->path() / "timings.json", out.timings);
        staged->commit();
    }
    return out;
}

}  // namespace mtmfg
