#include "mtmfg/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace mtmfg {

using nlohmann::json;

namespace {

// Key-checked JSON reader: every consumed key is recorded, unknown keys are
// reported with their path (silent typos corrupt studies).
struct Reader {
    const json& j;
    std::string path;
    std::vector<std::string>* errors;
    std::set<std::string> seen;

    Reader(const json& jj, std::string p, std::vector<std::string>* errs)
        : j(jj), path(std::move(p)), errors(errs) {
        if (!j.is_object()) errs->push_back(path + ": expected an object");
    }

    ~Reader() {
        if (!j.is_object()) return;
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!seen.count(it.key())) errors->push_back(path + "." + it.key() + ": unknown key");
    }

    bool has(const std::string& key) {
        return j.is_object() && j.contains(key);
    }

    const json* get(const std::string& key) {
        if (!has(key)) return nullptr;
        seen.insert(key);
        return &j.at(key);
    }

    double number(const std::string& key, double fallback) {
        const json* v = get(key);
        if (!v) return fallback;
        if (!v->is_number()) {
            errors->push_back(path + "." + key + ": expected a number");
            return fallback;
        }
        return v->get<double>();
    }

    int integer(const std::string& key, int fallback) {
        const json* v = get(key);
        if (!v) return fallback;
        if (!v->is_number_integer()) {
            errors->push_back(path + "." + key + ": expected an integer");
            return fallback;
        }
        return v->get<int>();
    }

    bool boolean(const std::string& key, bool fallback) {
        const json* v = get(key);
        if (!v) return fallback;
        if (!v->is_boolean()) {
            errors->push_back(path + "." + key + ": expected a boolean");
            return fallback;
        }
        return v->get<bool>();
    }

    std::string text(const std::string& key, const std::string& fallback) {
        const json* v = get(key);
        if (!v) return fallback;
        if (!v->is_string()) {
            errors->push_back(path + "." + key + ": expected a string");
            return fallback;
        }
        return v->get<std::string>();
    }

    Vec2 point(const std::string& key, Vec2 fallback) {
        const json* v = get(key);
        if (!v) return fallback;
        if (!v->is_array() || v->empty() || v->size() > 2) {
            errors->push_back(path + "." + key + ": expected [x] or [x, y]");
            return fallback;
        }
        Vec2 p{(*v)[0].get<double>(), v->size() > 1 ? (*v)[1].get<double>() : 0.0};
        return p;
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
        const json* v = get(key);
        if (!v) return fallback;
        if (!v->is_array()) {
            errors->push_back(path + "." + key + ": expected an array of numbers");
            return fallback;
        }
        std::vector<double> out;
        for (const auto& e : *v) {
            if (!e.is_number()) {
                errors->push_back(path + "." + key + ": expected numbers");
                return fallback;
            }
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::vector<Vec2> point_list(const std::string& key) {
        const json* v = get(key);
        std::vector<Vec2> out;
        if (!v) return out;
        if (!v->is_array()) {
            errors->push_back(path + "." + key + ": expected an array of points");
            return out;
        }
        for (const auto& e : *v) {
            if (!e.is_array() || e.empty() || e.size() > 2) {
                errors->push_back(path + "." + key + ": each point must be [x] or [x, y]");
                return out;
            }
            out.push_back({e[0].get<double>(), e.size() > 1 ? e[1].get<double>() : 0.0});
        }
        return out;
    }
};

json point_json(const Vec2& p, int dim) {
    if (dim == 1) return json::array({p.x});
    return json::array({p.x, p.y});
}

}  // namespace

double Scenario::dt_effective() const {
    return grid.dt > 0.0 ? grid.dt : grid.dx / law.k_max;
}

double Scenario::dt_traj_effective() const {
    return grid.dt_traj > 0.0 ? grid.dt_traj : 0.5 * dt_effective();
}

SpaceGrid Scenario::make_grid() const {
    return SpaceGrid::cover(domain, grid.dx, 2.0 * grid.dx);
}

TimeGrid Scenario::make_tgrid() const {
    const SpaceGrid g = make_grid();
    const double tb = time_bound(domain, target, g, law.k_min);
    const double t_hor = solver.t_hor > 0.0 ? solver.t_hor : solver.horizon_factor * tb;
    TimeGrid tg;
    tg.dt = dt_effective();
    tg.nt = std::max(1, static_cast<int>(std::ceil(t_hor / tg.dt - 1e-9)));
    return tg;
}

PenaltyParams Scenario::penalty_params() const {
    double eps = penalty.eps;
    if (eps <= 0.0) eps = penalty.safety_factor * epsilon_threshold_value();
    return PenaltyParams::for_domain(domain, eps);
}

double Scenario::epsilon_threshold_value() const {
    const PenaltyParams base = PenaltyParams::for_domain(domain, 1.0);
    return epsilon_threshold(law.k_min, law.k_max, law.lipschitz(), base.c_curv, base.eps_star);
}

Scenario scenario_from_json(const json& root, bool allow_eps_override,
                            std::vector<std::string>* errors) {
    Scenario s;
    Reader top(root, "scenario", errors);

    // domain
    if (const json* jd = top.get("domain")) {
        Reader r(*jd, "scenario.domain", errors);
        const std::string shape = r.text("shape", "disk");
        try {
            if (shape == "interval") {
                s.domain = DomainSpec::interval(r.number("a", 0.0), r.number("b", 1.0));
            } else if (shape == "disk") {
                s.domain = DomainSpec::disk(r.point("center", {0.0, 0.0}), r.number("radius", 1.0));
            } else if (shape == "annulus") {
                s.domain = DomainSpec::annulus(r.point("center", {0.0, 0.0}),
                                               r.number("r_inner", 0.5), r.number("r_outer", 1.0));
            } else if (shape == "rounded_rectangle") {
                s.domain = DomainSpec::rounded_rectangle(r.point("center", {0.0, 0.0}),
                                                         r.point("half_widths", {1.0, 0.5}),
                                                         r.number("corner_radius", 0.1));
            } else {
                errors->push_back("scenario.domain.shape: unknown shape '" + shape + "'");
            }
        } catch (const Error& e) {
            errors->push_back(std::string("scenario.domain: ") + e.what());
        }
    } else {
        errors->push_back("scenario.domain: required");
    }

    // target
    if (const json* jt = top.get("target")) {
        Reader r(*jt, "scenario.target", errors);
        const std::string region = r.text("region", "full_boundary");
        if (region == "points") {
            s.target = TargetSpec::point_set(r.point_list("points"));
        } else if (region == "boundary_arc") {
            const std::string which = r.text("boundary", "outer");
            s.target = TargetSpec::boundary_arc(
                r.number("angle_min", 0.0), r.number("angle_max", 0.0),
                which == "inner" ? ArcBoundary::kInner : ArcBoundary::kOuter);
            if (which != "inner" && which != "outer")
                errors->push_back("scenario.target.boundary: expected 'outer' or 'inner'");
        } else if (region == "full_boundary") {
            s.target = TargetSpec::full_boundary();
        } else if (region == "box") {
            s.target =
                TargetSpec::box(r.point("box_min", {0.0, 0.0}), r.point("box_max", {0.0, 0.0}));
        } else {
            errors->push_back("scenario.target.region: unknown region '" + region + "'");
        }
    } else {
        errors->push_back("scenario.target: required");
    }

    // congestion
    if (const json* jc = top.get("congestion")) {
        Reader r(*jc, "scenario.congestion", errors);
        const std::string kernel = r.text("kernel", "tent");
        if (kernel == "tent")
            s.law.kernel = KernelProfile::kTent;
        else if (kernel == "truncated_quadratic")
            s.law.kernel = KernelProfile::kTruncatedQuadratic;
        else
            errors->push_back("scenario.congestion.kernel: unknown kernel '" + kernel + "'");
        s.law.kernel_radius = r.number("kernel_radius", 0.2);
        s.law.k_min = r.number("k_min", 0.5);
        s.law.k_max = r.number("k_max", 1.0);
        s.law.alpha = r.number("alpha", 0.0);
        if (const json* je = r.get("eta")) {
            Reader re(*je, "scenario.congestion.eta", errors);
            s.law.eta.arrived_discount = re.boolean("arrived_discount", false);
            s.law.eta.value = re.number("value", 1.0);
            s.law.eta.discount_radius = re.number("discount_radius", 0.0);
        }
    } else {
        errors->push_back("scenario.congestion: required");
    }

    // initial mass
    if (const json* jm = top.get("initial_mass")) {
        Reader r(*jm, "scenario.initial_mass", errors);
        const std::string mode = r.text("mode", "uniform_box");
        if (mode == "uniform_box")
            s.initial_mass.mode = InitialMassMode::kUniformBox;
        else if (mode == "gaussian")
            s.initial_mass.mode = InitialMassMode::kGaussianClipped;
        else if (mode == "points")
            s.initial_mass.mode = InitialMassMode::kPointList;
        else
            errors->push_back("scenario.initial_mass.mode: unknown mode '" + mode + "'");
        s.initial_mass.box_min = r.point("box_min", {0.0, 0.0});
        s.initial_mass.box_max = r.point("box_max", {1.0, 1.0});
        s.initial_mass.mean = r.point("mean", {0.0, 0.0});
        s.initial_mass.sigma = r.number("sigma", 0.1);
        s.initial_mass.points = r.point_list("points");
        s.initial_mass.count = r.integer("count", 100);
        s.initial_mass.seed = static_cast<std::uint64_t>(r.integer("seed", 1));
    } else {
        errors->push_back("scenario.initial_mass: required");
    }

    // grid
    if (const json* jg = top.get("grid")) {
        Reader r(*jg, "scenario.grid", errors);
        s.grid.dx = r.number("dx", 0.01);
        s.grid.dt = r.number("dt", 0.0);
        s.grid.dt_traj = r.number("dt_traj", 0.0);
        s.solver.n_dir = r.integer("n_dir", 64);
        s.solver.t_hor = r.number("t_hor", 0.0);
        s.solver.horizon_factor = r.number("horizon_factor", 1.25);
        s.solver.sweep_tol = r.number("sweep_tol", 1e-9);
        s.solver.max_sweeps = r.integer("max_sweeps", 500);
        s.solver.h_probe_steps = r.numbers("h_probe_steps", {10.0, 20.0});
        s.solver.tol_w = r.number("tol_w", 0.0);
    }

    // equilibrium
    if (const json* je = top.get("equilibrium")) {
        Reader r(*je, "scenario.equilibrium", errors);
        s.equilibrium.max_iterations = r.integer("max_iterations", 30);
        s.equilibrium.tol_displacement = r.number("tol_displacement", 0.01);
        s.equilibrium.tol_optimality = r.number("tol_optimality", 0.02);
        s.equilibrium.stall_patience = r.integer("stall_patience", 5);
        s.equilibrium.displacement_stride = r.integer("displacement_stride", 4);
        s.equilibrium.lambda_constant = r.number("lambda", 0.0);
    }

    // penalty
    if (const json* jp = top.get("penalty")) {
        Reader r(*jp, "scenario.penalty", errors);
        s.penalty.eps = r.number("eps", 0.0);
        s.penalty.safety_factor = r.number("safety_factor", 0.9);
        s.penalty.sweep = r.numbers("sweep", {});
        s.penalty.margin_cap = r.number("margin_cap", 0.3);
    }

    // output
    if (const json* jo = top.get("output")) {
        Reader r(*jo, "scenario.output", errors);
        s.output.dump_value_field = r.boolean("dump_value_field", false);
        s.output.dump_speed_field = r.boolean("dump_speed_field", false);
        s.output.dump_trajectories = r.boolean("dump_trajectories", false);
        s.output.dump_density = r.boolean("dump_density", false);
        s.output.dump_residual_grid = r.boolean("dump_residual_grid", false);
        s.output.per_iteration_dumps = r.boolean("per_iteration_dumps", false);
        s.output.csv_slices = r.boolean("csv_slices", false);
    }

    if (!errors->empty()) return s;

    // Cross-constraints.
    try {
        validate_geometry(s.domain, s.target);
    } catch (const Error& e) {
        errors->push_back(std::string("scenario.target: ") + e.what());
    }
    try {
        s.law.validate();
    } catch (const Error& e) {
        errors->push_back(std::string("scenario.congestion: ") + e.what());
    }
    try {
        s.equilibrium.validate();
    } catch (const Error& e) {
        errors->push_back(std::string("scenario.equilibrium: ") + e.what());
    }
    if (s.grid.dx <= 0.0) errors->push_back("scenario.grid.dx: must be positive");
    if (s.grid.dt > 0.0 && s.grid.dt > s.grid.dx / s.law.k_max + 1e-12)
        errors->push_back("scenario.grid.dt: CFL violation, dt must be <= dx / k_max = " +
                          std::to_string(s.grid.dx / s.law.k_max) +
                          " (scenario.grid.dt vs scenario.congestion.k_max)");
    if (s.initial_mass.mode == InitialMassMode::kPointList) {
        for (const Vec2& p : s.initial_mass.points)
            if (!domain_contains(s.domain, p, 1e-9)) {
                errors->push_back("scenario.initial_mass.points: point outside the domain closure");
                break;
            }
    }
    if (errors->empty() && s.penalty.eps > 0.0) {
        const double eps0 = s.epsilon_threshold_value();
        if (s.penalty.eps >= eps0 && !allow_eps_override)
            errors->push_back("scenario.penalty.eps: " + std::to_string(s.penalty.eps) +
                              " is not below the admissible threshold eps0 = " +
                              std::to_string(eps0) +
                              "; pass --allow-eps-override to study it anyway");
    }
    return s;
}

Scenario scenario_from_file(const std::string& path, bool allow_eps_override) {
    std::ifstream in(path);
    require(in.good(), ErrorCategory::kIo, "cannot read config file: " + path);
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        fail(ErrorCategory::kConfig, "invalid JSON in " + path + ": " + e.what());
    }
    if (root.is_object() && root.contains("scenario")) root = root.at("scenario");
    std::vector<std::string> errors;
    Scenario s = scenario_from_json(root, allow_eps_override, &errors);
    if (!errors.empty()) {
        std::string msg = "invalid scenario:";
        for (const std::string& e : errors) msg += "\n  - " + e;
        fail(ErrorCategory::kConfig, msg);
    }
    return s;
}

json scenario_to_json(const Scenario& s) {
    json j;
    const int dim = s.domain.dim;
    json jd;
    switch (s.domain.shape) {
        case ShapeKind::kInterval:
            jd = {{"shape", "interval"}, {"a", s.domain.a}, {"b", s.domain.b}};
            break;
        case ShapeKind::kDisk:
            jd = {{"shape", "disk"},
                  {"center", point_json(s.domain.center, 2)},
                  {"radius", s.domain.radius}};
            break;
        case ShapeKind::kAnnulus:
            jd = {{"shape", "annulus"},
                  {"center", point_json(s.domain.center, 2)},
                  {"r_inner", s.domain.r_inner},
                  {"r_outer", s.domain.r_outer}};
            break;
        case ShapeKind::kRoundedRectangle:
            jd = {{"shape", "rounded_rectangle"},
                  {"center", point_json(s.domain.center, 2)},
                  {"half_widths", point_json(s.domain.half_widths, 2)},
                  {"corner_radius", s.domain.corner_radius}};
            break;
    }
    j["domain"] = jd;

    json jt;
    switch (s.target.region) {
        case TargetRegion::kPoints: {
            json pts = json::array();
            for (const Vec2& p : s.target.points) pts.push_back(point_json(p, dim));
            jt = {{"region", "points"}, {"points", pts}};
            break;
        }
        case TargetRegion::kBoundaryArc:
            jt = {{"region", "boundary_arc"},
                  {"angle_min", s.target.angle_min},
                  {"angle_max", s.target.angle_max},
                  {"boundary", s.target.arc_boundary == ArcBoundary::kInner ? "inner" : "outer"}};
            break;
        case TargetRegion::kFullBoundary:
            jt = {{"region", "full_boundary"}};
            break;
        case TargetRegion::kBox:
            jt = {{"region", "box"},
                  {"box_min", point_json(s.target.box_min, dim)},
                  {"box_max", point_json(s.target.box_max, dim)}};
            break;
    }
    j["target"] = jt;

    j["congestion"] = {
        {"kernel", s.law.kernel == KernelProfile::kTent ? "tent" : "truncated_quadratic"},
        {"kernel_radius", s.law.kernel_radius},
        {"k_min", s.law.k_min},
        {"k_max", s.law.k_max},
        {"alpha", s.law.alpha},
        {"eta",
         {{"arrived_discount", s.law.eta.arrived_discount},
          {"value", s.law.eta.value},
          {"discount_radius", s.law.eta.discount_radius}}}};

    json jm;
    switch (s.initial_mass.mode) {
        case InitialMassMode::kUniformBox:
            jm["mode"] = "uniform_box";
            break;
        case InitialMassMode::kGaussianClipped:
            jm["mode"] = "gaussian";
            break;
        case InitialMassMode::kPointList:
            jm["mode"] = "points";
            break;
    }
    jm["box_min"] = point_json(s.initial_mass.box_min, dim);
    jm["box_max"] = point_json(s.initial_mass.box_max, dim);
    jm["mean"] = point_json(s.initial_mass.mean, dim);
    jm["sigma"] = s.initial_mass.sigma;
    json pts = json::array();
    for (const Vec2& p : s.initial_mass.points) pts.push_back(point_json(p, dim));
    jm["points"] = pts;
    jm["count"] = s.initial_mass.count;
    jm["seed"] = s.initial_mass.seed;
    j["initial_mass"] = jm;

    j["grid"] = {{"dx", s.grid.dx},
                 {"dt", s.dt_effective()},
                 {"dt_traj", s.dt_traj_effective()},
                 {"n_dir", s.solver.n_dir},
                 {"t_hor", s.solver.t_hor},
                 {"horizon_factor", s.solver.horizon_factor},
                 {"sweep_tol", s.solver.sweep_tol},
                 {"max_sweeps", s.solver.max_sweeps},
                 {"h_probe_steps", s.solver.h_probe_steps},
                 {"tol_w", s.solver.tol_w}};

    j["equilibrium"] = {{"max_iterations", s.equilibrium.max_iterations},
                        {"tol_displacement", s.equilibrium.tol_displacement},
                        {"tol_optimality", s.equilibrium.tol_optimality},
                        {"stall_patience", s.equilibrium.stall_patience},
                        {"displacement_stride", s.equilibrium.displacement_stride},
                        {"lambda", s.equilibrium.lambda_constant}};

    j["penalty"] = {{"eps", s.penalty.eps},
                    {"safety_factor", s.penalty.safety_factor},
                    {"sweep", s.penalty.sweep},
                    {"margin_cap", s.penalty.margin_cap}};

    j["output"] = {{"dump_value_field", s.output.dump_value_field},
                   {"dump_speed_field", s.output.dump_speed_field},
                   {"dump_trajectories", s.output.dump_trajectories},
                   {"dump_density", s.output.dump_density},
                   {"dump_residual_grid", s.output.dump_residual_grid},
                   {"per_iteration_dumps", s.output.per_iteration_dumps},
                   {"csv_slices", s.output.csv_slices}};
    return j;
}

}  // namespace mtmfg
