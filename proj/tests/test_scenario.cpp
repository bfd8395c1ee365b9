#include <doctest.h>

#include <nlohmann/json.hpp>

#include "mtmfg/scenario.hpp"

using namespace mtmfg;
using nlohmann::json;

namespace {

json minimal_line_scenario() {
    return json::parse(R"({
      "domain": {"shape": "interval", "a": 0.0, "b": 1.0},
      "target": {"region": "points", "points": [[0.0]]},
      "congestion": {"k_min": 1.0, "k_max": 1.0, "alpha": 0.0},
      "initial_mass": {"mode": "uniform_box", "box_min": [0.4], "box_max": [0.6],
                       "count": 16, "seed": 1},
      "grid": {"dx": 0.01}
    })");
}

}  // namespace

TEST_CASE("minimal valid scenario resolves defaults") {
    std::vector<std::string> errors;
    const Scenario s = scenario_from_json(minimal_line_scenario(), false, &errors);
    CHECK(errors.empty());
    CHECK(s.domain.dim == 1);
    CHECK(s.dt_effective() == doctest::Approx(0.01));
    CHECK(s.dt_traj_effective() == doctest::Approx(0.005));
    const json echo = scenario_to_json(s);
    CHECK(echo["grid"]["dt"].get<double>() == doctest::Approx(0.01));
    CHECK(echo["equilibrium"]["max_iterations"].get<int>() == 30);
    CHECK(echo["congestion"]["kernel"] == "tent");
}

TEST_CASE("echo round-trips through the parser") {
    std::vector<std::string> errors;
    const Scenario s = scenario_from_json(minimal_line_scenario(), false, &errors);
    REQUIRE(errors.empty());
    const json echo = scenario_to_json(s);
    std::vector<std::string> errors2;
    const Scenario s2 = scenario_from_json(echo, false, &errors2);
    CHECK(errors2.empty());
    CHECK(scenario_to_json(s2) == echo);
}

TEST_CASE("CFL violation is reported with both field names") {
    json j = minimal_line_scenario();
    j["grid"]["dt"] = 0.5;  // dx / k_max = 0.01
    std::vector<std::string> errors;
    scenario_from_json(j, false, &errors);
    REQUIRE(errors.size() == 1);
    CHECK(errors[0].find("scenario.grid.dt") != std::string::npos);
    CHECK(errors[0].find("k_max") != std::string::npos);
}

TEST_CASE("eps at or above the threshold needs the override flag") {
    json j = minimal_line_scenario();
    // interval: c_curv = 0, L = 0 -> eps0 = eps_star = band/2 = 0.25
    j["penalty"] = {{"eps", 0.4}};
    std::vector<std::string> errors;
    scenario_from_json(j, false, &errors);
    REQUIRE(errors.size() == 1);
    CHECK(errors[0].find("eps0") != std::string::npos);

    errors.clear();
    const Scenario s = scenario_from_json(j, true, &errors);
    CHECK(errors.empty());
    CHECK(s.penalty.eps == doctest::Approx(0.4));
}

TEST_CASE("unknown keys are errors with field paths") {
    json j = minimal_line_scenario();
    j["grid"]["dccx"] = 0.01;
    std::vector<std::string> errors;
    scenario_from_json(j, false, &errors);
    REQUIRE(errors.size() == 1);
    CHECK(errors[0].find("scenario.grid.dccx") != std::string::npos);
    CHECK(errors[0].find("unknown key") != std::string::npos);
}

TEST_CASE("multiple violations are all listed") {
    json j = minimal_line_scenario();
    j["congestion"]["k_min"] = -1.0;
    j["equilibrium"] = {{"tol_displacement", -2.0}};
    std::vector<std::string> errors;
    scenario_from_json(j, false, &errors);
    CHECK(errors.size() >= 2);
}

TEST_CASE("initial points outside the domain are rejected") {
    json j = minimal_line_scenario();
    j["initial_mass"] = {{"mode", "points"}, {"points", {{2.0}}}, {"count", 1}, {"seed", 1}};
    std::vector<std::string> errors;
    scenario_from_json(j, false, &errors);
    REQUIRE(errors.size() == 1);
    CHECK(errors[0].find("initial_mass") != std::string::npos);
}
