#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "mtmfg/artifacts.hpp"

using namespace mtmfg;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path p = fs::temp_directory_path() / "mtmfg_test_artifacts";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("binary grid round trip") {
    const fs::path dir = temp_dir();
    SpaceGrid g;
    g.dim = 2;
    g.origin = {-1.0, -0.5};
    g.dx = 0.25;
    g.nx = 9;
    g.ny = 5;
    TimeGrid tg{0.1, 3};
    std::vector<std::vector<double>> slices(tg.nt + 1, std::vector<double>(g.count()));
    testutil::Rng rng(83);
    for (auto& s : slices)
        for (double& v : s) v = rng.range(-5.0, 5.0);

    const fs::path file = dir / "field.mfgb";
    write_grid_binary(file, g, tg, slices);
    const GridFile back = read_grid_binary(file);
    CHECK(back.grid.nx == g.nx);
    CHECK(back.grid.ny == g.ny);
    CHECK(back.grid.dx == g.dx);
    CHECK(back.grid.origin.x == g.origin.x);
    CHECK(back.tgrid.dt == tg.dt);
    REQUIRE(back.slices.size() == slices.size());
    for (std::size_t j = 0; j < slices.size(); ++j)
        for (int i = 0; i < g.count(); ++i) CHECK(back.slices[j][i] == slices[j][i]);

    // corrupted magic is rejected
    {
        std::ofstream f(dir / "bad.mfgb", std::ios::binary);
        f << "NOPE";
    }
    CHECK_THROWS_AS(read_grid_binary(dir / "bad.mfgb"), Error);
    fs::remove_all(dir);
}

TEST_CASE("staged directory commits atomically") {
    const fs::path dir = temp_dir();
    const fs::path out = dir / "run_out";

    SUBCASE("abort leaves nothing behind") {
        {
            StagedDir staged(out);
            std::ofstream f(staged.path() / "half_written.txt");
            f << "partial";
        }  // destructor without commit
        CHECK(!fs::exists(out));
        CHECK(fs::is_empty(dir));
    }
    SUBCASE("commit renames the whole directory") {
        {
            StagedDir staged(out);
            std::ofstream f(staged.path() / "metrics.json");
            f << "{}";
            staged.commit();
        }
        CHECK(fs::exists(out / "metrics.json"));
        // a second run into the same directory is refused
        CHECK_THROWS_AS(StagedDir{out}, Error);
    }
    fs::remove_all(dir);
}

TEST_CASE("trajectory and ensemble CSV writers") {
    const fs::path dir = temp_dir();
    Trajectory tr;
    tr.t0 = 0.0;
    tr.x0 = {0.5, 0.25};
    tr.dt = 0.1;
    tr.positions = {{0.5, 0.25}, {0.4, 0.2}};
    tr.controls = {{-1.0, -0.5}};
    tr.reached = true;
    tr.tau = 0.1;
    write_trajectory_csv(dir / "traj.csv", tr, 2);

    std::ifstream f(dir / "traj.csv");
    std::string header;
    std::getline(f, header);
    CHECK(header == "t,x,y,ux,uy");

    ParticleEnsemble e = ParticleEnsemble::dirac({0.1, 0.2});
    write_ensemble_csv(dir / "ens.csv", e, 2);
    std::ifstream g(dir / "ens.csv");
    std::getline(g, header);
    CHECK(header == "x,y,weight");
    fs::remove_all(dir);
}


TEST_CASE("density rasterization integrates to about the total mass") {
    SpaceGrid g;
    g.dim = 2;
    g.origin = {-1.0, -1.0};
    g.dx = 0.05;
    g.nx = 41;
    g.ny = 41;
    ParticleEnsemble e;
    e.positions = {{0.0, 0.0}, {0.3, -0.2}, {-0.4, 0.1}};
    e.weights = {0.5, 0.25, 0.25};
    const auto raster = rasterize_density(e, g, 0.1);
    double mass = 0.0;
    for (double v : raster) mass += v * g.dx * g.dx;
    CHECK(mass == doctest::Approx(1.0).epsilon(0.02));
    for (double v : raster) CHECK(v >= 0.0);
}
