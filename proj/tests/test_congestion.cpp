#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mtmfg/congestion.hpp"
#include "mtmfg/transport.hpp"

using namespace mtmfg;

namespace {

CongestionLaw make_law(double alpha, double k_min = 0.5, double k_max = 1.0) {
    CongestionLaw law;
    law.kernel = KernelProfile::kTent;
    law.kernel_radius = 0.2;
    law.k_min = k_min;
    law.k_max = k_max;
    law.alpha = alpha;
    return law;
}

// Independent direct-summation density oracle.
double density_oracle(const CongestionLaw& law, const ParticleEnsemble& e, const Vec2& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double r = (x - e.positions[i]).norm() / law.kernel_radius;
        if (r < 1.0) s += e.weights[i] * (1.0 - r);
    }
    return s;
}

}  // namespace

TEST_CASE("local density") {
    const DomainSpec dom = DomainSpec::disk({0.0, 0.0}, 1.0);
    const TargetSpec tgt = TargetSpec::full_boundary();
    const CongestionLaw law = make_law(1.0);

    // all particles beyond the kernel radius
    const ParticleEnsemble far = testutil::ensemble_at({{0.5, 0.0}, {0.0, 0.5}});
    CHECK(local_density(law, dom, tgt, far, {-0.5, 0.0}) == 0.0);

    // single particle at the query point: chi(0) = 1
    const ParticleEnsemble atx = ParticleEnsemble::dirac({0.1, 0.1});
    CHECK(local_density(law, dom, tgt, atx, {0.1, 0.1}) == doctest::Approx(1.0));

    // three weighted particles against the direct-summation oracle
    ParticleEnsemble three;
    three.positions = {{0.0, 0.0}, {0.05, 0.05}, {0.1, -0.02}};
    three.weights = {0.5, 0.3, 0.2};
    const Vec2 q{0.02, 0.01};
    CHECK(local_density(law, dom, tgt, three, q) ==
          doctest::Approx(density_oracle(law, three, q)).epsilon(1e-14));
}

TEST_CASE("speed saturates between k_min and k_max") {
    const DomainSpec dom = DomainSpec::disk({0.0, 0.0}, 1.0);
    const TargetSpec tgt = TargetSpec::full_boundary();
    const CongestionLaw law = make_law(2.0);

    const ParticleEnsemble far = ParticleEnsemble::dirac({0.9, 0.0});
    CHECK(speed(law, dom, tgt, far, {-0.9, 0.0}) == doctest::Approx(law.k_max));

    // density >= (k_max - k_min)/alpha clamps at k_min
    const ParticleEnsemble pile = ParticleEnsemble::dirac({0.0, 0.0});
    CHECK(local_density(law, dom, tgt, pile, {0.0, 0.0}) >= (law.k_max - law.k_min) / law.alpha);
    CHECK(speed(law, dom, tgt, pile, {0.0, 0.0}) == doctest::Approx(law.k_min));

    // intermediate density: g(s) = k_max - alpha s
    ParticleEnsemble half;
    half.positions = {{0.0, 0.0}, {0.5, 0.0}};
    half.weights = {0.2, 0.8};
    const double s = local_density(law, dom, tgt, half, {0.02, 0.0});
    CHECK(s > 0.0);
    CHECK(s < (law.k_max - law.k_min) / law.alpha);
    CHECK(speed(law, dom, tgt, half, {0.02, 0.0}) == doctest::Approx(law.k_max - law.alpha * s));
}

TEST_CASE("monotonicity: added mass never speeds anyone up") {
    const DomainSpec dom = DomainSpec::disk({0.0, 0.0}, 1.0);
    const TargetSpec tgt = TargetSpec::full_boundary();
    const CongestionLaw law = make_law(1.5);
    testutil::Rng rng(17);
    for (int i = 0; i < 200; ++i) {
        ParticleEnsemble base = testutil::random_ensemble(rng, dom, 20, false);
        const Vec2 x = rng.in_domain(dom);
        const double before = speed(law, dom, tgt, base, x);
        // move half the mass onto x
        ParticleEnsemble crowded = base;
        for (std::size_t p = 0; p < crowded.size(); p += 2) crowded.positions[p] = x;
        const double after = speed(law, dom, tgt, crowded, x);
        CHECK(after <= before + 1e-12);
    }
}

TEST_CASE("freeze samples the pointwise speed law") {
    const DomainSpec dom = DomainSpec::interval(0.0, 1.0);
    const TargetSpec tgt = TargetSpec::point_set({{0.0, 0.0}});
    const SpaceGrid grid = SpaceGrid::cover(dom, 0.02, 0.04);
    TimeGrid tg{0.02, 50};

    SUBCASE("alpha = 0 gives the constant field k_max") {
        const CongestionLaw law = make_law(0.0);
        std::vector<ParticleEnsemble> timeline(tg.nt + 1, ParticleEnsemble::dirac({0.5, 0.0}));
        const SpeedField k = freeze(law, dom, tgt, timeline, grid, tg);
        for (const auto& slice : k.slices)
            for (double v : slice) CHECK(v == doctest::Approx(law.k_max));
    }

    SUBCASE("stationary timeline gives a time-constant field") {
        const CongestionLaw law = make_law(1.0);
        std::vector<ParticleEnsemble> timeline(tg.nt + 1, ParticleEnsemble::dirac({0.5, 0.0}));
        const SpeedField k = freeze(law, dom, tgt, timeline, grid, tg);
        for (int j = 1; j <= tg.nt; ++j)
            for (int idx = 0; idx < grid.count(); ++idx)
                CHECK(k.slices[j][idx] == doctest::Approx(k.slices[0][idx]));
    }

    SUBCASE("moving particle: field equals speed() at 100 random nodes") {
        const CongestionLaw law = make_law(1.0);
        std::vector<ParticleEnsemble> timeline;
        for (int j = 0; j <= tg.nt; ++j)
            timeline.push_back(ParticleEnsemble::dirac({0.8 - 0.5 * tg.time(j), 0.0}));
        const SpeedField k = freeze(law, dom, tgt, timeline, grid, tg);
        testutil::Rng rng(23);
        for (int probe = 0; probe < 100; ++probe) {
            const int j = static_cast<int>(rng.range(0.0, tg.nt + 0.999));
            const int idx = static_cast<int>(rng.range(0.0, grid.count() - 0.001));
            const Vec2 x = grid.point(idx);
            const Vec2 q = domain_contains(dom, x, 0.0) ? x : closest_domain_point(dom, x);
            CHECK(k.slices[j][idx] ==
                  doctest::Approx(speed(law, dom, tgt, timeline[j], q)).epsilon(1e-12));
        }
    }
}

TEST_CASE("frozen field spatial Lipschitz constant within the published bound") {
    const DomainSpec dom = DomainSpec::disk({0.0, 0.0}, 1.0);
    const TargetSpec tgt = TargetSpec::full_boundary();
    const CongestionLaw law = make_law(1.2);
    const SpaceGrid grid = SpaceGrid::cover(dom, 0.05, 0.1);
    TimeGrid tg{0.05, 10};
    testutil::Rng rng(29);
    std::vector<ParticleEnsemble> timeline(tg.nt + 1,
                                           testutil::random_ensemble(rng, dom, 50, true));
    const SpeedField k = freeze(law, dom, tgt, timeline, grid, tg);

    const double L = law.lipschitz();
    double measured = 0.0;
    for (const auto& slice : k.slices)
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i + 1 < grid.nx; ++i) {
                // restrict to node pairs inside the domain: the outside
                // extension is Lipschitz along the boundary, not radially
                const Vec2 a = grid.point(grid.index(i, j));
                const Vec2 b = grid.point(grid.index(i + 1, j));
                if (!domain_contains(dom, a, 0.0) || !domain_contains(dom, b, 0.0)) continue;
                measured = std::max(
                    measured,
                    std::abs(slice[grid.index(i + 1, j)] - slice[grid.index(i, j)]) / grid.dx);
            }
    CHECK(measured <= L + 1e-6);
}

TEST_CASE("time regularity of frozen equilibrium-style fields") {
    // Pushforwards of k_max-Lipschitz trajectories: |k(t1,x) - k(t2,x)| is
    // bounded by L k_max |t1 - t2| plus interpolation error.
    const DomainSpec dom = DomainSpec::interval(0.0, 1.0);
    const TargetSpec tgt = TargetSpec::point_set({{0.0, 0.0}});
    const CongestionLaw law = make_law(1.0, 0.5, 1.0);
    const SpaceGrid grid = SpaceGrid::cover(dom, 0.01, 0.02);
    TimeGrid tg{0.01, 80};

    std::vector<ParticleEnsemble> timeline;
    for (int j = 0; j <= tg.nt; ++j) {
        ParticleEnsemble e;
        for (int p = 0; p < 20; ++p) {
            const double x0 = 0.3 + 0.03 * p;
            e.positions.push_back({std::max(x0 - law.k_max * tg.time(j), 0.0), 0.0});
        }
        e.weights.assign(20, 1.0 / 20.0);
        timeline.push_back(e);
    }
    const SpeedField k = freeze(law, dom, tgt, timeline, grid, tg);

    const double L = law.lipschitz();
    for (int j = 0; j + 4 <= tg.nt; ++j) {
        for (int idx = 0; idx < grid.count(); idx += 7) {
            const double gap = std::abs(k.slices[j + 4][idx] - k.slices[j][idx]);
            CHECK(gap <= L * law.k_max * 4 * tg.dt + 1e-9);
        }
    }
}


TEST_CASE("arrived-mass discount zeroes the weight near the target") {
    const DomainSpec dom = DomainSpec::interval(0.0, 1.0);
    const TargetSpec tgt = TargetSpec::point_set({{0.0, 0.0}});
    CongestionLaw law = make_law(2.0);
    law.eta.arrived_discount = true;
    law.eta.discount_radius = 0.05;

    ParticleEnsemble crowd;
    crowd.positions = {{0.02, 0.0}, {0.5, 0.0}};  // one arrived, one en route
    crowd.weights = {0.5, 0.5};

    // the arrived particle contributes nothing to the density at its location
    CHECK(local_density(law, dom, tgt, crowd, {0.02, 0.0}) == 0.0);
    // the travelling particle still congests its neighborhood
    CHECK(local_density(law, dom, tgt, crowd, {0.5, 0.0}) == doctest::Approx(0.5));

    CongestionLaw plain = make_law(2.0);
    CHECK(local_density(plain, dom, tgt, crowd, {0.02, 0.0}) > 0.0);
}
