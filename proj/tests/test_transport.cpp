#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mtmfg/transport.hpp"

using namespace mtmfg;

TEST_CASE("pushforward of a trajectory bundle") {
    Trajectory a;
    a.t0 = 0.0;
    a.x0 = {0.5, 0.0};
    a.dt = 0.1;
    a.positions = {{0.5, 0.0}, {0.4, 0.0}, {0.3, 0.0}};
    a.controls = {{-1.0, 0.0}, {-1.0, 0.0}};
    a.reached = true;
    a.tau = 0.2;
    a.arrival = {0.3, 0.0};

    FlowMeasure q = FlowMeasure::from_trajectories({a}, {1.0});
    CHECK(pushforward(q, 0.0).positions[0] == Vec2{0.5, 0.0});
    CHECK(pushforward(q, 0.05).positions[0].x == doctest::Approx(0.45));
    CHECK(pushforward(q, 0.2).positions[0].x == doctest::Approx(0.3));
    CHECK_THROWS_AS(pushforward(q, 5.0), Error);

    // single trajectory bundle is a moving Dirac
    CHECK(pushforward(q, 0.1).weights[0] == 1.0);
}

TEST_CASE("w1 basic identities") {
    const ParticleEnsemble da = ParticleEnsemble::dirac({0.2, 0.0});
    const ParticleEnsemble db = ParticleEnsemble::dirac({0.9, 0.4});
    CHECK(w1(da, db) == doctest::Approx((Vec2{0.2, 0.0} - Vec2{0.9, 0.4}).norm()));
    CHECK(w1(da, da) == 0.0);

    // half-half split against the midpoint in d = 1: exactly 1/2
    ParticleEnsemble mu;
    mu.positions = {{0.0, 0.0}, {1.0, 0.0}};
    mu.weights = {0.5, 0.5};
    const ParticleEnsemble nu = ParticleEnsemble::dirac({0.5, 0.0});
    CHECK(w1(mu, nu) == 0.5);  // exact, not approximate

    ParticleEnsemble bad = mu;
    bad.weights = {0.5, 0.6};
    CHECK_THROWS_AS(w1(bad, nu), Error);
}

TEST_CASE("w1 against brute-force enumeration") {
    const DomainSpec dom = DomainSpec::disk({0.0, 0.0}, 1.0);
    testutil::Rng rng(59);
    for (int rep = 0; rep < 40; ++rep) {
        std::vector<Vec2> a, b;
        const int n = 2 + static_cast<int>(rng.range(0.0, 4.99));
        for (int i = 0; i < n; ++i) {
            a.push_back(rng.in_domain(dom));
            b.push_back(rng.in_domain(dom));
        }
        const double expected = testutil::w1_bruteforce(a, b);
        CHECK(w1(testutil::ensemble_at(a), testutil::ensemble_at(b)) ==
              doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("w1 metric properties on random ensembles") {
    const DomainSpec dom = DomainSpec::disk({0.0, 0.0}, 1.0);
    testutil::Rng rng(61);
    for (int rep = 0; rep < 100; ++rep) {
        // mix of equal-weight (assignment path) and weighted (flow path)
        const bool uniform = rep % 2 == 0;
        const int n = 5 + rep % 13;
        const int m = uniform ? n : 4 + rep % 9;
        const ParticleEnsemble a = testutil::random_ensemble(rng, dom, n, uniform);
        const ParticleEnsemble b = testutil::random_ensemble(rng, dom, m, uniform);
        const ParticleEnsemble c = testutil::random_ensemble(rng, dom, n, uniform);

        const double ab = w1(a, b);
        const double ba = w1(b, a);
        CHECK(ab == ba);  // symmetry, exact
        CHECK(ab >= 0.0);
        CHECK(w1(a, a) == 0.0);

        const double ac = w1(a, c);
        const double cb = w1(c, b);
        CHECK(ab <= ac + cb + 1e-9);  // triangle inequality
    }
}

TEST_CASE("dual lower bound") {
    ParticleEnsemble mu, nu;
    mu.positions = {{0.0, 0.0}};
    mu.weights = {1.0};
    nu.positions = {{1.0, 0.0}};
    nu.weights = {1.0};

    SUBCASE("tight linear probe recovers w1") {
        std::vector<std::function<double(const Vec2&)>> probes = {
            [](const Vec2& p) { return p.x; }};
        CHECK(w1_dual_lower_bound(mu, nu, probes) == doctest::Approx(1.0));
        CHECK(w1(mu, nu) == doctest::Approx(1.0));
    }
    SUBCASE("identical measures give zero") {
        std::vector<std::function<double(const Vec2&)>> probes = {
            [](const Vec2& p) { return p.x; }, [](const Vec2& p) { return p.norm(); }};
        CHECK(w1_dual_lower_bound(mu, mu, probes) == 0.0);
    }
    SUBCASE("random 1-Lipschitz probes stay below the primal value") {
        ParticleEnsemble half;
        half.positions = {{0.0, 0.0}, {1.0, 0.0}};
        half.weights = {0.5, 0.5};
        const ParticleEnsemble mid = ParticleEnsemble::dirac({0.5, 0.0});
        testutil::Rng rng(67);
        std::vector<std::function<double(const Vec2&)>> probes;
        for (int i = 0; i < 12; ++i) {
            const Vec2 dir{std::cos(rng.range(0.0, 6.28)), std::sin(rng.range(0.0, 6.28))};
            const Vec2 anchor{rng.range(-1.0, 1.0), rng.range(-1.0, 1.0)};
            const int kind = i % 3;
            probes.push_back([dir, anchor, kind](const Vec2& p) {
                if (kind == 0) return p.dot(dir);
                if (kind == 1) return (p - anchor).norm();
                return -(p - anchor).norm();
            });
        }
        const double lower = w1_dual_lower_bound(half, mid, probes);
        CHECK(lower >= 0.0);
        CHECK(lower <= 0.5 + 1e-9);
    }
    SUBCASE("non-Lipschitz probe is rejected") {
        std::vector<std::function<double(const Vec2&)>> probes = {
            [](const Vec2& p) { return 2.0 * p.x; }};
        CHECK_THROWS_AS(w1_dual_lower_bound(mu, nu, probes), Error);
    }
}

TEST_CASE("dual bound never exceeds the primal on random pairs") {
    const DomainSpec dom = DomainSpec::disk({0.0, 0.0}, 1.0);
    testutil::Rng rng(71);
    std::vector<std::function<double(const Vec2&)>> probes = {
        [](const Vec2& p) { return p.x; },
        [](const Vec2& p) { return p.y; },
        [](const Vec2& p) { return p.norm(); },
        [](const Vec2& p) { return -(p - Vec2{0.3, -0.4}).norm(); },
    };
    for (int rep = 0; rep < 50; ++rep) {
        const ParticleEnsemble a = testutil::random_ensemble(rng, dom, 8 + rep % 5, false);
        const ParticleEnsemble b = testutil::random_ensemble(rng, dom, 6 + rep % 7, false);
        CHECK(w1_dual_lower_bound(a, b, probes) <= w1(a, b) + 1e-9);
    }
}

TEST_CASE("coarsening path reports its error bound") {
    const DomainSpec dom = DomainSpec::disk({0.0, 0.0}, 1.0);
    testutil::Rng rng(73);
    const ParticleEnsemble a = testutil::random_ensemble(rng, dom, 1500, true);
    const ParticleEnsemble b = testutil::random_ensemble(rng, dom, 1500, true);
    W1Options opt;
    opt.exact_limit = 400;
    opt.strata = 128;
    const W1Result coarse = w1_detail(a, b, opt);
    CHECK(coarse.subsample_bound > 0.0);
    // the coarsened value stays within the reported bound of the exact one
    const double exact = w1(a, b);
    CHECK(std::abs(coarse.value - exact) <= coarse.subsample_bound + 1e-9);
}

TEST_CASE("time regularity of bundle pushforwards") {
    // positions move at most at unit speed, so pushforwards are 1-Lipschitz
    // in time for the W1 metric
    testutil::Rng rng(79);
    std::vector<Trajectory> trajs;
    const int n = 40;
    for (int i = 0; i < n; ++i) {
        Trajectory tr;
        tr.t0 = 0.0;
        tr.dt = 0.05;
        tr.x0 = {rng.range(0.0, 1.0), rng.range(0.0, 1.0)};
        Vec2 p = tr.x0;
        for (int s = 0; s <= 20; ++s) {
            tr.positions.push_back(p);
            const double ang = rng.range(0.0, 6.28);
            p += (0.05 * rng.unit()) * Vec2{std::cos(ang), std::sin(ang)};
        }
        tr.reached = true;
        tr.tau = 1.0;
        tr.arrival = tr.positions.back();
        trajs.push_back(tr);
    }
    std::vector<double> w(n, 1.0 / n);
    const FlowMeasure q = FlowMeasure::from_trajectories(trajs, w);
    for (double t = 0.0; t < 0.9; t += 0.17) {
        for (double s = t + 0.05; s < 1.0; s += 0.21) {
            CHECK(w1(pushforward(q, t), pushforward(q, s)) <= (s - t) + 1e-9);
        }
    }
}
