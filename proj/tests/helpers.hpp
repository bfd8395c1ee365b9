#pragma once

// Shared test utilities: deterministic RNG and independent oracles used to
// freeze expected values (fine-grid dynamic programming, brute-force
// transport, in-domain path marching). These must stay independent of the
// solver paths they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "mtmfg/congestion.hpp"
#include "mtmfg/ensemble.hpp"
#include "mtmfg/geometry.hpp"

namespace testutil {

using mtmfg::DomainSpec;
using mtmfg::ParticleEnsemble;
using mtmfg::Vec2;

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    double range(double lo, double hi) { return lo + (hi - lo) * unit(); }

    Vec2 in_domain(const DomainSpec& dom) {
        Vec2 lo, hi;
        dom.bounding_box(&lo, &hi);
        for (int i = 0; i < 100000; ++i) {
            Vec2 p{range(lo.x, hi.x), dom.dim == 1 ? 0.0 : range(lo.y, hi.y)};
            if (mtmfg::domain_contains(dom, p, 0.0)) return p;
        }
        return mtmfg::closest_domain_point(dom, 0.5 * (lo + hi));
    }

  private:
    std::mt19937_64 gen_;
};

/// Fine-grid 1-D dynamic programming oracle on [a, b] with target {a}:
/// backward value iteration with controls {-1, 0, +1} and a direct-arrival
/// shortcut, independent of the production solver.
inline std::vector<double> dp_oracle_1d(const std::function<double(double, double)>& k, double a,
                                        double b, double horizon, int nodes, int steps) {
    const double dx = (b - a) / (nodes - 1);
    const double dt = horizon / steps;
    auto interp = [&](const std::vector<double>& v, double x) {
        double f = (x - a) / dx;
        f = std::min(std::max(f, 0.0), static_cast<double>(nodes - 1));
        const int i = std::min(static_cast<int>(f), nodes - 2);
        const double w = f - i;
        return (1.0 - w) * v[i] + w * v[i + 1];
    };
    std::vector<double> phi(nodes, 1e9), next;
    phi[0] = 0.0;
    // terminal: stationary at t = horizon
    for (int sweep = 0; sweep < 4 * steps; ++sweep) {
        double delta = 0.0;
        for (int i = 1; i < nodes; ++i) {
            const double x = a + i * dx;
            const double kv = k(horizon, x);
            double best = std::min(phi[i] + dt, x - a <= kv * dt ? (x - a) / kv : 1e9);
            for (double u : {-1.0, 1.0}) {
                const double foot = std::min(std::max(x + dt * kv * u, a), b);
                best = std::min(best, dt + interp(phi, foot));
            }
            delta = std::max(delta, phi[i] - best);
            phi[i] = std::min(phi[i], best);
        }
        if (delta < 1e-12) break;
    }
    next = phi;
    for (int s = steps - 1; s >= 0; --s) {
        const double t = s * dt;
        for (int i = 1; i < nodes; ++i) {
            const double x = a + i * dx;
            const double kv = k(t, x);
            double best = dt + next[i];
            if (x - a <= kv * dt) best = std::min(best, (x - a) / kv);
            for (double u : {-1.0, 1.0}) {
                const double foot = std::min(std::max(x + dt * kv * u, a), b);
                best = std::min(best, dt + interp(next, foot));
            }
            phi[i] = best;
        }
        phi[0] = 0.0;
        next = phi;
    }
    return phi;
}

/// Exact W1 between equal-weight atom lists by exhaustive permutation
/// enumeration (n <= 7).
inline double w1_bruteforce(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    std::vector<int> perm(a.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    double best = 1e300;
    do {
        double c = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) c += (a[i] - b[perm[i]]).norm();
        best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / static_cast<double>(a.size());
}

/// In-domain path from x to y by straight marching with projection; returns
/// the path length. Deterministic perpendicular nudge breaks stalls at
/// antipodal obstacle points.
inline double project_and_march_length(const DomainSpec& dom, const Vec2& x, const Vec2& y) {
    const double step = std::min(0.004, 0.25 * dom.band_width());
    Vec2 cur = x;
    double length = 0.0;
    const double budget = 50.0 * ((x - y).norm() + 1.0);
    while ((cur - y).norm() > step) {
        const Vec2 dir = (y - cur).normalized();
        Vec2 nxt = cur + step * dir;
        if (!mtmfg::domain_contains(dom, nxt, 0.0)) nxt = mtmfg::closest_domain_point(dom, nxt);
        if ((nxt - cur).norm() < 0.05 * step) {
            const Vec2 perp{-dir.y, dir.x};
            nxt = cur + step * perp;
            if (!mtmfg::domain_contains(dom, nxt, 0.0))
                nxt = mtmfg::closest_domain_point(dom, nxt);
        }
        length += (nxt - cur).norm();
        cur = nxt;
        if (length > budget) break;
    }
    return length + (cur - y).norm();
}

inline ParticleEnsemble ensemble_at(std::vector<Vec2> pts) {
    return ParticleEnsemble::equal_weights(std::move(pts));
}

inline ParticleEnsemble random_ensemble(Rng& rng, const DomainSpec& dom, int n,
                                        bool uniform_weights) {
    ParticleEnsemble e;
    for (int i = 0; i < n; ++i) e.positions.push_back(rng.in_domain(dom));
    if (uniform_weights) {
        e.weights.assign(n, 1.0 / n);
    } else {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            e.weights.push_back(0.05 + rng.unit());
            s += e.weights.back();
        }
        for (double& w : e.weights) w /= s;
    }
    return e;
}

}  // namespace testutil
