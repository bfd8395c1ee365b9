#include "mtmfg/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mtmfg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double w1_sorted_1d(const ParticleEnsemble& mu, const ParticleEnsemble& nu) {
    struct Atom {
        double x, w;
        int side;
    };
    std::vector<Atom> atoms;
    atoms.reserve(mu.size() + nu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) atoms.push_back({mu.positions[i].x, mu.weights[i], 0});
    for (std::size_t i = 0; i < nu.size(); ++i) atoms.push_back({nu.positions[i].x, nu.weights[i], 1});
    std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
    double total = 0.0, cdf_gap = 0.0;
    for (std::size_t i = 0; i + 1 < atoms.size(); ++i) {
        cdf_gap += atoms[i].side == 0 ? atoms[i].w : -atoms[i].w;
        total += std::abs(cdf_gap) * (atoms[i + 1].x - atoms[i].x);
    }
    return total;
}

// Exact assignment (equal weights, equal sizes) by shortest augmenting paths
// with dual potentials.
double assignment_cost(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    const int n = static_cast<int>(a.size());
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = kInf;
            int j1 = 0;
            const Vec2& ai = a[i0 - 1];
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = distance(ai, b[j - 1]) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    double cost = 0.0;
    for (int j = 1; j <= n; ++j) cost += distance(a[p[j] - 1], b[j - 1]);
    return cost / n;
}

// General weighted transport by successive shortest paths on the dense
// bipartite graph, with Johnson potentials so every Dijkstra sees
// nonnegative reduced costs.
double transport_cost(const std::vector<Vec2>& xs, std::vector<double> supply,
                      const std::vector<Vec2>& ys, std::vector<double> demand) {
    const int n = static_cast<int>(xs.size());
    const int m = static_cast<int>(ys.size());
    std::vector<double> flow(static_cast<std::size_t>(n) * m, 0.0);
    std::vector<double> pot_s(n, 0.0), pot_t(m, 0.0);
    double cost = 0.0;

    auto edge_cost = [&](int i, int j) { return distance(xs[i], ys[j]); };

    const double mass_tol = 1e-15;
    while (true) {
        // Remaining supply?
        int start_any = -1;
        for (int i = 0; i < n; ++i)
            if (supply[i] > mass_tol) {
                start_any = i;
                break;
            }
        if (start_any < 0) break;

        // Dijkstra over sources (0..n-1) and sinks (n..n+m-1).
        const int V = n + m;
        std::vector<double> dist(V, kInf);
        std::vector<int> prev(V, -1);
        std::vector<char> done(V, 0);
        for (int i = 0; i < n; ++i)
            if (supply[i] > mass_tol) dist[i] = 0.0;
        for (int it = 0; it < V; ++it) {
            int u = -1;
            double best = kInf;
            for (int vtx = 0; vtx < V; ++vtx)
                if (!done[vtx] && dist[vtx] < best) {
                    best = dist[vtx];
                    u = vtx;
                }
            if (u < 0) break;
            done[u] = 1;
            if (u < n) {
                const int i = u;
                for (int j = 0; j < m; ++j) {
                    const double rc = edge_cost(i, j) - pot_s[i] + pot_t[j];
                    const double nd = dist[u] + std::max(rc, 0.0);
                    if (nd < dist[n + j]) {
                        dist[n + j] = nd;
                        prev[n + j] = u;
                    }
                }
            } else {
                const int j = u - n;
                for (int i = 0; i < n; ++i) {
                    if (flow[static_cast<std::size_t>(i) * m + j] <= 0.0) continue;
                    const double rc = -(edge_cost(i, j) - pot_s[i] + pot_t[j]);
                    const double nd = dist[u] + std::max(rc, 0.0);
                    if (nd < dist[i]) {
                        dist[i] = nd;
                        prev[i] = u;
                    }
                }
            }
        }

        // Closest reachable sink with remaining demand. Roundoff can strand a
        // few ulps of mass; stop augmenting once nothing matchable is left.
        int sink = -1;
        double best = kInf;
        for (int j = 0; j < m; ++j)
            if (demand[j] > mass_tol && dist[n + j] < best) {
                best = dist[n + j];
                sink = j;
            }
        if (sink < 0) break;

        // Update potentials.
        for (int i = 0; i < n; ++i)
            if (dist[i] < kInf) pot_s[i] += dist[n + sink] - dist[i];
        for (int j = 0; j < m; ++j)
            if (dist[n + j] < kInf) pot_t[j] += dist[n + sink] - dist[n + j];

        // Bottleneck along the path.
        double push = demand[sink];
        for (int v = n + sink; prev[v] >= 0; v = prev[v]) {
            const int u = prev[v];
            if (u >= n) push = std::min(push, flow[static_cast<std::size_t>(v) * m + (u - n)]);
        }
        int src = n + sink;
        while (prev[src] >= 0) src = prev[src];
        push = std::min(push, supply[src]);

        // Apply.
        for (int v = n + sink; prev[v] >= 0; v = prev[v]) {
            const int u = prev[v];
            if (u < n) {
                flow[static_cast<std::size_t>(u) * m + (v - n)] += push;
                cost += push * edge_cost(u, v - n);
            } else {
                flow[static_cast<std::size_t>(v) * m + (u - n)] -= push;
                cost -= push * edge_cost(v, u - n);
            }
        }
        supply[src] -= push;
        demand[sink] -= push;
    }
    return cost;
}

struct Coarsened {
    ParticleEnsemble ens;
    double bound{0.0};
};

// Deterministic stratified coarsening: kd-style median splits down to the
// requested number of strata, each replaced by its weighted centroid.
Coarsened coarsen(const ParticleEnsemble& e, int strata) {
    Coarsened out;
    if (static_cast<int>(e.size()) <= strata) {
        out.ens = e;
        return out;
    }
    struct Group {
        std::vector<int> ids;
    };
    std::vector<Group> groups{Group{}};
    groups[0].ids.resize(e.size());
    std::iota(groups[0].ids.begin(), groups[0].ids.end(), 0);
    while (static_cast<int>(groups.size()) < strata) {
        // Split the widest group.
        std::size_t pick = 0;
        std::size_t largest = 0;
        for (std::size_t g = 0; g < groups.size(); ++g)
            if (groups[g].ids.size() > largest) {
                largest = groups[g].ids.size();
                pick = g;
            }
        if (largest <= 1) break;
        Group& g = groups[pick];
        Vec2 lo = e.positions[g.ids[0]], hi = lo;
        for (int id : g.ids) {
            lo.x = std::min(lo.x, e.positions[id].x);
            lo.y = std::min(lo.y, e.positions[id].y);
            hi.x = std::max(hi.x, e.positions[id].x);
            hi.y = std::max(hi.y, e.positions[id].y);
        }
        const bool split_x = hi.x - lo.x >= hi.y - lo.y;
        std::sort(g.ids.begin(), g.ids.end(), [&](int a, int b) {
            return split_x ? e.positions[a].x < e.positions[b].x
                           : e.positions[a].y < e.positions[b].y;
        });
        Group right;
        const std::size_t half = g.ids.size() / 2;
        right.ids.assign(g.ids.begin() + half, g.ids.end());
        g.ids.resize(half);
        groups.push_back(std::move(right));
    }
    for (const Group& g : groups) {
        double w = 0.0;
        Vec2 c{0.0, 0.0};
        for (int id : g.ids) {
            w += e.weights[id];
            c += e.weights[id] * e.positions[id];
        }
        if (w <= 0.0) continue;
        c = (1.0 / w) * c;
        for (int id : g.ids) out.bound += e.weights[id] * (e.positions[id] - c).norm();
        out.ens.positions.push_back(c);
        out.ens.weights.push_back(w);
    }
    return out;
}

void check_normalized(const ParticleEnsemble& e, const char* which) {
    double s = 0.0;
    for (double w : e.weights) s += w;
    require(std::abs(s - 1.0) <= 1e-9, ErrorCategory::kConfig,
            std::string("w1: ") + which + " measure is not normalized");
}

bool equal_uniform_weights(const ParticleEnsemble& a, const ParticleEnsemble& b) {
    if (a.size() != b.size() || a.size() == 0) return false;
    const double w = 1.0 / static_cast<double>(a.size());
    for (double x : a.weights)
        if (std::abs(x - w) > 1e-15) return false;
    for (double x : b.weights)
        if (std::abs(x - w) > 1e-15) return false;
    return true;
}

// Deterministic order canonicalization keeps w1 exactly symmetric.
bool lex_before(const ParticleEnsemble& a, const ParticleEnsemble& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.positions[i] == b.positions[i]) continue;
        return lex_less(a.positions[i], b.positions[i]);
    }
    return true;
}

}  // namespace

FlowMeasure FlowMeasure::from_trajectories(std::vector<Trajectory> trajs,
                                           std::vector<double> weights, double horizon) {
    require(trajs.size() == weights.size(), ErrorCategory::kConfig,
            "flow measure trajectories/weights size mismatch");
    require(!trajs.empty(), ErrorCategory::kConfig, "empty flow measure");
    FlowMeasure q;
    q.trajectories = std::move(trajs);
    q.weights = std::move(weights);
    if (horizon > 0.0) {
        q.time_horizon = horizon;
    } else {
        for (const Trajectory& tr : q.trajectories)
            q.time_horizon = std::max(
                q.time_horizon,
                tr.t0 + static_cast<double>(tr.positions.size() - 1) * tr.dt);
    }
    return q;
}

ParticleEnsemble pushforward(const FlowMeasure& q, double t) {
    require(t <= q.time_horizon + 1e-9, ErrorCategory::kConfig,
            "pushforward time beyond the bundle horizon");
    ParticleEnsemble e;
    e.positions.reserve(q.size());
    for (const Trajectory& tr : q.trajectories) e.positions.push_back(tr.position(t));
    e.weights = q.weights;
    return e;
}

W1Result w1_detail(const ParticleEnsemble& mu, const ParticleEnsemble& nu, const W1Options& opt) {
    check_normalized(mu, "first");
    check_normalized(nu, "second");

    // Matched supports: identical atom lists have distance exactly zero.
    if (mu.size() == nu.size()) {
        bool same = true;
        for (std::size_t i = 0; same && i < mu.size(); ++i)
            same = mu.positions[i] == nu.positions[i] && mu.weights[i] == nu.weights[i];
        if (same) return {};
    }

    const ParticleEnsemble* a = &mu;
    const ParticleEnsemble* b = &nu;
    if (!lex_before(*a, *b)) std::swap(a, b);

    W1Result res;
    bool one_d = true;
    for (const Vec2& p : a->positions) one_d = one_d && p.y == 0.0;
    for (const Vec2& p : b->positions) one_d = one_d && p.y == 0.0;
    if (one_d) {
        res.value = w1_sorted_1d(*a, *b);
        return res;
    }

    Coarsened ca, cb;
    if (static_cast<int>(a->size() + b->size()) > opt.exact_limit) {
        ca = coarsen(*a, opt.strata);
        cb = coarsen(*b, opt.strata);
    } else {
        ca.ens = *a;
        cb.ens = *b;
    }
    res.subsample_bound = ca.bound + cb.bound;

    if (equal_uniform_weights(ca.ens, cb.ens)) {
        res.value = assignment_cost(ca.ens.positions, cb.ens.positions);
    } else {
        res.value = transport_cost(ca.ens.positions, ca.ens.weights, cb.ens.positions,
                                   cb.ens.weights);
    }
    return res;
}

double w1(const ParticleEnsemble& mu, const ParticleEnsemble& nu, const W1Options& opt) {
    return w1_detail(mu, nu, opt).value;
}

double w1_dual_lower_bound(const ParticleEnsemble& mu, const ParticleEnsemble& nu,
                           const std::vector<std::function<double(const Vec2&)>>& probes) {
    check_normalized(mu, "first");
    check_normalized(nu, "second");
    std::vector<Vec2> support;
    support.reserve(mu.size() + nu.size());
    for (const Vec2& p : mu.positions) support.push_back(p);
    for (const Vec2& p : nu.positions) support.push_back(p);
    if (support.size() > 512) support.resize(512);

    double best = 0.0;
    for (std::size_t pi = 0; pi < probes.size(); ++pi) {
        const auto& f = probes[pi];
        for (std::size_t i = 0; i < support.size(); ++i)
            for (std::size_t j = i + 1; j < support.size(); ++j) {
                const double gap = std::abs(f(support[i]) - f(support[j]));
                const double d = (support[i] - support[j]).norm();
                require(gap <= d * (1.0 + 1e-9) + 1e-12, ErrorCategory::kConfig,
                        "w1_dual_lower_bound: probe is not 1-Lipschitz on the samples");
            }
        double s = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i) s += mu.weights[i] * f(mu.positions[i]);
        for (std::size_t i = 0; i < nu.size(); ++i) s -= nu.weights[i] * f(nu.positions[i]);
        best = std::max(best, std::abs(s));
    }
    return best;
}

}  // namespace mtmfg
