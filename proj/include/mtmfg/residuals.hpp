#pragma once

#include <vector>

#include "mtmfg/equilibrium.hpp"
#include "mtmfg/transport.hpp"

namespace mtmfg {

/// Separable smooth bump xi(t, x) = b((t-tc)/wt) b((x-cx)/wx) [b((y-cy)/wy)],
/// b(s) = exp(1 - 1/(1 - s^2)) on (-1, 1), used as a compactly supported test
/// function for the weak continuity audit.
struct BumpTest {
    Vec2 center;
    Vec2 width{0.1, 0.1};
    double t_center{0.0};
    double t_width{0.1};

    double value(double t, const Vec2& x, int dim) const;
    double dt(double t, const Vec2& x, int dim) const;
    Vec2 grad(double t, const Vec2& x, int dim) const;
};

/// Default audit set: 12 separable bump products on a 3 (space) x 4 (time)
/// lattice, supports inside (0, t_hor) x (closure minus target).
std::vector<BumpTest> default_test_functions(const DomainSpec& dom, const TargetSpec& tgt,
                                             const SpaceGrid& grid, double t_hor);

struct OutflowEntry {
    double t{0.0};
    Vec2 x;
    double mass{0.0};
};

/// Discretized audit of the MFG system for a pair (m, phi): one report field
/// per equation of the system.
struct ResidualReport {
    std::vector<double> continuity;   // weak-form residual per test function
    double hj_max{0.0};               // HJ residual stats over eligible nodes
    double hj_p95{0.0};
    int hj_nodes{0};
    double gamma_max_abs_phi{0.0};    // max |phi| over target nodes
    double boundary_worst_probe{0.0}; // min one-sided normal difference
    int boundary_nodes{0};
    std::vector<OutflowEntry> outflow;  // detected outflow-set nodes and masses
    double outflow_worst_mass{0.0};
    int outflow_checked{0};
    double upsilon_fraction{1.0};     // min over probe times
    double initial_w1_gap{0.0};
};

/// Weak continuity residual per test function:
/// | int int dt_xi dm dt - int int grad_xi . grad^phi K dm dt |
/// by particle quadrature over the bundle samples. Rejects tests whose
/// support touches t = 0 or the target set.
std::vector<double> continuity_residual(const FlowMeasure& q, const ValueField& phi,
                                        const SpeedField& k,
                                        const std::vector<BumpTest>& tests);

struct HjResidualStats {
    double max{0.0};
    double p95{0.0};
    int nodes{0};
    double gamma_max_abs_phi{0.0};
    double boundary_worst_probe{0.0};
    int boundary_nodes{0};
};

/// Pointwise HJ residual on interior nodes with full smooth stencils (kinks
/// excluded by one-sided difference disagreement), the target condition, and
/// the one-sided boundary supersolution probe.
HjResidualStats hj_residual(const ValueField& phi, const SpeedField& k);

/// Per-node raw HJ residual raster (max over interior times, no kink
/// filtering); nodes without a full stencil hold -1. For dump/plotting use.
std::vector<double> hj_residual_grid(const ValueField& phi, const SpeedField& k);

/// Mass near boundary nodes whose maximal-descent set points strictly inward.
std::vector<OutflowEntry> outflow_boundary_check(const FlowMeasure& q, const ValueField& phi,
                                                 const SpeedField& k, int time_stride = 4,
                                                 int* checked = nullptr);

/// Fraction of mass strictly between start and arrival or already on the
/// target, minimized over the probe time grid (expected 1).
double upsilon_coverage(const FlowMeasure& q, const ValueField& phi, int time_stride = 4);

/// Full audit of the pair (m, phi) induced by the bundle.
ResidualReport audit_pair(const FlowMeasure& q, const ValueField& phi, const SpeedField& k,
                          const ParticleEnsemble& m0, const std::vector<BumpTest>& tests,
                          int time_stride = 4);

}  // namespace mtmfg
