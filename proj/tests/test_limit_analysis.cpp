#include <gtest/gtest.h>

#include <cmath>

#include "dwc/limit_analysis.hpp"
#include "test_support.hpp"

using namespace dwc;

namespace {

StatePair sine_target(const DegenerateOperator& op) {
    const double pi = std::acos(-1.0);
    return {op.sample([&](double x) { return std::sin(pi * x); }), Eigen::VectorXd::Zero(op.dofs())};
}

// One sweep shared by the tests below.
const LimitDiagnostics& sweep() {
    static const LimitDiagnostics d = [] {
        const auto op = build_operator(0.5, Regime::Weak, 50);
        const TimeGrid tg = TimeGrid::covering(1.2 * minimal_time(0.5), default_dt(op));
        return run_limit_sweep(op, sine_target(op), tg, {0.4, 0.3, 0.2, 0.15, 0.1});
    }();
    return d;
}

}  // namespace

TEST(LimitAnalysis, WindowMomentOfLinearProfile) {
    // phi = c(t) (1 - x): the moment is c (1/3 + alpha eps / 8), the flux trace gives c / 3.
    const double alpha = 0.5, eps = 0.1;
    const auto op = build_operator(alpha, Regime::Weak, 400);
    const TimeGrid tg = TimeGrid::exact(1.0, 0.1);
    Trajectory phi;
    phi.dt = tg.dt();
    phi.T = tg.T;
    for (int k = 0; k <= tg.steps; ++k) {
        const double c = 1.0 + tg.t(k);
        phi.states.push_back({op.sample([&](double x) { return c * (1.0 - x); }), Eigen::VectorXd::Zero(op.dofs())});
    }
    const auto h = extract_boundary_control(op, ControlWindow(op, eps), phi);
    const auto ht = trace_boundary_control(op, phi);
    for (int k = 0; k < tg.steps; ++k) {
        const double c = 1.0 + tg.t_half(k);
        EXPECT_NEAR(h[k], c * (1.0 / 3.0 + alpha * eps / 8.0), 1e-3 * c);
        EXPECT_NEAR(ht[k], c / 3.0, 2e-3 * c);
    }
}

TEST(LimitAnalysis, RescaledNormsStayBounded) {
    const auto& d = sweep();
    double lo = 1e300, hi = 0.0;
    for (const auto& e : d.entries) {
        lo = std::min(lo, e.bounded_quantity);
        hi = std::max(hi, e.bounded_quantity);
    }
    EXPECT_LT(hi / lo, 2.0);
}

TEST(LimitAnalysis, BoundaryControlsConverge) {
    const auto& d = sweep();
    ASSERT_EQ(d.entries.size(), 5u);
    EXPECT_TRUE(std::isnan(d.entries[0].h_step));
    for (std::size_t i = 2; i < d.entries.size(); ++i) EXPECT_LT(d.entries[i].h_step, d.entries[i - 1].h_step);
    for (std::size_t i = 1; i < d.entries.size(); ++i) {
        EXPECT_LT(d.entries[i].transposition_boundary, d.entries[i - 1].transposition_boundary);
        EXPECT_LT(d.entries[i].terminal_weak, d.entries[i - 1].terminal_weak);
    }
    EXPECT_LT(d.entries.back().terminal_weak, 5e-2);
}

TEST(LimitAnalysis, DistributedTranspositionHolds) {
    for (const auto& e : sweep().entries) EXPECT_LT(e.transposition_distributed, 1e-6);
}

TEST(LimitAnalysis, SignConventionAgreesWithBoundaryHum) {
    const auto& d = sweep();
    ASSERT_TRUE(d.h_boundary_hum.has_value());
    const double dt = d.time_grid.dt();
    EXPECT_LT(d.h_boundary_distance, 0.2 * l2_time(d.h_extracted, dt));
    for (const auto& e : d.entries) EXPECT_LT(e.transposition_boundary, e.transposition_boundary_flipped);
}

TEST(LimitAnalysis, LiminfBound) {
    const auto& d = sweep();
    EXPECT_LE(d.liminf_lhs, 1.1 * d.entries.back().scaled_cost);
    EXPECT_GT(d.liminf_lhs, 0.0);
}

TEST(LimitAnalysis, WeakNormAndNullCheck) {
    const auto op = build_operator(0.5, Regime::Weak, 20);
    EXPECT_EQ(weak_norm_squared(op, StatePair::zero(op.dofs())), 0.0);
    const StatePair s = test_util::random_state(op.dofs(), 2);
    EXPECT_NEAR(weak_norm_squared(op, s),
                std::pow(norm_l2(op, s.position), 2) + std::pow(norm_hneg1(op, s.velocity), 2), 1e-12);
    // Zero control leaves a free solution: the terminal ratio equals the free-flow ratio, which is O(1).
    const TimeGrid tg = TimeGrid::covering(3.2, default_dt(op));
    const LimitNullCheck c = verify_limit_null(op, std::vector<double>(tg.steps, 0.0), sine_target(op), tg);
    EXPECT_GT(c.relative_weak, 0.1);
    EXPECT_NEAR(c.relative_energy, 1.0, 1e-10);
}

TEST(LimitAnalysis, SweepNeedsTwoEpsilons) {
    const auto op = build_operator(0.5, Regime::Weak, 12);
    const TimeGrid tg = TimeGrid::covering(3.2, default_dt(op));
    EXPECT_THROW(run_limit_sweep(op, sine_target(op), tg, {0.3}), Error);
}
