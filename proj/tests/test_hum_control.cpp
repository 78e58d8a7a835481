#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

#include "dwc/hum_control.hpp"
#include "test_support.hpp"

using namespace dwc;

namespace {

StatePair sine_target(const DegenerateOperator& op) {
    const double pi = std::acos(-1.0);
    return {op.sample([&](double x) { return std::sin(pi * x); }), Eigen::VectorXd::Zero(op.dofs())};
}

}  // namespace

TEST(HumControl, LambdaIsLinear) {
    const auto op = build_operator(0.5, Regime::Weak, 20);
    const ControlWindow w(op, 0.3);
    const TimeGrid tg = TimeGrid::covering(3.2, default_dt(op));
    const StatePair p = test_util::random_state(op.dofs(), 1), q = test_util::random_state(op.dofs(), 2);
    const StatePair comb{2.0 * p.position - 3.0 * q.position, 2.0 * p.velocity - 3.0 * q.velocity};
    const StatePair lp = apply_lambda(op, w, p, tg), lq = apply_lambda(op, w, q, tg), lc = apply_lambda(op, w, comb, tg);
    EXPECT_LT((lc.position - (2.0 * lp.position - 3.0 * lq.position)).norm(), 1e-10 * lc.position.norm());
    EXPECT_LT((lc.velocity - (2.0 * lp.velocity - 3.0 * lq.velocity)).norm(), 1e-10 * lc.velocity.norm());
}

TEST(HumControl, LambdaPairingIsSymmetricAndEqualsObservedForm) {
    const auto op = build_operator(1.5, Regime::Strong, 20);
    const ControlWindow w(op, 0.4);
    const TimeGrid tg = TimeGrid::covering(9.6, default_dt(op));
    const StatePair p = test_util::random_state(op.dofs(), 3), q = test_util::random_state(op.dofs(), 4);
    const double pq = lambda_pairing(op, apply_lambda(op, w, p, tg), q);
    const double qp = lambda_pairing(op, apply_lambda(op, w, q, tg), p);
    EXPECT_NEAR(pq, qp, 1e-10 * std::abs(pq));
    const Gramian g(op, ObservationKind::Distributed, w, tg);
    EXPECT_NEAR(pq, g.form(stack(p), stack(q)), 1e-9 * std::abs(pq));
    EXPECT_GT(lambda_pairing(op, apply_lambda(op, w, p, tg), p), 0.0);
}

TEST(HumControl, DistributedControlReachesRest) {
    const auto op = build_operator(0.5, Regime::Weak, 40);
    const ControlWindow w(op, 0.3);
    const TimeGrid tg = TimeGrid::covering(3.2, default_dt(op));
    const StatePair target = sine_target(op);
    const HUMSolution sol = solve_hum_distributed(op, w, target, tg);
    EXPECT_LE(sol.relative_terminal_energy(), 1e-8);
    EXPECT_LE(sol.relative_identity_residual(), 1e-6);
    const NullCheck nc = verify_null(op, sol, target, tg);
    EXPECT_LE(nc.terminal_energy, 1e-8 * sol.initial_energy);
    EXPECT_LE(nc.initial_mismatch, 1e-6);
    EXPECT_TRUE(sol.warnings.empty());
}

TEST(HumControl, CgFunctionalDecreases) {
    const auto op = build_operator(0.5, Regime::Weak, 30);
    const HUMSolution sol = solve_hum_distributed(op, ControlWindow(op, 0.3), sine_target(op),
                                                  TimeGrid::covering(3.2, default_dt(op)));
    for (std::size_t i = 1; i < sol.functional_history.size(); ++i)
        EXPECT_LE(sol.functional_history[i], sol.functional_history[i - 1] + 1e-14);
    EXPECT_LE(sol.cg_residual, 1e-8);
}

TEST(HumControl, HumControlHasMinimalNorm) {
    // Any other control that also reaches rest differs from v by a null direction w.
    const auto op = build_operator(0.5, Regime::Weak, 20);
    const ControlWindow win(op, 0.3);
    const TimeGrid tg = TimeGrid::covering(3.2, default_dt(op));
    const StatePair target = sine_target(op);
    const HUMSolution sol = solve_hum_distributed(op, win, target, tg, {1e-12, 5000});

    std::mt19937_64 rng(17);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 10; ++trial) {
        Block z = Block::Zero(tg.steps, op.dofs());
        for (int k = 0; k < tg.steps; ++k)
            for (int d = win.first_dof(); d < op.dofs(); ++d) z(k, d) = g(rng);
        const StatePair reached = solve_backward(op, SourceTerm::distributed(win, z), tg).initial();
        const HUMSolution vz = solve_hum_distributed(op, win, reached, tg, {1e-12, 5000});
        const Block w = z - vz.control.values;
        for (double t : {-0.5, 0.5}) {
            const SourceTerm other = SourceTerm::distributed(win, sol.control.values + t * w);
            const Trajectory fwd = solve_forward(op, target, other, tg);
            EXPECT_LE(energy(op, fwd.terminal()), 1e-8 * energy(op, target));
            EXPECT_GT(distributed_cost(other, tg.dt()), sol.control_cost);
        }
    }
}

TEST(HumControl, ZeroTargetShortCircuits) {
    const auto op = build_operator(0.5, Regime::Weak, 20);
    const HUMSolution sol = solve_hum_distributed(op, ControlWindow(op, 0.3), StatePair::zero(op.dofs()),
                                                  TimeGrid::covering(3.2, default_dt(op)));
    EXPECT_EQ(sol.cg_iterations, 0);
    EXPECT_TRUE(sol.control.values.isZero(0.0));
    EXPECT_THROW(hum_bounds_check(op, sol, StatePair::zero(op.dofs())), Error);
}

TEST(HumControl, WarnsBelowMinimalTime) {
    const auto op = build_operator(0.5, Regime::Weak, 20);
    const TimeGrid tg = TimeGrid::covering(2.0, default_dt(op));
    const HUMSolution sol = solve_hum_distributed(op, ControlWindow(op, 0.3), sine_target(op), tg, {1e-6, 20000});
    EXPECT_FALSE(sol.warnings.empty());
}

TEST(HumControl, BoundaryControlReachesRest) {
    const auto op = build_operator(1.5, Regime::Strong, 40);
    const TimeGrid tg = TimeGrid::covering(9.6, default_dt(op));
    const BoundaryHUMSolution sol = solve_hum_boundary(op, sine_target(op), tg);
    EXPECT_LE(sol.relative_terminal_energy(), 1e-8);
    EXPECT_EQ(static_cast<int>(sol.h.size()), tg.steps);
    EXPECT_GT(sol.control_cost, 0.0);
}

TEST(HumControl, CostGrowsAsWindowShrinks) {
    const auto op = build_operator(0.5, Regime::Weak, 40);
    const TimeGrid tg = TimeGrid::covering(3.2, default_dt(op));
    const StatePair target = sine_target(op);
    double prev = 0.0;
    for (double eps : {0.4, 0.3, 0.2}) {
        const HUMSolution sol = solve_hum_distributed(op, ControlWindow(op, eps), target, tg);
        EXPECT_GT(sol.control_cost, prev);
        prev = sol.control_cost;
    }
}

TEST(HumControl, CostMatchesDenseGramianOracle) {
    // Minimal cost = b^T A^{-1} b with A the dense Gramian and b the HUM right-hand side.
    const auto op = build_operator(0.5, Regime::Weak, 20);
    const ControlWindow w(op, 0.5);
    const TimeGrid tg = TimeGrid::covering(3.2, default_dt(op));
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(op.stiffness().to_dense(), op.mass().to_dense());
    Eigen::VectorXd mode = es.eigenvectors().col(0);
    const StatePair target{mode / norm_l2(op, mode), Eigen::VectorXd::Zero(op.dofs())};
    const HUMSolution sol = solve_hum_distributed(op, w, target, tg, {1e-12, 5000});
    const Eigen::MatrixXd A = Gramian(op, ObservationKind::Distributed, w, tg).dense();
    const Eigen::VectorXd b = detail::hum_rhs(op, target);
    const double t2 = std::pow(norm_h1a(op, target.position), 2);
    EXPECT_LT(test_util::rel(hum_bounds_check(op, sol, target).r2, b.dot(A.ldlt().solve(b)) / t2), 1e-6);
}

TEST(HumControl, ScaledAdjointNormStaysBounded) {
    const auto op = build_operator(0.5, Regime::Weak, 40);
    const TimeGrid tg = TimeGrid::covering(3.2, default_dt(op));
    const StatePair target = sine_target(op);
    double first = 0.0;
    for (double eps : {0.4, 0.3, 0.2, 0.15, 0.1}) {
        const double s = hum_bounds_check(op, solve_hum_distributed(op, ControlWindow(op, eps), target, tg), target).scaled_r1;
        if (first == 0.0) first = s;
        EXPECT_LE(s, 2.0 * first) << "eps=" << eps;
    }
}
