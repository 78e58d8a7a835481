#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dwc/cg.hpp"
#include "dwc/control_window.hpp"
#include "dwc/error.hpp"
#include "dwc/observation.hpp"
#include "dwc/wave_solver.hpp"
#include "dwc/weighted_discretization.hpp"

namespace dwc {

struct HumOptions {
    double tol = 1e-8;
    int max_iters = 5000;
};

struct HUMSolution {
    /// Minimizer (v0, v1) of the HUM functional.
    StatePair adjoint_data;
    /// Free solution from adjoint_data.
    Trajectory adjoint;
    /// Distributed control v restricted to the window, at half steps.
    SourceTerm control;
    /// Controlled state: backward solve from rest at T driven by the control.
    Trajectory controlled;
    TimeGrid time_grid;
    double epsilon = 0.0;
    int cg_iterations = 0;
    double cg_residual = 0.0;
    std::vector<double> residual_history;
    std::vector<double> functional_history;
    /// Energy at T of the forward re-solve from the target with this control.
    double terminal_energy = 0.0;
    double initial_energy = 0.0;
    /// Observed cost: integral of v^2 over the window and time.
    double control_cost = 0.0;
    /// | -(v0, u1) + <v1, u0> - control_cost |
    double identity_residual = 0.0;
    std::vector<std::string> warnings;

    double relative_terminal_energy() const { return initial_energy > 0.0 ? terminal_energy / initial_energy : 0.0; }
    double relative_identity_residual() const { return control_cost > 0.0 ? identity_residual / control_cost : 0.0; }
};

struct BoundaryHUMSolution {
    StatePair adjoint_data;
    Trajectory adjoint;
    /// Dirichlet control at x = 1 on half steps.
    std::vector<double> h;
    Trajectory controlled;
    TimeGrid time_grid;
    int cg_iterations = 0;
    double cg_residual = 0.0;
    std::vector<double> residual_history;
    double terminal_energy = 0.0;
    double initial_energy = 0.0;
    double control_cost = 0.0;
    double identity_residual = 0.0;
    std::vector<std::string> warnings;

    double relative_terminal_energy() const { return initial_energy > 0.0 ? terminal_energy / initial_energy : 0.0; }
};

namespace detail {

inline std::vector<std::string> time_warnings(const DegenerateOperator& op, const TimeGrid& tg) {
    std::vector<std::string> w;
    if (op.alpha() < 2.0 && tg.T <= minimal_time(op.alpha()))
        w.push_back("T=" + std::to_string(tg.T) + " does not exceed the minimal time " +
                    std::to_string(minimal_time(op.alpha())));
    return w;
}

/// Dual right-hand side (-M u1, M u0) for driving (u0, u1) to rest.
inline Eigen::VectorXd hum_rhs(const DegenerateOperator& op, const StatePair& target) {
    op.check_field(target.position, "target position");
    op.check_field(target.velocity, "target velocity");
    Eigen::VectorXd b(2 * op.dofs());
    b << -(op.mass() * target.velocity), op.mass() * target.position;
    return b;
}

inline CgResult hum_cg(const Gramian& g, const Eigen::VectorXd& b, const HumOptions& opt) {
    if (!(opt.tol > 0.0)) fail(ErrorCode::InvalidArgument, "tol must be positive");
    return conjugate_gradient([&](const Eigen::VectorXd& p) { return g.apply(p); },
                              [&](const Eigen::VectorXd& r) { return g.apply_norm_inverse(r); }, b,
                              CgOptions{opt.tol, opt.max_iters, true});
}

/// Window-restricted half-step values of a free trajectory.
inline Block window_values(const DegenerateOperator& op, const ControlWindow& window, const Trajectory& v) {
    Block vals = Block::Zero(v.steps(), op.dofs());
    for (int k = 0; k < v.steps(); ++k) {
        const Eigen::VectorXd ub = half_step_position(op, v, k);
        for (int d = window.first_dof(); d < op.dofs(); ++d)
            if (window.weights()(d) > 0.0) vals(k, d) = ub(d);
    }
    return vals;
}

}  // namespace detail

/// Integral over Q_eps of g^2 for a distributed source, sum dt * c_i * g_i^2.
inline double distributed_cost(const SourceTerm& s, double dt) {
    if (s.kind != SourceTerm::Kind::Distributed) return 0.0;
    return dt * (s.values.cwiseProduct(s.values) * s.weights).sum();
}

/// (-u_t(0), u(0)) for u driven backwards from rest by the window restriction of
/// the free solution started at vdata.
inline StatePair apply_lambda(const DegenerateOperator& op, const ControlWindow& window, const StatePair& vdata,
                              const TimeGrid& tg) {
    const Gramian g(op, ObservationKind::Distributed, window, tg);
    const Eigen::VectorXd r = g.apply(stack(vdata));
    const int n = op.dofs();
    return {op.mass_factor().solve(r.head(n)), op.mass_factor().solve(r.tail(n))};
}

/// <Lambda p, q> with the L2 pairing on both components.
inline double lambda_pairing(const DegenerateOperator& op, const StatePair& lambda_p, const StatePair& q) {
    return inner_l2(op, lambda_p.position, q.position) + inner_l2(op, lambda_p.velocity, q.velocity);
}

/// Minimal-norm distributed control driving target to rest at T.
inline HUMSolution solve_hum_distributed(const DegenerateOperator& op, const ControlWindow& window,
                                         const StatePair& target, const TimeGrid& tg, const HumOptions& opt = {}) {
    const Gramian g(op, ObservationKind::Distributed, window, tg);
    const Eigen::VectorXd b = detail::hum_rhs(op, target);
    const CgResult cg = detail::hum_cg(g, b, opt);

    HUMSolution s;
    s.time_grid = tg;
    s.epsilon = window.epsilon();
    s.warnings = detail::time_warnings(op, tg);
    s.cg_iterations = cg.iterations;
    s.cg_residual = cg.relative_residual;
    s.residual_history = cg.residual_history;
    s.functional_history = cg.functional_history;
    s.adjoint_data = unstack(cg.x);
    s.adjoint = solve_forward(op, s.adjoint_data, SourceTerm::none(), tg);
    s.control = SourceTerm::distributed(window, detail::window_values(op, window, s.adjoint));
    s.controlled = solve_backward(op, s.control, tg);
    s.control_cost = distributed_cost(s.control, tg.dt());
    s.identity_residual = std::abs(cg.x.dot(b) - s.control_cost);

    const Trajectory check = solve_forward(op, target, s.control, tg);
    s.terminal_energy = energy(op, check.terminal());
    s.initial_energy = energy(op, target);
    return s;
}

struct NullCheck {
    double terminal_energy = 0.0;
    double initial_mismatch = 0.0;
};

/// Forward re-solve from target with the stored control.
inline NullCheck verify_null(const DegenerateOperator& op, const HUMSolution& sol, const StatePair& target,
                             const TimeGrid& tg) {
    NullCheck out;
    const Trajectory fwd = solve_forward(op, target, sol.control, tg);
    out.terminal_energy = energy(op, fwd.terminal());
    const StatePair& c0 = sol.controlled.initial();
    const Eigen::VectorXd du = c0.position - target.position, dw = c0.velocity - target.velocity;
    out.initial_mismatch = std::sqrt(std::pow(norm_h1a(op, du), 2) + std::pow(norm_l2(op, dw), 2));
    return out;
}

struct HumBounds {
    double r1 = 0.0;
    double r2 = 0.0;
    double scaled_r1 = 0.0;
    double scaled_r2 = 0.0;
};

/// Ratios of adjoint-data norm and control cost to the target energy norm, and their eps^3 multiples.
inline HumBounds hum_bounds_check(const DegenerateOperator& op, const HUMSolution& sol, const StatePair& target) {
    const double t2 = std::pow(norm_h1a(op, target.position), 2) + std::pow(norm_l2(op, target.velocity), 2);
    if (!(t2 > 0.0)) fail(ErrorCode::ZeroTarget, "target has zero norm");
    const double v2 = std::pow(norm_l2(op, sol.adjoint_data.position), 2) +
                      std::pow(norm_hneg1(op, sol.adjoint_data.velocity), 2);
    HumBounds b;
    b.r1 = std::sqrt(v2 / t2);
    b.r2 = sol.control_cost / t2;
    const double e3 = std::pow(sol.epsilon, 3);
    b.scaled_r1 = e3 * b.r1;
    b.scaled_r2 = e3 * b.r2;
    return b;
}

/// Minimal-norm Dirichlet control at x = 1 driving target to rest at T.
inline BoundaryHUMSolution solve_hum_boundary(const DegenerateOperator& op, const StatePair& target,
                                              const TimeGrid& tg, const HumOptions& opt = {}) {
    const Gramian g(op, ObservationKind::Boundary, std::nullopt, tg);
    const Eigen::VectorXd b = detail::hum_rhs(op, target);
    const CgResult cg = detail::hum_cg(g, b, opt);

    BoundaryHUMSolution s;
    s.time_grid = tg;
    s.warnings = detail::time_warnings(op, tg);
    s.cg_iterations = cg.iterations;
    s.cg_residual = cg.relative_residual;
    s.residual_history = cg.residual_history;
    s.adjoint_data = unstack(cg.x);
    s.adjoint = solve_forward(op, s.adjoint_data, SourceTerm::none(), tg);
    s.h = flux_trace(op, s.adjoint);
    for (double& v : s.h) v = -v;
    s.controlled = solve_backward(op, SourceTerm::dirichlet(s.h), tg);
    s.control_cost = half_step_dot(s.h, s.h, tg.dt());
    s.identity_residual = std::abs(cg.x.dot(b) - s.control_cost);

    const Trajectory check = solve_forward(op, target, SourceTerm::dirichlet(s.h), tg);
    s.terminal_energy = energy(op, check.terminal());
    s.initial_energy = energy(op, target);
    return s;
}

}  // namespace dwc
