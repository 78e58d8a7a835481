#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dwc/control_window.hpp"
#include "dwc/error.hpp"
#include "dwc/hum_control.hpp"
#include "dwc/wave_solver.hpp"
#include "dwc/weighted_discretization.hpp"

namespace dwc {

/// Initial data and a whole-domain source f(t, x) sampled at half steps.
struct TestDatum {
    StatePair data;
    Block source;  // steps x dofs, may be empty for f = 0
};

/// phi_eps = eps^3 * (free solution of the HUM minimizer).
inline Trajectory rescale_control(const HUMSolution& sol, double epsilon) {
    Trajectory phi = sol.adjoint;
    const double s = epsilon * epsilon * epsilon;
    for (auto& st : phi.states) {
        st.position *= s;
        st.velocity *= s;
    }
    return phi;
}

/// Boundary control from the window: sign/3 times the window estimate of phi_x(t,1).
///
/// The estimate is eps^{-3} * integral over the window of phi * (s + alpha/2 s^2), s = 1 - x,
/// negated. For a solution vanishing at x = 1 this kernel matches the first two Taylor
/// terms of any test function there, so the window integral of phi * theta equals
/// -(h, theta_x(., 1)) up to O(eps^2), and the estimate tends to phi_x(t,1) as eps -> 0.
inline std::vector<double> extract_boundary_control(const DegenerateOperator& op, const ControlWindow& window,
                                                    const Trajectory& phi, double sign = -1.0) {
    const Eigen::VectorXd x = op.dof_coordinates();
    Eigen::VectorXd kern(op.dofs());
    for (int i = 0; i < op.dofs(); ++i) {
        const double s = 1.0 - x(i);
        kern(i) = window.weights()(i) * (s + 0.5 * op.alpha() * s * s);
    }
    const double scale = -sign / std::pow(window.epsilon(), 3);
    std::vector<double> h(phi.steps());
    for (int k = 0; k < phi.steps(); ++k) h[k] = scale * half_step_position(op, phi, k).dot(kern);
    return h;
}

/// sign/3 * (discrete flux of phi at x = 1), on half steps.
inline std::vector<double> trace_boundary_control(const DegenerateOperator& op, const Trajectory& phi,
                                                  double sign = -1.0) {
    std::vector<double> h = flux_trace(op, phi);
    for (double& v : h) v *= sign / 3.0;
    return h;
}

/// L2(0,T) norm of a half-step series.
inline double l2_time(const std::vector<double>& a, double dt) { return std::sqrt(half_step_dot(a, a, dt)); }

inline double l2_time_distance(const std::vector<double>& a, const std::vector<double>& b, double dt) {
    if (a.size() != b.size()) fail(ErrorCode::DimensionMismatch, "time series lengths differ");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(dt * s);
}

/// Forward solution y of the test datum.
inline Trajectory solve_test(const DegenerateOperator& op, const TestDatum& test, const TimeGrid& tg) {
    SourceTerm src;
    if (test.source.size() > 0) src = SourceTerm::distributed(ControlWindow(op, 1.0), test.source);
    return solve_forward(op, test.data, src, tg);
}

/// eps^{-3} * integral over Q_eps of phi_eps * y.
inline double evaluate_g_eps(const DegenerateOperator& op, const ControlWindow& window, const Trajectory& phi_eps,
                             const Trajectory& y) {
    if (phi_eps.steps() != y.steps()) fail(ErrorCode::DimensionMismatch, "trajectories on different time grids");
    const auto& c = window.weights();
    double s = 0.0;
    for (int k = 0; k < phi_eps.steps(); ++k) {
        const Eigen::VectorXd a = half_step_position(op, phi_eps, k);
        const Eigen::VectorXd b = half_step_position(op, y, k);
        s += (a.cwiseProduct(b).cwiseProduct(c)).sum();
    }
    return phi_eps.dt * s / std::pow(window.epsilon(), 3);
}

/// 1/3 * integral over (0,T) of phi_x(t,1) y_x(t,1).
inline double evaluate_g_limit(const DegenerateOperator& op, const Trajectory& phi, const Trajectory& y) {
    return half_step_dot(flux_trace(op, phi), flux_trace(op, y), phi.dt) / 3.0;
}

/// Same with phi_x(t,1) given as a half-step series.
inline double evaluate_g_limit(const DegenerateOperator& op, const std::vector<double>& phi_x, const Trajectory& y) {
    return half_step_dot(phi_x, flux_trace(op, y), y.dt) / 3.0;
}

/// Relative mismatch of the duality identity
///   sum dt u.F = -(u0, theta_t(0)) + (u1, theta(0)) + control term,
/// where theta solves the backward problem with source F and the control term is
/// the window integral of v * theta (distributed) or -integral of h * theta_flux (Dirichlet).
inline double transposition_residual(const DegenerateOperator& op, const Trajectory& u, const SourceTerm& control,
                                     const StatePair& target, const Block& F, const TimeGrid& tg) {
    const ControlWindow full(op, 1.0);
    const SourceTerm fsrc = SourceTerm::distributed(full, F);
    const Trajectory theta = solve_backward(op, fsrc, tg);
    const double dt = tg.dt();

    double lhs = 0.0;
    for (int k = 0; k < tg.steps; ++k) {
        const Eigen::VectorXd ub = half_step_position(op, u, k);
        lhs += ub.cwiseProduct(full.weights()).dot(F.row(k).transpose());
    }
    lhs *= dt;

    const StatePair& th0 = theta.initial();
    double rhs = -inner_l2(op, target.position, th0.velocity) + inner_l2(op, target.velocity, th0.position);
    if (control.kind == SourceTerm::Kind::Distributed) {
        double s = 0.0;
        for (int k = 0; k < tg.steps; ++k) {
            const Eigen::VectorXd tb = half_step_position(op, theta, k);
            s += control.values.row(k).dot(tb.cwiseProduct(control.weights).transpose());
        }
        rhs += dt * s;
    } else if (control.kind == SourceTerm::Kind::BoundaryDirichlet) {
        rhs -= half_step_dot(control.boundary, flux_trace(op, theta), dt);
    }
    const double scale = std::max(std::abs(lhs), std::abs(rhs));
    return scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0;
}

/// Squared L2 x H^{-1} norm, the natural norm for solutions driven by L2(0,T) boundary data.
inline double weak_norm_squared(const DegenerateOperator& op, const StatePair& s) {
    return std::pow(norm_l2(op, s.position), 2) + std::pow(norm_hneg1(op, s.velocity), 2);
}

struct LimitNullCheck {
    /// |(u, u_t)(T)|^2 / |(u0, u1)|^2 in L2 x H^{-1}
    double relative_weak = 0.0;
    /// E(T)/E(0) of the discrete energy
    double relative_energy = 0.0;
};

/// Forward solve from target driven by Dirichlet data h.
inline LimitNullCheck verify_limit_null(const DegenerateOperator& op, const std::vector<double>& h,
                                        const StatePair& target, const TimeGrid& tg) {
    LimitNullCheck out;
    const double e0 = energy(op, target);
    const double w0 = weak_norm_squared(op, target);
    if (e0 == 0.0 && w0 == 0.0) return out;
    const Trajectory tr = solve_forward(op, target, SourceTerm::dirichlet(h), tg);
    if (w0 > 0.0) out.relative_weak = weak_norm_squared(op, tr.terminal()) / w0;
    if (e0 > 0.0) out.relative_energy = energy(op, tr.terminal()) / e0;
    return out;
}

/// Seeded smooth test data: low-order polynomials vanishing at x = 1 (and at
/// x = 0 in the Weak regime), with a source polynomial in t and x.
inline std::vector<TestDatum> smooth_test_data(const DegenerateOperator& op, const TimeGrid& tg, int count,
                                               std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    const bool weak = op.regime() == Regime::Weak;
    auto bump = [weak](double x) { return (weak ? x : 1.0) * (1.0 - x); };
    std::vector<TestDatum> out;
    for (int c = 0; c < count; ++c) {
        double a[6];
        for (double& v : a) v = nd(rng);
        TestDatum t;
        t.data.position = op.sample([&](double x) { return bump(x) * (a[0] + a[1] * x); });
        t.data.velocity = op.sample([&](double x) { return bump(x) * (a[2] + a[3] * x); });
        t.source.resize(tg.steps, op.dofs());
        for (int k = 0; k < tg.steps; ++k) {
            const double tt = tg.t_half(k) / tg.T;
            t.source.row(k) = op.sample([&](double x) { return bump(x) * (a[4] + a[5] * tt * x); }).transpose();
        }
        out.push_back(std::move(t));
    }
    return out;
}

/// Seeded smooth sources F for transposition checks.
inline std::vector<Block> smooth_test_sources(const DegenerateOperator& op, const TimeGrid& tg, int count,
                                              std::uint64_t seed) {
    std::vector<Block> out;
    for (auto& t : smooth_test_data(op, tg, count, seed)) out.push_back(std::move(t.source));
    return out;
}

struct LimitEntry {
    double epsilon = 0.0;
    int cg_iterations = 0;
    double phi0_l2 = 0.0;
    double phi1_hneg1 = 0.0;
    /// eps^{-3} * integral over Q_eps of phi_eps^2
    double scaled_cost = 0.0;
    /// phi0_l2 + phi1_hneg1 + scaled_cost
    double bounded_quantity = 0.0;
    std::vector<double> g_eps;
    std::vector<double> g_gap;
    std::vector<double> h;
    /// -1/3 of the discrete flux of phi_eps, for comparison with h
    std::vector<double> h_trace;
    double h_l2 = 0.0;
    /// ||h_eps - h_{previous eps}||, NaN for the first entry
    double h_step = std::numeric_limits<double>::quiet_NaN();
    double h_trace_step = std::numeric_limits<double>::quiet_NaN();
    /// Max over test sources; boundary residuals use the smallest-eps h.
    double transposition_distributed = 0.0;
    double transposition_boundary = 0.0;
    double transposition_boundary_flipped = 0.0;
    /// From verify_limit_null with this entry's h.
    double terminal_weak = 0.0;
    double terminal_energy = 0.0;
    double hum_terminal_energy = 0.0;
};

struct LimitDiagnostics {
    double alpha = 0.0;
    TimeGrid time_grid;
    std::vector<LimitEntry> entries;  // ordered by decreasing eps
    /// h from the smallest eps.
    std::vector<double> h_extracted;
    std::vector<double> g_limit;
    /// 1/3 ||phi_x(.,1)||^2 at the smallest eps.
    double liminf_lhs = 0.0;
    /// min over eps of eps^{-3} integral of phi_eps^2.
    double liminf_rhs = 0.0;
    /// Boundary-HUM control and its distance to h_extracted, when requested.
    std::optional<std::vector<double>> h_boundary_hum;
    double h_boundary_distance = std::numeric_limits<double>::quiet_NaN();
};

struct LimitOptions {
    HumOptions hum{1e-8, 5000};
    int test_count = 5;
    std::uint64_t seed = 2024;
    bool compare_boundary_hum = true;
};

/// Full passage to the limit along a decreasing list of eps.
inline LimitDiagnostics run_limit_sweep(const DegenerateOperator& op, const StatePair& target, const TimeGrid& tg,
                                        std::vector<double> epsilons, const LimitOptions& opt = {}) {
    if (epsilons.size() < 2) fail(ErrorCode::TooFewSamples, "a limit sweep needs at least 2 values of eps");
    std::sort(epsilons.begin(), epsilons.end(), std::greater<>());
    const double dt = tg.dt();
    LimitDiagnostics diag;
    diag.alpha = op.alpha();
    diag.time_grid = tg;

    const auto tests = smooth_test_data(op, tg, opt.test_count, opt.seed);
    std::vector<Trajectory> ys;
    for (const auto& t : tests) ys.push_back(solve_test(op, t, tg));
    const auto sources = smooth_test_sources(op, tg, opt.test_count, opt.seed + 1);

    std::vector<Trajectory> controlled;
    Trajectory phi_last;
    for (double eps : epsilons) {
        const ControlWindow window(op, eps);
        const HUMSolution sol = solve_hum_distributed(op, window, target, tg, opt.hum);
        const Trajectory phi = rescale_control(sol, eps);
        LimitEntry e;
        e.epsilon = eps;
        e.cg_iterations = sol.cg_iterations;
        e.hum_terminal_energy = sol.relative_terminal_energy();
        e.phi0_l2 = norm_l2(op, phi.initial().position);
        e.phi1_hneg1 = norm_hneg1(op, phi.initial().velocity);
        e.scaled_cost = std::pow(eps, 3) * sol.control_cost;
        e.bounded_quantity = e.phi0_l2 + e.phi1_hneg1 + e.scaled_cost;
        for (const auto& y : ys) e.g_eps.push_back(evaluate_g_eps(op, window, phi, y));
        e.h = extract_boundary_control(op, window, phi);
        e.h_trace = trace_boundary_control(op, phi);
        e.h_l2 = l2_time(e.h, dt);
        if (!diag.entries.empty()) {
            e.h_step = l2_time_distance(e.h, diag.entries.back().h, dt);
            e.h_trace_step = l2_time_distance(e.h_trace, diag.entries.back().h_trace, dt);
        }
        for (const auto& F : sources)
            e.transposition_distributed = std::max(
                e.transposition_distributed, transposition_residual(op, sol.controlled, sol.control, target, F, tg));
        const LimitNullCheck nc = verify_limit_null(op, e.h, target, tg);
        e.terminal_weak = nc.relative_weak;
        e.terminal_energy = nc.relative_energy;
        diag.entries.push_back(std::move(e));
        controlled.push_back(sol.controlled);
        phi_last = phi;
    }

    diag.h_extracted = diag.entries.back().h;
    std::vector<double> flipped = diag.h_extracted;
    for (double& v : flipped) v = -v;
    const SourceTerm hsrc = SourceTerm::dirichlet(diag.h_extracted);
    const SourceTerm fsrc = SourceTerm::dirichlet(flipped);
    for (std::size_t i = 0; i < diag.entries.size(); ++i) {
        LimitEntry& e = diag.entries[i];
        for (const auto& F : sources) {
            e.transposition_boundary =
                std::max(e.transposition_boundary, transposition_residual(op, controlled[i], hsrc, target, F, tg));
            e.transposition_boundary_flipped = std::max(e.transposition_boundary_flipped,
                                                        transposition_residual(op, controlled[i], fsrc, target, F, tg));
        }
    }

    std::vector<double> phi_x = diag.h_extracted;
    for (double& v : phi_x) v *= -3.0;
    for (const auto& y : ys) diag.g_limit.push_back(evaluate_g_limit(op, phi_x, y));
    for (auto& e : diag.entries)
        for (std::size_t i = 0; i < e.g_eps.size(); ++i) e.g_gap.push_back(std::abs(e.g_eps[i] - diag.g_limit[i]));

    const auto tr = flux_trace(op, phi_last);
    diag.liminf_lhs = half_step_dot(tr, tr, dt) / 3.0;
    diag.liminf_rhs = std::numeric_limits<double>::infinity();
    for (const auto& e : diag.entries) diag.liminf_rhs = std::min(diag.liminf_rhs, e.scaled_cost);

    if (opt.compare_boundary_hum) {
        const BoundaryHUMSolution b = solve_hum_boundary(op, target, tg, opt.hum);
        diag.h_boundary_hum = b.h;
        diag.h_boundary_distance = l2_time_distance(b.h, diag.h_extracted, dt);
    }
    return diag;
}

}  // namespace dwc
