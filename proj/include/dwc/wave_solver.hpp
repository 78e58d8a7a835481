#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dwc/control_window.hpp"
#include "dwc/error.hpp"
#include "dwc/tridiagonal.hpp"
#include "dwc/weighted_discretization.hpp"

namespace dwc {

struct StatePair {
    Eigen::VectorXd position;
    Eigen::VectorXd velocity;

    static StatePair zero(int n) { return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)}; }
    bool is_zero() const { return position.isZero(0.0) && velocity.isZero(0.0); }
};

/// Uniform time levels t_k = k*dt, k = 0..steps.
struct TimeGrid {
    double T = 0.0;
    int steps = 0;

    double dt() const { return T / steps; }
    double t(int k) const { return k * dt(); }
    double t_half(int k) const { return (k + 0.5) * dt(); }

    /// Exactly `steps` = T/dt levels; T/dt must be an integer up to rounding.
    static TimeGrid exact(double T, double dt) {
        if (!(dt > 0.0)) fail(ErrorCode::NonPositiveStep, "dt=" + std::to_string(dt));
        if (!(T > 0.0)) fail(ErrorCode::InvalidArgument, "T must be positive");
        const double r = T / dt;
        const double k = std::round(r);
        if (k < 1.0 || std::abs(r - k) > 1e-9 * std::max(1.0, r))
            fail(ErrorCode::InvalidArgument, "T/dt = " + std::to_string(r) + " is not an integer");
        return {T, static_cast<int>(k)};
    }

    /// Smallest step count with dt <= dt_max.
    static TimeGrid covering(double T, double dt_max) {
        if (!(dt_max > 0.0)) fail(ErrorCode::NonPositiveStep, "dt=" + std::to_string(dt_max));
        if (!(T > 0.0)) fail(ErrorCode::InvalidArgument, "T must be positive");
        const double r = T / dt_max;
        int k = static_cast<int>(std::ceil(r - 1e-9 * r));
        return {T, std::max(k, 1)};
    }
};

/// Default step h/2.
inline double default_dt(const DegenerateOperator& op) { return 0.5 * op.grid().h; }

/// Right-hand side of the wave equation, sampled at half steps t_{k+1/2}.
struct SourceTerm {
    enum class Kind { None, Distributed, BoundaryDirichlet };

    Kind kind = Kind::None;
    /// Distributed: row k holds g(t_{k+1/2}) on the dofs; the load is weights .* g.
    Block values;
    Eigen::VectorXd weights;
    double epsilon = 0.0;
    /// BoundaryDirichlet: u(t_{k+1/2}, 1).
    std::vector<double> boundary;

    static SourceTerm none() { return {}; }

    static SourceTerm distributed(const ControlWindow& window, Block values) {
        SourceTerm s;
        s.kind = Kind::Distributed;
        s.values = std::move(values);
        s.weights = window.weights();
        s.epsilon = window.epsilon();
        return s;
    }

    static SourceTerm dirichlet(std::vector<double> h) {
        SourceTerm s;
        s.kind = Kind::BoundaryDirichlet;
        s.boundary = std::move(h);
        return s;
    }

    /// Same source traversed backwards in time (row k becomes row steps-1-k).
    SourceTerm reversed() const {
        SourceTerm s = *this;
        if (kind == Kind::Distributed) s.values = values.colwise().reverse();
        if (kind == Kind::BoundaryDirichlet) s.boundary.assign(boundary.rbegin(), boundary.rend());
        return s;
    }

    void validate(const DegenerateOperator& op, int steps) const {
        if (kind == Kind::Distributed) {
            if (weights.size() != op.dofs())
                fail(ErrorCode::WindowMismatch, "window built for a different operator");
            if (values.rows() != steps || values.cols() != op.dofs())
                fail(ErrorCode::DimensionMismatch, "distributed source must be steps x dofs");
            for (int d = 0; d < op.dofs(); ++d)
                if (weights(d) == 0.0 && !values.col(d).isZero(0.0))
                    fail(ErrorCode::WindowMismatch, "source is nonzero outside the window at dof " + std::to_string(d));
        } else if (kind == Kind::BoundaryDirichlet) {
            if (static_cast<int>(boundary.size()) != steps)
                fail(ErrorCode::DimensionMismatch, "boundary series must have one value per step");
        }
    }
};

/// States at t_k = k*dt.
///
/// For Dirichlet-driven runs the stored position is M^{-1} times the discrete
/// L2 moment (so it includes the boundary-node overlap of the mass matrix);
/// boundary_levels holds the datum interpolated to the time levels.
struct Trajectory {
    std::vector<StatePair> states;
    double dt = 0.0;
    double T = 0.0;
    std::vector<double> boundary_half;
    std::vector<double> boundary_levels;

    int steps() const { return static_cast<int>(states.size()) - 1; }
    const StatePair& initial() const { return states.front(); }
    const StatePair& terminal() const { return states.back(); }
    bool boundary_driven() const { return !boundary_half.empty(); }
};

/// One-step implicit midpoint integrator in moment variables q = M u + m_b g e, p = q'.
///
/// Each step solves (M + dt^2/4 K) ubar = q + dt/2 p + dt^2/4 (f - k_b g e) - m_b g e,
/// with f the load and g the Dirichlet value at x = 1 at the half step.
class WaveStepper {
public:
    WaveStepper(const DegenerateOperator& op, double dt)
        : op_(&op), dt_(dt), factor_(SymTridiagonal::combine(1.0, op.mass(), 0.25 * dt * dt, op.stiffness())) {
        if (!(dt > 0.0)) fail(ErrorCode::NonPositiveStep, "dt=" + std::to_string(dt));
    }

    double dt() const { return dt_; }
    const DegenerateOperator& op() const { return *op_; }

    /// Advances (q, p) by +dt (forward = true) or -dt. ubar receives the half-step position.
    void step(Eigen::VectorXd& q, Eigen::VectorXd& p, Eigen::VectorXd& ubar, bool forward,
              const Eigen::VectorXd* load, double g) const {
        const double s = forward ? dt_ : -dt_;
        const int last = op_->dofs() - 1;
        ubar = q + (0.5 * s) * p;
        if (load) ubar += (0.25 * s * s) * (*load);
        ubar(last) -= (0.25 * s * s * op_->boundary_stiffness() + op_->boundary_mass()) * g;
        factor_.solve_in_place(ubar);
        op_->mass().multiply(ubar, qbar_);
        qbar_(last) += op_->boundary_mass() * g;
        // p_new = 2 pbar - p with pbar = 2 (qbar - q) / s
        p = (4.0 / s) * (qbar_ - q) - p;
        q = 2.0 * qbar_ - q;
    }

    /// Homogeneous step applied to every column of a row-major block.
    void step_block(Block& q, Block& p, Block& ubar, bool forward) const {
        const double s = forward ? dt_ : -dt_;
        ubar = q + (0.5 * s) * p;
        factor_.solve_in_place(ubar);
        op_->mass().multiply(ubar, qbar_block_);
        p = (4.0 / s) * (qbar_block_ - q) - p;
        q = 2.0 * qbar_block_ - q;
    }

private:
    const DegenerateOperator* op_;
    double dt_;
    TridiagonalLdl factor_;
    mutable Eigen::VectorXd qbar_;
    mutable Block qbar_block_;
};

namespace detail {

inline std::vector<double> boundary_at_levels(const std::vector<double>& half) {
    const int k = static_cast<int>(half.size());
    std::vector<double> lv(k + 1, 0.0);
    if (k == 0) return lv;
    if (k == 1) {
        lv[0] = lv[1] = half[0];
        return lv;
    }
    for (int j = 1; j < k; ++j) lv[j] = 0.5 * (half[j - 1] + half[j]);
    lv[0] = 1.5 * half[0] - 0.5 * half[1];
    lv[k] = 1.5 * half[k - 1] - 0.5 * half[k - 2];
    return lv;
}

inline Trajectory integrate(const DegenerateOperator& op, const StatePair& start, const SourceTerm& source,
                            const TimeGrid& tg, bool forward) {
    op.check_field(start.position, "position");
    op.check_field(start.velocity, "velocity");
    source.validate(op, tg.steps);
    const WaveStepper stepper(op, tg.dt());
    const int K = tg.steps;

    Trajectory tr;
    tr.dt = tg.dt();
    tr.T = tg.T;
    tr.states.resize(K + 1);
    if (source.kind == SourceTerm::Kind::BoundaryDirichlet) {
        tr.boundary_half = source.boundary;
        tr.boundary_levels = boundary_at_levels(source.boundary);
    }

    Eigen::VectorXd q = op.mass() * start.position;
    Eigen::VectorXd p = op.mass() * start.velocity;
    Eigen::VectorXd ubar, load;
    const int k0 = forward ? 0 : K;
    tr.states[k0] = start;
    for (int n = 0; n < K; ++n) {
        const int k = forward ? n : K - 1 - n;  // half-step index
        const Eigen::VectorXd* lp = nullptr;
        double g = 0.0;
        if (source.kind == SourceTerm::Kind::Distributed) {
            load = source.weights.cwiseProduct(source.values.row(k).transpose());
            lp = &load;
        } else if (source.kind == SourceTerm::Kind::BoundaryDirichlet) {
            g = source.boundary[k];
        }
        stepper.step(q, p, ubar, forward, lp, g);
        StatePair& s = tr.states[forward ? k + 1 : k];
        s.position = op.mass_factor().solve(q);
        s.velocity = op.mass_factor().solve(p);
    }
    return tr;
}

}  // namespace detail

inline Trajectory solve_forward(const DegenerateOperator& op, const StatePair& initial, const SourceTerm& source,
                                const TimeGrid& tg) {
    return detail::integrate(op, initial, source, tg, true);
}

/// dt must divide T.
inline Trajectory solve_forward(const DegenerateOperator& op, const StatePair& initial, const SourceTerm& source,
                                double T, double dt) {
    return solve_forward(op, initial, source, TimeGrid::exact(T, dt));
}

/// Integrates from zero data at t = T down to t = 0.
inline Trajectory solve_backward(const DegenerateOperator& op, const SourceTerm& source, const TimeGrid& tg) {
    return detail::integrate(op, StatePair::zero(op.dofs()), source, tg, false);
}

inline Trajectory solve_backward(const DegenerateOperator& op, const SourceTerm& source, double T, double dt) {
    return solve_backward(op, source, TimeGrid::exact(T, dt));
}

/// 1/2 (w^T M w + u^T K u).
inline double energy(const DegenerateOperator& op, const StatePair& s) {
    op.check_field(s.position, "position");
    op.check_field(s.velocity, "velocity");
    return 0.5 * (op.mass().quadratic(s.velocity, s.velocity) + op.stiffness().quadratic(s.position, s.position));
}

/// Position at t_{k+1/2}. For Dirichlet-driven runs the mass overlap with the
/// boundary node is removed so that this is the solution of the step's linear system.
inline Eigen::VectorXd half_step_position(const DegenerateOperator& op, const Trajectory& tr, int k) {
    Eigen::VectorXd u = 0.5 * (tr.states[k].position + tr.states[k + 1].position);
    if (tr.boundary_driven() && op.boundary_mass() != 0.0) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(op.dofs());
        e(op.dofs() - 1) = op.boundary_mass() * tr.boundary_half[k];
        u -= op.mass_factor().solve(e);
    }
    return u;
}

/// Discrete flux x^alpha u_x at x = 1 on each half step, for trajectories with
/// zero Dirichlet data. This is the trace that enters the discrete
/// integration-by-parts identity exactly.
inline std::vector<double> flux_trace(const DegenerateOperator& op, const Trajectory& tr) {
    const int last = op.dofs() - 1;
    const double kb = op.boundary_stiffness();
    const double mb = op.boundary_mass();
    std::vector<double> y(tr.steps());
    for (int k = 0; k < tr.steps(); ++k) {
        const double ubar = 0.5 * (tr.states[k].position(last) + tr.states[k + 1].position(last));
        const double acc = (tr.states[k + 1].velocity(last) - tr.states[k].velocity(last)) / tr.dt;
        y[k] = kb * ubar + mb * acc;
    }
    return y;
}

/// u_x(t_k, 1) by the one-sided second-order difference (3 u_N - 4 u_{N-1} + u_{N-2}) / (2h).
inline std::vector<double> boundary_trace(const DegenerateOperator& op, const Trajectory& tr) {
    const auto& g = op.grid();
    if (g.n_cells < 3) fail(ErrorCode::GridTooCoarse, "boundary trace needs N >= 3");
    const int n = op.dofs();
    std::vector<double> out(tr.states.size());
    for (std::size_t k = 0; k < tr.states.size(); ++k) {
        const auto& u = tr.states[k].position;
        const double uN = tr.boundary_driven() ? tr.boundary_levels[k] : 0.0;
        out[k] = (3.0 * uN - 4.0 * u(n - 1) + u(n - 2)) / (2.0 * g.h);
    }
    return out;
}

/// Time integral of a half-step series, sum dt * a_k * b_k.
inline double half_step_dot(const std::vector<double>& a, const std::vector<double>& b, double dt) {
    if (a.size() != b.size()) fail(ErrorCode::DimensionMismatch, "time series lengths differ");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return dt * s;
}

/// Trapezoidal time integral of a level series, sum over levels.
inline double level_dot(const std::vector<double>& a, const std::vector<double>& b, double dt) {
    if (a.size() != b.size()) fail(ErrorCode::DimensionMismatch, "time series lengths differ");
    if (a.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    s -= 0.5 * (a.front() * b.front() + a.back() * b.back());
    return dt * s;
}

}  // namespace dwc
