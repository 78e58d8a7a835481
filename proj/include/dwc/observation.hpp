#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dwc/control_window.hpp"
#include "dwc/error.hpp"
#include "dwc/wave_solver.hpp"
#include "dwc/weighted_discretization.hpp"

namespace dwc {

/// Which quadratic form of the free solution v is observed.
///   Distributed: sum dt * c_i * vbar_i^2 over the window (the integral of v^2 on Q_eps).
///   Boundary:    sum dt * y^2 with y the discrete flux at x = 1.
///   Velocity:    integral of v_t^2 over the whole domain.
enum class ObservationKind { Distributed, Boundary, Velocity };

/// Norm on initial data: L2 x H^{-1}_alpha ("F") or H^1_alpha x L2 ("Energy").
enum class DataNorm { L2Hneg1, Energy };

inline const char* to_string(ObservationKind k) {
    switch (k) {
        case ObservationKind::Distributed: return "distributed";
        case ObservationKind::Boundary: return "boundary";
        case ObservationKind::Velocity: return "velocity";
    }
    return "?";
}

inline DataNorm natural_norm(ObservationKind k) {
    return k == ObservationKind::Distributed ? DataNorm::L2Hneg1 : DataNorm::Energy;
}

/// Stacks (position, velocity) into one vector of length 2n.
inline Eigen::VectorXd stack(const StatePair& s) {
    Eigen::VectorXd v(s.position.size() + s.velocity.size());
    v << s.position, s.velocity;
    return v;
}

inline StatePair unstack(const Eigen::VectorXd& v) {
    const Eigen::Index n = v.size() / 2;
    return {v.head(n), v.tail(n)};
}

/// Observation Gramian on the 2n-dimensional space of initial data.
///
/// apply(p) returns the dual vector A p with q^T A p equal to the observed form
/// of the pair (q, p). It costs one forward and one backward solve.
class Gramian {
public:
    Gramian(const DegenerateOperator& op, ObservationKind kind, std::optional<ControlWindow> window,
            const TimeGrid& tg, std::optional<DataNorm> norm = std::nullopt)
        : op_(&op),
          kind_(kind),
          tg_(tg),
          norm_(norm.value_or(natural_norm(kind))),
          stepper_(op, tg.dt()),
          energy_factor_(SymTridiagonal::combine(1.0, op.mass(), 1.0, op.stiffness())) {
        if (kind == ObservationKind::Distributed) {
            if (!window) fail(ErrorCode::WindowMismatch, "distributed observation needs a window");
            if (window->weights().size() != op.dofs())
                fail(ErrorCode::WindowMismatch, "window built for a different operator");
            weights_ = window->weights();
            epsilon_ = window->epsilon();
        } else if (kind == ObservationKind::Velocity) {
            weights_ = op.lumped_weights();
            epsilon_ = 1.0;
        }
    }

    const DegenerateOperator& op() const { return *op_; }
    ObservationKind kind() const { return kind_; }
    DataNorm norm() const { return norm_; }
    const TimeGrid& time_grid() const { return tg_; }
    /// Window weights (whole-domain lumped weights for Velocity); empty for Boundary.
    const Eigen::VectorXd& weights() const { return weights_; }
    double epsilon() const { return epsilon_; }
    int size() const { return 2 * op_->dofs(); }

    /// Half-step positions of the free solution from data p, one row per step.
    Block free_half_steps(const Eigen::VectorXd& p) const {
        const int n = op_->dofs();
        Eigen::VectorXd q = op_->mass() * p.head(n);
        Eigen::VectorXd m = op_->mass() * p.tail(n);
        Eigen::VectorXd ubar;
        Block out(tg_.steps, n);
        for (int k = 0; k < tg_.steps; ++k) {
            stepper_.step(q, m, ubar, true, nullptr, 0.0);
            out.row(k) = ubar.transpose();
        }
        return out;
    }

    /// Flux trace of the free solution from data p at every half step.
    std::vector<double> free_flux(const Eigen::VectorXd& p) const {
        const int n = op_->dofs();
        const int last = n - 1;
        const double kb = op_->boundary_stiffness(), mb = op_->boundary_mass();
        Eigen::VectorXd q = op_->mass() * p.head(n);
        Eigen::VectorXd m = op_->mass() * p.tail(n);
        Eigen::VectorXd ubar, acc;
        std::vector<double> y(tg_.steps);
        for (int k = 0; k < tg_.steps; ++k) {
            const Eigen::VectorXd m_old = m;
            stepper_.step(q, m, ubar, true, nullptr, 0.0);
            double a = 0.0;
            if (mb != 0.0) {
                acc = op_->mass_factor().solve(m - m_old);
                a = acc(last) / tg_.dt();
            }
            y[k] = kb * ubar(last) + mb * a;
        }
        return y;
    }

    /// Observed form of (p, q) computed directly from the two free solutions.
    double form(const Eigen::VectorXd& p, const Eigen::VectorXd& q) const {
        check(p);
        check(q);
        const double dt = tg_.dt();
        switch (kind_) {
            case ObservationKind::Boundary: return half_step_dot(free_flux(p), free_flux(q), dt);
            case ObservationKind::Distributed: {
                const Block a = free_half_steps(p), b = free_half_steps(q);
                return dt * (a.cwiseProduct(b) * weights_).sum();
            }
            case ObservationKind::Velocity: {
                const Eigen::VectorXd jp = apply_j(p), jq = apply_j(q);
                const Block a = free_half_steps(jp), b = free_half_steps(jq);
                return dt * (a.cwiseProduct(b) * weights_).sum();
            }
        }
        return 0.0;
    }

    /// A p through the adjoint route: free solve, then backward solve driven by the observation.
    Eigen::VectorXd apply(const Eigen::VectorXd& p) const {
        check(p);
        if (kind_ == ObservationKind::Velocity) return apply_jt(apply_windowed(apply_j(p)));
        if (kind_ == ObservationKind::Distributed) return apply_windowed(p);
        return apply_boundary(p);
    }

    /// Backward solve with a distributed load weights .* g; returns (-p_u(0), q_u(0)).
    Eigen::VectorXd backward_distributed(const Block& g) const {
        const int n = op_->dofs();
        Eigen::VectorXd q = Eigen::VectorXd::Zero(n), m = Eigen::VectorXd::Zero(n), ubar, load;
        for (int k = tg_.steps - 1; k >= 0; --k) {
            load = weights_.cwiseProduct(g.row(k).transpose());
            stepper_.step(q, m, ubar, false, &load, 0.0);
        }
        Eigen::VectorXd out(2 * n);
        out << -m, q;
        return out;
    }

    /// Backward solve with Dirichlet data h at x = 1; returns (-p_u(0), q_u(0)).
    Eigen::VectorXd backward_boundary(const std::vector<double>& h) const {
        const int n = op_->dofs();
        Eigen::VectorXd q = Eigen::VectorXd::Zero(n), m = Eigen::VectorXd::Zero(n), ubar;
        for (int k = tg_.steps - 1; k >= 0; --k) stepper_.step(q, m, ubar, false, nullptr, h[k]);
        Eigen::VectorXd out(2 * n);
        out << -m, q;
        return out;
    }

    /// Data-norm Gram matrix G applied to p.
    Eigen::VectorXd apply_norm(const Eigen::VectorXd& p) const {
        const int n = op_->dofs();
        Eigen::VectorXd out(2 * n);
        if (norm_ == DataNorm::L2Hneg1) {
            out.head(n) = op_->mass() * p.head(n);
            out.tail(n) = op_->mass() * op_->stiffness_factor().solve(op_->mass() * p.tail(n));
        } else {
            out.head(n) = op_->mass() * p.head(n) + op_->stiffness() * p.head(n);
            out.tail(n) = op_->mass() * p.tail(n);
        }
        return out;
    }

    /// G^{-1} r.
    Eigen::VectorXd apply_norm_inverse(const Eigen::VectorXd& r) const {
        const int n = op_->dofs();
        Eigen::VectorXd out(2 * n);
        if (norm_ == DataNorm::L2Hneg1) {
            out.head(n) = op_->mass_factor().solve(r.head(n));
            out.tail(n) = op_->mass_factor().solve(op_->stiffness() * op_->mass_factor().solve(r.tail(n)));
        } else {
            out.head(n) = energy_factor_.solve(r.head(n));
            out.tail(n) = op_->mass_factor().solve(r.tail(n));
        }
        return out;
    }

    double norm_squared(const Eigen::VectorXd& p) const { return p.dot(apply_norm(p)); }

    /// Dense G.
    Eigen::MatrixXd dense_norm() const {
        const int n = op_->dofs();
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(2 * n, 2 * n);
        const Eigen::MatrixXd M = op_->mass().to_dense();
        const Eigen::MatrixXd K = op_->stiffness().to_dense();
        if (norm_ == DataNorm::L2Hneg1) {
            G.topLeftCorner(n, n) = M;
            G.bottomRightCorner(n, n) = M * K.llt().solve(M);
        } else {
            G.topLeftCorner(n, n) = M + K;
            G.bottomRightCorner(n, n) = M;
        }
        return 0.5 * (G + G.transpose());
    }

    /// Dense A by stepping all 2n unit data together and summing the observed
    /// outer products. Shares no code path with apply().
    Eigen::MatrixXd dense() const {
        const int n = op_->dofs();
        const int m = 2 * n;
        const double dt = tg_.dt();
        // lockstep in (u, w) variables; columns are the unit data
        Block U = Block::Zero(n, m), W = Block::Zero(n, m);
        for (int i = 0; i < n; ++i) {
            U(i, i) = 1.0;
            W(i, n + i) = 1.0;
        }
        if (kind_ == ObservationKind::Velocity) {
            // the velocity of the free solution is the free solution of (w0, -M^{-1} K u0)
            Block Ku;
            op_->stiffness().multiply(U, Ku);
            op_->mass_factor().solve_in_place(Ku);
            Block U2 = W;
            W = -Ku;
            U = std::move(U2);
        }
        TridiagonalLdl S(SymTridiagonal::combine(1.0, op_->mass(), 0.25 * dt * dt, op_->stiffness()));
        const int first = kind_ == ObservationKind::Boundary ? n - 1 : first_weighted();
        const int rows = n - first;
        Eigen::VectorXd sw(rows);
        if (kind_ != ObservationKind::Boundary)
            for (int r = 0; r < rows; ++r) sw(r) = std::sqrt(weights_(first + r));

        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
        Block rhs, ubar, tmp, Unew, Wnew, acc;
        Eigen::MatrixXd obs;
        const int last = n - 1;
        const double kb = op_->boundary_stiffness(), mb = op_->boundary_mass();
        for (int k = 0; k < tg_.steps; ++k) {
            tmp = U + (0.5 * dt) * W;
            op_->mass().multiply(tmp, rhs);
            ubar = rhs;
            S.solve_in_place(ubar);
            Unew = 2.0 * ubar - U;
            Wnew = (2.0 / dt) * (Unew - U) - W;
            if (kind_ == ObservationKind::Boundary) {
                obs = kb * ubar.row(last);
                if (mb != 0.0) obs += (mb / dt) * (Wnew.row(last) - W.row(last));
            } else {
                obs = sw.asDiagonal() * ubar.bottomRows(rows);
            }
            A.selfadjointView<Eigen::Lower>().rankUpdate(obs.transpose(), dt);
            U.swap(Unew);
            W.swap(Wnew);
        }
        A.triangularView<Eigen::StrictlyUpper>() = A.transpose();
        return A;
    }

private:
    void check(const Eigen::VectorXd& p) const {
        if (p.size() != size()) fail(ErrorCode::DimensionMismatch, "data vector must have 2n entries");
    }

    int first_weighted() const {
        for (int d = 0; d < weights_.size(); ++d)
            if (weights_(d) > 0.0) return d;
        return static_cast<int>(weights_.size());
    }

    Eigen::VectorXd apply_windowed(const Eigen::VectorXd& p) const {
        return backward_distributed(free_half_steps(p));
    }

    Eigen::VectorXd apply_boundary(const Eigen::VectorXd& p) const {
        std::vector<double> y = free_flux(p);
        for (double& v : y) v = -v;
        return backward_boundary(y);
    }

    /// (u0, w0) -> (w0, -M^{-1} K u0)
    Eigen::VectorXd apply_j(const Eigen::VectorXd& p) const {
        const int n = op_->dofs();
        Eigen::VectorXd out(2 * n);
        out.head(n) = p.tail(n);
        out.tail(n) = -op_->mass_factor().solve(op_->stiffness() * p.head(n));
        return out;
    }

    /// transpose of apply_j: (r0, r1) -> (-K M^{-1} r1, r0)
    Eigen::VectorXd apply_jt(const Eigen::VectorXd& r) const {
        const int n = op_->dofs();
        Eigen::VectorXd out(2 * n);
        out.head(n) = -(op_->stiffness() * op_->mass_factor().solve(r.tail(n)));
        out.tail(n) = r.head(n);
        return out;
    }

    const DegenerateOperator* op_;
    ObservationKind kind_;
    TimeGrid tg_;
    DataNorm norm_;
    WaveStepper stepper_;
    TridiagonalLdl energy_factor_;
    Eigen::VectorXd weights_;
    double epsilon_ = 0.0;
};

}  // namespace dwc
