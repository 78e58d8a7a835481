#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "dwc/error.hpp"
#include "dwc/tridiagonal.hpp"

namespace dwc {

enum class Regime { Weak, Strong };

/// How the time-derivative (mass) term is integrated over each cell.
///   Lumped:   diagonal, m_i = h inside and h/2 at the ends.
///   Midpoint: cell values taken at the cell midpoint, giving (h/4) tridiag(1,2,1).
/// Norms that the rest of the library calls "L2" use this matrix.
enum class MassQuadrature { Lumped, Midpoint };

inline const char* to_string(Regime r) { return r == Regime::Weak ? "weak" : "strong"; }
inline const char* to_string(MassQuadrature q) { return q == MassQuadrature::Lumped ? "lumped" : "midpoint"; }

/// Regime used when the caller does not say: Weak iff alpha < 1.
inline Regime default_regime(double alpha) { return alpha < 1.0 ? Regime::Weak : Regime::Strong; }

/// Uniform grid on [0, 1] with N cells.
struct SpatialGrid {
    int n_cells = 0;
    double h = 0.0;
    Regime regime = Regime::Weak;

    double x(int node) const { return node * h; }

    /// First active node: 1 (Weak, Dirichlet at 0) or 0 (Strong, flux closure at 0).
    int first_node() const { return regime == Regime::Weak ? 1 : 0; }
    int dof_count() const { return n_cells - first_node(); }
    int node_of(int dof) const { return dof + first_node(); }

    /// Lumped quadrature weight of node i in 0..N.
    double cell_weight(int node) const { return (node == 0 || node == n_cells) ? 0.5 * h : h; }
};

/// Discrete -(x^alpha u_x)_x on the active dofs, with mass matrix and factorizations.
///
/// Stiffness K is the energy form: u^T K u approximates the integral of x^alpha u_x^2,
/// so K = diag(weights) * A with A the strong-form (1/h^2-scaled) stencil.
/// The last active dof couples to the Dirichlet node x = 1 through
/// boundary_stiffness() in K and boundary_mass() in M.
class DegenerateOperator {
public:
    double alpha() const { return alpha_; }
    Regime regime() const { return grid_.regime; }
    const SpatialGrid& grid() const { return grid_; }
    int dofs() const { return grid_.dof_count(); }
    MassQuadrature mass_quadrature() const { return quadrature_; }

    /// a_{i+1/2} for i = 0..N-1.
    const Eigen::VectorXd& face_coeffs() const { return faces_; }
    const SymTridiagonal& stiffness() const { return stiffness_; }
    const SymTridiagonal& mass() const { return mass_; }
    /// Lumped node weights m_i restricted to the active dofs.
    const Eigen::VectorXd& lumped_weights() const { return lumped_; }

    /// K coupling between the last dof and the node x = 1.
    double boundary_stiffness() const { return -faces_(grid_.n_cells - 1) / grid_.h; }
    /// M coupling between the last dof and the node x = 1 (zero when lumped).
    double boundary_mass() const { return quadrature_ == MassQuadrature::Lumped ? 0.0 : 0.25 * grid_.h; }

    const TridiagonalLdl& stiffness_factor() const { return stiffness_ldl_; }
    const TridiagonalLdl& mass_factor() const { return mass_ldl_; }

    /// Node coordinates of the active dofs.
    Eigen::VectorXd dof_coordinates() const {
        Eigen::VectorXd xs(dofs());
        for (int d = 0; d < dofs(); ++d) xs(d) = grid_.x(grid_.node_of(d));
        return xs;
    }

    /// Samples f at the active dofs.
    template <class F>
    Eigen::VectorXd sample(F&& f) const {
        Eigen::VectorXd v(dofs());
        for (int d = 0; d < dofs(); ++d) v(d) = f(grid_.x(grid_.node_of(d)));
        return v;
    }

    void check_field(const Eigen::VectorXd& f, const char* what = "field") const {
        if (f.size() != dofs())
            fail(ErrorCode::DimensionMismatch, std::string(what) + " has " + std::to_string(f.size()) +
                                                   " entries, operator has " + std::to_string(dofs()) + " dofs");
    }

    /// No range checks; use build_operator or build_laplacian_fixture.
    static DegenerateOperator assemble(double alpha, Regime regime, int n_cells, MassQuadrature q);

private:
    double alpha_ = 0.0;
    SpatialGrid grid_;
    MassQuadrature quadrature_ = MassQuadrature::Midpoint;
    Eigen::VectorXd faces_;
    Eigen::VectorXd lumped_;
    SymTridiagonal stiffness_;
    SymTridiagonal mass_;
    TridiagonalLdl stiffness_ldl_;
    TridiagonalLdl mass_ldl_;
};

inline constexpr MassQuadrature kDefaultMass = MassQuadrature::Midpoint;

inline DegenerateOperator DegenerateOperator::assemble(double alpha, Regime regime, int n_cells, MassQuadrature q) {
    DegenerateOperator op;
    op.alpha_ = alpha;
    op.quadrature_ = q;
    op.grid_ = SpatialGrid{n_cells, 1.0 / n_cells, regime};
    const double h = op.grid_.h;

    op.faces_.resize(n_cells);
    for (int i = 0; i < n_cells; ++i) op.faces_(i) = alpha == 0.0 ? 1.0 : std::pow((i + 0.5) * h, alpha);

    const int n = op.dofs();
    Eigen::VectorXd kd(n), ko(n - 1), md(n), mo(n - 1);
    op.lumped_.resize(n);
    for (int d = 0; d < n; ++d) {
        const int i = op.grid_.node_of(d);
        const double left = i == 0 ? 0.0 : op.faces_(i - 1);
        kd(d) = (left + op.faces_(i)) / h;
        if (d + 1 < n) ko(d) = -op.faces_(i) / h;
        op.lumped_(d) = op.grid_.cell_weight(i);
        if (q == MassQuadrature::Lumped) {
            md(d) = op.lumped_(d);
            if (d + 1 < n) mo(d) = 0.0;
        } else {
            md(d) = i == 0 ? 0.25 * h : 0.5 * h;
            if (d + 1 < n) mo(d) = 0.25 * h;
        }
    }
    op.stiffness_ = SymTridiagonal(std::move(kd), std::move(ko));
    op.mass_ = SymTridiagonal(std::move(md), std::move(mo));
    op.stiffness_ldl_ = TridiagonalLdl(op.stiffness_);
    op.mass_ldl_ = TridiagonalLdl(op.mass_);
    return op;
}

/// Degenerate operator for alpha in (0,1) (Weak) or [1,2) (Strong) on N >= 4 cells.
inline DegenerateOperator build_operator(double alpha, Regime regime, int n_cells,
                                         MassQuadrature q = kDefaultMass) {
    const bool ok = regime == Regime::Weak ? (alpha > 0.0 && alpha < 1.0) : (alpha >= 1.0 && alpha < 2.0);
    if (!ok || !std::isfinite(alpha))
        fail(ErrorCode::RegimeMismatch, "alpha=" + std::to_string(alpha) + " not admissible for " +
                                            to_string(regime) + " regime");
    if (n_cells < 4) fail(ErrorCode::GridTooCoarse, "n_cells=" + std::to_string(n_cells) + " < 4");
    return DegenerateOperator::assemble(alpha, regime, n_cells, q);
}

/// alpha = 0 test fixture: the classical Dirichlet Laplacian, Weak closure.
inline DegenerateOperator build_laplacian_fixture(int n_cells, MassQuadrature q = kDefaultMass) {
    if (n_cells < 4) fail(ErrorCode::GridTooCoarse, "n_cells=" + std::to_string(n_cells) + " < 4");
    return DegenerateOperator::assemble(0.0, Regime::Weak, n_cells, q);
}

/// Strong-form operator A f = diag(lumped)^{-1} K f, i.e. -(x^alpha f_x)_x at the nodes.
inline Eigen::VectorXd apply_stiffness(const DegenerateOperator& op, const Eigen::VectorXd& f) {
    op.check_field(f);
    Eigen::VectorXd y = op.stiffness() * f;
    return y.cwiseQuotient(op.lumped_weights());
}

/// Energy form f^T K g.
inline double stiffness_form(const DegenerateOperator& op, const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
    op.check_field(f);
    op.check_field(g);
    return op.stiffness().quadratic(f, g);
}

inline double inner_l2(const DegenerateOperator& op, const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
    op.check_field(f);
    op.check_field(g);
    return op.mass().quadratic(f, g);
}

inline double norm_l2(const DegenerateOperator& op, const Eigen::VectorXd& f) {
    return std::sqrt(std::max(0.0, inner_l2(op, f, f)));
}

inline double norm_h1a(const DegenerateOperator& op, const Eigen::VectorXd& f) {
    op.check_field(f);
    return std::sqrt(std::max(0.0, op.mass().quadratic(f, f) + op.stiffness().quadratic(f, f)));
}

/// Riesz representative: solves K u = M f.
inline Eigen::VectorXd riesz_hneg1(const DegenerateOperator& op, const Eigen::VectorXd& f) {
    op.check_field(f);
    return op.stiffness_factor().solve(op.mass() * f);
}

inline double norm_hneg1(const DegenerateOperator& op, const Eigen::VectorXd& f) {
    op.check_field(f);
    const Eigen::VectorXd mf = op.mass() * f;
    const Eigen::VectorXd u = op.stiffness_factor().solve(mf);
    return std::sqrt(std::max(0.0, u.dot(mf)));
}

/// Discrete Hardy quotient sum m_i x_i^{alpha-2} f_i^2 / f^T K f, with x_0 replaced by h/2.
inline double hardy_quotient(const DegenerateOperator& op, const Eigen::VectorXd& f) {
    op.check_field(f);
    if (op.alpha() == 1.0) fail(ErrorCode::AlphaOne, "Hardy inequality excludes alpha = 1");
    const double energy = op.stiffness().quadratic(f, f);
    if (!(energy > 0.0)) fail(ErrorCode::ZeroField, "f^T K f = 0");
    const auto& g = op.grid();
    double num = 0.0;
    for (int d = 0; d < op.dofs(); ++d) {
        const double x = std::max(g.x(g.node_of(d)), 0.5 * g.h);
        num += op.lumped_weights()(d) * std::pow(x, op.alpha() - 2.0) * f(d) * f(d);
    }
    return num / energy;
}

/// Continuum Hardy constant 4/(1-alpha)^2.
inline double hardy_bound(double alpha) {
    if (alpha == 1.0) fail(ErrorCode::AlphaOne, "Hardy inequality excludes alpha = 1");
    return 4.0 / ((1.0 - alpha) * (1.0 - alpha));
}

/// Minimal control time 4/(2 - alpha).
inline double minimal_time(double alpha) {
    if (!(alpha >= 0.0 && alpha < 2.0)) fail(ErrorCode::InvalidArgument, "alpha must lie in [0, 2)");
    return 4.0 / (2.0 - alpha);
}

}  // namespace dwc
