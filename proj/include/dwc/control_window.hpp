#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <string>

#include "dwc/error.hpp"
#include "dwc/weighted_discretization.hpp"

namespace dwc {

/// Quadrature restriction to (1 - eps, 1).
///
/// Node i gets the length of its dual cell [x_i - h/2, x_i + h/2] cut to
/// [0, 1] and to the window, so eps need not be a multiple of h.
class ControlWindow {
public:
    ControlWindow(const DegenerateOperator& op, double epsilon) : epsilon_(epsilon) {
        if (!(epsilon > 0.0 && epsilon <= 1.0))
            fail(ErrorCode::InvalidArgument, "window epsilon must lie in (0, 1], got " + std::to_string(epsilon));
        const auto& g = op.grid();
        const double lo = 1.0 - epsilon;
        nodes_.resize(g.n_cells + 1);
        for (int i = 0; i <= g.n_cells; ++i) {
            const double a = std::max({g.x(i) - 0.5 * g.h, 0.0, lo});
            const double b = std::min(g.x(i) + 0.5 * g.h, 1.0);
            nodes_(i) = std::max(0.0, b - a);
        }
        dofs_.resize(op.dofs());
        for (int d = 0; d < op.dofs(); ++d) dofs_(d) = nodes_(g.node_of(d));
        first_dof_ = op.dofs();
        for (int d = 0; d < op.dofs(); ++d)
            if (dofs_(d) > 0.0) {
                first_dof_ = d;
                break;
            }
    }

    double epsilon() const { return epsilon_; }
    /// Weights on all nodes 0..N; they sum to epsilon.
    const Eigen::VectorXd& node_weights() const { return nodes_; }
    /// Weights on the active dofs.
    const Eigen::VectorXd& weights() const { return dofs_; }
    /// First active dof with a nonzero weight; weights vanish below it.
    int first_dof() const { return first_dof_; }
    double total() const { return nodes_.sum(); }

private:
    double epsilon_;
    Eigen::VectorXd nodes_;
    Eigen::VectorXd dofs_;
    int first_dof_ = 0;
};

}  // namespace dwc
