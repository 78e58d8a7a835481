#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "dwc/control_window.hpp"
#include "dwc/error.hpp"
#include "dwc/hum_control.hpp"
#include "dwc/limit_analysis.hpp"
#include "dwc/observability_lab.hpp"
#include "dwc/wave_solver.hpp"
#include "dwc/weighted_discretization.hpp"

namespace dwc {

struct SelfCheck {
    std::string module;
    std::string name;
    bool ok = false;
    std::string detail;
};

namespace detail {

inline bool throws_code(const std::function<void()>& f, ErrorCode code) {
    try {
        f();
    } catch (const Error& e) {
        return e.code() == code;
    }
    return false;
}

}  // namespace detail

/// Cheap structural checks of every module (zero data, exact constants, error paths).
inline std::vector<SelfCheck> run_selftest() {
    std::vector<SelfCheck> out;
    auto add = [&](const char* module, const char* name, const std::function<bool()>& f) {
        SelfCheck c{module, name, false, ""};
        try {
            c.ok = f();
        } catch (const std::exception& e) {
            c.detail = e.what();
        }
        out.push_back(std::move(c));
    };

    add("weighted_discretization", "first face coefficient at alpha=0.5, N=4", [] {
        const auto op = build_operator(0.5, Regime::Weak, 4);
        return std::abs(op.face_coeffs()(0) - 0.3535533906) < 1e-10;
    });
    add("weighted_discretization", "alpha=0 fixture has unit faces", [] {
        const auto op = build_laplacian_fixture(16);
        return (op.face_coeffs().array() == 1.0).all();
    });
    add("weighted_discretization", "node weights sum to one", [] {
        const SpatialGrid g{40, 1.0 / 40, Regime::Strong};
        double s = 0.0;
        for (int i = 0; i <= g.n_cells; ++i) s += g.cell_weight(i);
        return std::abs(s - 1.0) < 1e-14;
    });
    add("weighted_discretization", "dof counts", [] {
        return build_operator(0.5, Regime::Weak, 10).dofs() == 9 && build_operator(1.5, Regime::Strong, 10).dofs() == 10;
    });
    add("weighted_discretization", "norms of zero field vanish", [] {
        const auto op = build_operator(0.7, Regime::Weak, 12);
        const Eigen::VectorXd z = Eigen::VectorXd::Zero(op.dofs());
        return norm_l2(op, z) == 0.0 && norm_h1a(op, z) == 0.0 && norm_hneg1(op, z) == 0.0;
    });
    add("weighted_discretization", "regime and grid errors", [] {
        return detail::throws_code([] { build_operator(1.2, Regime::Weak, 10); }, ErrorCode::RegimeMismatch) &&
               detail::throws_code([] { build_operator(0.5, Regime::Strong, 10); }, ErrorCode::RegimeMismatch) &&
               detail::throws_code([] { build_operator(0.5, Regime::Weak, 3); }, ErrorCode::GridTooCoarse);
    });
    add("weighted_discretization", "hardy errors", [] {
        const auto op1 = build_operator(1.0, Regime::Strong, 10);
        const auto op = build_operator(0.5, Regime::Weak, 10);
        return detail::throws_code([&] { hardy_quotient(op1, Eigen::VectorXd::Ones(op1.dofs())); },
                                   ErrorCode::AlphaOne) &&
               detail::throws_code([&] { hardy_quotient(op, Eigen::VectorXd::Zero(op.dofs())); }, ErrorCode::ZeroField);
    });

    add("wave_solver", "zero data stays zero", [] {
        const auto op = build_operator(0.5, Regime::Weak, 16);
        const auto tr = solve_forward(op, StatePair::zero(op.dofs()), SourceTerm::none(), TimeGrid::exact(1.0, 0.125));
        for (const auto& s : tr.states)
            if (!s.is_zero()) return false;
        return true;
    });
    add("wave_solver", "backward solve without source is zero", [] {
        const auto op = build_operator(1.5, Regime::Strong, 16);
        const auto tr = solve_backward(op, SourceTerm::none(), TimeGrid::exact(1.0, 0.125));
        return tr.initial().is_zero();
    });
    add("wave_solver", "energy and trace of zero state", [] {
        const auto op = build_operator(0.5, Regime::Weak, 16);
        const auto tr = solve_forward(op, StatePair::zero(op.dofs()), SourceTerm::none(), TimeGrid::exact(0.5, 0.125));
        for (double v : boundary_trace(op, tr))
            if (v != 0.0) return false;
        return energy(op, StatePair::zero(op.dofs())) == 0.0;
    });
    add("wave_solver", "step errors", [] {
        return detail::throws_code([] { TimeGrid::exact(1.0, 0.0); }, ErrorCode::NonPositiveStep) &&
               detail::throws_code([] { TimeGrid::exact(1.0, 0.3); }, ErrorCode::InvalidArgument);
    });

    add("hum_control", "zero target gives zero control", [] {
        const auto op = build_operator(0.5, Regime::Weak, 12);
        const ControlWindow w(op, 0.3);
        const auto sol = solve_hum_distributed(op, w, StatePair::zero(op.dofs()), TimeGrid::exact(3.2, 0.04));
        return sol.control.values.isZero(0.0) && sol.cg_iterations == 0;
    });
    add("hum_control", "Lambda of zero is zero", [] {
        const auto op = build_operator(0.5, Regime::Weak, 12);
        return apply_lambda(op, ControlWindow(op, 0.3), StatePair::zero(op.dofs()), TimeGrid::exact(1.0, 0.05))
            .is_zero();
    });
    add("hum_control", "window weights sum to eps", [] {
        const auto op = build_operator(0.5, Regime::Weak, 30);
        const ControlWindow w(op, 0.237);
        return std::abs(w.total() - 0.237) < 1e-12;
    });

    add("observability_lab", "minimal times", [] {
        return minimal_time(0.0) == 2.0 && minimal_time(1.5) == 8.0 && minimal_time(1.0) == 4.0;
    });
    add("observability_lab", "sweep needs three samples", [] {
        const auto op = build_operator(0.5, Regime::Weak, 8);
        return detail::throws_code(
            [&] { epsilon_sweep(op, TimeGrid::exact(1.0, 0.1), {0.3}, Method::DenseOracle); },
            ErrorCode::TooFewSamples);
    });

    add("limit_analysis", "zero adjoint gives zero boundary control", [] {
        const auto op = build_operator(0.5, Regime::Weak, 12);
        const auto phi = solve_forward(op, StatePair::zero(op.dofs()), SourceTerm::none(), TimeGrid::exact(1.0, 0.1));
        for (double v : extract_boundary_control(op, ControlWindow(op, 0.2), phi))
            if (v != 0.0) return false;
        return true;
    });
    return out;
}

}  // namespace dwc
