#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dwc/control_window.hpp"
#include "dwc/error.hpp"
#include "dwc/hum_control.hpp"
#include "dwc/io.hpp"
#include "dwc/limit_analysis.hpp"
#include "dwc/observability_lab.hpp"
#include "dwc/selftest.hpp"
#include "dwc/version.hpp"
#include "dwc/wave_solver.hpp"
#include "dwc/weighted_discretization.hpp"

namespace dwc {

inline const std::vector<std::string>& experiment_commands() {
    static const std::vector<std::string> c = {"solve",      "hum",   "hum-boundary", "observability",
                                               "sweep-eps",  "sweep-time", "limit",   "selftest"};
    return c;
}

/// String-valued fields accept "auto".
struct ExperimentConfig {
    double alpha = 0.5;
    std::string regime = "auto";
    int n_cells = 100;
    std::string T = "auto";
    std::string dt = "auto";
    double epsilon = 0.3;
    std::vector<double> epsilons = {0.4, 0.3, 0.2, 0.15, 0.1};
    /// Horizons for sweep-time as multiples of T_alpha.
    std::vector<double> time_factors = {0.5, 1.0, 1.5};
    /// distributed | boundary
    std::string kind = "boundary";
    /// auto | dense | cg | modal
    std::string method = "auto";
    /// sine | bump | mode
    std::string target = "sine";
    double tol = 1e-8;
    std::uint64_t seed = 2024;
    std::string output_dir;
    bool plot = false;
    /// Keep every stride-th time level in trajectory output.
    int stride = 1;
};

struct ResolvedConfig {
    Regime regime = Regime::Weak;
    double T = 0.0;
    TimeGrid grid;
    std::filesystem::path out;
};

inline double parse_auto(const std::string& s, double fallback, const char* what) {
    if (s == "auto") return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail(ErrorCode::ConfigParse, std::string(what) + " must be a number or \"auto\", got \"" + s + "\"");
    }
}

inline std::filesystem::path default_output_dir() {
    if (const char* env = std::getenv("DWC_OUTPUT_DIR"); env && *env) return env;
    return "dwc_out";
}

inline ResolvedConfig resolve(const ExperimentConfig& cfg) {
    ResolvedConfig r;
    if (cfg.regime == "auto") r.regime = default_regime(cfg.alpha);
    else if (cfg.regime == "weak") r.regime = Regime::Weak;
    else if (cfg.regime == "strong") r.regime = Regime::Strong;
    else fail(ErrorCode::ConfigParse, "regime must be weak, strong or auto, got \"" + cfg.regime + "\"");
    if (cfg.n_cells < 1) fail(ErrorCode::ConfigParse, "N must be positive");
    if (cfg.stride < 1) fail(ErrorCode::ConfigParse, "stride must be positive");
    r.T = parse_auto(cfg.T, 1.6 * minimal_time(cfg.alpha), "T");
    const double dt = parse_auto(cfg.dt, 0.5 / cfg.n_cells, "dt");
    r.grid = TimeGrid::covering(r.T, dt);
    r.out = cfg.output_dir.empty() ? default_output_dir() : std::filesystem::path(cfg.output_dir);
    return r;
}

/// 1 for configuration errors, 2 for numerical failures.
inline int exit_code_for(ErrorCode c) {
    switch (c) {
        case ErrorCode::SolveFailure:
        case ErrorCode::NoConvergence:
        case ErrorCode::ZeroField:
        case ErrorCode::ZeroTarget: return 2;
        default: return 1;
    }
}

inline StatePair make_target(const DegenerateOperator& op, const std::string& kind) {
    const double pi = std::acos(-1.0);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(op.dofs());
    if (kind == "sine") return {op.sample([&](double x) { return std::sin(pi * x); }), zero};
    if (kind == "bump")
        return {op.sample([](double x) {
                    const double z = (x - 0.5) / 0.3;
                    return std::abs(z) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - z * z)) : 0.0;
                }),
                zero};
    if (kind == "mode") {
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(op.stiffness().to_dense(), op.mass().to_dense());
        Eigen::VectorXd v = es.eigenvectors().col(0);
        v /= norm_l2(op, v);
        if (v.sum() < 0.0) v = -v;
        return {v, zero};
    }
    fail(ErrorCode::ConfigParse, "target must be sine, bump or mode, got \"" + kind + "\"");
}

inline Method resolve_method(const std::string& m, int dofs, bool below_minimal_time) {
    if (m == "dense") return Method::DenseOracle;
    if (m == "cg") return Method::InversePowerCG;
    if (m == "modal") return Method::Modal;
    if (m != "auto") fail(ErrorCode::ConfigParse, "method must be auto, dense, cg or modal, got \"" + m + "\"");
    if (below_minimal_time) return Method::Modal;
    return dofs <= kDenseDofCap ? Method::DenseOracle : Method::InversePowerCG;
}

struct RunOutcome {
    int status = 0;
    std::vector<std::string> artifacts;
};

namespace detail {

inline std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + io::fmt_short(v[i]);
    return s;
}

class Run {
public:
    Run(std::string command, const ExperimentConfig& cfg, const ResolvedConfig& rc, const DegenerateOperator& op,
        std::optional<double> eps)
        : command_(std::move(command)), rc_(rc) {
        meta_ = {{"command", command_},
                 {"version", kVersion},
                 {"alpha", io::fmt_short(cfg.alpha)},
                 {"regime", to_string(rc.regime)},
                 {"regime_input", cfg.regime},
                 {"N", std::to_string(cfg.n_cells)},
                 {"dt", io::fmt(rc.grid.dt())},
                 {"dt_input", cfg.dt},
                 {"T", io::fmt(rc.grid.T)},
                 {"T_input", cfg.T},
                 {"steps", std::to_string(rc.grid.steps)},
                 {"epsilon", eps ? io::fmt_short(*eps) : std::string("none")},
                 {"tol", io::fmt_short(cfg.tol)},
                 {"seed", std::to_string(cfg.seed)},
                 {"mass", to_string(op.mass_quadrature())},
                 {"target", cfg.target}};
    }

    io::Meta meta(const io::Meta& extra = {}) const {
        io::Meta m = meta_;
        m.insert(m.end(), extra.begin(), extra.end());
        return m;
    }

    std::filesystem::path file(const std::string& name) {
        artifacts_.push_back(name);
        return rc_.out / name;
    }

    RunOutcome finish(const io::Meta& results) {
        io::Meta m = meta_;
        m.insert(m.end(), results.begin(), results.end());
        const std::string name = command_ + "_manifest.txt";
        io::write_manifest(rc_.out / name, m, artifacts_);
        artifacts_.push_back(name);
        return {0, artifacts_};
    }

private:
    std::string command_;
    ResolvedConfig rc_;
    io::Meta meta_;
    std::vector<std::string> artifacts_;
};

}  // namespace detail

/// Runs one command; module errors propagate as dwc::Error.
inline RunOutcome run_command(const std::string& command, const ExperimentConfig& cfg, std::ostream& log) {
    bool known = false;
    for (const auto& c : experiment_commands()) known = known || c == command;
    if (!known) fail(ErrorCode::UnknownCommand, "unknown command \"" + command + "\"");

    if (command == "selftest") {
        int bad = 0;
        for (const auto& c : run_selftest()) {
            log << (c.ok ? "ok   " : "FAIL ") << c.module << ": " << c.name;
            if (!c.detail.empty()) log << " (" << c.detail << ")";
            log << '\n';
            bad += c.ok ? 0 : 1;
        }
        log << (bad ? std::to_string(bad) + " selftest check(s) failed" : std::string("selftest passed")) << '\n';
        return {bad ? 2 : 0, {}};
    }

    const ResolvedConfig rc = resolve(cfg);
    const DegenerateOperator op = build_operator(cfg.alpha, rc.regime, cfg.n_cells);
    const TimeGrid& tg = rc.grid;
    const double dt = tg.dt();
    const double Ta = minimal_time(cfg.alpha);

    if (command == "solve") {
        detail::Run run(command, cfg, rc, op, std::nullopt);
        const StatePair target = make_target(op, cfg.target);
        const Trajectory tr = solve_forward(op, target, SourceTerm::none(), tg);
        const double e0 = energy(op, target);
        const Eigen::VectorXd x = op.dof_coordinates();
        io::CsvWriter traj(run.file("trajectory.csv"), run.meta({{"stride", std::to_string(cfg.stride)}}),
                           {"t", "x", "u", "u_t"});
        io::CsvWriter en(run.file("energy.csv"), run.meta(), {"t", "energy", "relative_drift"});
        double drift = 0.0;
        std::vector<double> ts, es;
        for (int k = 0; k <= tg.steps; ++k) {
            const double e = energy(op, tr.states[k]);
            const double d = e0 > 0.0 ? std::abs(e - e0) / e0 : 0.0;
            drift = std::max(drift, d);
            en.row({tg.t(k), e, d});
            ts.push_back(tg.t(k));
            es.push_back(e);
            if (k % cfg.stride == 0)
                for (int i = 0; i < op.dofs(); ++i)
                    traj.row({tg.t(k), x(i), tr.states[k].position(i), tr.states[k].velocity(i)});
        }
        if (cfg.plot)
            io::write_svg(run.file("energy.svg"), {"energy", "t", "E(t)"}, {{"E", ts, es}});
        log << "max relative energy drift " << io::fmt(drift) << '\n';
        return run.finish({{"max_relative_drift", io::fmt(drift)}});
    }

    if (command == "hum") {
        detail::Run run(command, cfg, rc, op, cfg.epsilon);
        const ControlWindow window(op, cfg.epsilon);
        const StatePair target = make_target(op, cfg.target);
        const HUMSolution sol = solve_hum_distributed(op, window, target, tg, {cfg.tol, 20000});
        for (const auto& w : sol.warnings) log << "warning: " << w << '\n';
        const HumBounds b = hum_bounds_check(op, sol, target);
        const io::Meta res = {{"cg_iterations", std::to_string(sol.cg_iterations)},
                              {"cg_residual", io::fmt(sol.cg_residual)},
                              {"terminal_energy", io::fmt(sol.relative_terminal_energy())},
                              {"identity_residual", io::fmt(sol.relative_identity_residual())},
                              {"control_cost", io::fmt(sol.control_cost)},
                              {"scaled_r1", io::fmt(b.scaled_r1)},
                              {"scaled_r2", io::fmt(b.scaled_r2)}};
        {
            io::CsvWriter c(run.file("hum_control.csv"), run.meta(res), {"t", "x", "v"});
            const Eigen::VectorXd x = op.dof_coordinates();
            for (int k = 0; k < tg.steps; ++k)
                for (int i = window.first_dof(); i < op.dofs(); ++i) c.row({tg.t_half(k), x(i), sol.control.values(k, i)});
        }
        {
            io::CsvWriter h(run.file("hum_cg.csv"), run.meta(), {"iteration", "relative_residual", "functional"});
            for (std::size_t i = 0; i < sol.residual_history.size(); ++i)
                h.row({static_cast<double>(i), sol.residual_history[i],
                       i < sol.functional_history.size() ? sol.functional_history[i] : std::nan("")});
        }
        if (cfg.plot) {
            std::vector<double> it, rr;
            for (std::size_t i = 0; i < sol.residual_history.size(); ++i) {
                it.push_back(static_cast<double>(i));
                rr.push_back(sol.residual_history[i]);
            }
            io::write_svg(run.file("hum_cg.svg"), {"CG residual", "iteration", "relative residual", false, true},
                          {{"residual", it, rr}});
        }
        log << "iterations " << sol.cg_iterations << ", terminal energy " << io::fmt(sol.relative_terminal_energy())
            << " E(0), identity residual " << io::fmt(sol.relative_identity_residual()) << '\n';
        return run.finish(res);
    }

    if (command == "hum-boundary") {
        detail::Run run(command, cfg, rc, op, std::nullopt);
        const StatePair target = make_target(op, cfg.target);
        const BoundaryHUMSolution sol = solve_hum_boundary(op, target, tg, {cfg.tol, 20000});
        for (const auto& w : sol.warnings) log << "warning: " << w << '\n';
        const io::Meta res = {{"cg_iterations", std::to_string(sol.cg_iterations)},
                              {"terminal_energy", io::fmt(sol.relative_terminal_energy())},
                              {"control_cost", io::fmt(sol.control_cost)}};
        io::CsvWriter c(run.file("boundary_control.csv"), run.meta(res), {"t", "h"});
        std::vector<double> ts;
        for (int k = 0; k < tg.steps; ++k) {
            c.row({tg.t_half(k), sol.h[k]});
            ts.push_back(tg.t_half(k));
        }
        if (cfg.plot) io::write_svg(run.file("boundary_control.svg"), {"boundary control", "t", "h"}, {{"h", ts, sol.h}});
        log << "iterations " << sol.cg_iterations << ", terminal energy " << io::fmt(sol.relative_terminal_energy())
            << " E(0)\n";
        return run.finish(res);
    }

    if (command == "observability") {
        const bool dist = cfg.kind == "distributed";
        if (!dist && cfg.kind != "boundary")
            fail(ErrorCode::ConfigParse, "kind must be distributed or boundary, got \"" + cfg.kind + "\"");
        detail::Run run(command, cfg, rc, op, dist ? std::optional<double>(cfg.epsilon) : std::nullopt);
        const Method m = resolve_method(cfg.method, op.dofs(), tg.T <= Ta);
        ObservabilityOptions opt;
        opt.seed = cfg.seed;
        const ObservabilityReport r = dist ? observability_constant_distributed(op, ControlWindow(op, cfg.epsilon), tg, m, opt)
                                           : observability_constant_boundary(op, tg, m, opt);
        const io::Meta res = {{"kind", cfg.kind}, {"method", to_string(r.method)}};
        io::CsvWriter c(run.file("observability.csv"), run.meta(res),
                        {"T_over_Talpha", "c_obs", "log10_c_obs", "mu_min", "mu_max", "iterations", "residual"});
        c.row({tg.T / Ta, r.c_obs, r.log10_c_obs, r.mu_min, r.mu_max, static_cast<double>(r.iterations), r.residual});
        log << cfg.kind << " observability constant " << io::fmt(r.c_obs) << " (log10 " << io::fmt_short(r.log10_c_obs)
            << ", " << to_string(r.method) << ")\n";
        return run.finish({{"kind", cfg.kind}, {"method", to_string(r.method)}, {"c_obs", io::fmt(r.c_obs)}});
    }

    if (command == "sweep-eps") {
        detail::Run run(command, cfg, rc, op, std::nullopt);
        const Method m = resolve_method(cfg.method, op.dofs(), tg.T <= Ta);
        ObservabilityOptions opt;
        opt.seed = cfg.seed;
        const SweepResult s = epsilon_sweep(op, tg, cfg.epsilons, m, opt);
        const io::Meta res = {{"epsilons", detail::join(cfg.epsilons)},
                              {"method", to_string(m)},
                              {"fitted_slope", io::fmt(s.fitted_slope)}};
        io::CsvWriter c(run.file("sweep_eps.csv"), run.meta(res),
                        {"epsilon", "c_obs", "mu_min", "iterations", "fitted_slope"});
        std::vector<double> inv, co;
        for (const auto& p : s.samples) {
            c.row({p.parameter, p.report.c_obs, p.report.mu_min, static_cast<double>(p.report.iterations), s.fitted_slope});
            inv.push_back(1.0 / p.parameter);
            co.push_back(p.report.c_obs);
        }
        c.comment("fit fitted_slope=" + io::fmt(s.fitted_slope));
        if (cfg.plot)
            io::write_svg(run.file("sweep_eps.svg"), {"c_obs against 1/eps", "1/eps", "c_obs", true, true},
                          {{"c_obs", inv, co}});
        log << "fitted slope " << io::fmt_short(s.fitted_slope) << '\n';
        return run.finish(res);
    }

    if (command == "sweep-time") {
        const bool dist = cfg.kind == "distributed";
        if (!dist && cfg.kind != "boundary")
            fail(ErrorCode::ConfigParse, "kind must be distributed or boundary, got \"" + cfg.kind + "\"");
        detail::Run run(command, cfg, rc, op, dist ? std::optional<double>(cfg.epsilon) : std::nullopt);
        std::vector<double> times;
        for (double f : cfg.time_factors) times.push_back(f * Ta);
        double tmin = times.empty() ? 0.0 : *std::min_element(times.begin(), times.end());
        const Method m = resolve_method(cfg.method, op.dofs(), tmin <= Ta);
        ObservabilityOptions opt;
        opt.seed = cfg.seed;
        std::optional<ControlWindow> window;
        if (dist) window.emplace(op, cfg.epsilon);
        const SweepResult s = time_sweep(op, window, dt, times, m, opt);
        const io::Meta res = {{"kind", cfg.kind}, {"method", to_string(m)}, {"ratio", io::fmt(s.ratio)}};
        io::CsvWriter c(run.file("sweep_time.csv"), run.meta(res),
                        {"T", "T_over_Talpha", "c_obs", "log10_c_obs", "mu_min", "iterations"});
        std::vector<double> tt, lc;
        for (const auto& p : s.samples) {
            c.row({p.parameter, p.parameter / Ta, p.report.c_obs, p.report.log10_c_obs, p.report.mu_min,
                   static_cast<double>(p.report.iterations)});
            tt.push_back(p.parameter / Ta);
            lc.push_back(p.report.log10_c_obs);
        }
        c.comment("ratio c_obs(min T)/c_obs(max T)=" + io::fmt(s.ratio));
        if (cfg.plot)
            io::write_svg(run.file("sweep_time.svg"), {"log10 c_obs against T/T_alpha", "T/T_alpha", "log10 c_obs"},
                          {{"log10 c_obs", tt, lc}});
        log << "ratio c_obs(min T)/c_obs(max T) " << io::fmt(s.ratio) << '\n';
        return run.finish(res);
    }

    // limit
    detail::Run run(command, cfg, rc, op, std::nullopt);
    const StatePair target = make_target(op, cfg.target);
    LimitOptions lo;
    lo.hum = {cfg.tol, 20000};
    lo.seed = cfg.seed;
    const LimitDiagnostics d = run_limit_sweep(op, target, tg, cfg.epsilons, lo);
    const io::Meta res = {{"epsilons", detail::join(cfg.epsilons)},
                          {"liminf_lhs", io::fmt(d.liminf_lhs)},
                          {"liminf_rhs", io::fmt(d.liminf_rhs)},
                          {"boundary_hum_distance", io::fmt(d.h_boundary_distance)},
                          {"h_l2", io::fmt(l2_time(d.h_extracted, dt))}};
    {
        io::CsvWriter c(run.file("limit_h.csv"), run.meta(res), {"t", "h", "h_boundary_hum"});
        for (int k = 0; k < tg.steps; ++k)
            c.row({tg.t_half(k), d.h_extracted[k], d.h_boundary_hum ? (*d.h_boundary_hum)[k] : std::nan("")});
    }
    {
        std::vector<std::string> cols = {"epsilon",      "cg_iterations",  "phi0_l2",     "phi1_hneg1",
                                         "scaled_cost",  "h_l2",           "h_step",      "transposition_distributed",
                                         "transposition_boundary",         "terminal_weak", "terminal_energy"};
        for (std::size_t i = 0; i < d.g_limit.size(); ++i) cols.push_back("g_eps_" + std::to_string(i));
        io::CsvWriter c(run.file("limit_table.csv"), run.meta(res), cols);
        for (const auto& e : d.entries) {
            std::vector<double> row = {e.epsilon,     static_cast<double>(e.cg_iterations),
                                       e.phi0_l2,     e.phi1_hneg1,
                                       e.scaled_cost, e.h_l2,
                                       e.h_step,      e.transposition_distributed,
                                       e.transposition_boundary,
                                       e.terminal_weak, e.terminal_energy};
            row.insert(row.end(), e.g_eps.begin(), e.g_eps.end());
            c.row(row);
            log << "eps " << io::fmt_short(e.epsilon) << ": terminal (L2 x H^-1) " << io::fmt(e.terminal_weak)
                << ", boundary transposition residual " << io::fmt(e.transposition_boundary) << '\n';
        }
    }
    if (cfg.plot) {
        std::vector<double> ts;
        for (int k = 0; k < tg.steps; ++k) ts.push_back(tg.t_half(k));
        std::vector<io::Series> ss = {{"h (smallest eps)", ts, d.h_extracted}};
        if (d.h_boundary_hum) ss.push_back({"boundary HUM", ts, *d.h_boundary_hum});
        io::write_svg(run.file("limit_h.svg"), {"extracted boundary control", "t", "h"}, ss);
    }
    return run.finish(res);
}

}  // namespace dwc
