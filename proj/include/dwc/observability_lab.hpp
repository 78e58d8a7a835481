#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dwc/cg.hpp"
#include "dwc/control_window.hpp"
#include "dwc/error.hpp"
#include "dwc/modal_oracle.hpp"
#include "dwc/observation.hpp"
#include "dwc/wave_solver.hpp"
#include "dwc/weighted_discretization.hpp"

namespace dwc {

/// DenseOracle: assembled Gramian and dense generalized eigensolver.
/// InversePowerCG: Lanczos on the inverse Gramian, each step an inner PCG solve.
/// Modal: extended-precision modal evaluation (see modal_oracle.hpp).
enum class Method { DenseOracle, InversePowerCG, Modal };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::DenseOracle: return "dense";
        case Method::InversePowerCG: return "inverse-power-cg";
        case Method::Modal: return "modal";
    }
    return "?";
}

/// Largest dof count accepted by the dense oracle.
inline constexpr int kDenseDofCap = 512;

struct ObservabilityOptions {
    double inner_tol = 1e-12;
    int inner_max_iters = 20000;
    int max_lanczos = 200;
    double ritz_tol = 1e-10;
    std::uint64_t seed = 12345;
};

struct ObservabilityReport {
    double alpha = 0.0;
    Regime regime = Regime::Weak;
    int n_cells = 0;
    double T = 0.0;
    double dt = 0.0;
    std::optional<double> epsilon;
    ObservationKind kind = ObservationKind::Distributed;
    /// 1 / mu_min; may be +inf when mu_min underflows.
    double c_obs = 0.0;
    double mu_min = 0.0;
    double mu_max = 0.0;
    double log10_c_obs = 0.0;
    Method method = Method::DenseOracle;
    int iterations = 0;
    double residual = 0.0;
};

namespace detail {

struct LanczosOutcome {
    double top = 0.0;
    int steps = 0;
    double residual = 0.0;
};

/// Largest eigenvalue of an operator self-adjoint in the G inner product,
/// with full reorthogonalization. apply_g must return G x.
template <class ApplyT, class ApplyG>
LanczosOutcome lanczos_g(int m, ApplyT&& apply_t, ApplyG&& apply_g, int max_steps, double tol, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::VectorXd q(m);
    for (int i = 0; i < m; ++i) q(i) = nd(rng);
    Eigen::VectorXd gq = apply_g(q);
    double nq = std::sqrt(q.dot(gq));
    q /= nq;
    gq /= nq;

    const int kmax = std::min(max_steps, m);
    Eigen::MatrixXd Q(m, kmax), GQ(m, kmax);
    std::vector<double> alpha, beta;
    LanczosOutcome out;
    double prev = 0.0;
    for (int k = 0; k < kmax; ++k) {
        Q.col(k) = q;
        GQ.col(k) = gq;
        Eigen::VectorXd w = apply_t(q);
        alpha.push_back(gq.dot(w));
        for (int pass = 0; pass < 2; ++pass)
            for (int j = 0; j <= k; ++j) w -= GQ.col(j).dot(w) * Q.col(j);
        Eigen::VectorXd gw = apply_g(w);
        const double b = std::sqrt(std::max(0.0, w.dot(gw)));
        beta.push_back(b);

        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k + 1, k + 1);
        for (int j = 0; j <= k; ++j) {
            T(j, j) = alpha[j];
            if (j < k) T(j, j + 1) = T(j + 1, j) = beta[j];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        out.top = es.eigenvalues()(k);
        out.steps = k + 1;
        out.residual = std::abs(b * es.eigenvectors()(k, k)) / std::abs(out.top);
        if ((k >= 2 && out.residual <= tol && std::abs(out.top - prev) <= tol * std::abs(out.top)) || b == 0.0)
            break;
        prev = out.top;
        q = w / b;
        gq = gw / b;
    }
    return out;
}

inline void fill_header(ObservabilityReport& r, const Gramian& g) {
    const auto& op = g.op();
    r.alpha = op.alpha();
    r.regime = op.regime();
    r.n_cells = op.grid().n_cells;
    r.T = g.time_grid().T;
    r.dt = g.time_grid().dt();
    r.kind = g.kind();
    if (g.kind() == ObservationKind::Distributed) r.epsilon = g.epsilon();
}

inline void set_mu(ObservabilityReport& r, double mu_min, double log10_mu_min) {
    if (!(mu_min > 0.0) && !std::isfinite(log10_mu_min))
        fail(ErrorCode::NoConvergence, "Gramian is not positive definite to working precision");
    r.mu_min = mu_min;
    r.log10_c_obs = -log10_mu_min;
    r.c_obs = mu_min > 0.0 ? 1.0 / mu_min : std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Extremal generalized eigenvalues of (A, G) from the dense oracle.
inline std::pair<double, double> dense_extremes(const Gramian& g) {
    if (g.op().dofs() > kDenseDofCap)
        fail(ErrorCode::MethodTooLarge, std::to_string(g.op().dofs()) + " dofs exceed the dense cap of " +
                                            std::to_string(kDenseDofCap));
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(g.dense(), g.dense_norm(), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) fail(ErrorCode::SolveFailure, "dense generalized eigensolver failed");
    return {es.eigenvalues()(0), es.eigenvalues()(es.eigenvalues().size() - 1)};
}

/// Observability constant of the given Gramian: sup of data norm^2 over observed form.
inline ObservabilityReport observability_constant(const Gramian& g, Method method,
                                                  const ObservabilityOptions& opt = {}) {
    ObservabilityReport r;
    detail::fill_header(r, g);
    r.method = method;
    if (method == Method::DenseOracle) {
        const auto [lo, hi] = dense_extremes(g);
        if (!(lo > 0.0))
            fail(ErrorCode::NoConvergence, "dense Gramian lost definiteness (mu_min=" + std::to_string(lo) +
                                               "); use the modal method");
        detail::set_mu(r, lo, std::log10(lo));
        r.mu_max = hi;
        r.iterations = 2 * g.op().dofs();
    } else if (method == Method::Modal) {
        const ModalEstimate e = modal_estimate(g);
        detail::set_mu(r, e.mu_min, e.log10_mu_min);
        r.mu_max = e.mu_max;
        r.iterations = e.lanczos_steps;
    } else {
        int inner = 0;
        double worst_inner = 0.0;
        auto apply_inv = [&](const Eigen::VectorXd& x) {
            // w = A^{-1} G x
            const CgResult cg = conjugate_gradient([&](const Eigen::VectorXd& p) { return g.apply(p); },
                                                   [&](const Eigen::VectorXd& v) { return g.apply_norm_inverse(v); },
                                                   g.apply_norm(x), CgOptions{opt.inner_tol, opt.inner_max_iters, true});
            inner += cg.iterations;
            worst_inner = std::max(worst_inner, cg.relative_residual);
            return cg.x;
        };
        auto apply_g = [&](const Eigen::VectorXd& x) { return g.apply_norm(x); };
        const auto lo = detail::lanczos_g(g.size(), apply_inv, apply_g, opt.max_lanczos, opt.ritz_tol, opt.seed);
        detail::set_mu(r, 1.0 / lo.top, -std::log10(lo.top));
        auto apply_fwd = [&](const Eigen::VectorXd& x) { return g.apply_norm_inverse(g.apply(x)); };
        const auto hi = detail::lanczos_g(g.size(), apply_fwd, apply_g, opt.max_lanczos, opt.ritz_tol, opt.seed + 1);
        r.mu_max = hi.top;
        r.iterations = inner;
        r.residual = std::max(lo.residual, worst_inner);
    }
    return r;
}

inline ObservabilityReport observability_constant_distributed(const DegenerateOperator& op,
                                                              const ControlWindow& window, const TimeGrid& tg,
                                                              Method method, const ObservabilityOptions& opt = {}) {
    if (!(tg.T > 0.0)) fail(ErrorCode::InvalidArgument, "T must be positive");
    return observability_constant(Gramian(op, ObservationKind::Distributed, window, tg), method, opt);
}

inline ObservabilityReport observability_constant_boundary(const DegenerateOperator& op, const TimeGrid& tg,
                                                           Method method, const ObservabilityOptions& opt = {}) {
    if (!(tg.T > 0.0)) fail(ErrorCode::InvalidArgument, "T must be positive");
    return observability_constant(Gramian(op, ObservationKind::Boundary, std::nullopt, tg), method, opt);
}

enum class SweepAxis { Epsilon, Time, Resolution };

struct SweepSample {
    double parameter = 0.0;
    ObservabilityReport report;
};

struct SweepResult {
    SweepAxis axis = SweepAxis::Epsilon;
    std::vector<SweepSample> samples;
    /// Epsilon axis: least-squares slope of log c_obs against log(1/eps).
    double fitted_slope = std::numeric_limits<double>::quiet_NaN();
    /// Time axis: c_obs(min T) / c_obs(max T).
    double ratio = std::numeric_limits<double>::quiet_NaN();
};

/// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) fail(ErrorCode::DimensionMismatch, "fit inputs differ in length");
    if (x.size() < 3) fail(ErrorCode::TooFewSamples, "a slope fit needs at least 3 samples");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) fail(ErrorCode::InvalidArgument, "degenerate abscissae");
    return sxy / sxx;
}

inline SweepResult epsilon_sweep(const DegenerateOperator& op, const TimeGrid& tg, std::vector<double> epsilons,
                                 Method method, const ObservabilityOptions& opt = {}) {
    if (epsilons.size() < 3) fail(ErrorCode::TooFewSamples, "an epsilon sweep needs at least 3 values");
    for (double e : epsilons)
        if (!(e > 0.0 && e < 1.0)) fail(ErrorCode::InvalidArgument, "epsilon values must lie in (0, 1)");
    std::sort(epsilons.begin(), epsilons.end());
    SweepResult res;
    res.axis = SweepAxis::Epsilon;
    std::vector<double> x, y;
    for (double e : epsilons) {
        SweepSample s{e, observability_constant_distributed(op, ControlWindow(op, e), tg, method, opt)};
        x.push_back(std::log(1.0 / e));
        y.push_back(s.report.log10_c_obs * std::log(10.0));
        res.samples.push_back(std::move(s));
    }
    res.fitted_slope = fit_slope(x, y);
    return res;
}

/// c_obs over a list of horizons; window = nullopt selects boundary observation.
inline SweepResult time_sweep(const DegenerateOperator& op, const std::optional<ControlWindow>& window,
                              double dt, std::vector<double> times, Method method,
                              const ObservabilityOptions& opt = {}) {
    if (times.size() < 2) fail(ErrorCode::TooFewSamples, "a time sweep needs at least 2 horizons");
    std::sort(times.begin(), times.end());
    SweepResult res;
    res.axis = SweepAxis::Time;
    for (double T : times) {
        const TimeGrid tg = TimeGrid::covering(T, dt);
        ObservabilityReport r = window ? observability_constant_distributed(op, *window, tg, method, opt)
                                       : observability_constant_boundary(op, tg, method, opt);
        res.samples.push_back({T, std::move(r)});
    }
    res.ratio = std::pow(10.0, res.samples.front().report.log10_c_obs - res.samples.back().report.log10_c_obs);
    return res;
}

enum class NormEquivalence { Vt, V, Trace };

struct NormConstants {
    /// form >= A_best^{-1} * data norm^2 is sharp: A_best = 1 / mu_min.
    double A_best = 0.0;
    /// form <= B_best * data norm^2 is sharp: B_best = mu_max.
    double B_best = 0.0;
    Method method = Method::DenseOracle;
};

/// Sharp constants of the two-sided estimates for the whole-domain forms
/// (v_t or v over (0,T)x(0,1), energy or F data norm) and the boundary trace.
inline NormConstants norm_equivalence_constants(const DegenerateOperator& op, const TimeGrid& tg,
                                                NormEquivalence which, const ObservabilityOptions& opt = {}) {
    std::optional<Gramian> g;
    if (which == NormEquivalence::Vt) g.emplace(op, ObservationKind::Velocity, std::nullopt, tg);
    else if (which == NormEquivalence::V)
        g.emplace(op, ObservationKind::Distributed, ControlWindow(op, 1.0), tg);
    else
        g.emplace(op, ObservationKind::Boundary, std::nullopt, tg);
    const Method m = op.dofs() <= kDenseDofCap ? Method::DenseOracle : Method::InversePowerCG;
    const ObservabilityReport r = observability_constant(*g, m, opt);
    return {r.c_obs, r.mu_max, m};
}

}  // namespace dwc
