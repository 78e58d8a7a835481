#pragma once

// Extended-precision spectral evaluation of the observation Gramian.
//
// Below the minimal control time the smallest Gramian eigenvalue drops far
// below double rounding, so the double-precision estimators only see noise.
// Here the implicit midpoint scheme is diagonalized exactly: each generalized
// eigenmode K phi = lambda M phi rotates by theta with tan(theta/2) = omega dt/2,
// and the sums over time steps have closed forms. The result is the Gramian
// of the same discrete problem (the double-precision K, M, dt taken as exact).

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <boost/multiprecision/mpfr.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "dwc/control_window.hpp"
#include "dwc/error.hpp"
#include "dwc/observation.hpp"
#include "dwc/weighted_discretization.hpp"

namespace dwc::mp {

template <unsigned Digits10>
using Float = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<Digits10>,
                                            boost::multiprecision::et_off>;

}  // namespace dwc::mp

namespace Eigen {

template <unsigned D>
struct NumTraits<dwc::mp::Float<D>> : GenericNumTraits<dwc::mp::Float<D>> {
    using T = dwc::mp::Float<D>;
    using Real = T;
    using NonInteger = T;
    using Literal = T;
    using Nested = T;
    enum {
        IsComplex = 0,
        IsInteger = 0,
        IsSigned = 1,
        RequireInitialization = 1,
        ReadCost = 10,
        AddCost = 10,
        MulCost = 40
    };
    static Real epsilon() { return std::numeric_limits<T>::epsilon(); }
    static Real dummy_precision() { return epsilon() * 1000; }
    static Real highest() { return (std::numeric_limits<T>::max)(); }
    static Real lowest() { return -(std::numeric_limits<T>::max)(); }
    static Real infinity() { return std::numeric_limits<T>::infinity(); }
    static Real quiet_NaN() { return std::numeric_limits<T>::quiet_NaN(); }
    static int digits10() { return std::numeric_limits<T>::digits10; }
};

}  // namespace Eigen

namespace dwc {

struct ModalEstimate {
    double mu_min = 0.0;
    double mu_max = 0.0;
    double log10_mu_min = 0.0;
    unsigned digits10 = 0;
    int lanczos_steps = 0;
};

namespace detail {

template <class R>
using MpMatrix = Eigen::Matrix<R, Eigen::Dynamic, Eigen::Dynamic>;
template <class R>
using MpVector = Eigen::Matrix<R, Eigen::Dynamic, 1>;

template <class R>
struct MpTridiag {
    MpVector<R> d, o;

    MpVector<R> mul(const MpVector<R>& x) const {
        const Eigen::Index n = d.size();
        MpVector<R> y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            R v = d(i) * x(i);
            if (i > 0) v += o(i - 1) * x(i - 1);
            if (i + 1 < n) v += o(i) * x(i + 1);
            y(i) = v;
        }
        return y;
    }

    /// Solves (this - sigma * m) x = b by LDL^T without pivoting.
    MpVector<R> shifted_solve(const MpTridiag& m, const R& sigma, MpVector<R> b) const {
        const Eigen::Index n = d.size();
        MpVector<R> piv(n), l(n);
        piv(0) = d(0) - sigma * m.d(0);
        for (Eigen::Index i = 1; i < n; ++i) {
            const R off = o(i - 1) - sigma * m.o(i - 1);
            l(i) = off / piv(i - 1);
            piv(i) = d(i) - sigma * m.d(i) - l(i) * off;
        }
        for (Eigen::Index i = 1; i < n; ++i) b(i) -= l(i) * b(i - 1);
        for (Eigen::Index i = 0; i < n; ++i) b(i) /= piv(i);
        for (Eigen::Index i = n - 2; i >= 0; --i) b(i) -= l(i + 1) * b(i + 1);
        return b;
    }
};

template <class R>
MpTridiag<R> to_mp(const SymTridiagonal& a) {
    MpTridiag<R> t;
    t.d.resize(a.size());
    t.o.resize(std::max<Eigen::Index>(a.size() - 1, 0));
    for (Eigen::Index i = 0; i < a.size(); ++i) t.d(i) = R(a.diag(i));
    for (Eigen::Index i = 0; i + 1 < a.size(); ++i) t.o(i) = R(a.off(i));
    return t;
}

/// Sum_{k<K} cos((k+1/2) phi) and sum_{k<K} sin((k+1/2) phi), given sin/cos of
/// K*phi and of phi/2.
template <class R>
void half_step_sums(int K, const R& sK, const R& cK, const R& sh, R& scos, R& ssin) {
    if (sh == 0) {
        scos = R(K);
        ssin = R(0);
        return;
    }
    scos = sK / (2 * sh);
    ssin = (1 - cK) / (2 * sh);
}

/// Largest eigenvalue of the symmetric map `apply` by Lanczos with full reorthogonalization.
template <class R, class F>
R lanczos_top(Eigen::Index m, F&& apply, int max_steps, const R& rtol, int& steps_out) {
    MpMatrix<R> Q(m, max_steps + 1);
    MpVector<R> alpha(max_steps), beta(max_steps);
    MpVector<R> q(m);
    // deterministic start with all components present
    for (Eigen::Index i = 0; i < m; ++i) q(i) = R(1) + R(i % 7) / 10;
    q /= sqrt(q.squaredNorm());
    Q.col(0) = q;
    R prev = 0, top = 0;
    int k = 0;
    for (; k < max_steps; ++k) {
        MpVector<R> w = apply(Q.col(k));
        alpha(k) = Q.col(k).dot(w);
        for (int j = 0; j <= k; ++j) w -= Q.col(j).dot(w) * Q.col(j);
        for (int j = 0; j <= k; ++j) w -= Q.col(j).dot(w) * Q.col(j);
        beta(k) = sqrt(w.squaredNorm());
        MpMatrix<R> Tm = MpMatrix<R>::Zero(k + 1, k + 1);
        for (int j = 0; j <= k; ++j) {
            Tm(j, j) = alpha(j);
            if (j < k) Tm(j, j + 1) = Tm(j + 1, j) = beta(j);
        }
        Eigen::SelfAdjointEigenSolver<MpMatrix<R>> es(Tm, Eigen::EigenvaluesOnly);
        top = es.eigenvalues()(k);
        if (k >= 4 && abs(top - prev) <= rtol * abs(top)) break;
        prev = top;
        if (beta(k) == 0 || k + 1 == m) break;
        Q.col(k + 1) = w / beta(k);
    }
    steps_out = k + 1;
    return top;
}

template <unsigned D>
ModalEstimate modal_estimate_at(const Gramian& g) {
    using R = mp::Float<D>;
    const DegenerateOperator& op = g.op();
    const int n = op.dofs();
    const int m = 2 * n;
    const int K = g.time_grid().steps;
    const R dt = R(g.time_grid().T) / K;

    const MpTridiag<R> Kt = to_mp<R>(op.stiffness());
    const MpTridiag<R> Mt = to_mp<R>(op.mass());

    // double-precision eigenpairs as starting guesses, refined by Rayleigh quotient iteration
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es0(op.stiffness().to_dense(), op.mass().to_dense());
    MpVector<R> lambda(n);
    MpMatrix<R> phi(n, n);
    const R tol = std::numeric_limits<R>::epsilon() * 64;
    for (int j = 0; j < n; ++j) {
        MpVector<R> x = es0.eigenvectors().col(j).cast<R>();
        R sigma = R(es0.eigenvalues()(j));
        for (int it = 0; it < 12; ++it) {
            x /= sqrt(x.dot(Mt.mul(x)));
            const R rq = x.dot(Kt.mul(x));
            const bool done = it > 0 && abs(rq - sigma) <= tol * abs(rq);
            sigma = rq;
            if (done) break;
            MpVector<R> next = Kt.shifted_solve(Mt, sigma, Mt.mul(x));
            bool finite = true;
            for (int i = 0; i < n && finite; ++i) finite = isfinite(next(i));
            if (!finite) break;  // shift hit the eigenvalue to working precision
            x = std::move(next);
        }
        x /= sqrt(x.dot(Mt.mul(x)));
        lambda(j) = x.dot(Kt.mul(x));
        phi.col(j) = x;
    }

    // per-mode rotation data
    MpVector<R> omega(n), ch(n), sh(n), cK(n), sK(n);
    for (int j = 0; j < n; ++j) {
        omega(j) = sqrt(lambda(j));
        const R t = omega(j) * dt / 2;
        ch(j) = 1 / sqrt(1 + t * t);  // cos(theta/2)
        sh(j) = t * ch(j);            // sin(theta/2)
        const R theta = 2 * atan(t);
        cK(j) = cos(K * theta);
        sK(j) = sin(K * theta);
    }

    // observed rows: P (position coefficient) and Q (velocity coefficient) per mode,
    // in coordinates where the data norm is Euclidean
    const bool energy = g.norm() == DataNorm::Energy;
    MpMatrix<R> P, Qm;
    if (g.kind() == ObservationKind::Boundary) {
        const R kb = R(op.boundary_stiffness()), mb = R(op.boundary_mass());
        P.resize(1, n);
        for (int j = 0; j < n; ++j) P(0, j) = phi(n - 1, j) * (kb - mb * lambda(j)) * ch(j);
    } else if (g.kind() == ObservationKind::Distributed) {
        const auto& w = g.weights();
        int first = 0;
        while (first < n && w(first) == 0.0) ++first;
        P.resize(n - first, n);
        for (int r = first; r < n; ++r) {
            const R s = sqrt(R(w(r)));
            for (int j = 0; j < n; ++j) P(r - first, j) = s * phi(r, j) * ch(j);
        }
    } else {
        fail(ErrorCode::InvalidArgument, "modal oracle supports distributed and boundary observation");
    }
    Qm = P;
    for (int j = 0; j < n; ++j) {
        if (energy) {
            P.col(j) /= sqrt(1 + lambda(j));
            Qm.col(j) /= omega(j);
        }
        // F norm: velocity data weighted by 1/omega already matches the H^{-1} scaling
    }
    const MpMatrix<R> WPP = P.transpose() * P, WPQ = P.transpose() * Qm, WQQ = Qm.transpose() * Qm;

    MpMatrix<R> A(m, m);
    for (int j = 0; j < n; ++j)
        for (int l = j; l < n; ++l) {
            // phi_- = theta_j - theta_l, phi_+ = theta_j + theta_l
            const R sKm = sK(j) * cK(l) - cK(j) * sK(l), cKm = cK(j) * cK(l) + sK(j) * sK(l);
            const R sKp = sK(j) * cK(l) + cK(j) * sK(l), cKp = cK(j) * cK(l) - sK(j) * sK(l);
            const R shm = sh(j) * ch(l) - ch(j) * sh(l);
            const R shp = sh(j) * ch(l) + ch(j) * sh(l);
            R cm, sm, cp, sp;
            half_step_sums<R>(K, j == l ? R(0) : sKm, j == l ? R(1) : cKm, j == l ? R(0) : shm, cm, sm);
            half_step_sums<R>(K, sKp, cKp, shp, cp, sp);
            const R cc = (cm + cp) / 2;   // sum C_j C_l
            const R ss = (cm - cp) / 2;   // sum S_j S_l
            const R cs_jl = (sp - sm) / 2;  // sum C_j S_l
            const R cs_lj = (sp + sm) / 2;  // sum C_l S_j
            A(j, l) = A(l, j) = dt * WPP(j, l) * cc;
            A(n + j, n + l) = A(n + l, n + j) = dt * WQQ(j, l) * ss;
            A(j, n + l) = A(n + l, j) = dt * WPQ(j, l) * cs_jl;
            A(l, n + j) = A(n + j, l) = dt * WPQ(l, j) * cs_lj;
        }

    ModalEstimate est;
    est.digits10 = D;
    const R rtol = pow(R(10), -R(30));
    Eigen::LLT<MpMatrix<R>> llt(A);
    if (llt.info() != Eigen::Success) {
        est.mu_min = 0.0;
        est.log10_mu_min = -std::numeric_limits<double>::infinity();
    } else {
        int steps = 0;
        const R inv_top = lanczos_top<R>(m, [&](const MpVector<R>& v) { return MpVector<R>(llt.solve(v)); },
                                         std::min(m, 80), rtol, steps);
        est.lanczos_steps = steps;
        const R mu = 1 / inv_top;
        est.mu_min = static_cast<double>(mu);
        est.log10_mu_min = static_cast<double>(log10(mu));
    }
    int steps2 = 0;
    est.mu_max = static_cast<double>(
        lanczos_top<R>(m, [&](const MpVector<R>& v) { return MpVector<R>(A * v); }, std::min(m, 80), rtol, steps2));
    return est;
}

}  // namespace detail

/// Smallest and largest Gramian eigenvalue relative to the data norm, in the
/// lowest working precision that resolves the smallest one with margin.
inline ModalEstimate modal_estimate(const Gramian& g) {
    auto resolved = [](const ModalEstimate& e, double digits) {
        return e.mu_min > 0.0 && e.log10_mu_min - std::log10(e.mu_max) > -(digits - 25.0);
    };
    ModalEstimate e = detail::modal_estimate_at<80>(g);
    if (resolved(e, 80)) return e;
    e = detail::modal_estimate_at<160>(g);
    if (resolved(e, 160)) return e;
    e = detail::modal_estimate_at<320>(g);
    if (resolved(e, 320)) return e;
    e = detail::modal_estimate_at<640>(g);
    if (resolved(e, 640)) return e;
    fail(ErrorCode::NoConvergence, "smallest Gramian eigenvalue below 640-digit resolution");
}

}  // namespace dwc
