#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "dwc/error.hpp"

namespace dwc {

struct CgOptions {
    double tol = 1e-8;
    int max_iters = 2000;
    bool throw_on_failure = true;
};

struct CgResult {
    Eigen::VectorXd x;
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
    /// Preconditioned residual norms sqrt(r^T P r), starting with the initial one.
    std::vector<double> residual_history;
    /// Quadratic functional 1/2 x^T A x - b^T x after each iteration, starting at x = 0.
    std::vector<double> functional_history;
};

using LinearMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Preconditioned conjugate gradients for A x = b, A and P symmetric positive definite,
/// started from x = 0. Residuals are measured in the P-norm, so with P = G^{-1}
/// the stopping test is on the dual norm of the residual.
inline CgResult conjugate_gradient(const LinearMap& A, const LinearMap& P, const Eigen::VectorXd& b,
                                   const CgOptions& opt = {}) {
    CgResult res;
    res.x = Eigen::VectorXd::Zero(b.size());
    Eigen::VectorXd r = b;
    Eigen::VectorXd z = P(r);
    double rz = r.dot(z);
    const double r0 = std::sqrt(std::max(rz, 0.0));
    res.residual_history.push_back(r0);
    res.functional_history.push_back(0.0);
    if (r0 == 0.0) {
        res.converged = true;
        return res;
    }
    Eigen::VectorXd d = z;
    double fx = 0.0;
    for (int it = 1; it <= opt.max_iters; ++it) {
        const Eigen::VectorXd Ad = A(d);
        const double dAd = d.dot(Ad);
        if (!(dAd > 0.0) || !std::isfinite(dAd)) {
            if (opt.throw_on_failure) fail(ErrorCode::NoConvergence, "operator lost positivity in CG");
            break;
        }
        const double step = rz / dAd;
        res.x += step * d;
        r -= step * Ad;
        // J(x + s d) - J(x) = -s r_old^T d + s^2/2 d^T A d with r_old^T d = r_old^T z_old.
        fx += -step * rz + 0.5 * step * step * dAd;
        z = P(r);
        const double rz_new = r.dot(z);
        const double rn = std::sqrt(std::max(rz_new, 0.0));
        res.iterations = it;
        res.residual_history.push_back(rn);
        res.functional_history.push_back(fx);
        res.relative_residual = rn / r0;
        if (res.relative_residual <= opt.tol) {
            res.converged = true;
            return res;
        }
        d = z + (rz_new / rz) * d;
        rz = rz_new;
    }
    if (opt.throw_on_failure)
        fail(ErrorCode::NoConvergence, "CG stopped after " + std::to_string(res.iterations) +
                                           " iterations at relative residual " +
                                           std::to_string(res.relative_residual));
    return res;
}

}  // namespace dwc
