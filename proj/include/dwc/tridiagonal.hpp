#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "dwc/error.hpp"

namespace dwc {

/// Row-major block of column vectors; each column is one field, rows are dofs.
using Block = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

// Kernels below read and write an n x ncols row-major array. A plain VectorXd
// has this layout with ncols == 1.
template <class Mat>
constexpr void require_row_contiguous(const Mat& m) {
    if constexpr (!Mat::IsRowMajor) {
        if (m.cols() != 1) fail(ErrorCode::DimensionMismatch, "column-major block with more than one column");
    }
}

}  // namespace detail

/// Symmetric tridiagonal matrix: diag(i) and off(i) = A(i, i+1) = A(i+1, i).
struct SymTridiagonal {
    Eigen::VectorXd diag;
    Eigen::VectorXd off;

    SymTridiagonal() = default;
    SymTridiagonal(Eigen::VectorXd d, Eigen::VectorXd o) : diag(std::move(d)), off(std::move(o)) {
        if (diag.size() > 0 && off.size() != diag.size() - 1)
            fail(ErrorCode::DimensionMismatch, "off-diagonal length must be n-1");
    }

    static SymTridiagonal diagonal(Eigen::VectorXd d) {
        const Eigen::Index n = d.size();
        return {std::move(d), Eigen::VectorXd::Zero(n > 0 ? n - 1 : 0)};
    }

    Eigen::Index size() const { return diag.size(); }

    bool is_diagonal() const { return off.size() == 0 || off.cwiseAbs().maxCoeff() == 0.0; }

    /// y = A x for every column of x.
    template <class Mat>
    void multiply(const Mat& x, Mat& y) const {
        detail::require_row_contiguous(x);
        const Eigen::Index n = size();
        if (x.rows() != n) fail(ErrorCode::DimensionMismatch, "tridiagonal multiply: row count");
        const Eigen::Index nc = x.cols();
        y.resize(n, nc);
        const double* xs = x.data();
        double* ys = y.data();
        for (Eigen::Index i = 0; i < n; ++i) {
            double* yr = ys + i * nc;
            const double* xr = xs + i * nc;
            const double d = diag(i);
            for (Eigen::Index c = 0; c < nc; ++c) yr[c] = d * xr[c];
            if (i > 0) {
                const double l = off(i - 1);
                const double* xp = xr - nc;
                for (Eigen::Index c = 0; c < nc; ++c) yr[c] += l * xp[c];
            }
            if (i + 1 < n) {
                const double u = off(i);
                const double* xn = xr + nc;
                for (Eigen::Index c = 0; c < nc; ++c) yr[c] += u * xn[c];
            }
        }
    }

    Eigen::VectorXd operator*(const Eigen::VectorXd& x) const {
        Eigen::VectorXd y;
        multiply(x, y);
        return y;
    }

    double quadratic(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const {
        Eigen::VectorXd y;
        multiply(z, y);
        return x.dot(y);
    }

    Eigen::MatrixXd to_dense() const {
        const Eigen::Index n = size();
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            a(i, i) = diag(i);
            if (i + 1 < n) a(i, i + 1) = a(i + 1, i) = off(i);
        }
        return a;
    }

    /// a*A + b*B
    static SymTridiagonal combine(double a, const SymTridiagonal& A, double b, const SymTridiagonal& B) {
        if (A.size() != B.size()) fail(ErrorCode::DimensionMismatch, "tridiagonal combine");
        return {a * A.diag + b * B.diag, a * A.off + b * B.off};
    }
};

/// LDL^T factorization of an SPD symmetric tridiagonal matrix.
class TridiagonalLdl {
public:
    TridiagonalLdl() = default;

    explicit TridiagonalLdl(const SymTridiagonal& a) : d_(a.size()), l_(a.size()) {
        const Eigen::Index n = a.size();
        if (n == 0) return;
        d_(0) = a.diag(0);
        l_(0) = 0.0;
        check_pivot(0);
        for (Eigen::Index i = 1; i < n; ++i) {
            l_(i) = a.off(i - 1) / d_(i - 1);
            d_(i) = a.diag(i) - l_(i) * a.off(i - 1);
            check_pivot(i);
        }
    }

    Eigen::Index size() const { return d_.size(); }

    /// Overwrites every column of b with A^{-1} b.
    template <class Mat>
    void solve_in_place(Mat& b) const {
        detail::require_row_contiguous(b);
        const Eigen::Index n = size();
        if (b.rows() != n) fail(ErrorCode::DimensionMismatch, "tridiagonal solve: row count");
        const Eigen::Index nc = b.cols();
        double* s = b.data();
        for (Eigen::Index i = 1; i < n; ++i) {
            const double l = l_(i);
            double* r = s + i * nc;
            const double* p = r - nc;
            for (Eigen::Index c = 0; c < nc; ++c) r[c] -= l * p[c];
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            const double inv = 1.0 / d_(i);
            double* r = s + i * nc;
            for (Eigen::Index c = 0; c < nc; ++c) r[c] *= inv;
        }
        for (Eigen::Index i = n - 2; i >= 0; --i) {
            const double l = l_(i + 1);
            double* r = s + i * nc;
            const double* q = r + nc;
            for (Eigen::Index c = 0; c < nc; ++c) r[c] -= l * q[c];
        }
    }

    Eigen::VectorXd solve(Eigen::VectorXd b) const {
        solve_in_place(b);
        return b;
    }

private:
    void check_pivot(Eigen::Index i) const {
        if (!(d_(i) > 0.0) || !std::isfinite(d_(i)))
            fail(ErrorCode::SolveFailure, "non-positive pivot at row " + std::to_string(i));
    }

    Eigen::VectorXd d_;
    Eigen::VectorXd l_;
};

}  // namespace dwc
