#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

#include "dwc/weighted_discretization.hpp"
#include "test_support.hpp"

using namespace dwc;

TEST(WeightedDiscretization, FaceCoefficientAtMidpoint) {
    const auto op = build_operator(0.5, Regime::Weak, 4);
    EXPECT_NEAR(op.face_coeffs()(0), std::sqrt(0.125), 1e-15);
    EXPECT_NEAR(op.face_coeffs()(3), std::pow(0.875, 0.5), 1e-15);
}

TEST(WeightedDiscretization, DofLayoutByRegime) {
    EXPECT_EQ(build_operator(0.3, Regime::Weak, 20).dofs(), 19);
    EXPECT_EQ(build_operator(1.0, Regime::Strong, 20).dofs(), 20);
    EXPECT_EQ(build_operator(1.7, Regime::Strong, 20).dofs(), 20);
    EXPECT_EQ(default_regime(0.99), Regime::Weak);
    EXPECT_EQ(default_regime(1.0), Regime::Strong);
}

TEST(WeightedDiscretization, RejectsInadmissibleConfigurations) {
    auto code = [](auto&& f) {
        try {
            f();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::InvalidArgument;
    };
    EXPECT_EQ(code([] { build_operator(1.5, Regime::Weak, 20); }), ErrorCode::RegimeMismatch);
    EXPECT_EQ(code([] { build_operator(0.5, Regime::Strong, 20); }), ErrorCode::RegimeMismatch);
    EXPECT_EQ(code([] { build_operator(0.5, Regime::Weak, 2); }), ErrorCode::GridTooCoarse);
    EXPECT_THROW(minimal_time(2.0), Error);
}

TEST(WeightedDiscretization, StiffnessIsSymmetricPositive) {
    std::mt19937_64 rng(7);
    for (double alpha : {0.3, 0.9, 1.0, 1.6}) {
        const auto op = build_operator(alpha, default_regime(alpha), 30);
        const Eigen::MatrixXd K = op.stiffness().to_dense();
        EXPECT_LT((K - K.transpose()).norm(), 1e-14);
        for (int t = 0; t < 5; ++t) {
            const Eigen::VectorXd f = test_util::random_field(op.dofs(), rng);
            EXPECT_GT(stiffness_form(op, f, f), 0.0);
            EXPECT_NEAR(stiffness_form(op, f, f), f.dot(apply_stiffness(op, f).cwiseProduct(op.lumped_weights())),
                        1e-10 * stiffness_form(op, f, f));
        }
    }
}

TEST(WeightedDiscretization, StrongRegimeKillsOnlyConstantsAtTheFreeEnd) {
    // Constants are not in the kernel because of the Dirichlet end at x = 1.
    const auto op = build_operator(1.5, Regime::Strong, 40);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(op.dofs());
    const Eigen::VectorXd K1 = apply_stiffness(op, one);
    EXPECT_NEAR(K1.head(op.dofs() - 1).norm(), 0.0, 1e-12);
    EXPECT_GT(K1(op.dofs() - 1), 0.0);
}

TEST(WeightedDiscretization, LaplacianFixtureEigenvaluesConverge) {
    const double pi = std::acos(-1.0);
    double prev = 0.0;
    for (int N : {20, 40, 80}) {
        const auto op = build_laplacian_fixture(N);
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(op.stiffness().to_dense(), op.mass().to_dense());
        double err = 0.0;
        for (int k = 0; k < 3; ++k) {
            const double exact = std::pow((k + 1) * pi, 2);
            err = std::max(err, std::abs(es.eigenvalues()(k) - exact) / exact);
        }
        if (prev > 0.0) EXPECT_NEAR(prev / err, 4.0, 0.3);
        prev = err;
    }
    EXPECT_LT(prev, 3e-3);
}

TEST(WeightedDiscretization, HardyQuotientMatchesClosedForm) {
    // f = x(1-x), alpha = 1/2: (16/105) / (22/105) = 8/11
    const auto op = build_operator(0.5, Regime::Weak, 800);
    const Eigen::VectorXd f = op.sample([](double x) { return x * (1.0 - x); });
    EXPECT_NEAR(hardy_quotient(op, f), 8.0 / 11.0, 5e-3);
}

TEST(WeightedDiscretization, HardyQuotientBelowBound) {
    std::mt19937_64 rng(11);
    for (double alpha : {0.25, 0.75, 1.5}) {
        const auto op = build_operator(alpha, default_regime(alpha), 100);
        for (int t = 0; t < 20; ++t)
            EXPECT_LE(hardy_quotient(op, test_util::random_field(op.dofs(), rng)), 1.05 * hardy_bound(alpha));
    }
    EXPECT_DOUBLE_EQ(hardy_bound(0.5), 16.0);
}

TEST(WeightedDiscretization, NormsAreConsistent) {
    std::mt19937_64 rng(3);
    const auto op = build_operator(0.6, Regime::Weak, 50);
    const Eigen::VectorXd f = test_util::random_field(op.dofs(), rng);
    EXPECT_NEAR(norm_l2(op, f) * norm_l2(op, f), inner_l2(op, f, f), 1e-12);
    EXPECT_NEAR(norm_h1a(op, f) * norm_h1a(op, f), stiffness_form(op, f, f) + inner_l2(op, f, f), 1e-9);
    // |f|_{-1}^2 = f^T M K^{-1} M f and the duality bound |(f, g)| <= |f|_{-1} |g|_{1}
    const Eigen::VectorXd g = test_util::random_field(op.dofs(), rng);
    EXPECT_LE(std::abs(inner_l2(op, f, g)), norm_hneg1(op, f) * norm_h1a(op, g) * (1 + 1e-12));
    EXPECT_NEAR(norm_hneg1(op, f) * norm_hneg1(op, f), riesz_hneg1(op, f).dot(op.mass() * f), 1e-10);
}

TEST(WeightedDiscretization, MinimalTimes) {
    EXPECT_DOUBLE_EQ(minimal_time(0.0), 2.0);
    EXPECT_DOUBLE_EQ(minimal_time(0.5), 8.0 / 3.0);
    EXPECT_DOUBLE_EQ(minimal_time(1.0), 4.0);
    EXPECT_DOUBLE_EQ(minimal_time(1.5), 8.0);
}
