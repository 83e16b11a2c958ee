#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hpls/basis.hpp"
#include "hpls/random.hpp"
#include "test_support.hpp"

using namespace hpls;

TEST(MakeBasis, CubicTwentyHasSixteenUniformInteriorKnots) {
    const auto spec = make_basis(BasisKind::bspline, 3, 20);
    ASSERT_EQ(spec.interior_knots.size(), 16u);
    EXPECT_EQ(spec.size, 20);
    for (std::size_t k = 0; k < 16; ++k) EXPECT_NEAR(spec.interior_knots[k], (k + 1) / 17.0, 1e-15);
    EXPECT_EQ(spec.full_knots().size(), 24u);
}

TEST(MakeBasis, DegreeZeroGivesQuarterIndicators) {
    const auto spec = make_basis(BasisKind::bspline, 0, 4);
    EXPECT_EQ(spec.interior_knots, (std::vector<double>{0.25, 0.5, 0.75}));
}

TEST(MakeBasis, RejectsTooFewFunctions) {
    EXPECT_THROW(make_basis(BasisKind::bspline, 3, 3), InvalidBasisConfig);
    EXPECT_THROW(make_basis(BasisKind::bspline, 0, 0), InvalidBasisConfig);
    EXPECT_THROW(make_basis(BasisKind::fourier, 0, 0), InvalidBasisConfig);
    EXPECT_NO_THROW(make_basis(BasisKind::bspline, 3, 4));
}

TEST(Evaluate, IndicatorSupport) {
    const auto spec = make_basis(BasisKind::bspline, 0, 4);
    const Eigen::VectorXd v = evaluate(spec, 0.1);
    EXPECT_EQ(v, Eigen::Vector4d(1, 0, 0, 0));
    EXPECT_EQ(evaluate(spec, 1.0), Eigen::Vector4d(0, 0, 0, 1));
}

TEST(Evaluate, FourierAtZero) {
    const auto spec = make_basis(BasisKind::fourier, 0, 3);
    const Eigen::VectorXd v = evaluate(spec, 0.0);
    EXPECT_DOUBLE_EQ(v[0], 1.0);
    EXPECT_DOUBLE_EQ(v[1], std::numbers::sqrt2);
    EXPECT_DOUBLE_EQ(v[2], 0.0);
}

TEST(Evaluate, OutsideUnitIntervalIsDomainError) {
    const auto spec = make_basis(BasisKind::bspline, 3, 8);
    EXPECT_THROW(evaluate(spec, -1e-9), DomainError);
    EXPECT_THROW(evaluate(spec, 1.0 + 1e-9), DomainError);
    EXPECT_THROW(evaluate(spec, std::nan("")), DomainError);
}

TEST(Evaluate, PartitionOfUnity) {
    Rng rng(11);
    for (int degree : {0, 1, 2, 3}) {
        const auto spec = make_basis(BasisKind::bspline, degree, degree + 7);
        for (int i = 0; i < 1000; ++i) {
            const Eigen::VectorXd v = evaluate(spec, rng.uniform());
            EXPECT_GE(v.minCoeff(), 0.0);
            EXPECT_LT(std::abs(v.sum() - 1.0), 1e-12);
        }
        EXPECT_LT(std::abs(evaluate(spec, 1.0).sum() - 1.0), 1e-12);
    }
}

TEST(Evaluate, DerivativesMatchFiniteDifferences) {
    const auto spec = make_basis(BasisKind::bspline, 3, 6);
    const double h = 1e-4;
    for (int i = 0; i < 200; ++i) {
        const double t = (i + 0.5) / 200.0;
        const Eigen::VectorXd lo = evaluate(spec, t - h), mid = evaluate(spec, t), hi = evaluate(spec, t + h);
        const Eigen::VectorXd d2_fd = (hi - 2.0 * mid + lo) / (h * h);
        const Eigen::VectorXd d1_fd = (hi - lo) / (2.0 * h);
        EXPECT_LT((evaluate(spec, t, 2) - d2_fd).cwiseAbs().maxCoeff(), 1e-5) << "t=" << t;
        EXPECT_LT((evaluate(spec, t, 1) - d1_fd).cwiseAbs().maxCoeff(), 1e-5) << "t=" << t;
    }
}

TEST(Evaluate, FourierSecondDerivativeMatchesFiniteDifferences) {
    const auto spec = make_basis(BasisKind::fourier, 0, 7);
    const double h = 1e-4;
    for (double t : {0.1, 0.37, 0.5, 0.93}) {
        const Eigen::VectorXd fd = (evaluate(spec, t + h) - 2.0 * evaluate(spec, t) + evaluate(spec, t - h)) / (h * h);
        EXPECT_LT((evaluate(spec, t, 2) - fd).cwiseAbs().maxCoeff(), 1e-3 * (1.0 + fd.cwiseAbs().maxCoeff()));
    }
}

TEST(Gram, DegreeZeroIsQuarterIdentity) {
    const auto g = gram(make_basis(BasisKind::bspline, 0, 4));
    EXPECT_LT((g.B - 0.25 * Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(g.B2, Eigen::MatrixXd::Zero(4, 4));
}

TEST(Gram, FourierIsIdentity) {
    const auto g = gram(make_basis(BasisKind::fourier, 0, 5));
    EXPECT_EQ(g.B, Eigen::MatrixXd::Identity(5, 5));
    EXPECT_NEAR(g.B2(1, 1), std::pow(2.0 * std::numbers::pi, 4), 1e-9);
    EXPECT_NEAR(g.B2(3, 3), std::pow(4.0 * std::numbers::pi, 4), 1e-7);
    EXPECT_EQ(g.B2(0, 0), 0.0);
}

TEST(Gram, CubicMatchesDenseSimpson) {
    const auto spec = make_basis(BasisKind::bspline, 3, 6);
    const auto g = gram(spec);
    for (int a = 0; a < 6; ++a)
        for (int b = a; b < 6; ++b) {
            const double oracle = oracle::simpson(
                [&](double t) {
                    const auto v = evaluate(spec, t);
                    return v[a] * v[b];
                },
                60000);
            EXPECT_NEAR(g.B(a, b), oracle, 1e-10) << a << "," << b;
        }
    // Second-derivative products are only C0 at knots; compare relative to scale.
    const double scale = g.B2.cwiseAbs().maxCoeff();
    for (int a = 0; a < 6; ++a)
        for (int b = a; b < 6; ++b) {
            const double oracle = oracle::simpson(
                [&](double t) {
                    const auto v = evaluate(spec, t, 2);
                    return v[a] * v[b];
                },
                60000);
            EXPECT_NEAR(g.B2(a, b), oracle, 1e-8 * scale) << a << "," << b;
        }
}

TEST(Gram, SymmetryAndDefiniteness) {
    for (const auto& spec : {make_basis(BasisKind::bspline, 3, 20), make_basis(BasisKind::bspline, 3, 4),
                             make_basis(BasisKind::bspline, 2, 9), make_basis(BasisKind::bspline, 1, 5),
                             make_basis(BasisKind::fourier, 0, 9)}) {
        const auto g = gram(spec);
        EXPECT_LT((g.B - g.B.transpose()).cwiseAbs().maxCoeff(), 1e-14);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eb(g.B), eb2(g.B2);
        EXPECT_GT(eb.eigenvalues().minCoeff(), 0.0);
        EXPECT_GE(eb2.eigenvalues().minCoeff(), -1e-10 * std::max(1.0, eb2.eigenvalues().maxCoeff()));
        for (double lambda : {0.0, 1e-3, 1.0, 1e3}) {
            Eigen::LLT<Eigen::MatrixXd> llt(g.B + lambda * g.B2);
            EXPECT_EQ(llt.info(), Eigen::Success);
        }
    }
}

TEST(Gram, CubicSecondDerivativeGramHasTwoDimensionalNullSpace) {
    const auto g = gram(make_basis(BasisKind::bspline, 3, 12));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.B2);
    const double top = es.eigenvalues().maxCoeff();
    EXPECT_LT(std::abs(es.eigenvalues()[0]), 1e-10 * top);
    EXPECT_LT(std::abs(es.eigenvalues()[1]), 1e-10 * top);
    EXPECT_GT(es.eigenvalues()[2], 1e-6 * top);
}

TEST(Gram, OversampledQuadratureAgrees) {
    for (int degree : {0, 1, 2, 3, 4}) {
        const auto spec = make_basis(BasisKind::bspline, degree, degree + 8);
        const auto g = gram(spec);
        const auto fine = gram(spec, 10 * gauss_nodes_for_degree(degree));
        EXPECT_LT((g.B - fine.B).cwiseAbs().maxCoeff(), 1e-12) << "degree " << degree;
        EXPECT_LT((g.B2 - fine.B2).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, fine.B2.cwiseAbs().maxCoeff()))
            << "degree " << degree;
    }
}

TEST(ProjectCurve, RecoversInSpanCoefficients) {
    const auto spec = make_basis(BasisKind::bspline, 3, 12);
    Rng rng(3);
    const Eigen::VectorXd theta = rng.normal_vector(12);
    const auto grid = uniform_grid(200);
    const Eigen::VectorXd values = design_matrix(spec, grid) * theta;
    const auto recovered = project_curve(spec, grid, std::span<const double>(values.data(), grid.size()));
    EXPECT_LT((recovered - theta).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ProjectCurve, SineReconstruction) {
    const auto spec = make_basis(BasisKind::bspline, 3, 20);
    const auto grid = uniform_grid(59);
    std::vector<double> xs;
    for (double t : grid) xs.push_back(std::sin(2.0 * std::numbers::pi * t));
    const auto theta = project_curve(spec, grid, xs);
    double worst = 0.0;
    for (double t : uniform_grid(2001))
        worst = std::max(worst, std::abs(evaluate(spec, t).dot(theta) - std::sin(2.0 * std::numbers::pi * t)));
    EXPECT_LT(worst, 1e-4);
}

TEST(ProjectCurve, TooFewPointsIsRankDeficient) {
    const auto spec = make_basis(BasisKind::bspline, 3, 20);
    const std::vector<double> ts{0.1, 0.5, 0.9}, xs{1.0, 2.0, 3.0};
    EXPECT_THROW(project_curve(spec, ts, xs), RankDeficient);
    // The roughness ridge pins down the remaining directions.
    const auto theta = project_curve(spec, ts, xs, 1e-3);
    EXPECT_TRUE(theta.allFinite());
}

TEST(ProjectCurve, LeftInverseOfEvaluation) {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const int M = 4 + static_cast<int>(rng.below(17));
        const auto spec = make_basis(BasisKind::bspline, 3, M);
        const auto grid = uniform_grid(3 * M + 7);
        CurveProjector projector(spec, grid);
        const Eigen::MatrixXd coefs = rng.normal_matrix(5, M);
        const Eigen::MatrixXd back = projector.project_rows(evaluate_rows(spec, coefs, grid));
        EXPECT_LT((back - coefs).cwiseAbs().maxCoeff(), 1e-9);
    }
}
