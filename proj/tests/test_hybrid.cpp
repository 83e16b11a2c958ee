#include <gtest/gtest.h>

#include <cmath>

#include "hpls/hybrid.hpp"
#include "hpls/random.hpp"
#include "hpls/synthetic.hpp"
#include "test_support.hpp"

using namespace hpls;
using hpls::oracle::random_element;

namespace {

HybridDataset single_block(const Eigen::VectorXd& theta_col, const Eigen::MatrixXd& Z) {
    HybridDataset d;
    d.theta.push_back(theta_col);
    d.Z = Z;
    d.y = Eigen::VectorXd::Zero(theta_col.size());
    return d;
}

double block_variance(const Eigen::MatrixXd& block, const GramPair& g) {
    return (block * g.B).cwiseProduct(block).sum() / block.rows();
}

} // namespace

TEST(HybridElement, BlockwiseVectorSpace) {
    Rng rng(1);
    const auto a = random_element(rng, 2, 5, 3), b = random_element(rng, 2, 5, 3);
    const auto s = a + 2.5 * b;
    EXPECT_EQ(s.stacked(), a.stacked() + 2.5 * b.stacked());
    EXPECT_EQ((a - a).stacked(), Eigen::VectorXd::Zero(13));
    EXPECT_EQ(s.functional(1), a.functional(1) + 2.5 * b.functional(1));
    EXPECT_THROW(a + random_element(rng, 2, 4, 3), ShapeMismatch);
    EXPECT_THROW(HybridElement(0, 5, 1), ShapeMismatch);
}

TEST(PenaltyConfig, RejectsNegativeAndNonFinite) {
    EXPECT_THROW(PenaltyConfig({-1.0}), DomainError);
    EXPECT_THROW(PenaltyConfig({std::nan("")}), DomainError);
    EXPECT_NO_THROW(PenaltyConfig({0.0, 1e6}));
}

TEST(InnerProduct, ZeroElement) {
    Rng rng(2);
    const auto g = gram(make_basis(BasisKind::bspline, 3, 7));
    const auto h = random_element(rng, 2, 7, 2);
    EXPECT_EQ(inner_product(h, HybridElement(2, 7, 2), g, 3.0), 0.0);
}

TEST(InnerProduct, FourierReducesToDotProducts) {
    const auto g = gram(make_basis(BasisKind::fourier, 0, 2));
    HybridElement h1(1, 2, 1), h2(1, 2, 1);
    h1.functional(0) << 1, 0;
    h2.functional(0) << 0, 1;
    h1.scalar() << 2;
    h2.scalar() << 3;
    EXPECT_DOUBLE_EQ(inner_product(h1, h2, g, 1.0), 6.0);
}

TEST(InnerProduct, MatchesQuadratureOfCurves) {
    const auto spec = make_basis(BasisKind::bspline, 3, 9);
    const auto g = gram(spec);
    Rng rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        const auto h1 = random_element(rng, 2, 9, 3), h2 = random_element(rng, 2, 9, 3);
        const double omega = 0.5 + trial;
        double oracle = omega * h1.scalar().dot(h2.scalar());
        for (int j = 0; j < 2; ++j)
            oracle += oracle::simpson(
                [&](double t) {
                    const Eigen::VectorXd b = evaluate(spec, t);
                    return b.dot(h1.functional(j)) * b.dot(h2.functional(j));
                },
                6000);
        EXPECT_NEAR(inner_product(h1, h2, g, omega), oracle, 1e-8);
    }
}

TEST(InnerProduct, ShapeMismatch) {
    const auto g = gram(make_basis(BasisKind::bspline, 3, 6));
    EXPECT_THROW(inner_product(HybridElement(1, 6, 2), HybridElement(1, 6, 3), g), ShapeMismatch);
    EXPECT_THROW(inner_product_rough(HybridElement(2, 6, 0), HybridElement(1, 6, 0), g, PenaltyConfig({0, 0})),
                 ShapeMismatch);
    EXPECT_THROW(inner_product_rough(HybridElement(2, 6, 0), HybridElement(2, 6, 0), g, PenaltyConfig({0})),
                 ShapeMismatch);
}

TEST(InnerProductRough, ZeroPenaltyEqualsPlain) {
    const auto g = gram(make_basis(BasisKind::bspline, 3, 8));
    Rng rng(4);
    const auto a = random_element(rng, 3, 8, 2), b = random_element(rng, 3, 8, 2);
    EXPECT_NEAR(inner_product_rough(a, b, g, PenaltyConfig::uniform(3, 0.0)), inner_product(a, b, g, 1.0), 1e-14);
}

TEST(InnerProductRough, PiecewiseConstantIgnoresPenalty) {
    const auto g = gram(make_basis(BasisKind::bspline, 0, 6));
    Rng rng(5);
    const auto a = random_element(rng, 2, 6, 1), b = random_element(rng, 2, 6, 1);
    EXPECT_EQ(inner_product_rough(a, b, g, PenaltyConfig({3.0, 100.0})), inner_product(a, b, g));
}

TEST(InnerProduct, BilinearSymmetricPositive) {
    Rng rng(6);
    for (const auto& spec : {make_basis(BasisKind::bspline, 3, 10), make_basis(BasisKind::fourier, 0, 7)}) {
        const auto g = gram(spec);
        const int M = spec.size;
        const PenaltyConfig pen({0.01, 1.0});
        for (int trial = 0; trial < 50; ++trial) {
            const auto h1 = random_element(rng, 2, M, 4), h2 = random_element(rng, 2, M, 4),
                       h3 = random_element(rng, 2, M, 4);
            const double alpha = rng.normal();
            const double omega = rng.uniform(0.1, 5.0);
            EXPECT_LT(std::abs(inner_product(h1 + alpha * h2, h3, g, omega) - inner_product(h1, h3, g, omega) -
                               alpha * inner_product(h2, h3, g, omega)),
                      1e-10);
            EXPECT_LT(std::abs(inner_product_rough(h1 + alpha * h2, h3, g, pen) - inner_product_rough(h1, h3, g, pen) -
                               alpha * inner_product_rough(h2, h3, g, pen)),
                      1e-10 * std::max(1.0, std::abs(inner_product_rough(h1, h3, g, pen))));
            EXPECT_NEAR(inner_product(h1, h2, g, omega), inner_product(h2, h1, g, omega), 1e-12);
            EXPECT_NEAR(inner_product_rough(h1, h2, g, pen), inner_product_rough(h2, h1, g, pen),
                        1e-12 * std::max(1.0, std::abs(inner_product_rough(h1, h2, g, pen))));
            EXPECT_GT(inner_product(h1, h1, g, omega), 0.0);
            EXPECT_GT(inner_product_rough(h1, h1, g, pen), 0.0);
        }
    }
}

TEST(InnerProduct, ScalingByRootOmegaEqualsWeightedProduct) {
    Rng rng(7);
    const auto g = gram(make_basis(BasisKind::bspline, 3, 8));
    for (int trial = 0; trial < 20; ++trial) {
        const double omega = rng.uniform(0.01, 20.0);
        auto a = random_element(rng, 2, 8, 3), b = random_element(rng, 2, 8, 3);
        const double weighted = inner_product(a, b, g, omega);
        a.scalar() *= std::sqrt(omega);
        b.scalar() *= std::sqrt(omega);
        EXPECT_NEAR(inner_product(a, b, g, 1.0), weighted, 1e-12 * std::max(1.0, std::abs(weighted)));
    }
}

TEST(ComputeOmega, EqualEnergiesGiveOne) {
    const auto g = gram(make_basis(BasisKind::fourier, 0, 1));
    Eigen::VectorXd theta(2);
    theta << 1, -1;
    Eigen::MatrixXd Z(2, 1);
    Z << -1, 1;
    EXPECT_DOUBLE_EQ(compute_omega(single_block(theta, Z), g), 1.0);
}

TEST(ComputeOmega, DirectRatio) {
    const auto g = gram(make_basis(BasisKind::fourier, 0, 1));
    Eigen::VectorXd theta(2);
    theta << 3, 1;  // energy 10
    Eigen::MatrixXd Z(2, 1);
    Z << 1, 1;  // energy 2
    EXPECT_DOUBLE_EQ(compute_omega(single_block(theta, Z), g), 5.0);
}

TEST(ComputeOmega, ZeroScalarBlockIsDegenerate) {
    const auto g = gram(make_basis(BasisKind::fourier, 0, 1));
    EXPECT_THROW(compute_omega(single_block(Eigen::VectorXd::Ones(3), Eigen::MatrixXd::Zero(3, 2)), g),
                 DegenerateScalarBlock);
}

TEST(ComputeOmega, BalancesEnergiesAfterScaling) {
    const auto spec = make_scenario(Scenario::cross_modal, 300, 17);
    const auto sim = generate(spec);
    const auto g = gram(spec.basis);
    const auto s = standardize(sim.raw, g);
    const double functional = functional_energy(s.data, g);
    const double scalar = s.data.Z.squaredNorm();
    EXPECT_NEAR(scalar, functional, 1e-10 * functional);
}

namespace {

void expect_standardized(const StandardizedData& s, const GramPair& g) {
    const auto& d = s.data;
    for (const auto& block : d.theta) {
        EXPECT_LT(block.colwise().mean().cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_NEAR(block_variance(block, g), 1.0, 1e-8);
    }
    if (d.p() > 0) {
        EXPECT_LT(d.Z.colwise().mean().cwiseAbs().maxCoeff(), 1e-10);
        for (int c = 0; c < d.p(); ++c)
            EXPECT_NEAR(d.Z.col(c).squaredNorm() / d.n(), s.transform.omega, 1e-8 * s.transform.omega);
    }
    EXPECT_LT(std::abs(d.y.mean()), 1e-10);
}

} // namespace

TEST(Standardize, PostconditionsOnRandomData) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        auto inst = oracle::random_instance(seed);
        HybridDataset raw = inst.data;
        for (auto& block : raw.theta) block = (3.0 * block).rowwise() + rng.normal_vector(block.cols()).transpose();
        raw.Z = (raw.Z * 7.0).rowwise() + rng.normal_vector(raw.p()).transpose();
        raw.y = raw.y.array() + 4.0;
        const auto s = standardize(raw, inst.gram);
        expect_standardized(s, inst.gram);
        if (raw.p() > 0) {
            EXPECT_NEAR(s.transform.omega, static_cast<double>(raw.K()) / raw.p(), 1e-10);
        }
        EXPECT_NEAR(s.transform.response_center, raw.y.mean(), 1e-12);
    }
}

TEST(Standardize, NuisanceScenarioHasUnitIntegratedVariance) {
    const auto spec = make_scenario(Scenario::nuisance, 400, 3);
    const auto g = gram(spec.basis);
    const auto s = standardize(generate(spec).raw, g);
    for (const auto& block : s.data.theta) EXPECT_NEAR(block_variance(block, g), 1.0, 1e-8);
}

TEST(Standardize, Idempotent) {
    const auto inst = oracle::random_instance(42, 3, 10, 6);
    const auto once = standardize(inst.data, inst.gram);
    const auto twice = standardize(once.data, inst.gram);
    for (int j = 0; j < once.data.K(); ++j)
        EXPECT_LT((once.data.theta[j] - twice.data.theta[j]).cwiseAbs().maxCoeff(), 1e-10);
    if (once.data.p() > 0) {
        EXPECT_LT((once.data.Z - twice.data.Z).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_NEAR(once.transform.omega, twice.transform.omega, 1e-10);
    }
    EXPECT_LT((once.data.y - twice.data.y).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Standardize, ConstantScalarColumnIsRejected) {
    auto inst = oracle::random_instance(8, 2, 8, 3);
    if (inst.data.p() == 0) inst.data.Z = Eigen::MatrixXd::Random(inst.data.n(), 2);
    inst.data.Z.col(inst.data.p() - 1).setConstant(2.5);
    try {
        standardize(inst.data, inst.gram);
        FAIL() << "expected ZeroVariancePredictor";
    } catch (const ZeroVariancePredictor& e) {
        EXPECT_NE(std::string(e.what()).find("scalar column " + std::to_string(inst.data.p())), std::string::npos);
    }
}

TEST(Standardize, ConstantCurveIsRejected) {
    auto inst = oracle::random_instance(9, 2, 8, 2);
    inst.data.theta[0].rowwise() = Eigen::RowVectorXd::LinSpaced(inst.data.M(), -1.0, 1.0);
    EXPECT_THROW(standardize(inst.data, inst.gram), ZeroVariancePredictor);
}

TEST(Standardize, NeedsTwoSamples) {
    const auto g = gram(make_basis(BasisKind::fourier, 0, 1));
    EXPECT_THROW(standardize(single_block(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Ones(1, 1)), g), EmptyInput);
}

TEST(ApplyStandardization, TrainingSampleMatchesStandardizedRow) {
    const auto inst = oracle::random_instance(10, 3, 10, 4);
    HybridDataset raw = inst.data;
    raw.y = raw.y.array() + 1.0;
    const auto s = standardize(raw, inst.gram);
    for (int i = 0; i < raw.n(); ++i) {
        const auto mapped = apply_standardization(s.transform, raw.sample(i));
        EXPECT_LT((mapped.stacked() - s.data.sample(i).stacked()).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(ApplyStandardization, MeanSampleMapsToZero) {
    const auto inst = oracle::random_instance(11, 2, 8, 3);
    const auto s = standardize(inst.data, inst.gram);
    HybridElement mean(inst.data.K(), inst.data.M(), inst.data.p());
    for (int j = 0; j < inst.data.K(); ++j) mean.functional(j) = inst.data.theta[j].colwise().mean().transpose();
    mean.scalar() = inst.data.Z.colwise().mean().transpose();
    EXPECT_LT(apply_standardization(s.transform, mean).stacked().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ApplyStandardization, BatchEqualsLoop) {
    const auto inst = oracle::random_instance(12, 3, 9, 5);
    const auto s = standardize(inst.data, inst.gram);
    const auto fresh = oracle::random_instance(12, 3, 9, 5).data;
    const auto batch = apply_standardization(s.transform, fresh);
    for (int i = 0; i < fresh.n(); ++i)
        EXPECT_LT((batch.sample(i).stacked() - apply_standardization(s.transform, fresh.sample(i)).stacked())
                      .cwiseAbs()
                      .maxCoeff(),
                  1e-12);
}

TEST(ApplyStandardization, ShapeMismatch) {
    const auto inst = oracle::random_instance(13, 2, 8, 3);
    const auto s = standardize(inst.data, inst.gram);
    EXPECT_THROW(apply_standardization(s.transform, HybridElement(inst.data.K(), inst.data.M() + 1, inst.data.p())),
                 ShapeMismatch);
}

TEST(HybridDataset, ValidateReportsRowMismatch) {
    HybridDataset d;
    d.theta.push_back(Eigen::MatrixXd::Zero(4, 3));
    d.Z = Eigen::MatrixXd::Zero(5, 1);
    d.y = Eigen::VectorXd::Zero(4);
    EXPECT_THROW(d.validate(), ShapeMismatch);
}
