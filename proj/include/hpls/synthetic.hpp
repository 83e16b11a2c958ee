#pragma once

// Seeded generators for the four simulation designs: geometry validation,
// coefficient estimation, orthogonal nuisance variance and function-driven
// cross-modality correlation.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "hpls/basis.hpp"
#include "hpls/errors.hpp"
#include "hpls/hybrid.hpp"
#include "hpls/random.hpp"

namespace hpls {

enum class Scenario { geometry, beta_estimation, nuisance, cross_modal };

inline std::string to_string(Scenario s) {
    switch (s) {
    case Scenario::geometry: return "geometry";
    case Scenario::beta_estimation: return "beta_estimation";
    case Scenario::nuisance: return "nuisance";
    case Scenario::cross_modal: return "cross_modal";
    }
    return "unknown";
}

inline Scenario scenario_from_string(const std::string& name) {
    if (name == "geometry") return Scenario::geometry;
    if (name == "beta_estimation") return Scenario::beta_estimation;
    if (name == "nuisance") return Scenario::nuisance;
    if (name == "cross_modal") return Scenario::cross_modal;
    throw UnknownScenario("unknown scenario '" + name + "'");
}

struct ScenarioSpec {
    Scenario scenario = Scenario::geometry;
    int n = 200;
    std::uint64_t seed = 0;
    BasisSpec basis;
};

// Cubic B-splines with M = 15 for geometry, M = 20 otherwise.
inline ScenarioSpec make_scenario(Scenario scenario, int n, std::uint64_t seed) {
    const int M = scenario == Scenario::geometry ? 15 : 20;
    return ScenarioSpec{scenario, n, seed, make_basis(BasisKind::bspline, 3, M)};
}

struct GroundTruth {
    std::optional<HybridElement> beta;  // raw-scale coefficients, when the design has them
    Eigen::VectorXd latent_u;
    Eigen::VectorXd latent_v;
    Eigen::VectorXd signal;             // noiseless response
};

struct SimulatedData {
    HybridDataset raw;
    GroundTruth truth;
};

// Observation grid for curve-valued designs.
inline constexpr int kSimulationGridPoints = 101;

namespace detail {

inline Eigen::VectorXd sample_curve(const std::vector<double>& grid, auto&& f) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t g = 0; g < grid.size(); ++g) out[static_cast<Eigen::Index>(g)] = f(grid[g]);
    return out;
}

inline double sample_sd(const Eigen::VectorXd& x) {
    const double mean = x.mean();
    return std::sqrt((x.array() - mean).square().sum() / static_cast<double>(x.size() - 1));
}

// Coefficients of beta_1(t) = 2t sin(3 pi t) and beta_2(t) = 2 exp(-10 (t-0.5)^2).
inline std::vector<Eigen::VectorXd> true_functional_betas(const BasisSpec& basis) {
    const auto dense = uniform_grid(1001);
    CurveProjector projector(basis, dense);
    const double pi = std::numbers::pi;
    return {projector.project(sample_curve(dense, [&](double t) { return 2.0 * t * std::sin(3.0 * pi * t); })),
            projector.project(sample_curve(dense, [](double t) { return 2.0 * std::exp(-10.0 * (t - 0.5) * (t - 0.5)); }))};
}

inline SimulatedData generate_geometry(const ScenarioSpec& spec, Rng& rng) {
    const int n = spec.n;
    const double pi = std::numbers::pi;
    const auto grid = uniform_grid(kSimulationGridPoints);
    const auto G = static_cast<Eigen::Index>(grid.size());
    CurveProjector projector(spec.basis, grid);

    Eigen::MatrixXd A(50, 2);
    for (Eigen::Index r = 0; r < 50; ++r)
        for (Eigen::Index c = 0; c < 2; ++c) A(r, c) = rng.uniform(-1.0, 1.0);

    SimulatedData out;
    auto& truth = out.truth;
    truth.latent_u = rng.normal_vector(n, 10.0);
    truth.latent_v = rng.normal_vector(n, 0.1);

    const Eigen::VectorXd s2 = sample_curve(grid, [&](double t) { return std::sin(2.0 * pi * t); });
    const Eigen::VectorXd s10 = sample_curve(grid, [&](double t) { return std::sin(10.0 * pi * t); });
    Eigen::MatrixXd X1 = truth.latent_u * s2.transpose();
    Eigen::MatrixXd X2 = truth.latent_v * s10.transpose() + rng.normal_matrix(n, G, 0.01);

    Eigen::MatrixXd UV(n, 2);
    UV << truth.latent_u, truth.latent_v;
    Eigen::MatrixXd Z = UV * A.transpose() + rng.normal_matrix(n, 50);

    truth.signal = 0.5 * truth.latent_u + 10.0 * truth.latent_v;
    out.raw.theta = {projector.project_rows(X1), projector.project_rows(X2)};
    out.raw.Z = std::move(Z);
    out.raw.y = truth.signal + rng.normal_vector(n);
    return out;
}

// Shared by the coefficient-estimation and cross-modal designs: independent
// standard normal coefficients for X1; X2 mixes fresh noise (0.6) with X1 (0.4).
inline std::vector<Eigen::MatrixXd> mixed_coefficients(int n, int M, Rng& rng) {
    Eigen::MatrixXd theta1 = rng.normal_matrix(n, M);
    Eigen::MatrixXd theta2 = 0.6 * rng.normal_matrix(n, M) + 0.4 * theta1;
    return {std::move(theta1), std::move(theta2)};
}

inline SimulatedData generate_linear_model(const ScenarioSpec& spec, Rng& rng, int num_scalar,
                                           const Eigen::VectorXd& scalar_beta) {
    const int n = spec.n, M = spec.basis.size;
    if (M < num_scalar) throw InvalidBasisConfig("basis too small for this scenario");
    const auto g = gram(spec.basis);
    SimulatedData out;
    out.raw.theta = mixed_coefficients(n, M, rng);
    out.raw.Z = out.raw.theta[0].leftCols(num_scalar) + rng.normal_matrix(n, num_scalar, 0.5);

    const auto betas = true_functional_betas(spec.basis);
    HybridElement beta(2, M, num_scalar);
    beta.functional(0) = betas[0];
    beta.functional(1) = betas[1];
    beta.scalar() = scalar_beta;

    Eigen::VectorXd signal = out.raw.Z * scalar_beta;
    for (int j = 0; j < 2; ++j) signal += out.raw.theta[static_cast<std::size_t>(j)] * (g.B * betas[static_cast<std::size_t>(j)]);
    out.raw.y = signal + rng.normal_vector(n, 0.05 * sample_sd(signal));
    out.truth.signal = std::move(signal);
    out.truth.beta = std::move(beta);
    return out;
}

inline SimulatedData generate_nuisance(const ScenarioSpec& spec, Rng& rng) {
    const int n = spec.n;
    const double pi = std::numbers::pi;
    const auto grid = uniform_grid(kSimulationGridPoints);
    const auto G = static_cast<Eigen::Index>(grid.size());
    CurveProjector projector(spec.basis, grid);

    SimulatedData out;
    auto& truth = out.truth;
    truth.latent_u = rng.normal_vector(n);
    truth.signal = 2.0 * truth.latent_u;
    Eigen::VectorXd y = truth.signal + rng.normal_vector(n, 0.05 * sample_sd(truth.signal));

    // V: OLS residual of a standard normal draw on (1, y), scaled by 5.
    const Eigen::VectorXd draw = rng.normal_vector(n);
    const Eigen::VectorXd yc = y.array() - y.mean();
    const Eigen::VectorXd dc = draw.array() - draw.mean();
    truth.latent_v = 5.0 * (dc - (yc.dot(dc) / yc.squaredNorm()) * yc);

    auto curve = [&](double freq, bool use_cos) {
        return sample_curve(grid, [&](double t) { return use_cos ? std::cos(freq * pi * t) : std::sin(freq * pi * t); });
    };
    Eigen::MatrixXd X1 = truth.latent_v * curve(4.0, false).transpose() + truth.latent_u * curve(2.0, false).transpose() +
                         rng.normal_matrix(n, G, 0.1);
    Eigen::MatrixXd X2 = truth.latent_v * curve(4.0, true).transpose() + truth.latent_u * curve(2.0, true).transpose() +
                         rng.normal_matrix(n, G, 0.1);

    Eigen::MatrixXd Z(n, 5);
    for (int c = 0; c < 4; ++c) Z.col(c) = truth.latent_v + rng.normal_vector(n, 0.1);
    Z.col(4) = truth.latent_u + rng.normal_vector(n, 0.1);

    out.raw.theta = {projector.project_rows(X1), projector.project_rows(X2)};
    out.raw.Z = std::move(Z);
    out.raw.y = std::move(y);
    return out;
}

} // namespace detail

inline SimulatedData generate(const ScenarioSpec& spec) {
    if (spec.n < 4) throw DomainError("scenario needs n >= 4");
    Rng rng(spec.seed);
    switch (spec.scenario) {
    case Scenario::geometry: return detail::generate_geometry(spec, rng);
    case Scenario::beta_estimation: {
        Eigen::VectorXd b(2);
        b << 1.5, -1.0;
        return detail::generate_linear_model(spec, rng, 2, b);
    }
    case Scenario::nuisance: return detail::generate_nuisance(spec, rng);
    case Scenario::cross_modal: {
        Eigen::VectorXd b(6);
        b << 0.3, -0.2, 0.3, -0.2, 0.3, -0.2;
        return detail::generate_linear_model(spec, rng, 6, b);
    }
    }
    throw UnknownScenario("unknown scenario");
}

struct BetaError {
    std::vector<double> functional;  // relative L2 error per functional coefficient
    double scalar = 0.0;             // relative l2 error of the scalar coefficients
};

// Both arguments in raw coefficient units.
inline BetaError beta_error(const HybridElement& estimated, const GroundTruth& truth, const GramPair& g) {
    if (!truth.beta) throw ZeroTruthNorm("scenario has no true coefficient");
    const auto& beta = *truth.beta;
    estimated.require_same_shape(beta);
    BetaError err;
    for (int j = 0; j < beta.num_functional(); ++j) {
        const double norm2 = beta.functional(j).dot(g.B * beta.functional(j));
        if (!(norm2 > 0.0)) throw ZeroTruthNorm("true functional coefficient " + std::to_string(j + 1) + " is zero");
        const Eigen::VectorXd diff = estimated.functional(j) - beta.functional(j);
        err.functional.push_back(std::sqrt(diff.dot(g.B * diff) / norm2));
    }
    if (beta.num_scalar() > 0) {
        const double norm = beta.scalar().norm();
        if (!(norm > 0.0)) throw ZeroTruthNorm("true scalar coefficient is zero");
        err.scalar = (estimated.scalar() - beta.scalar()).norm() / norm;
    }
    return err;
}

} // namespace hpls
