#pragma once

// Hybrid NIPALS: regularized direction extraction through the rank-one closed
// form, scores, residualization (deflation), coefficient recovery, prediction
// and the orthogonality diagnostics.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "hpls/basis.hpp"
#include "hpls/errors.hpp"
#include "hpls/hybrid.hpp"

namespace hpls {

// Relative tolerance below which q or ||scores||^2 count as zero.
inline constexpr double kDegeneracyTolerance = 1e-14;

// Cholesky factors of B + lambda_j B2, one per functional predictor. The
// matrices do not change across components, so a fit factors them once.
class PenalizedSystem {
public:
    PenalizedSystem(const GramPair& g, const PenaltyConfig& penalty) : penalty_(penalty) {
        factors_.reserve(static_cast<std::size_t>(penalty.size()));
        for (int j = 0; j < penalty.size(); ++j) {
            Eigen::LLT<Eigen::MatrixXd> llt(g.B + penalty[j] * g.B2);
            if (llt.info() != Eigen::Success)
                throw RankDeficient("B + lambda_" + std::to_string(j + 1) + " B2 is not positive definite");
            factors_.push_back(std::move(llt));
            matrices_.push_back(g.B + penalty[j] * g.B2);
        }
    }

    Eigen::VectorXd solve(int j, const Eigen::VectorXd& rhs) const {
        return factors_[static_cast<std::size_t>(j)].solve(rhs);
    }
    // gamma' (B + lambda_j B2) gamma, accumulated in extended precision
    long double quadratic(int j, const Eigen::VectorXd& gamma) const {
        const auto& C = matrices_[static_cast<std::size_t>(j)];
        long double total = 0.0L;
        for (Eigen::Index a = 0; a < C.rows(); ++a)
            for (Eigen::Index b = 0; b < C.cols(); ++b)
                total += static_cast<long double>(gamma[a]) * C(a, b) * gamma[b];
        return total;
    }
    const PenaltyConfig& penalty() const { return penalty_; }
    int size() const { return static_cast<int>(factors_.size()); }

private:
    PenaltyConfig penalty_;
    std::vector<Eigen::LLT<Eigen::MatrixXd>> factors_;
    std::vector<Eigen::MatrixXd> matrices_;
};

struct Direction {
    HybridElement xi;
    double q = 0.0;  // normalizer; xi'(B + Lambda B'')xi = 1
};

// Upper bound on q: ||y||^2 times the total predictor energy.
inline double problem_scale(const HybridDataset& data, const GramPair& g) {
    return data.y.squaredNorm() * (functional_energy(data, g) + data.Z.squaredNorm());
}

// `reference_scale` fixes the degeneracy threshold; nonpositive means the scale of `data`.
inline Direction fit_direction(const HybridDataset& data, const GramPair& g, const PenalizedSystem& system,
                               double reference_scale = 0.0) {
    if (system.size() != data.K()) check_penalty(system.penalty(), data.K());
    const int K = data.K(), M = data.M(), p = data.p();

    std::vector<Eigen::VectorXd> u(static_cast<std::size_t>(K)), solved(static_cast<std::size_t>(K));
    double q = 0.0;
    for (int j = 0; j < K; ++j) {
        u[static_cast<std::size_t>(j)] = g.B * (data.theta[static_cast<std::size_t>(j)].transpose() * data.y);
        solved[static_cast<std::size_t>(j)] = system.solve(j, u[static_cast<std::size_t>(j)]);
        q += u[static_cast<std::size_t>(j)].dot(solved[static_cast<std::size_t>(j)]);
    }
    const Eigen::VectorXd v = data.Z.transpose() * data.y;
    q += v.squaredNorm();

    const double scale = reference_scale > 0.0 ? reference_scale : problem_scale(data, g);
    if (!(q > kDegeneracyTolerance * scale))
        throw DegenerateResponse("response is uncorrelated with every predictor (q = " + std::to_string(q) + ")");

    const double root_q = std::sqrt(q);
    Direction out{HybridElement(K, M, p), q};
    double covariance = 0.0;  // y' rho, computed without forming the scores
    for (int j = 0; j < K; ++j) {
        out.xi.functional(j) = solved[static_cast<std::size_t>(j)] / root_q;
        covariance += u[static_cast<std::size_t>(j)].dot(out.xi.functional(j));
    }
    out.xi.scalar() = v / root_q;
    covariance += v.dot(out.xi.scalar());

    // Renormalize against the constraint.
    long double constraint = 0.0L;
    for (int i = 0; i < p; ++i) constraint += static_cast<long double>(out.xi.scalar()[i]) * out.xi.scalar()[i];
    for (int j = 0; j < K; ++j) constraint += system.quadratic(j, out.xi.functional(j));
    out.xi *= static_cast<double>((covariance < 0.0 ? -1.0L : 1.0L) / std::sqrt(constraint));
    return out;
}

inline Direction fit_direction(const HybridDataset& data, const GramPair& g, const PenaltyConfig& penalty) {
    check_penalty(penalty, data.K());
    return fit_direction(data, g, PenalizedSystem(g, penalty));
}

// rho' = sum_j gamma_j' B Theta_j' + zeta' Z'
inline Eigen::VectorXd compute_scores(const HybridDataset& data, const HybridElement& direction, const GramPair& g) {
    if (direction.num_functional() != data.K() || direction.basis_size() != data.M() ||
        direction.num_scalar() != data.p())
        throw ShapeMismatch("direction shape does not match the dataset");
    Eigen::VectorXd scores = data.Z * direction.scalar();
    for (int j = 0; j < data.K(); ++j)
        scores.noalias() += data.theta[static_cast<std::size_t>(j)] * (g.B * direction.functional(j));
    return scores;
}

struct Residualized {
    HybridDataset data;
    HybridElement loading;  // delta
    double slope = 0.0;     // nu
};

inline Residualized residualize(const HybridDataset& data, const Eigen::VectorXd& scores,
                                const HybridElement& direction) {
    if (scores.size() != data.n()) throw ShapeMismatch("score vector length differs from sample count");
    const double norm2 = scores.squaredNorm();
    if (!(norm2 > 0.0)) throw ZeroScoreVector("score vector is zero; no signal left to extract");

    Residualized out{data, HybridElement(direction.num_functional(), direction.basis_size(), direction.num_scalar()), 0.0};
    for (int j = 0; j < data.K(); ++j) {
        auto& block = out.data.theta[static_cast<std::size_t>(j)];
        out.loading.functional(j) = block.transpose() * scores / norm2;
        block.noalias() -= scores * out.loading.functional(j).transpose();
    }
    out.loading.scalar() = data.Z.transpose() * scores / norm2;
    out.data.Z.noalias() -= scores * out.loading.scalar().transpose();
    out.slope = data.y.dot(scores) / norm2;
    out.data.y -= out.slope * scores;
    return out;
}

struct PlsComponent {
    HybridElement direction;  // xi
    HybridElement loading;    // delta
    double slope = 0.0;       // nu
    Eigen::VectorXd scores;   // rho
    double normalizer = 0.0;  // q
};

struct FitOptions {
    bool keep_history = false;
};

inline Standardization identity_standardization(int K, int M, int p) {
    Standardization tr;
    for (int j = 0; j < K; ++j) {
        tr.functional_centers.push_back(Eigen::VectorXd::Zero(M));
        tr.functional_scales.push_back(1.0);
    }
    tr.scalar_means = Eigen::VectorXd::Zero(p);
    tr.scalar_scales = Eigen::VectorXd::Ones(p);
    return tr;
}

struct PlsModel {
    std::vector<PlsComponent> components;
    std::vector<HybridElement> iotas;
    HybridElement beta;
    PenaltyConfig penalty;
    GramPair gram;
    std::optional<BasisSpec> basis;
    Standardization transform;
    int requested_components = 0;
    bool truncated = false;
    std::vector<double> residual_norms;       // ||y^[l]||^2, l = 1..L+1
    std::vector<HybridDataset> history;       // data entering each component, if kept

    int num_components() const { return static_cast<int>(components.size()); }
    double response_center() const { return transform.response_center; }
};

// Coefficient built from the first `count` components.
inline HybridElement beta_prefix(const PlsModel& model, int count) {
    count = std::clamp(count, 0, model.num_components());
    HybridElement beta = model.beta * 0.0;
    for (int l = 0; l < count; ++l)
        beta += model.components[static_cast<std::size_t>(l)].slope * model.iotas[static_cast<std::size_t>(l)];
    return beta;
}

inline PlsModel fit(const HybridDataset& data, const GramPair& g, const PenaltyConfig& penalty, int num_components,
                    FitOptions options = {}) {
    data.validate();
    check_penalty(penalty, data.K());
    if (num_components < 1) throw DomainError("number of components must be >= 1");

    PlsModel model;
    model.penalty = penalty;
    model.gram = g;
    model.transform = identity_standardization(data.K(), data.M(), data.p());
    model.requested_components = num_components;
    const PenalizedSystem system(g, penalty);

    HybridDataset current = data;
    model.residual_norms.push_back(current.y.squaredNorm());
    const double energy = functional_energy(data, g) + data.Z.squaredNorm();
    const double scale = data.y.squaredNorm() * energy;
    for (int l = 0; l < num_components; ++l) {
        Direction dir;
        try {
            dir = fit_direction(current, g, system, scale);
        } catch (const DegenerateResponse&) {
            if (l == 0) throw;
            model.truncated = true;
            break;
        }
        Eigen::VectorXd scores = compute_scores(current, dir.xi, g);
        const double bound = inner_product(dir.xi, dir.xi, g) * energy;
        if (!(scores.squaredNorm() > kDegeneracyTolerance * bound)) {
            if (l == 0) throw DegenerateResponse("first component has vanishing scores");
            model.truncated = true;
            break;
        }
        if (options.keep_history) model.history.push_back(current);
        auto step = residualize(current, scores, dir.xi);
        model.components.push_back(PlsComponent{std::move(dir.xi), std::move(step.loading), step.slope,
                                                std::move(scores), dir.q});
        current = std::move(step.data);
        model.residual_norms.push_back(current.y.squaredNorm());
    }

    // iota_l = xi_l - sum_{u<l} <delta_u, xi_l>_H iota_u ; beta = sum_l nu_l iota_l
    model.beta = HybridElement(data.K(), data.M(), data.p());
    for (int l = 0; l < model.num_components(); ++l) {
        const auto& comp = model.components[static_cast<std::size_t>(l)];
        HybridElement iota = comp.direction;
        for (int u = 0; u < l; ++u)
            iota -= inner_product(model.components[static_cast<std::size_t>(u)].loading, comp.direction, g) *
                    model.iotas[static_cast<std::size_t>(u)];
        model.beta += comp.slope * iota;
        model.iotas.push_back(std::move(iota));
    }
    return model;
}

// Standardizes the raw data, fits, and stores the transform and basis.
inline PlsModel fit_raw(const HybridDataset& raw, const BasisSpec& basis, const GramPair& g,
                        const PenaltyConfig& penalty, int num_components, FitOptions options = {}) {
    auto standardized = standardize(raw, g);
    auto model = fit(standardized.data, g, penalty, num_components, options);
    model.transform = std::move(standardized.transform);
    model.basis = basis;
    return model;
}

// In-sample fitted values (standardized response scale): sum_l nu_l rho_l.
inline Eigen::VectorXd fitted_from_scores(const PlsModel& model, int count = -1) {
    if (count < 0) count = model.num_components();
    const auto n = model.components.empty() ? 0 : model.components.front().scores.size();
    Eigen::VectorXd fitted = Eigen::VectorXd::Zero(n);
    for (int l = 0; l < std::min(count, model.num_components()); ++l)
        fitted += model.components[static_cast<std::size_t>(l)].slope * model.components[static_cast<std::size_t>(l)].scores;
    return fitted;
}

inline double predict(const PlsModel& model, const HybridElement& raw_sample, int count = -1) {
    const auto standardized = apply_standardization(model.transform, raw_sample);
    const HybridElement beta = count < 0 ? model.beta : beta_prefix(model, count);
    return inner_product(beta, standardized, model.gram) + model.response_center();
}

inline Eigen::VectorXd predict(const PlsModel& model, const std::vector<HybridElement>& raw_samples, int count = -1) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(raw_samples.size()));
    for (std::size_t i = 0; i < raw_samples.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = predict(model, raw_samples[i], count);
    return out;
}

// Batch prediction on a raw dataset (its response column is ignored).
inline Eigen::VectorXd predict(const PlsModel& model, const HybridDataset& raw, int count = -1) {
    HybridDataset standardized = apply_standardization(model.transform, raw);
    const HybridElement beta = count < 0 ? model.beta : beta_prefix(model, count);
    return compute_scores(standardized, beta, model.gram).array() + model.response_center();
}

// The fitted coefficient mapped back to raw predictor units:
// y_hat = intercept + sum_j <beta_j, X_j>_{L2} + b' z.
struct RawCoefficients {
    HybridElement beta;
    double intercept = 0.0;
};

inline RawCoefficients raw_coefficients(const PlsModel& model, int count = -1) {
    const auto& tr = model.transform;
    const HybridElement beta = count < 0 ? model.beta : beta_prefix(model, count);
    RawCoefficients out{HybridElement(beta.num_functional(), beta.basis_size(), beta.num_scalar()), tr.response_center};
    for (int j = 0; j < beta.num_functional(); ++j) {
        out.beta.functional(j) = beta.functional(j) / tr.functional_scales[static_cast<std::size_t>(j)];
        out.intercept -= out.beta.functional(j).dot(model.gram.B * tr.functional_centers[static_cast<std::size_t>(j)]);
    }
    out.beta.scalar() = (beta.scalar().array() * std::sqrt(tr.omega) / tr.scalar_scales.array()).matrix();
    out.intercept -= out.beta.scalar().dot(tr.scalar_means);
    return out;
}

inline double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::VectorXd ca = a.array() - a.mean();
    const Eigen::VectorXd cb = b.array() - b.mean();
    const double denom = std::sqrt(ca.squaredNorm() * cb.squaredNorm());
    return denom > 0.0 ? ca.dot(cb) / denom : 0.0;
}

struct PairDeviation {
    int earlier = 0;            // k (0-based)
    int later = 0;              // l (0-based), k < l
    double annihilation = 0.0;  // sqrt(sum_i <xi_k, W_i^[l]>_H^2)
    double direction_inner = 0.0;  // |<xi_k, xi_l>_{H,Lambda}|
    double score_correlation = 0.0;  // |cor(rho_k, rho_l)|
};

struct GeometryReport {
    std::vector<PairDeviation> pairs;
    double max_annihilation = 0.0;
    double max_direction_inner = 0.0;
    double max_score_correlation = 0.0;
    double max_norm_deviation = 0.0;           // max_l |<xi_l, xi_l>_{H,Lambda} - 1|
    std::vector<double> response_correlations;  // |cor(y, rho_l)|
};

// `history[l]` is the (standardized, residualized) data entering component l;
// fit with FitOptions{.keep_history = true} to retain it.
inline GeometryReport diagnostics(const PlsModel& model, const std::vector<HybridDataset>& history) {
    GeometryReport report;
    const int L = model.num_components();
    const auto& g = model.gram;
    if (static_cast<int>(history.size()) < L)
        throw ShapeMismatch("diagnostics need the dataset entering every component");
    const Eigen::VectorXd& y = history.front().y;
    for (int l = 0; l < L; ++l) {
        const auto& comp = model.components[static_cast<std::size_t>(l)];
        report.response_correlations.push_back(std::abs(correlation(y, comp.scores)));
        report.max_norm_deviation = std::max(
            report.max_norm_deviation,
            std::abs(inner_product_rough(comp.direction, comp.direction, g, model.penalty) - 1.0));
        for (int k = 0; k < l; ++k) {
            const auto& earlier = model.components[static_cast<std::size_t>(k)];
            PairDeviation d;
            d.earlier = k;
            d.later = l;
            d.annihilation = compute_scores(history[static_cast<std::size_t>(l)], earlier.direction, g).norm();
            d.direction_inner = std::abs(inner_product_rough(earlier.direction, comp.direction, g, model.penalty));
            d.score_correlation = std::abs(correlation(earlier.scores, comp.scores));
            report.max_annihilation = std::max(report.max_annihilation, d.annihilation);
            report.max_direction_inner = std::max(report.max_direction_inner, d.direction_inner);
            report.max_score_correlation = std::max(report.max_score_correlation, d.score_correlation);
            report.pairs.push_back(d);
        }
    }
    return report;
}

inline GeometryReport diagnostics(const PlsModel& model) { return diagnostics(model, model.history); }

} // namespace hpls
