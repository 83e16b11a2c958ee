#pragma once

// Principal component regression baseline: functional PCA per functional
// predictor (in the B metric), PCA on the scalar block, OLS on the pooled
// scores.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "hpls/basis.hpp"
#include "hpls/errors.hpp"
#include "hpls/hybrid.hpp"
#include "hpls/pls.hpp"

namespace hpls {

struct PcrModel {
    int components = 0;                               // L per source
    std::vector<Eigen::MatrixXd> functional_axes;     // M x L, phi' B phi = I
    std::vector<Eigen::VectorXd> functional_variances;
    Eigen::MatrixXd scalar_axes;                      // p x L, orthonormal
    Eigen::VectorXd scalar_variances;
    Eigen::VectorXd coefficients;                     // OLS weights on pooled scores
    double intercept = 0.0;                           // in raw response units
    Standardization transform;
    GramPair gram;
    std::optional<BasisSpec> basis;

    int num_sources() const {
        return static_cast<int>(functional_axes.size()) + (scalar_axes.cols() > 0 ? 1 : 0);
    }
};

namespace detail {

// Top eigenpairs of a symmetric matrix in descending order, each vector's
// largest-magnitude entry made positive.
inline void top_eigenpairs(const Eigen::MatrixXd& sym, int count, Eigen::MatrixXd& vectors, Eigen::VectorXd& values) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    const auto dim = sym.rows();
    vectors.resize(dim, count);
    values.resize(count);
    for (int l = 0; l < count; ++l) {
        const auto idx = dim - 1 - l;
        Eigen::VectorXd v = es.eigenvectors().col(idx);
        Eigen::Index arg;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0.0) v = -v;
        vectors.col(l) = v;
        values[l] = es.eigenvalues()[idx];
    }
}

} // namespace detail

// Pooled n x (K+1)L scores of standardized data: [X_1 | ... | X_K | Z].
inline Eigen::MatrixXd pcr_scores(const PcrModel& model, const HybridDataset& standardized) {
    const int L = model.components;
    const int K = static_cast<int>(model.functional_axes.size());
    Eigen::MatrixXd scores(standardized.n(), static_cast<Eigen::Index>(model.num_sources()) * L);
    for (int j = 0; j < K; ++j)
        scores.middleCols(static_cast<Eigen::Index>(j) * L, L) =
            standardized.theta[static_cast<std::size_t>(j)] * model.gram.B * model.functional_axes[static_cast<std::size_t>(j)];
    if (model.scalar_axes.cols() > 0)
        scores.middleCols(static_cast<Eigen::Index>(K) * L, L) = standardized.Z * model.scalar_axes;
    return scores;
}

inline PcrModel fit_pcr(const HybridDataset& data, const GramPair& g, int L) {
    data.validate();
    const int n = data.n(), M = data.M(), p = data.p();
    if (L < 1) throw DomainError("PCR needs at least one component per source");
    if (L > M || (p > 0 && L > p) || L > n - 1)
        throw DomainError("PCR components " + std::to_string(L) + " exceed min(M, p, n-1)");

    PcrModel model;
    model.components = L;
    model.gram = g;
    model.transform = identity_standardization(data.K(), M, p);

    // FPCA in the B metric: eigenvectors of B^{1/2} S B^{1/2}, mapped back by B^{-1/2}.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> bsolver(g.B);
    const Eigen::MatrixXd root = bsolver.operatorSqrt();
    const Eigen::MatrixXd inv_root = bsolver.operatorInverseSqrt();
    for (const auto& block : data.theta) {
        const Eigen::MatrixXd centered = block.rowwise() - block.colwise().mean();
        const Eigen::MatrixXd cov = centered.transpose() * centered / n;
        Eigen::MatrixXd vecs;
        Eigen::VectorXd vals;
        detail::top_eigenpairs(root * cov * root, L, vecs, vals);
        model.functional_axes.push_back(inv_root * vecs);
        model.functional_variances.push_back(vals);
    }
    if (p > 0) {
        const Eigen::MatrixXd centered = data.Z.rowwise() - data.Z.colwise().mean();
        detail::top_eigenpairs(centered.transpose() * centered / n, L, model.scalar_axes, model.scalar_variances);
    }

    const Eigen::MatrixXd scores = pcr_scores(model, data);
    Eigen::MatrixXd design(n, scores.cols() + 1);
    design << Eigen::VectorXd::Ones(n), scores;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < design.cols())
        throw RankDeficientScores("pooled score design has rank " + std::to_string(qr.rank()) + " < " +
                                  std::to_string(design.cols()) + " columns");
    const Eigen::VectorXd solution = qr.solve(data.y);
    model.intercept = solution[0];
    model.coefficients = solution.tail(scores.cols());
    return model;
}

inline PcrModel fit_pcr_raw(const HybridDataset& raw, const BasisSpec& basis, const GramPair& g, int L) {
    auto standardized = standardize(raw, g);
    auto model = fit_pcr(standardized.data, g, L);
    model.intercept += standardized.transform.response_center;
    model.transform = std::move(standardized.transform);
    model.basis = basis;
    return model;
}

// Predictions for raw samples (the dataset's response is ignored).
inline Eigen::VectorXd predict_pcr(const PcrModel& model, const HybridDataset& raw) {
    const HybridDataset standardized = apply_standardization(model.transform, raw);
    return (pcr_scores(model, standardized) * model.coefficients).array() + model.intercept;
}

inline double predict_pcr(const PcrModel& model, const HybridElement& raw_sample) {
    const HybridElement s = apply_standardization(model.transform, raw_sample);
    const int L = model.components;
    double out = model.intercept;
    for (int j = 0; j < static_cast<int>(model.functional_axes.size()); ++j) {
        const Eigen::VectorXd sc = model.functional_axes[static_cast<std::size_t>(j)].transpose() * (model.gram.B * s.functional(j));
        out += sc.dot(model.coefficients.segment(static_cast<Eigen::Index>(j) * L, L));
    }
    if (model.scalar_axes.cols() > 0) {
        const Eigen::VectorXd sc = model.scalar_axes.transpose() * s.scalar();
        out += sc.dot(model.coefficients.tail(L));
    }
    return out;
}

inline Eigen::VectorXd predict_pcr(const PcrModel& model, const std::vector<HybridElement>& raw_samples) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(raw_samples.size()));
    for (std::size_t i = 0; i < raw_samples.size(); ++i) out[static_cast<Eigen::Index>(i)] = predict_pcr(model, raw_samples[i]);
    return out;
}

// |cor| between score vectors of every pair of sources, per component index.
struct CrossModality {
    std::vector<std::string> pair_names;  // e.g. "X1-X2", "X1-Z"
    Eigen::MatrixXd values;               // components x pairs

    Eigen::VectorXd at(int component) const {
        if (component < 0 || component >= values.rows())
            throw IndexOutOfRange("component " + std::to_string(component) + " not in [0, " +
                                  std::to_string(values.rows()) + ")");
        return values.row(component).transpose();
    }
};

inline CrossModality cross_modality_correlations(const PcrModel& model, const HybridDataset& raw) {
    const HybridDataset standardized = apply_standardization(model.transform, raw);
    const Eigen::MatrixXd scores = pcr_scores(model, standardized);
    const int L = model.components;
    const int S = model.num_sources();
    const int K = static_cast<int>(model.functional_axes.size());
    auto name = [&](int s) { return s < K ? "X" + std::to_string(s + 1) : std::string("Z"); };

    CrossModality out;
    for (int a = 0; a < S; ++a)
        for (int b = a + 1; b < S; ++b) out.pair_names.push_back(name(a) + "-" + name(b));
    out.values.resize(L, static_cast<Eigen::Index>(out.pair_names.size()));
    for (int l = 0; l < L; ++l) {
        int col = 0;
        for (int a = 0; a < S; ++a)
            for (int b = a + 1; b < S; ++b)
                out.values(l, col++) = std::abs(correlation(scores.col(static_cast<Eigen::Index>(a) * L + l),
                                                            scores.col(static_cast<Eigen::Index>(b) * L + l)));
    }
    return out;
}

} // namespace hpls
