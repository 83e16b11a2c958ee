#pragma once

// The finite hybrid space: K functional blocks (basis coefficients, length M
// each) followed by p scalars, with the weighted and the roughness-sensitive
// inner products, dataset containers and the two-step standardization.

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "hpls/basis.hpp"
#include "hpls/errors.hpp"

namespace hpls {

// Element of the hybrid space, stored as one stacked coefficient vector
// (gamma_1, ..., gamma_K, zeta).
class HybridElement {
public:
    HybridElement() = default;
    HybridElement(int num_functional, int basis_size, int num_scalar)
        : K_(num_functional), M_(basis_size), p_(num_scalar),
          coefs_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_functional) * basis_size + num_scalar)) {
        if (num_functional < 1 || basis_size < 1 || num_scalar < 0)
            throw ShapeMismatch("hybrid element needs K >= 1, M >= 1, p >= 0");
    }
    HybridElement(int num_functional, int basis_size, int num_scalar, Eigen::VectorXd stacked)
        : HybridElement(num_functional, basis_size, num_scalar) {
        if (stacked.size() != coefs_.size())
            throw ShapeMismatch("stacked vector has length " + std::to_string(stacked.size()) +
                                ", expected " + std::to_string(coefs_.size()));
        coefs_ = std::move(stacked);
    }

    int num_functional() const { return K_; }
    int basis_size() const { return M_; }
    int num_scalar() const { return p_; }

    auto functional(int j) { return coefs_.segment(static_cast<Eigen::Index>(j) * M_, M_); }
    auto functional(int j) const { return coefs_.segment(static_cast<Eigen::Index>(j) * M_, M_); }
    auto scalar() { return coefs_.tail(p_); }
    auto scalar() const { return coefs_.tail(p_); }

    const Eigen::VectorXd& stacked() const { return coefs_; }
    Eigen::VectorXd& stacked() { return coefs_; }

    bool same_shape(const HybridElement& other) const {
        return K_ == other.K_ && M_ == other.M_ && p_ == other.p_;
    }

    HybridElement& operator+=(const HybridElement& rhs) {
        require_same_shape(rhs);
        coefs_ += rhs.coefs_;
        return *this;
    }
    HybridElement& operator-=(const HybridElement& rhs) {
        require_same_shape(rhs);
        coefs_ -= rhs.coefs_;
        return *this;
    }
    HybridElement& operator*=(double a) {
        coefs_ *= a;
        return *this;
    }
    friend HybridElement operator+(HybridElement a, const HybridElement& b) { return a += b; }
    friend HybridElement operator-(HybridElement a, const HybridElement& b) { return a -= b; }
    friend HybridElement operator*(double s, HybridElement a) { return a *= s; }
    friend HybridElement operator*(HybridElement a, double s) { return a *= s; }

    void require_same_shape(const HybridElement& other) const {
        if (!same_shape(other))
            throw ShapeMismatch("hybrid elements differ in shape: (K,M,p)=(" + std::to_string(K_) + "," +
                                std::to_string(M_) + "," + std::to_string(p_) + ") vs (" +
                                std::to_string(other.K_) + "," + std::to_string(other.M_) + "," +
                                std::to_string(other.p_) + ")");
    }

private:
    int K_ = 0;
    int M_ = 0;
    int p_ = 0;
    Eigen::VectorXd coefs_;
};

struct PenaltyConfig {
    std::vector<double> lambdas;

    PenaltyConfig() = default;
    explicit PenaltyConfig(std::vector<double> values) : lambdas(std::move(values)) {
        for (double v : lambdas)
            if (!std::isfinite(v) || v < 0.0) throw DomainError("penalties must be finite and >= 0");
    }
    static PenaltyConfig uniform(int num_functional, double value) {
        return PenaltyConfig(std::vector<double>(static_cast<std::size_t>(num_functional), value));
    }
    double operator[](int j) const { return lambdas[static_cast<std::size_t>(j)]; }
    int size() const { return static_cast<int>(lambdas.size()); }
};

inline void check_penalty(const PenaltyConfig& penalty, int num_functional) {
    if (penalty.size() != num_functional)
        throw ShapeMismatch("penalty has " + std::to_string(penalty.size()) + " entries for " +
                            std::to_string(num_functional) + " functional predictors");
}

// <h1,h2>_H = sum_j g1_j' B g2_j + omega * u1'u2
inline double inner_product(const HybridElement& h1, const HybridElement& h2, const GramPair& g,
                            double omega = 1.0) {
    h1.require_same_shape(h2);
    double total = 0.0;
    for (int j = 0; j < h1.num_functional(); ++j)
        total += h1.functional(j).dot(g.B * h2.functional(j));
    return total + omega * h1.scalar().dot(h2.scalar());
}

// <h1,h2>_{H,Lambda} = sum_j g1_j' (B + lambda_j B2) g2_j + u1'u2
inline double inner_product_rough(const HybridElement& h1, const HybridElement& h2, const GramPair& g,
                                  const PenaltyConfig& penalty) {
    h1.require_same_shape(h2);
    check_penalty(penalty, h1.num_functional());
    double total = 0.0;
    for (int j = 0; j < h1.num_functional(); ++j)
        total += h1.functional(j).dot((g.B + penalty[j] * g.B2) * h2.functional(j));
    return total + h1.scalar().dot(h2.scalar());
}

// n samples: K coefficient blocks (n x M), scalar covariates (n x p), response.
struct HybridDataset {
    std::vector<Eigen::MatrixXd> theta;
    Eigen::MatrixXd Z;
    Eigen::VectorXd y;

    int n() const { return static_cast<int>(y.size()); }
    int K() const { return static_cast<int>(theta.size()); }
    int M() const { return theta.empty() ? 0 : static_cast<int>(theta.front().cols()); }
    int p() const { return static_cast<int>(Z.cols()); }

    void validate() const {
        if (theta.empty()) throw ShapeMismatch("dataset needs at least one functional predictor");
        for (int j = 0; j < K(); ++j) {
            const auto& block = theta[static_cast<std::size_t>(j)];
            if (block.rows() != y.size())
                throw ShapeMismatch("functional block " + std::to_string(j + 1) + " has " +
                                    std::to_string(block.rows()) + " rows, response has " +
                                    std::to_string(y.size()));
            if (block.cols() != M())
                throw ShapeMismatch("functional blocks differ in basis size");
        }
        if (Z.rows() != y.size())
            throw ShapeMismatch("scalar block has " + std::to_string(Z.rows()) + " rows, response has " +
                                std::to_string(y.size()));
    }

    HybridElement sample(int i) const {
        HybridElement h(K(), M(), p());
        for (int j = 0; j < K(); ++j) h.functional(j) = theta[static_cast<std::size_t>(j)].row(i).transpose();
        h.scalar() = Z.row(i).transpose();
        return h;
    }

    std::vector<HybridElement> samples() const {
        std::vector<HybridElement> out;
        out.reserve(static_cast<std::size_t>(n()));
        for (int i = 0; i < n(); ++i) out.push_back(sample(i));
        return out;
    }

    // Stacked n x (MK + p) predictor matrix.
    Eigen::MatrixXd stacked() const {
        Eigen::MatrixXd out(n(), static_cast<Eigen::Index>(K()) * M() + p());
        for (int j = 0; j < K(); ++j)
            out.middleCols(static_cast<Eigen::Index>(j) * M(), M()) = theta[static_cast<std::size_t>(j)];
        out.rightCols(p()) = Z;
        return out;
    }

    HybridDataset subset(const std::vector<int>& rows) const {
        HybridDataset out;
        const auto count = static_cast<Eigen::Index>(rows.size());
        for (const auto& block : theta) {
            Eigen::MatrixXd sub(count, block.cols());
            for (Eigen::Index r = 0; r < count; ++r) sub.row(r) = block.row(rows[static_cast<std::size_t>(r)]);
            out.theta.push_back(std::move(sub));
        }
        out.Z.resize(count, Z.cols());
        out.y.resize(count);
        for (Eigen::Index r = 0; r < count; ++r) {
            out.Z.row(r) = Z.row(rows[static_cast<std::size_t>(r)]);
            out.y[r] = y[rows[static_cast<std::size_t>(r)]];
        }
        return out;
    }
};

// Sum over samples and blocks of squared L2 norms of the functional parts.
inline double functional_energy(const HybridDataset& data, const GramPair& g) {
    double total = 0.0;
    for (const auto& block : data.theta) total += (block * g.B).cwiseProduct(block).sum();
    return total;
}

inline double compute_omega(const HybridDataset& data, const GramPair& g) {
    const double scalar_energy = data.Z.squaredNorm();
    if (!(scalar_energy > 0.0)) throw DegenerateScalarBlock("scalar block has zero energy; omega undefined");
    return functional_energy(data, g) / scalar_energy;
}

// Affine map taking raw predictors to the standardized, omega-balanced scale.
struct Standardization {
    std::vector<Eigen::VectorXd> functional_centers;  // coefficient vectors of the mean curves
    std::vector<double> functional_scales;           // root mean integrated variance
    Eigen::VectorXd scalar_means;
    Eigen::VectorXd scalar_scales;
    double omega = 1.0;
    double response_center = 0.0;

    int K() const { return static_cast<int>(functional_centers.size()); }
    int M() const { return functional_centers.empty() ? 0 : static_cast<int>(functional_centers.front().size()); }
    int p() const { return static_cast<int>(scalar_means.size()); }
};

struct StandardizedData {
    HybridDataset data;
    Standardization transform;
};

namespace detail {
inline bool negligible_spread(double spread, double level) {
    return !(spread > 1e-12 * std::max(1.0, std::abs(level)));
}
} // namespace detail

// Functional predictors: centered, scaled to unit mean integrated variance
// (divisor n). Scalars: centered, unit variance (divisor n), then multiplied
// by sqrt(omega). Response: centered only.
inline StandardizedData standardize(const HybridDataset& raw, const GramPair& g) {
    raw.validate();
    const int n = raw.n();
    if (n < 2) throw EmptyInput("standardization needs at least 2 samples");
    StandardizedData out;
    auto& tr = out.transform;
    auto& data = out.data;

    for (int j = 0; j < raw.K(); ++j) {
        const auto& block = raw.theta[static_cast<std::size_t>(j)];
        Eigen::VectorXd center = block.colwise().mean().transpose();
        Eigen::MatrixXd centered = block.rowwise() - center.transpose();
        const double variance = (centered * g.B).cwiseProduct(centered).sum() / n;
        const double level = std::sqrt(center.dot(g.B * center));
        if (detail::negligible_spread(std::sqrt(std::max(variance, 0.0)), level))
            throw ZeroVariancePredictor("functional predictor " + std::to_string(j + 1) +
                                        " is constant across samples");
        const double scale = std::sqrt(variance);
        data.theta.push_back(centered / scale);
        tr.functional_centers.push_back(std::move(center));
        tr.functional_scales.push_back(scale);
    }

    const int p = raw.p();
    tr.scalar_means = raw.Z.colwise().mean().transpose();
    tr.scalar_scales.resize(p);
    data.Z = raw.Z.rowwise() - tr.scalar_means.transpose();
    for (int c = 0; c < p; ++c) {
        const double sd = std::sqrt(data.Z.col(c).squaredNorm() / n);
        if (detail::negligible_spread(sd, tr.scalar_means[c]))
            throw ZeroVariancePredictor("scalar column " + std::to_string(c + 1) + " is constant across samples");
        tr.scalar_scales[c] = sd;
        data.Z.col(c) /= sd;
    }
    if (p > 0) {
        tr.omega = compute_omega(data, g);
        data.Z *= std::sqrt(tr.omega);
    }

    tr.response_center = raw.y.mean();
    data.y = raw.y.array() - tr.response_center;
    return out;
}

inline HybridElement apply_standardization(const Standardization& tr, const HybridElement& sample) {
    if (sample.num_functional() != tr.K() || sample.basis_size() != tr.M() || sample.num_scalar() != tr.p())
        throw ShapeMismatch("sample shape does not match the stored standardization");
    HybridElement out(sample.num_functional(), sample.basis_size(), sample.num_scalar());
    for (int j = 0; j < tr.K(); ++j)
        out.functional(j) = (sample.functional(j) - tr.functional_centers[static_cast<std::size_t>(j)]) /
                            tr.functional_scales[static_cast<std::size_t>(j)];
    const double root_omega = std::sqrt(tr.omega);
    out.scalar() = ((sample.scalar() - tr.scalar_means).array() / tr.scalar_scales.array() * root_omega).matrix();
    return out;
}

// Batch form; the response (if any) is centered with the stored response center.
inline HybridDataset apply_standardization(const Standardization& tr, const HybridDataset& raw) {
    if (raw.K() != tr.K() || raw.M() != tr.M() || raw.p() != tr.p())
        throw ShapeMismatch("dataset shape does not match the stored standardization");
    HybridDataset out;
    for (int j = 0; j < tr.K(); ++j)
        out.theta.push_back((raw.theta[static_cast<std::size_t>(j)].rowwise() -
                             tr.functional_centers[static_cast<std::size_t>(j)].transpose()) /
                            tr.functional_scales[static_cast<std::size_t>(j)]);
    out.Z = ((raw.Z.rowwise() - tr.scalar_means.transpose()).array().rowwise() / tr.scalar_scales.transpose().array())
                .matrix() *
            std::sqrt(tr.omega);
    out.y = raw.y.array() - tr.response_center;
    return out;
}

} // namespace hpls
