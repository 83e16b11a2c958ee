#pragma once

// Function bases on [0,1]: clamped B-splines with uniform interior knots and
// the orthonormal trigonometric system. Exact Gram matrices of the basis and
// of its second derivatives, and least-squares projection of sampled curves.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "hpls/errors.hpp"

namespace hpls {

enum class BasisKind { bspline, fourier };

inline std::string to_string(BasisKind kind) {
    return kind == BasisKind::bspline ? "bspline" : "fourier";
}

inline BasisKind basis_kind_from_string(const std::string& name) {
    if (name == "bspline") return BasisKind::bspline;
    if (name == "fourier") return BasisKind::fourier;
    throw InvalidBasisConfig("unknown basis kind '" + name + "'");
}

struct BasisSpec {
    BasisKind kind = BasisKind::bspline;
    int degree = 3;
    std::vector<double> interior_knots;
    int size = 0;

    // Clamped knot vector: boundary knots repeated degree+1 times.
    std::vector<double> full_knots() const {
        std::vector<double> knots(static_cast<std::size_t>(degree + 1), 0.0);
        knots.insert(knots.end(), interior_knots.begin(), interior_knots.end());
        knots.insert(knots.end(), static_cast<std::size_t>(degree + 1), 1.0);
        return knots;
    }

    friend bool operator==(const BasisSpec&, const BasisSpec&) = default;
};

inline BasisSpec make_basis(BasisKind kind, int degree, int num_basis) {
    if (num_basis < 1)
        throw InvalidBasisConfig("num_basis must be >= 1, got " + std::to_string(num_basis));
    BasisSpec spec;
    spec.kind = kind;
    spec.size = num_basis;
    if (kind == BasisKind::fourier) {
        spec.degree = 0;
        return spec;
    }
    if (degree < 0)
        throw InvalidBasisConfig("degree must be >= 0, got " + std::to_string(degree));
    if (num_basis < degree + 1)
        throw InvalidBasisConfig("num_basis " + std::to_string(num_basis) +
                                 " < degree + 1 = " + std::to_string(degree + 1));
    spec.degree = degree;
    const int interior = num_basis - degree - 1;
    spec.interior_knots.reserve(static_cast<std::size_t>(interior));
    for (int k = 1; k <= interior; ++k)
        spec.interior_knots.push_back(static_cast<double>(k) / (interior + 1));
    return spec;
}

namespace detail {

// Index i of the knot span with knots[i] <= t < knots[i+1]; t == 1 maps to the
// last nonempty span.
inline int find_span(const std::vector<double>& knots, int degree, int size, double t) {
    if (t >= knots[static_cast<std::size_t>(size)]) return size - 1;
    auto it = std::upper_bound(knots.begin() + degree, knots.begin() + size + 1, t);
    return static_cast<int>(it - knots.begin()) - 1;
}

// Nonzero basis functions on a span and their derivatives up to max_order
// (Piegl & Tiller, algorithm A2.3). Row k holds derivative order k.
inline Eigen::MatrixXd span_derivatives(const std::vector<double>& knots, int span, int degree,
                                        double t, int max_order) {
    const int p = degree;
    Eigen::MatrixXd ndu(p + 1, p + 1);
    std::vector<double> left(static_cast<std::size_t>(p + 1)), right(static_cast<std::size_t>(p + 1));
    ndu(0, 0) = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = t - knots[static_cast<std::size_t>(span + 1 - j)];
        right[j] = knots[static_cast<std::size_t>(span + j)] - t;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu(j, r) = right[r + 1] + left[j - r];
            const double temp = ndu(r, j - 1) / ndu(j, r);
            ndu(r, j) = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu(j, j) = saved;
    }

    Eigen::MatrixXd ders = Eigen::MatrixXd::Zero(max_order + 1, p + 1);
    for (int j = 0; j <= p; ++j) ders(0, j) = ndu(j, p);

    const int top = std::min(max_order, p);
    Eigen::MatrixXd a(2, p + 1);
    for (int r = 0; r <= p; ++r) {
        int s1 = 0, s2 = 1;
        a.setZero();
        a(0, 0) = 1.0;
        for (int k = 1; k <= top; ++k) {
            double d = 0.0;
            const int rk = r - k, pk = p - k;
            if (r >= k) {
                a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
                d = a(s2, 0) * ndu(rk, pk);
            }
            const int j1 = rk >= -1 ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
                d += a(s2, j) * ndu(rk + j, pk);
            }
            if (r <= pk) {
                a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
                d += a(s2, k) * ndu(r, pk);
            }
            ders(k, r) = d;
            std::swap(s1, s2);
        }
    }
    double factor = p;
    for (int k = 1; k <= top; ++k) {
        ders.row(k) *= factor;
        factor *= (p - k);
    }
    return ders;
}

// Gauss-Legendre nodes and weights on [-1,1].
inline void gauss_legendre(int count, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(static_cast<std::size_t>(count), 0.0);
    weights.assign(static_cast<std::size_t>(count), 0.0);
    for (int i = 0; i < (count + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (count + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= count; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
            }
            dp = count * (x * p0 - p1) / (x * x - 1.0);
            const double step = p0 / dp;
            x -= step;
            if (std::abs(step) < 1e-16) break;
        }
        // Recompute the derivative at the converged node.
        double p0 = 1.0, p1 = 0.0;
        for (int k = 1; k <= count; ++k) {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
        }
        dp = count * (x * p0 - p1) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[static_cast<std::size_t>(i)] = -x;
        nodes[static_cast<std::size_t>(count - 1 - i)] = x;
        weights[static_cast<std::size_t>(i)] = w;
        weights[static_cast<std::size_t>(count - 1 - i)] = w;
    }
}

} // namespace detail

// Values of all M basis functions (or their derivative of the given order) at t.
inline Eigen::VectorXd evaluate(const BasisSpec& spec, double t, int derivative_order = 0) {
    if (!(t >= 0.0 && t <= 1.0))
        throw DomainError("evaluation point " + std::to_string(t) + " outside [0,1]");
    if (derivative_order < 0 || derivative_order > 2)
        throw DomainError("derivative order must be 0, 1 or 2");

    Eigen::VectorXd out = Eigen::VectorXd::Zero(spec.size);
    if (spec.kind == BasisKind::fourier) {
        const double root2 = std::numbers::sqrt2;
        for (int m = 0; m < spec.size; ++m) {
            if (m == 0) {
                out[0] = derivative_order == 0 ? 1.0 : 0.0;
                continue;
            }
            const int k = (m + 1) / 2;
            const double w = 2.0 * std::numbers::pi * k;
            const double c = std::cos(w * t), s = std::sin(w * t);
            const bool is_cos = (m % 2) == 1;
            switch (derivative_order) {
            case 0: out[m] = root2 * (is_cos ? c : s); break;
            case 1: out[m] = root2 * w * (is_cos ? -s : c); break;
            default: out[m] = -root2 * w * w * (is_cos ? c : s); break;
            }
        }
        return out;
    }

    const auto knots = spec.full_knots();
    const int span = detail::find_span(knots, spec.degree, spec.size, t);
    if (derivative_order > spec.degree) return out;
    const auto ders = detail::span_derivatives(knots, span, spec.degree, t, derivative_order);
    for (int j = 0; j <= spec.degree; ++j)
        out[span - spec.degree + j] = ders(derivative_order, j);
    return out;
}

// Rows are evaluation points, columns basis functions.
inline Eigen::MatrixXd design_matrix(const BasisSpec& spec, std::span<const double> ts,
                                     int derivative_order = 0) {
    Eigen::MatrixXd phi(static_cast<Eigen::Index>(ts.size()), spec.size);
    for (std::size_t i = 0; i < ts.size(); ++i)
        phi.row(static_cast<Eigen::Index>(i)) = evaluate(spec, ts[i], derivative_order).transpose();
    return phi;
}

struct GramPair {
    Eigen::MatrixXd B;   // inner products of basis functions
    Eigen::MatrixXd B2;  // inner products of second derivatives
};

inline int gauss_nodes_for_degree(int degree) {
    // ceil((2d+1)/2) + 1 nodes integrate degree-2d products exactly.
    return (2 * degree + 2) / 2 + 1;
}

// Gram matrices by per-interval Gauss-Legendre quadrature (B-splines) or in
// closed form (trigonometric system).
inline GramPair gram(const BasisSpec& spec, int nodes_per_interval = 0) {
    const int M = spec.size;
    GramPair g{Eigen::MatrixXd::Zero(M, M), Eigen::MatrixXd::Zero(M, M)};
    if (spec.kind == BasisKind::fourier) {
        g.B.setIdentity();
        for (int m = 1; m < M; ++m) {
            const double w = 2.0 * std::numbers::pi * ((m + 1) / 2);
            g.B2(m, m) = w * w * w * w;
        }
        return g;
    }

    const int q = nodes_per_interval > 0 ? nodes_per_interval : gauss_nodes_for_degree(spec.degree);
    std::vector<double> nodes, weights;
    detail::gauss_legendre(q, nodes, weights);
    const auto knots = spec.full_knots();
    const int p = spec.degree;
    for (int span = p; span < M; ++span) {
        const double a = knots[static_cast<std::size_t>(span)];
        const double b = knots[static_cast<std::size_t>(span + 1)];
        if (b <= a) continue;
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        for (int k = 0; k < q; ++k) {
            const double t = mid + half * nodes[static_cast<std::size_t>(k)];
            const double w = half * weights[static_cast<std::size_t>(k)];
            const auto ders = detail::span_derivatives(knots, span, p, t, 2);
            for (int i = 0; i <= p; ++i) {
                for (int j = 0; j <= p; ++j) {
                    g.B(span - p + i, span - p + j) += w * ders(0, i) * ders(0, j);
                    if (p >= 2)
                        g.B2(span - p + i, span - p + j) += w * ders(2, i) * ders(2, j);
                }
            }
        }
    }
    // Exact symmetry; the accumulation above is already symmetric up to rounding.
    g.B = 0.5 * (g.B + g.B.transpose()).eval();
    g.B2 = 0.5 * (g.B2 + g.B2.transpose()).eval();
    return g;
}

// Least-squares projection of curves sampled on a fixed grid, optionally
// penalized by ridge * theta' B2 theta. Factorizes once; reuse across curves.
class CurveProjector {
public:
    CurveProjector(const BasisSpec& spec, std::span<const double> grid, double ridge = 0.0)
        : spec_(spec), rows_(static_cast<Eigen::Index>(grid.size())) {
        if (!(ridge >= 0.0)) throw DomainError("ridge must be >= 0");
        Eigen::MatrixXd phi = design_matrix(spec, grid, 0);
        Eigen::MatrixXd system = phi;
        if (ridge > 0.0) {
            const auto g = gram(spec);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.B2);
            Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt() * std::sqrt(ridge);
            Eigen::MatrixXd penalty = root.asDiagonal() * es.eigenvectors().transpose();
            system.resize(phi.rows() + penalty.rows(), phi.cols());
            system << phi, penalty;
        }
        qr_.setThreshold(1e-10);
        qr_.compute(system);
        if (qr_.rank() < spec.size)
            throw RankDeficient("projection design has rank " + std::to_string(qr_.rank()) +
                                " < basis size " + std::to_string(spec.size) + " (" +
                                std::to_string(grid.size()) + " sample points)");
    }

    Eigen::VectorXd project(const Eigen::Ref<const Eigen::VectorXd>& values) const {
        if (values.size() != rows_)
            throw ShapeMismatch("curve has " + std::to_string(values.size()) +
                                " samples, grid has " + std::to_string(rows_));
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(qr_.rows());
        rhs.head(rows_) = values;
        return qr_.solve(rhs);
    }

    // Each row of `curves` is one curve on the grid; returns n x M coefficients.
    Eigen::MatrixXd project_rows(const Eigen::MatrixXd& curves) const {
        if (curves.cols() != rows_)
            throw ShapeMismatch("curves have " + std::to_string(curves.cols()) +
                                " columns, grid has " + std::to_string(rows_));
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(qr_.rows(), curves.rows());
        rhs.topRows(rows_) = curves.transpose();
        return qr_.solve(rhs).transpose();
    }

    const BasisSpec& spec() const { return spec_; }

private:
    BasisSpec spec_;
    Eigen::Index rows_;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
};

inline Eigen::VectorXd project_curve(const BasisSpec& spec, std::span<const double> ts,
                                     std::span<const double> xs, double ridge = 0.0) {
    if (ts.size() != xs.size()) throw ShapeMismatch("sample times and values differ in length");
    CurveProjector projector(spec, ts, ridge);
    return projector.project(Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size())));
}

// Curve values at grid points for coefficient rows (n x M -> n x G).
inline Eigen::MatrixXd evaluate_rows(const BasisSpec& spec, const Eigen::MatrixXd& coefs,
                                     std::span<const double> grid) {
    return coefs * design_matrix(spec, grid, 0).transpose();
}

inline std::vector<double> uniform_grid(int points) {
    std::vector<double> grid(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = static_cast<double>(i) / (points - 1);
    return grid;
}

} // namespace hpls
