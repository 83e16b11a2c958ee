#pragma once

// K-fold cross-validation over the per-predictor roughness-penalty grid and
// the component count, scored by held-out RMSE.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "hpls/basis.hpp"
#include "hpls/errors.hpp"
#include "hpls/hybrid.hpp"
#include "hpls/pls.hpp"
#include "hpls/random.hpp"

namespace hpls {

inline double rmse(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
    if (y_true.size() == 0) throw EmptyInput("rmse of an empty vector");
    if (y_true.size() != y_pred.size()) throw ShapeMismatch("rmse inputs differ in length");
    return std::sqrt((y_true - y_pred).squaredNorm() / static_cast<double>(y_true.size()));
}

// RMSE divided by the sample SD (n - 1 divisor) of y_true.
inline double scaled_rmse(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
    const double err = rmse(y_true, y_pred);
    if (y_true.size() < 2) throw DegenerateScale("scaled rmse needs at least 2 observations");
    const double sd = std::sqrt((y_true.array() - y_true.mean()).square().sum() / static_cast<double>(y_true.size() - 1));
    if (!(sd > 0.0)) throw DegenerateScale("y_true has zero standard deviation");
    return err / sd;
}

// RMSE divided by max(y_true) - min(y_true).
inline double range_rmse(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
    const double err = rmse(y_true, y_pred);
    const double range = y_true.maxCoeff() - y_true.minCoeff();
    if (!(range > 0.0)) throw DegenerateScale("y_true has zero range");
    return err / range;
}

// The default per-predictor candidate list.
inline std::vector<double> default_lambda_candidates() { return {0.001, 0.01, 0.1, 1.0}; }

struct CvPlan {
    int folds = 5;
    std::vector<std::vector<double>> lambda_grid;  // candidates for each functional predictor
    int max_components = 1;
    std::uint64_t seed = 0;

    static CvPlan shared_grid(int num_functional, std::vector<double> candidates, int max_components, int folds,
                              std::uint64_t seed) {
        return CvPlan{folds, std::vector<std::vector<double>>(static_cast<std::size_t>(num_functional), std::move(candidates)),
                      max_components, seed};
    }
};

struct CvRow {
    int fold = 0;
    std::vector<double> lambdas;
    int components = 0;
    double rmse = 0.0;
    bool truncated = false;  // fewer components than requested could be extracted
};

struct CvCell {
    std::vector<double> lambdas;
    int components = 0;
    double mean_rmse = 0.0;
    bool truncated = false;
};

struct CvResult {
    PenaltyConfig best_penalty;
    int best_components = 0;
    std::vector<CvRow> rows;    // fold-level table
    std::vector<CvCell> cells;  // fold means
};

// Called with each fold's fitted model; used to check for leakage.
using FoldFitHook = std::function<void(int fold, const std::vector<double>& lambdas, const PlsModel&)>;

// Fold index of each sample: a seeded permutation dealt round-robin.
inline std::vector<int> assign_folds(int n, int folds, std::uint64_t seed) {
    Rng rng(seed);
    const auto perm = rng.permutation(n);
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) fold_of[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = i % folds;
    return fold_of;
}

// Cartesian product of per-predictor candidates, first predictor slowest.
inline std::vector<std::vector<double>> expand_grid(const std::vector<std::vector<double>>& grid) {
    std::vector<std::vector<double>> cells{{}};
    for (const auto& candidates : grid) {
        std::vector<std::vector<double>> next;
        for (const auto& prefix : cells)
            for (double v : candidates) {
                auto cell = prefix;
                cell.push_back(v);
                next.push_back(std::move(cell));
            }
        cells = std::move(next);
    }
    return cells;
}

namespace detail {
// Better cell: lower mean RMSE; ties go to the lexicographically larger
// penalty vector, then fewer components.
inline bool better_cell(const CvCell& a, const CvCell& b) {
    if (a.mean_rmse != b.mean_rmse) return a.mean_rmse < b.mean_rmse;
    if (a.lambdas != b.lambdas) return a.lambdas > b.lambdas;
    return a.components < b.components;
}
} // namespace detail

inline CvResult cross_validate(const HybridDataset& raw, const GramPair& g, const CvPlan& plan,
                               const FoldFitHook& hook = {}) {
    raw.validate();
    const int n = raw.n();
    if (plan.folds < 2) throw FoldTooSmall("need at least 2 folds");
    if (plan.folds > n) throw FoldTooSmall("more folds (" + std::to_string(plan.folds) + ") than samples (" + std::to_string(n) + ")");
    if (plan.max_components < 1) throw DomainError("max_components must be >= 1");
    if (static_cast<int>(plan.lambda_grid.size()) != raw.K())
        throw ShapeMismatch("lambda grid has " + std::to_string(plan.lambda_grid.size()) + " axes for " +
                            std::to_string(raw.K()) + " functional predictors");
    for (const auto& axis : plan.lambda_grid)
        if (axis.empty()) throw DomainError("lambda grid axis is empty");

    const auto fold_of = assign_folds(n, plan.folds, plan.seed);
    const auto cells = expand_grid(plan.lambda_grid);
    const int L = plan.max_components;
    CvResult result;
    std::vector<double> sums(cells.size() * static_cast<std::size_t>(L), 0.0);
    std::vector<char> flags(cells.size() * static_cast<std::size_t>(L), 0);

    for (int f = 0; f < plan.folds; ++f) {
        std::vector<int> train, test;
        for (int i = 0; i < n; ++i) (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
        if (train.size() < 2) throw FoldTooSmall("fold " + std::to_string(f) + " leaves fewer than 2 training samples");
        const auto train_raw = raw.subset(train);
        const auto test_raw = raw.subset(test);
        const auto standardized = standardize(train_raw, g);
        const auto test_std = apply_standardization(standardized.transform, test_raw);

        for (std::size_t c = 0; c < cells.size(); ++c) {
            PlsModel model;
            bool fitted = true;
            try {
                model = fit(standardized.data, g, PenaltyConfig(cells[c]), L);
            } catch (const DegenerateResponse&) {
                fitted = false;
            }
            if (fitted) {
                model.transform = standardized.transform;
                if (hook) hook(f, cells[c], model);
            }
            for (int l = 1; l <= L; ++l) {
                Eigen::VectorXd pred;
                if (fitted)
                    pred = compute_scores(test_std, beta_prefix(model, l), g).array() + standardized.transform.response_center;
                else
                    pred = Eigen::VectorXd::Constant(test_raw.n(), standardized.transform.response_center);
                const bool truncated = !fitted || l > model.num_components();
                CvRow row{f, cells[c], l, rmse(test_raw.y, pred), truncated};
                const auto slot = c * static_cast<std::size_t>(L) + static_cast<std::size_t>(l - 1);
                sums[slot] += row.rmse;
                flags[slot] = static_cast<char>(flags[slot] | (truncated ? 1 : 0));
                result.rows.push_back(std::move(row));
            }
        }
    }

    for (std::size_t c = 0; c < cells.size(); ++c)
        for (int l = 1; l <= L; ++l) {
            const auto slot = c * static_cast<std::size_t>(L) + static_cast<std::size_t>(l - 1);
            result.cells.push_back(CvCell{cells[c], l, sums[slot] / plan.folds, flags[slot] != 0});
        }
    const auto best = std::min_element(result.cells.begin(), result.cells.end(), detail::better_cell);
    result.best_penalty = PenaltyConfig(best->lambdas);
    result.best_components = best->components;
    return result;
}

// Best penalty among cells with a fixed component count.
inline PenaltyConfig best_penalty_for(const CvResult& result, int components) {
    const CvCell* best = nullptr;
    for (const auto& cell : result.cells)
        if (cell.components == components && (!best || detail::better_cell(cell, *best))) best = &cell;
    if (!best) throw IndexOutOfRange("no cross-validation cells with " + std::to_string(components) + " components");
    return PenaltyConfig(best->lambdas);
}

} // namespace hpls
