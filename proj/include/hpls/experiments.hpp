#pragma once

// Monte Carlo replications of the simulation studies: orthogonality checks,
// coefficient-estimation error, and Hybrid PLS vs PCR held-out error.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "hpls/basis.hpp"
#include "hpls/model_select.hpp"
#include "hpls/pcr.hpp"
#include "hpls/pls.hpp"
#include "hpls/random.hpp"
#include "hpls/synthetic.hpp"

namespace hpls {

struct PenaltyRegime {
    std::string name;
    PenaltyConfig penalty;
};

inline std::vector<PenaltyRegime> geometry_regimes() {
    return {{"weak", PenaltyConfig({0.1, 0.1})}, {"mixed", PenaltyConfig({0.1, 10.0})}, {"strong", PenaltyConfig({10.0, 10.0})}};
}

struct GeometryRun {
    GeometryReport report;
    int components = 0;
};

inline GeometryRun run_geometry(int n, std::uint64_t seed, const PenaltyConfig& penalty, int components = 10) {
    const auto spec = make_scenario(Scenario::geometry, n, seed);
    const auto sim = generate(spec);
    const auto g = gram(spec.basis);
    const auto standardized = standardize(sim.raw, g);
    const auto model = fit(standardized.data, g, penalty, components, FitOptions{.keep_history = true});
    return GeometryRun{diagnostics(model), model.num_components()};
}

inline BetaError run_beta_estimation(int n, std::uint64_t seed, const PenaltyConfig& penalty, int components = 10) {
    const auto spec = make_scenario(Scenario::beta_estimation, n, seed);
    const auto sim = generate(spec);
    const auto g = gram(spec.basis);
    const auto model = fit_raw(sim.raw, spec.basis, g, penalty, components);
    return beta_error(raw_coefficients(model).beta, sim.truth, g);
}

struct BenchmarkOptions {
    Scenario scenario = Scenario::nuisance;
    int n = 400;
    int max_components = 5;
    int folds = 5;
    std::vector<double> lambda_candidates = default_lambda_candidates();
};

struct BenchmarkReplication {
    std::vector<double> pls_scaled_rmse;  // index l-1 for l components
    std::vector<double> pcr_scaled_rmse;  // index l-1 for l components per source
    std::vector<PenaltyConfig> pls_penalties;
    CrossModality correlations;           // PCR training scores
};

// Seeded 50/50 split of the generated sample.
inline std::pair<HybridDataset, HybridDataset> split_half(const HybridDataset& data, std::uint64_t seed) {
    Rng rng(seed);
    const auto perm = rng.permutation(data.n());
    const auto half = static_cast<std::size_t>(data.n() / 2);
    return {data.subset(std::vector<int>(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(half))),
            data.subset(std::vector<int>(perm.begin() + static_cast<std::ptrdiff_t>(half), perm.end()))};
}

inline BenchmarkReplication run_benchmark_replication(const BenchmarkOptions& opts, std::uint64_t seed) {
    const auto spec = make_scenario(opts.scenario, opts.n, seed);
    const auto sim = generate(spec);
    const auto g = gram(spec.basis);
    const auto [train, test] = split_half(sim.raw, derive_seed(seed, 1));
    const int L = opts.max_components;

    BenchmarkReplication rep;
    const auto plan = CvPlan::shared_grid(train.K(), opts.lambda_candidates, L, opts.folds, derive_seed(seed, 2));
    const auto cv = cross_validate(train, g, plan);
    for (int l = 1; l <= L; ++l) {
        const auto penalty = best_penalty_for(cv, l);
        const auto model = fit_raw(train, spec.basis, g, penalty, l);
        rep.pls_scaled_rmse.push_back(scaled_rmse(test.y, predict(model, test)));
        rep.pls_penalties.push_back(penalty);
    }
    for (int l = 1; l <= L; ++l) {
        const auto model = fit_pcr_raw(train, spec.basis, g, l);
        rep.pcr_scaled_rmse.push_back(scaled_rmse(test.y, predict_pcr(model, test)));
        if (l == L) rep.correlations = cross_modality_correlations(model, train);
    }
    return rep;
}

} // namespace hpls
