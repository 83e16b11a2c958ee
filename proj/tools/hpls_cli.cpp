// hpls: fit, predict, simulate, validate-geometry, benchmark, cv.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hpls/hpls.hpp"

namespace fs = std::filesystem;
using namespace hpls;

namespace {

struct Options {
    std::string in;
    std::string out;
    std::string model;
    std::string scenario = "nuisance";
    int n = 0;
    std::uint64_t seed = 2026;
    int reps = 100;
    int basis_size = 20;
    int degree = 3;
    std::string basis_kind = "bspline";
    std::vector<double> lambdas;
    std::string lambda_grid;
    int components = 3;
    int folds = 5;
    double ridge = 0.0;
};

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        char* end = nullptr;
        const double v = std::strtod(item.c_str(), &end);
        if (end != item.c_str() + item.size() || !std::isfinite(v) || v < 0.0)
            throw InvalidArgument("--lambda-grid entry '" + item + "' is not a finite value >= 0");
        out.push_back(v);
    }
    if (out.empty()) throw InvalidArgument("--lambda-grid is empty");
    return out;
}

// "a,b,c" is shared by every functional predictor; "a,b;c,d" gives one list per predictor.
std::vector<std::vector<double>> parse_grid(const std::string& text, int K) {
    const std::string spec = text.empty() ? std::string("0.001,0.01,0.1,1") : text;
    std::vector<std::vector<double>> axes;
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ';')) axes.push_back(parse_list(part));
    if (axes.size() == 1) axes.resize(static_cast<std::size_t>(K), axes.front());
    if (static_cast<int>(axes.size()) != K)
        throw InvalidArgument("--lambda-grid has " + std::to_string(axes.size()) + " lists for " + std::to_string(K) +
                                 " functional predictors");
    return axes;
}

PenaltyConfig explicit_penalty(const std::vector<double>& values, int K) {
    if (values.size() == 1) return PenaltyConfig::uniform(K, values.front());
    if (static_cast<int>(values.size()) != K)
        throw InvalidArgument("--lambda given " + std::to_string(values.size()) + " times for " + std::to_string(K) +
                                 " functional predictors");
    return PenaltyConfig(values);
}

BasisSpec basis_from(const Options& o) { return make_basis(basis_kind_from_string(o.basis_kind), o.degree, o.basis_size); }

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
}

std::string header_with_lambdas(const std::string& before, int K, const std::string& after) {
    std::string h = before;
    for (int j = 0; j < K; ++j) h += ",lambda_" + std::to_string(j + 1);
    return h + after;
}

std::string lambda_fields(const std::vector<double>& lambdas) {
    std::string out;
    for (double v : lambdas) out += "," + format_number(v);
    return out;
}

std::string cv_table(const CvResult& cv, int K) {
    std::string text = header_with_lambdas("fold", K, ",L,rmse,truncated\n");
    for (const auto& row : cv.rows)
        text += fmt::format("{}{},{},{},{}\n", row.fold + 1, lambda_fields(row.lambdas), row.components,
                            format_number(row.rmse), row.truncated ? 1 : 0);
    return text;
}

int cmd_fit(const Options& o) {
    require(!o.in.empty(), "fit needs --in");
    require(!o.out.empty(), "fit needs --out");
    const auto basis = basis_from(o);
    const auto g = gram(basis);
    const auto bundle = read_bundle(o.in);
    if (!bundle.y) throw IngestionError(o.in + ": no response column '" + std::string(kResponseColumn) + "'");
    const auto raw = to_dataset(bundle, basis, o.ridge);

    PenaltyConfig penalty;
    if (!o.lambdas.empty()) {
        penalty = explicit_penalty(o.lambdas, raw.K());
    } else {
        CvPlan plan{o.folds, parse_grid(o.lambda_grid, raw.K()), o.components, o.seed};
        penalty = best_penalty_for(cross_validate(raw, g, plan), o.components);
    }
    const auto model = fit_raw(raw, basis, g, penalty, o.components, FitOptions{.keep_history = true});
    const auto report = diagnostics(model);

    const fs::path out(o.out);
    write_text_file(out / "model.json", to_json(model).dump(2) + "\n");
    std::string text = "component,slope,abs_cor_y_score,train_rmse\n";
    for (int l = 0; l < model.num_components(); ++l)
        text += fmt::format("{},{},{},{}\n", l + 1, format_number(model.components[static_cast<std::size_t>(l)].slope),
                            format_number(report.response_correlations[static_cast<std::size_t>(l)]),
                            format_number(rmse(raw.y, predict(model, raw, l + 1))));
    write_text_file(out / "fit_report.csv", text);
    fmt::print("fitted {} component(s){}; penalty{}\n", model.num_components(),
               model.truncated ? " (truncated: signal exhausted)" : "", lambda_fields(penalty.lambdas));
    return 0;
}

int cmd_predict(const Options& o) {
    require(!o.model.empty(), "predict needs --model");
    require(!o.in.empty(), "predict needs --in");
    require(!o.out.empty(), "predict needs --out");
    const auto j = read_json_file(o.model);
    const std::string method = j.value("method", std::string());
    Eigen::VectorXd predictions;
    if (method == "pcr") {
        const auto model = pcr_model_from_json(j);
        predictions = predict_pcr(model, to_dataset(read_bundle(o.in), *model.basis, o.ridge));
    } else {
        const auto model = pls_model_from_json(j);
        predictions = predict(model, to_dataset(read_bundle(o.in), *model.basis, o.ridge));
    }
    std::string text = "prediction\n";
    for (Eigen::Index i = 0; i < predictions.size(); ++i) text += format_number(predictions[i]) + "\n";
    write_text_file(o.out, text);
    return 0;
}

int cmd_simulate(const Options& o) {
    require(!o.out.empty(), "simulate needs --out");
    const auto scenario = scenario_from_string(o.scenario);
    const auto spec = make_scenario(scenario, o.n > 0 ? o.n : 200, o.seed);
    const auto sim = generate(spec);
    const fs::path out(o.out);
    write_bundle_dir(out, to_bundle(sim.raw, spec.basis, uniform_grid(kSimulationGridPoints)));
    write_text_file(out / "ground_truth.json", to_json(spec, sim.truth).dump(2) + "\n");
    return 0;
}

int cmd_validate_geometry(const Options& o) {
    require(!o.out.empty(), "validate-geometry needs --out");
    require(o.reps >= 1, "--reps must be >= 1");
    const int n = o.n > 0 ? o.n : 200;
    const int L = o.components;
    std::string text = "regime,replication,metric1,metric2,metric3,se1,se2,se3\n";
    std::string summary;
    for (const auto& regime : geometry_regimes()) {
        std::vector<std::array<double, 3>> values;
        for (int r = 0; r < o.reps; ++r) {
            const auto run = run_geometry(n, derive_seed(o.seed, static_cast<std::uint64_t>(r)), regime.penalty, L);
            const std::array<double, 3> m{run.report.max_annihilation, run.report.max_direction_inner,
                                          run.report.max_score_correlation};
            values.push_back(m);
            text += fmt::format("{},{},{},{},{},,,\n", regime.name, r + 1, format_number(m[0]), format_number(m[1]),
                                format_number(m[2]));
        }
        std::array<double, 3> mean{}, se{};
        for (int k = 0; k < 3; ++k) {
            for (const auto& v : values) mean[k] += v[k] / o.reps;
            double ss = 0.0;
            for (const auto& v : values) ss += (v[k] - mean[k]) * (v[k] - mean[k]);
            se[k] = o.reps > 1 ? std::sqrt(ss / (o.reps - 1) / o.reps) : 0.0;
        }
        summary += fmt::format("{},mean,{},{},{},{},{},{}\n", regime.name, format_number(mean[0]), format_number(mean[1]),
                               format_number(mean[2]), format_number(se[0]), format_number(se[1]), format_number(se[2]));
        fmt::print("{:>6}: mean deviations {:.3e} {:.3e} {:.3e}\n", regime.name, mean[0], mean[1], mean[2]);
    }
    write_text_file(o.out, text + summary);
    return 0;
}

int cmd_benchmark(const Options& o) {
    require(!o.out.empty(), "benchmark needs --out");
    require(o.reps >= 1, "--reps must be >= 1");
    BenchmarkOptions bo;
    bo.scenario = scenario_from_string(o.scenario);
    require(bo.scenario == Scenario::nuisance || bo.scenario == Scenario::cross_modal,
            "benchmark runs the nuisance or cross_modal scenario");
    bo.n = o.n > 0 ? o.n : (bo.scenario == Scenario::nuisance ? 400 : 200);
    bo.max_components = o.components;
    bo.folds = o.folds;
    bo.lambda_candidates = parse_list(o.lambda_grid.empty() ? std::string("0.001,0.01,0.1,1") : o.lambda_grid);

    std::string rmse_text = "method,components,replication,scaled_rmse\n";
    std::string cor_text = "replication,component,pair,abs_cor\n";
    std::vector<double> pls_mean(static_cast<std::size_t>(bo.max_components)), pcr_mean(pls_mean.size());
    for (int r = 0; r < o.reps; ++r) {
        const auto rep = run_benchmark_replication(bo, derive_seed(o.seed, static_cast<std::uint64_t>(r)));
        for (int l = 0; l < bo.max_components; ++l) {
            const auto idx = static_cast<std::size_t>(l);
            rmse_text += fmt::format("hybrid_pls,{},{},{}\n", l + 1, r + 1, format_number(rep.pls_scaled_rmse[idx]));
            rmse_text += fmt::format("pcr,{},{},{}\n", l + 1, r + 1, format_number(rep.pcr_scaled_rmse[idx]));
            pls_mean[idx] += rep.pls_scaled_rmse[idx] / o.reps;
            pcr_mean[idx] += rep.pcr_scaled_rmse[idx] / o.reps;
        }
        for (int l = 0; l < rep.correlations.values.rows(); ++l)
            for (std::size_t p = 0; p < rep.correlations.pair_names.size(); ++p)
                cor_text += fmt::format("{},{},{},{}\n", r + 1, l + 1, rep.correlations.pair_names[p],
                                        format_number(rep.correlations.values(l, static_cast<Eigen::Index>(p))));
    }
    const fs::path out(o.out);
    write_text_file(out / "rmse.csv", rmse_text);
    write_text_file(out / "correlations.csv", cor_text);
    fmt::print("components  hybrid_pls  pcr   (mean scaled test RMSE, {} reps)\n", o.reps);
    for (std::size_t l = 0; l < pls_mean.size(); ++l)
        fmt::print("{:>10}  {:>10.4f}  {:.4f}\n", l + 1, pls_mean[l], pcr_mean[l]);
    return 0;
}

int cmd_cv(const Options& o) {
    require(!o.in.empty(), "cv needs --in");
    require(!o.out.empty(), "cv needs --out");
    const auto basis = basis_from(o);
    const auto g = gram(basis);
    const auto bundle = read_bundle(o.in);
    if (!bundle.y) throw IngestionError(o.in + ": no response column '" + std::string(kResponseColumn) + "'");
    const auto raw = to_dataset(bundle, basis, o.ridge);
    CvPlan plan{o.folds, parse_grid(o.lambda_grid, raw.K()), o.components, o.seed};
    const auto cv = cross_validate(raw, g, plan);
    write_text_file(o.out, cv_table(cv, raw.K()));
    fmt::print("best: L={} penalty{}\n", cv.best_components, lambda_fields(cv.best_penalty.lambdas));
    return 0;
}

int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::data: return 3;
    case ErrorKind::numerical: return 4;
    }
    return 1;
}

const char* kind_name(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::data: return "data";
    case ErrorKind::numerical: return "numerical";
    }
    return "internal";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid partial least squares for functional and scalar predictors"};
    app.require_subcommand(1);
    Options o;

    auto add_basis = [&](CLI::App* cmd) {
        cmd->add_option("--basis-size", o.basis_size, "number of basis functions M")->capture_default_str();
        cmd->add_option("--degree", o.degree, "B-spline degree")->capture_default_str();
        cmd->add_option("--basis", o.basis_kind, "bspline or fourier")->capture_default_str();
        cmd->add_option("--ridge", o.ridge, "roughness ridge used when projecting curves")->capture_default_str();
    };
    auto add_seed = [&](CLI::App* cmd) { cmd->add_option("--seed", o.seed, "base seed")->capture_default_str(); };

    auto* fit_cmd = app.add_subcommand("fit", "fit a model to a dataset bundle");
    fit_cmd->add_option("--in", o.in, "dataset directory or .json bundle")->required();
    fit_cmd->add_option("--out", o.out, "output directory")->required();
    fit_cmd->add_option("--lambda", o.lambdas, "penalty per functional predictor (repeatable)");
    fit_cmd->add_option("--lambda-grid", o.lambda_grid, "candidates for cross-validation when --lambda is absent");
    fit_cmd->add_option("--components", o.components, "number of components L")->capture_default_str();
    fit_cmd->add_option("--folds", o.folds, "cross-validation folds")->capture_default_str();
    add_basis(fit_cmd);
    add_seed(fit_cmd);

    auto* predict_cmd = app.add_subcommand("predict", "predict responses with a saved model");
    predict_cmd->add_option("--model", o.model, "model.json from fit")->required();
    predict_cmd->add_option("--in", o.in, "dataset directory or .json bundle")->required();
    predict_cmd->add_option("--out", o.out, "predictions CSV")->required();
    predict_cmd->add_option("--ridge", o.ridge, "roughness ridge used when projecting curves");

    auto* sim_cmd = app.add_subcommand("simulate", "write a simulated dataset bundle");
    sim_cmd->add_option("--scenario", o.scenario, "geometry, beta_estimation, nuisance or cross_modal")->required();
    sim_cmd->add_option("--n", o.n, "sample size (default 200)");
    sim_cmd->add_option("--out", o.out, "output directory")->required();
    add_seed(sim_cmd);

    auto* geo_cmd = app.add_subcommand("validate-geometry", "orthogonality deviations over replications");
    geo_cmd->add_option("--reps", o.reps, "replications")->capture_default_str();
    geo_cmd->add_option("--n", o.n, "sample size (default 200)");
    geo_cmd->add_option("--components", o.components, "components per fit")->default_val(10);
    geo_cmd->add_option("--out", o.out, "output CSV")->required();
    add_seed(geo_cmd);

    auto* bench_cmd = app.add_subcommand("benchmark", "Hybrid PLS vs PCR held-out error");
    bench_cmd->add_option("--scenario", o.scenario, "nuisance or cross_modal")->capture_default_str();
    bench_cmd->add_option("--reps", o.reps, "replications")->capture_default_str();
    bench_cmd->add_option("--n", o.n, "sample size (default 400 nuisance, 200 cross_modal)");
    bench_cmd->add_option("--components", o.components, "largest component count")->default_val(5);
    bench_cmd->add_option("--folds", o.folds, "cross-validation folds")->capture_default_str();
    bench_cmd->add_option("--lambda-grid", o.lambda_grid, "penalty candidates, comma separated");
    bench_cmd->add_option("--out", o.out, "output directory")->required();
    add_seed(bench_cmd);

    auto* cv_cmd = app.add_subcommand("cv", "cross-validation score table");
    cv_cmd->add_option("--in", o.in, "dataset directory or .json bundle")->required();
    cv_cmd->add_option("--out", o.out, "output CSV")->required();
    cv_cmd->add_option("--lambda-grid", o.lambda_grid, "candidates: 'a,b,c' shared or 'a,b;c,d' per predictor");
    cv_cmd->add_option("--components", o.components, "largest component count")->capture_default_str();
    cv_cmd->add_option("--folds", o.folds, "folds")->capture_default_str();
    add_basis(cv_cmd);
    add_seed(cv_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*fit_cmd) return cmd_fit(o);
        if (*predict_cmd) return cmd_predict(o);
        if (*sim_cmd) return cmd_simulate(o);
        if (*geo_cmd) return cmd_validate_geometry(o);
        if (*bench_cmd) return cmd_benchmark(o);
        if (*cv_cmd) return cmd_cv(o);
    } catch (const Error& e) {
        std::cerr << "hpls: error[" << kind_name(e.kind()) << "]: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "hpls: error[data]: malformed model or dataset: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "hpls: error[internal]: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
