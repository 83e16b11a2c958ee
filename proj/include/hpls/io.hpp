#pragma once

// Serialization: basis specs and fitted models as JSON, datasets as a CSV
// bundle (one curve table per functional predictor plus a scalar/response
// table) or a single JSON document.

#include <Eigen/Dense>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hpls/basis.hpp"
#include "hpls/errors.hpp"
#include "hpls/hybrid.hpp"
#include "hpls/pcr.hpp"
#include "hpls/pls.hpp"
#include "hpls/synthetic.hpp"

namespace hpls {

using json = nlohmann::json;

inline constexpr int kModelSchemaVersion = 1;

inline std::string format_number(double x) { return fmt::format("{:.17g}", x); }

// --- basic conversions -------------------------------------------------------

inline json to_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

inline Eigen::VectorXd vector_from_json(const json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

// Row-major nested arrays.
inline json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(to_json(m.row(r).transpose()));
    return rows;
}

inline Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index cols_if_empty = 0) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) return Eigen::MatrixXd(0, cols_if_empty);
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(r)].size()) != cols)
            throw IngestionError("ragged matrix at row " + std::to_string(r));
        m.row(r) = vector_from_json(j[static_cast<std::size_t>(r)]).transpose();
    }
    return m;
}

inline json to_json(const BasisSpec& spec) {
    return json{{"kind", to_string(spec.kind)}, {"degree", spec.degree}, {"num_basis", spec.size}};
}

inline BasisSpec basis_from_json(const json& j) {
    return make_basis(basis_kind_from_string(j.at("kind").get<std::string>()), j.value("degree", 3),
                      j.at("num_basis").get<int>());
}

inline json to_json(const HybridElement& h) {
    json functional = json::array();
    for (int j = 0; j < h.num_functional(); ++j) functional.push_back(to_json(Eigen::VectorXd(h.functional(j))));
    return json{{"functional", functional}, {"scalar", to_json(Eigen::VectorXd(h.scalar()))}};
}

inline HybridElement element_from_json(const json& j) {
    const auto& functional = j.at("functional");
    const auto scalar = vector_from_json(j.at("scalar"));
    if (functional.empty()) throw IngestionError("hybrid element without functional blocks");
    const int K = static_cast<int>(functional.size());
    const int M = static_cast<int>(functional[0].size());
    HybridElement h(K, M, static_cast<int>(scalar.size()));
    for (int k = 0; k < K; ++k) {
        const auto block = vector_from_json(functional[static_cast<std::size_t>(k)]);
        if (block.size() != M) throw IngestionError("functional blocks differ in length");
        h.functional(k) = block;
    }
    h.scalar() = scalar;
    return h;
}

inline json to_json(const Standardization& tr) {
    json centers = json::array();
    for (const auto& c : tr.functional_centers) centers.push_back(to_json(c));
    return json{{"functional_centers", centers},
                {"functional_scales", tr.functional_scales},
                {"scalar_means", to_json(tr.scalar_means)},
                {"scalar_scales", to_json(tr.scalar_scales)},
                {"omega", tr.omega},
                {"response_center", tr.response_center}};
}

inline Standardization standardization_from_json(const json& j) {
    Standardization tr;
    for (const auto& c : j.at("functional_centers")) tr.functional_centers.push_back(vector_from_json(c));
    tr.functional_scales = j.at("functional_scales").get<std::vector<double>>();
    tr.scalar_means = vector_from_json(j.at("scalar_means"));
    tr.scalar_scales = vector_from_json(j.at("scalar_scales"));
    tr.omega = j.at("omega").get<double>();
    tr.response_center = j.at("response_center").get<double>();
    return tr;
}

// --- models ------------------------------------------------------------------

inline json to_json(const PlsModel& model) {
    if (!model.basis) throw DomainError("model has no basis spec attached; fit through fit_raw to serialize");
    json comps = json::array();
    for (const auto& c : model.components)
        comps.push_back(json{{"direction", to_json(c.direction)},
                             {"loading", to_json(c.loading)},
                             {"slope", c.slope},
                             {"normalizer", c.normalizer}});
    return json{{"schema_version", kModelSchemaVersion},
                {"method", "hybrid_pls"},
                {"basis", to_json(*model.basis)},
                {"penalty", model.penalty.lambdas},
                {"standardization", to_json(model.transform)},
                {"requested_components", model.requested_components},
                {"truncated", model.truncated},
                {"components", comps},
                {"beta", to_json(model.beta)}};
}

inline void check_schema(const json& j, const std::string& method) {
    if (j.value("schema_version", -1) != kModelSchemaVersion)
        throw IngestionError("unsupported model schema version");
    if (j.value("method", std::string()) != method)
        throw IngestionError("model file holds method '" + j.value("method", std::string()) + "', expected '" + method + "'");
}

inline PlsModel pls_model_from_json(const json& j) {
    check_schema(j, "hybrid_pls");
    PlsModel model;
    model.basis = basis_from_json(j.at("basis"));
    model.gram = gram(*model.basis);
    model.penalty = PenaltyConfig(j.at("penalty").get<std::vector<double>>());
    model.transform = standardization_from_json(j.at("standardization"));
    model.requested_components = j.at("requested_components").get<int>();
    model.truncated = j.at("truncated").get<bool>();
    for (const auto& c : j.at("components"))
        model.components.push_back(PlsComponent{element_from_json(c.at("direction")), element_from_json(c.at("loading")),
                                                c.at("slope").get<double>(), Eigen::VectorXd(),
                                                c.at("normalizer").get<double>()});
    model.beta = element_from_json(j.at("beta"));
    for (std::size_t l = 0; l < model.components.size(); ++l) {
        HybridElement iota = model.components[l].direction;
        for (std::size_t u = 0; u < l; ++u)
            iota -= inner_product(model.components[u].loading, model.components[l].direction, model.gram) * model.iotas[u];
        model.iotas.push_back(std::move(iota));
    }
    return model;
}

inline json to_json(const PcrModel& model) {
    if (!model.basis) throw DomainError("model has no basis spec attached; fit through fit_pcr_raw to serialize");
    json axes = json::array(), variances = json::array();
    for (std::size_t j = 0; j < model.functional_axes.size(); ++j) {
        axes.push_back(matrix_to_json(model.functional_axes[j].transpose()));
        variances.push_back(to_json(model.functional_variances[j]));
    }
    return json{{"schema_version", kModelSchemaVersion},
                {"method", "pcr"},
                {"basis", to_json(*model.basis)},
                {"components", model.components},
                {"functional_axes", axes},
                {"functional_variances", variances},
                {"scalar_axes", matrix_to_json(model.scalar_axes.transpose())},
                {"scalar_variances", to_json(model.scalar_variances)},
                {"coefficients", to_json(model.coefficients)},
                {"intercept", model.intercept},
                {"standardization", to_json(model.transform)}};
}

inline PcrModel pcr_model_from_json(const json& j) {
    check_schema(j, "pcr");
    PcrModel model;
    model.basis = basis_from_json(j.at("basis"));
    model.gram = gram(*model.basis);
    model.components = j.at("components").get<int>();
    for (const auto& a : j.at("functional_axes")) model.functional_axes.push_back(matrix_from_json(a).transpose());
    for (const auto& v : j.at("functional_variances")) model.functional_variances.push_back(vector_from_json(v));
    model.scalar_axes = matrix_from_json(j.at("scalar_axes")).transpose();
    model.scalar_variances = vector_from_json(j.at("scalar_variances"));
    model.coefficients = vector_from_json(j.at("coefficients"));
    model.intercept = j.at("intercept").get<double>();
    model.transform = standardization_from_json(j.at("standardization"));
    return model;
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IngestionError(path.string() + ": " + e.what());
    }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestionError("cannot write " + path.string());
    out << text;
}

// --- CSV ---------------------------------------------------------------------

struct CsvTable {
    std::vector<std::vector<std::string>> rows;
};

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open " + path.string());
    CsvTable table;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(trim(field));
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        table.rows.push_back(std::move(fields));
    }
    return table;
}

inline double parse_number(const std::string& text, const std::filesystem::path& path, std::size_t row, std::size_t col) {
    char* end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(value))
        throw IngestionError(path.string() + ": row " + std::to_string(row + 1) + ", column " + std::to_string(col + 1) +
                             ": not a finite number: '" + text + "'");
    return value;
}

inline std::string join_numbers(const Eigen::VectorXd& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_number(v[i]);
    }
    return out;
}

// --- dataset bundles ---------------------------------------------------------

// One functional predictor observed on a grid: rows = samples.
struct CurveTable {
    std::vector<double> grid;
    Eigen::MatrixXd values;
};

struct DatasetBundle {
    std::vector<CurveTable> curves;
    std::vector<std::string> scalar_names;
    Eigen::MatrixXd Z;
    std::optional<Eigen::VectorXd> y;

    int n() const { return static_cast<int>(Z.rows()); }
};

inline const char* kResponseColumn = "y";

inline std::filesystem::path functional_csv_path(const std::filesystem::path& dir, int k) {
    return dir / ("functional_" + std::to_string(k + 1) + ".csv");
}
inline std::filesystem::path scalar_csv_path(const std::filesystem::path& dir) { return dir / "scalar.csv"; }

inline CurveTable read_curve_csv(const std::filesystem::path& path) {
    const auto table = read_csv(path);
    if (table.rows.size() < 2) throw IngestionError(path.string() + ": needs a grid row and at least one sample row");
    CurveTable curves;
    const auto G = table.rows[0].size();
    for (std::size_t c = 0; c < G; ++c) {
        const double t = parse_number(table.rows[0][c], path, 0, c);
        if (t < 0.0 || t > 1.0)
            throw IngestionError(path.string() + ": row 1, column " + std::to_string(c + 1) + ": grid time outside [0,1]");
        curves.grid.push_back(t);
    }
    curves.values.resize(static_cast<Eigen::Index>(table.rows.size() - 1), static_cast<Eigen::Index>(G));
    for (std::size_t r = 1; r < table.rows.size(); ++r) {
        if (table.rows[r].size() != G)
            throw IngestionError(path.string() + ": row " + std::to_string(r + 1) + " has " +
                                 std::to_string(table.rows[r].size()) + " columns, grid has " + std::to_string(G));
        for (std::size_t c = 0; c < G; ++c)
            curves.values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c)) = parse_number(table.rows[r][c], path, r, c);
    }
    return curves;
}

inline void read_scalar_csv(const std::filesystem::path& path, DatasetBundle& bundle) {
    const auto table = read_csv(path);
    if (table.rows.empty()) throw IngestionError(path.string() + ": empty file");
    const auto& header = table.rows[0];
    std::optional<std::size_t> response_col;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == kResponseColumn) response_col = c;
        else bundle.scalar_names.push_back(header[c]);
    }
    const auto n = static_cast<Eigen::Index>(table.rows.size() - 1);
    bundle.Z.resize(n, static_cast<Eigen::Index>(bundle.scalar_names.size()));
    Eigen::VectorXd y(n);
    for (std::size_t r = 1; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != header.size())
            throw IngestionError(path.string() + ": row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                                 " columns, header has " + std::to_string(header.size()));
        Eigen::Index zc = 0;
        for (std::size_t c = 0; c < row.size(); ++c) {
            const double v = parse_number(row[c], path, r, c);
            if (response_col && c == *response_col) y[static_cast<Eigen::Index>(r - 1)] = v;
            else bundle.Z(static_cast<Eigen::Index>(r - 1), zc++) = v;
        }
    }
    if (response_col) bundle.y = std::move(y);
}

// A directory holding functional_1.csv ... functional_K.csv and scalar.csv.
inline DatasetBundle read_bundle_dir(const std::filesystem::path& dir) {
    DatasetBundle bundle;
    if (!std::filesystem::is_directory(dir)) throw IngestionError("dataset directory not found: " + dir.string());
    for (int k = 0;; ++k) {
        const auto path = functional_csv_path(dir, k);
        if (!std::filesystem::exists(path)) {
            if (k == 0) throw IngestionError("missing functional predictor file " + path.string());
            break;
        }
        bundle.curves.push_back(read_curve_csv(path));
    }
    const auto scalar_path = scalar_csv_path(dir);
    if (!std::filesystem::exists(scalar_path)) throw IngestionError("missing scalar/response file " + scalar_path.string());
    read_scalar_csv(scalar_path, bundle);
    for (std::size_t k = 0; k < bundle.curves.size(); ++k)
        if (bundle.curves[k].values.rows() != bundle.Z.rows())
            throw IngestionError(functional_csv_path(dir, static_cast<int>(k)).string() + " has " +
                                 std::to_string(bundle.curves[k].values.rows()) + " sample rows, " +
                                 scalar_path.string() + " has " + std::to_string(bundle.Z.rows()));
    return bundle;
}

inline json to_json(const DatasetBundle& bundle) {
    json functional = json::array();
    for (const auto& c : bundle.curves) functional.push_back(json{{"grid", c.grid}, {"values", matrix_to_json(c.values)}});
    json j{{"format", "hpls-dataset"},
           {"version", 1},
           {"functional", functional},
           {"scalar_names", bundle.scalar_names},
           {"scalar", matrix_to_json(bundle.Z)}};
    if (bundle.y) j["response"] = to_json(*bundle.y);
    return j;
}

inline DatasetBundle bundle_from_json(const json& j, const std::string& origin) {
    DatasetBundle bundle;
    try {
        for (const auto& f : j.at("functional")) {
            CurveTable c{f.at("grid").get<std::vector<double>>(), matrix_from_json(f.at("values"))};
            if (c.values.cols() != static_cast<Eigen::Index>(c.grid.size()))
                throw IngestionError(origin + ": functional predictor " + std::to_string(bundle.curves.size() + 1) +
                                     " values have " + std::to_string(c.values.cols()) + " columns, grid has " +
                                     std::to_string(c.grid.size()));
            for (double t : c.grid)
                if (t < 0.0 || t > 1.0) throw IngestionError(origin + ": grid time outside [0,1]");
            bundle.curves.push_back(std::move(c));
        }
        bundle.scalar_names = j.value("scalar_names", std::vector<std::string>{});
        bundle.Z = matrix_from_json(j.at("scalar"), static_cast<Eigen::Index>(bundle.scalar_names.size()));
        if (j.contains("response")) bundle.y = vector_from_json(j.at("response"));
    } catch (const json::exception& e) {
        throw IngestionError(origin + ": " + e.what());
    }
    if (bundle.curves.empty()) throw IngestionError(origin + ": no functional predictors");
    for (std::size_t k = 0; k < bundle.curves.size(); ++k)
        if (bundle.curves[k].values.rows() != bundle.Z.rows())
            throw IngestionError(origin + ": functional predictor " + std::to_string(k + 1) + " has " +
                                 std::to_string(bundle.curves[k].values.rows()) + " rows, scalar block has " +
                                 std::to_string(bundle.Z.rows()));
    if (bundle.y && bundle.y->size() != bundle.Z.rows()) throw IngestionError(origin + ": response length mismatch");
    return bundle;
}

inline DatasetBundle read_bundle(const std::filesystem::path& path) {
    if (path.extension() == ".json") return bundle_from_json(read_json_file(path), path.string());
    return read_bundle_dir(path);
}

inline void write_bundle_dir(const std::filesystem::path& dir, const DatasetBundle& bundle) {
    std::filesystem::create_directories(dir);
    for (std::size_t k = 0; k < bundle.curves.size(); ++k) {
        const auto& c = bundle.curves[k];
        std::string text = join_numbers(Eigen::Map<const Eigen::VectorXd>(c.grid.data(), static_cast<Eigen::Index>(c.grid.size()))) + "\n";
        for (Eigen::Index r = 0; r < c.values.rows(); ++r) text += join_numbers(c.values.row(r).transpose()) + "\n";
        write_text_file(functional_csv_path(dir, static_cast<int>(k)), text);
    }
    std::string text;
    for (std::size_t c = 0; c < bundle.scalar_names.size(); ++c) text += (c ? "," : "") + bundle.scalar_names[c];
    if (bundle.y) text += std::string(bundle.scalar_names.empty() ? "" : ",") + kResponseColumn;
    text += "\n";
    for (Eigen::Index r = 0; r < bundle.Z.rows(); ++r) {
        std::string line = join_numbers(bundle.Z.row(r).transpose());
        if (bundle.y) line += (bundle.Z.cols() ? "," : "") + format_number((*bundle.y)[r]);
        text += line + "\n";
    }
    write_text_file(scalar_csv_path(dir), text);
}

// Projects every curve table onto the basis; missing responses become zeros.
inline HybridDataset to_dataset(const DatasetBundle& bundle, const BasisSpec& basis, double ridge = 0.0) {
    HybridDataset data;
    for (std::size_t k = 0; k < bundle.curves.size(); ++k) {
        const auto& c = bundle.curves[k];
        try {
            CurveProjector projector(basis, c.grid, ridge);
            data.theta.push_back(projector.project_rows(c.values));
        } catch (const RankDeficient& e) {
            throw RankDeficient("functional predictor " + std::to_string(k + 1) + ": " + e.what());
        }
    }
    data.Z = bundle.Z;
    data.y = bundle.y ? *bundle.y : Eigen::VectorXd::Zero(bundle.Z.rows());
    data.validate();
    return data;
}

// Curves evaluated on a grid from coefficient blocks.
inline DatasetBundle to_bundle(const HybridDataset& data, const BasisSpec& basis, const std::vector<double>& grid,
                               bool include_response = true) {
    DatasetBundle bundle;
    for (const auto& block : data.theta) bundle.curves.push_back(CurveTable{grid, evaluate_rows(basis, block, grid)});
    for (int c = 0; c < data.p(); ++c) bundle.scalar_names.push_back("z" + std::to_string(c + 1));
    bundle.Z = data.Z;
    if (include_response) bundle.y = data.y;
    return bundle;
}

inline json to_json(const ScenarioSpec& spec, const GroundTruth& truth) {
    json j{{"scenario", to_string(spec.scenario)},
           {"n", spec.n},
           {"seed", spec.seed},
           {"basis", to_json(spec.basis)},
           {"signal", to_json(truth.signal)}};
    if (truth.beta) j["beta"] = to_json(*truth.beta);
    if (truth.latent_u.size()) j["latent_u"] = to_json(truth.latent_u);
    if (truth.latent_v.size()) j["latent_v"] = to_json(truth.latent_v);
    return j;
}

// Gram matrix as CSV, for debugging.
inline std::string matrix_to_csv(const Eigen::MatrixXd& m) {
    std::string out;
    for (Eigen::Index r = 0; r < m.rows(); ++r) out += join_numbers(m.row(r).transpose()) + "\n";
    return out;
}

} // namespace hpls
