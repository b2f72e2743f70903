#pragma once

// Sample matrices (inputs X, outputs Y) with generator provenance. Persists
// as data.csv plus a data.meta.json sidecar carrying everything needed to
// reproduce or reinterpret the file: generator, seed, parameters, column
// permutation for embedded datasets, and the train/val/test split.

#include <filesystem>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rinnlab/io.hpp"
#include "rinnlab/matrix.hpp"
#include "rinnlab/splits.hpp"

namespace rinnlab {

enum class ValueKind { BINARY, REAL, NONNEG_INT };

inline const char* value_kind_name(ValueKind k) {
    switch (k) {
        case ValueKind::BINARY: return "BINARY";
        case ValueKind::REAL: return "REAL";
        default: return "NONNEG_INT";
    }
}

inline ValueKind parse_value_kind(const std::string& s) {
    if (s == "BINARY") return ValueKind::BINARY;
    if (s == "REAL") return ValueKind::REAL;
    if (s == "NONNEG_INT") return ValueKind::NONNEG_INT;
    throw std::invalid_argument("unknown value kind " + s);
}

struct DatasetMeta {
    std::string generator;
    std::uint64_t seed = 0;
    std::string dag;  // path or built-in name; empty when not graph-driven
    nlohmann::json params = nlohmann::json::object();
    // For embedded datasets: embedded column j came from concatenated
    // column permutation[j] (background block first, then core block).
    std::vector<int> input_permutation;
    std::vector<int> output_permutation;
    int core_inputs = 0;
    int core_outputs = 0;
    bool background_resampled = false;
    std::optional<SplitPlan> split;
};

struct Dataset {
    Matrix X;
    Matrix Y;
    ValueKind x_kind = ValueKind::REAL;
    ValueKind y_kind = ValueKind::REAL;
    DatasetMeta meta;

    int n_rows() const { return X.rows; }
    int n_inputs() const { return X.cols; }
    int n_outputs() const { return Y.cols; }

    // Embedded-core column positions, defined only for embed() output.
    std::vector<int> core_input_columns() const {
        return core_columns(meta.input_permutation, X.cols - meta.core_inputs, meta.core_inputs);
    }
    std::vector<int> core_output_columns() const {
        return core_columns(meta.output_permutation, Y.cols - meta.core_outputs, meta.core_outputs);
    }

  private:
    static std::vector<int> core_columns(const std::vector<int>& perm, int first_core, int count) {
        std::vector<int> cols(static_cast<std::size_t>(count), -1);
        for (std::size_t j = 0; j < perm.size(); ++j) {
            const int src = perm[j];
            if (src >= first_core) cols[static_cast<std::size_t>(src - first_core)] =
                static_cast<int>(j);
        }
        return cols;
    }
};

namespace detail {

inline nlohmann::json split_to_json(const SplitPlan& plan) {
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : plan.folds) folds.push_back({{"train", f.train}, {"val", f.val}});
    return {{"seed", plan.seed}, {"test", plan.test}, {"folds", folds}};
}

inline SplitPlan split_from_json(const nlohmann::json& j) {
    SplitPlan plan;
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.test = j.at("test").get<std::vector<int>>();
    for (const auto& f : j.at("folds")) {
        SplitFold fold;
        fold.train = f.at("train").get<std::vector<int>>();
        fold.val = f.at("val").get<std::vector<int>>();
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

}  // namespace detail

inline nlohmann::json meta_to_json(const Dataset& ds) {
    nlohmann::json j{{"generator", ds.meta.generator},
                     {"seed", ds.meta.seed},
                     {"dag", ds.meta.dag},
                     {"params", ds.meta.params},
                     {"x_kind", value_kind_name(ds.x_kind)},
                     {"y_kind", value_kind_name(ds.y_kind)},
                     {"n_rows", ds.n_rows()},
                     {"n_inputs", ds.n_inputs()},
                     {"n_outputs", ds.n_outputs()}};
    if (!ds.meta.input_permutation.empty()) {
        j["input_permutation"] = ds.meta.input_permutation;
        j["output_permutation"] = ds.meta.output_permutation;
        j["core_inputs"] = ds.meta.core_inputs;
        j["core_outputs"] = ds.meta.core_outputs;
        j["background_resampled"] = ds.meta.background_resampled;
    }
    if (ds.meta.split) j["split"] = detail::split_to_json(*ds.meta.split);
    return j;
}

inline std::string dataset_csv(const Dataset& ds) {
    std::ostringstream out;
    for (int c = 0; c < ds.n_inputs(); ++c) out << (c ? "," : "") << "x_" << c;
    for (int c = 0; c < ds.n_outputs(); ++c) out << (ds.n_inputs() + c ? "," : "") << "y_" << c;
    out << '\n';
    const bool xi = ds.x_kind != ValueKind::REAL;
    const bool yi = ds.y_kind != ValueKind::REAL;
    for (int r = 0; r < ds.n_rows(); ++r) {
        for (int c = 0; c < ds.n_inputs(); ++c)
            out << (c ? "," : "") << format_value(ds.X(r, c), xi);
        for (int c = 0; c < ds.n_outputs(); ++c)
            out << (ds.n_inputs() + c ? "," : "") << format_value(ds.Y(r, c), yi);
        out << '\n';
    }
    return out.str();
}

// Writes <stem>.csv and <stem>.meta.json, e.g. stem "out/data".
inline void save_dataset(const Dataset& ds, const std::filesystem::path& stem) {
    atomic_write_file(stem.string() + ".csv", dataset_csv(ds));
    atomic_write_file(stem.string() + ".meta.json", meta_to_json(ds).dump(2) + "\n");
}

inline Dataset load_dataset(const std::filesystem::path& stem) {
    const nlohmann::json j = nlohmann::json::parse(read_file(stem.string() + ".meta.json"));
    Dataset ds;
    ds.meta.generator = j.at("generator").get<std::string>();
    ds.meta.seed = j.at("seed").get<std::uint64_t>();
    ds.meta.dag = j.at("dag").get<std::string>();
    ds.meta.params = j.at("params");
    ds.x_kind = parse_value_kind(j.at("x_kind").get<std::string>());
    ds.y_kind = parse_value_kind(j.at("y_kind").get<std::string>());
    if (j.contains("input_permutation")) {
        ds.meta.input_permutation = j.at("input_permutation").get<std::vector<int>>();
        ds.meta.output_permutation = j.at("output_permutation").get<std::vector<int>>();
        ds.meta.core_inputs = j.at("core_inputs").get<int>();
        ds.meta.core_outputs = j.at("core_outputs").get<int>();
        ds.meta.background_resampled = j.at("background_resampled").get<bool>();
    }
    if (j.contains("split")) ds.meta.split = detail::split_from_json(j.at("split"));

    const int n = j.at("n_rows").get<int>();
    const int p = j.at("n_inputs").get<int>();
    const int q = j.at("n_outputs").get<int>();
    ds.X = Matrix(n, p);
    ds.Y = Matrix(n, q);

    std::istringstream in(read_file(stem.string() + ".csv"));
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(stem.string() + ".csv: empty file");
    for (int r = 0; r < n; ++r) {
        if (!std::getline(in, line))
            throw std::runtime_error(stem.string() + ".csv: expected " + std::to_string(n) +
                                     " data rows, got " + std::to_string(r));
        const auto cells = split_csv_line(line);
        if (static_cast<int>(cells.size()) != p + q)
            throw std::runtime_error(stem.string() + ".csv: row " + std::to_string(r + 1) +
                                     " has " + std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(p + q));
        for (int c = 0; c < p; ++c) ds.X(r, c) = std::stod(cells[static_cast<std::size_t>(c)]);
        for (int c = 0; c < q; ++c) ds.Y(r, c) = std::stod(cells[static_cast<std::size_t>(p + c)]);
    }
    return ds;
}

}  // namespace rinnlab
