#include "pfnbench/dataset.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pfnbench/errors.hpp"

namespace pfnbench {

void Dataset::validate() const {
    if (x.cols < 1) throw ConfigError("Dataset '" + name + "': needs at least one feature");
    if (n_classes < 2 || n_classes > 10) {
        throw ConfigError("Dataset '" + name + "': n_classes must be in [2, 10]");
    }
    if (y.size() != x.rows) throw DimensionError("Dataset '" + name + "': label count != rows");
    if (!discrete_cols.empty() && discrete_cols.size() != x.cols) {
        throw DimensionError("Dataset '" + name + "': discrete-column flags != feature count");
    }
    if (!x.all_finite()) throw NumericError("Dataset '" + name + "': non-finite feature values");
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] < 0 || y[i] >= n_classes) {
            throw IndexError("Dataset '" + name + "': label " + std::to_string(y[i]) + " at row " +
                             std::to_string(i) + " outside [0, " + std::to_string(n_classes) + ")");
        }
    }
    if (guard_class < 0 || guard_class >= n_classes) {
        throw ConfigError("Dataset '" + name + "': guard class out of range");
    }
    if (fixed_test) {
        if (fixed_test->x.cols != x.cols) {
            throw DimensionError("Dataset '" + name + "': test split feature width differs");
        }
        if (fixed_test->n_classes != n_classes) {
            throw ConfigError("Dataset '" + name + "': test split class count differs");
        }
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

struct CsvTable {
    std::vector<std::string> header;
    Mat64 x;
    std::vector<int> y;
};

CsvTable read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("load_csv_dataset: cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw ParseError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    CsvTable table;
    table.header = split_csv_line(line);
    if (table.header.size() < 2 || table.header.back() != "label") {
        throw ParseError(path + ": last header column must be 'label'");
    }
    const std::size_t n_features = table.header.size() - 1;

    std::vector<double> values;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != n_features + 1) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(n_features + 1) + " cells, found " +
                             std::to_string(cells.size()));
        }
        for (std::size_t j = 0; j < n_features; ++j) {
            double v = 0.0;
            const auto& cell = cells[j];
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
                throw ParseError(path + ":" + std::to_string(line_no) + ": column '" +
                                 table.header[j] + "': cannot parse '" + cell + "'");
            }
            if (!std::isfinite(v)) {
                throw ParseError(path + ":" + std::to_string(line_no) + ": column '" +
                                 table.header[j] + "': non-finite value");
            }
            values.push_back(v);
        }
        const auto& label_cell = cells[n_features];
        int label = 0;
        const auto res =
            std::from_chars(label_cell.data(), label_cell.data() + label_cell.size(), label);
        if (res.ec != std::errc{} || res.ptr != label_cell.data() + label_cell.size()) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": bad label '" + label_cell +
                             "'");
        }
        table.y.push_back(label);
    }
    table.x = Mat64(table.y.size(), n_features, std::move(values));
    return table;
}

void write_csv(const Dataset& ds, const std::string& path,
               const std::vector<std::string>& header) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("save_csv_dataset: cannot open " + path);
    for (std::size_t j = 0; j < header.size(); ++j) f << (j ? "," : "") << header[j];
    f << "\n";
    char buf[40];
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        for (std::size_t j = 0; j < ds.features(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", ds.x(i, j));
            f << buf << ",";
        }
        f << ds.y[i] << "\n";
    }
    if (!f) throw IoError("save_csv_dataset: write failed for " + path);
}

std::vector<std::string> feature_header(const Dataset& ds) {
    std::vector<std::string> header;
    for (std::size_t j = 0; j < ds.features(); ++j) header.push_back("x" + std::to_string(j));
    header.emplace_back("label");
    return header;
}

}  // namespace

Dataset load_csv_dataset(const std::string& csv_path, const std::string& meta_path) {
    std::ifstream mf(meta_path);
    if (!mf) throw IoError("load_csv_dataset: cannot open metadata " + meta_path);
    nlohmann::json meta;
    try {
        mf >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(meta_path + ": " + e.what());
    }

    Dataset ds;
    ds.name = meta.value("name", std::filesystem::path(csv_path).stem().string());
    if (!meta.contains("n_classes")) throw ParseError(meta_path + ": missing n_classes");
    ds.n_classes = meta["n_classes"].get<int>();
    ds.imbalance_guard = meta.value("imbalance_guard", false);
    ds.guard_class = meta.value("guard_class", 1);

    CsvTable table = read_csv(csv_path);
    ds.x = std::move(table.x);
    ds.y = std::move(table.y);

    ds.discrete_cols.assign(ds.features(), false);
    if (meta.contains("discrete_columns")) {
        for (const auto& idx : meta["discrete_columns"]) {
            const auto j = idx.get<std::size_t>();
            if (j >= ds.features()) {
                throw ParseError(meta_path + ": discrete column " + std::to_string(j) +
                                 " out of range");
            }
            ds.discrete_cols[j] = true;
        }
    }

    if (meta.contains("test_csv") && !meta["test_csv"].get<std::string>().empty()) {
        const auto test_path =
            std::filesystem::path(csv_path).parent_path() / meta["test_csv"].get<std::string>();
        CsvTable test = read_csv(test_path.string());
        auto test_ds = std::make_shared<Dataset>();
        test_ds->name = ds.name + "/test";
        test_ds->x = std::move(test.x);
        test_ds->y = std::move(test.y);
        test_ds->n_classes = ds.n_classes;
        ds.fixed_test = std::move(test_ds);
    }
    ds.validate();
    return ds;
}

void save_csv_dataset(const Dataset& ds, const std::string& csv_path, const std::string& meta_path,
                      const std::string& test_csv_path) {
    ds.validate();
    write_csv(ds, csv_path, feature_header(ds));

    nlohmann::json meta;
    meta["name"] = ds.name;
    meta["n_classes"] = ds.n_classes;
    std::vector<std::size_t> discrete;
    for (std::size_t j = 0; j < ds.discrete_cols.size(); ++j) {
        if (ds.discrete_cols[j]) discrete.push_back(j);
    }
    meta["discrete_columns"] = discrete;
    meta["imbalance_guard"] = ds.imbalance_guard;
    meta["guard_class"] = ds.guard_class;
    if (ds.fixed_test) {
        if (test_csv_path.empty()) {
            throw ConfigError("save_csv_dataset: dataset has a fixed test set, pass a test path");
        }
        write_csv(*ds.fixed_test, test_csv_path, feature_header(ds));
        meta["test_csv"] = std::filesystem::path(test_csv_path).filename().string();
    }
    std::ofstream mf(meta_path, std::ios::trunc);
    if (!mf) throw IoError("save_csv_dataset: cannot open " + meta_path);
    mf << meta.dump(2) << "\n";
    if (!mf) throw IoError("save_csv_dataset: write failed for " + meta_path);
}

}  // namespace pfnbench
