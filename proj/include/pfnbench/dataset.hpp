#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pfnbench/matrix.hpp"

namespace pfnbench {

// Tabular classification dataset. Features are stored in 64-bit; the PFN
// adapter narrows to the model's 32-bit path at the boundary.
struct Dataset {
    std::string name;
    Mat64 x;
    std::vector<int> y;
    int n_classes = 2;
    std::vector<bool> discrete_cols;   // metadata only; no special treatment
    bool imbalance_guard = false;      // enforce the minority-presence guard on splits
    int guard_class = 1;               // the "feasible" class the guard counts
    std::shared_ptr<const Dataset> fixed_test;  // optional predefined test set
    std::string note;                  // generation remarks; not serialized

    std::size_t rows() const { return x.rows; }
    std::size_t features() const { return x.cols; }

    void validate() const;
};

// CSV with a header row, feature columns, and a final integer `label`
// column. The sidecar is a JSON file naming the dataset, class count,
// discrete columns, guard flag and an optional test CSV path.
Dataset load_csv_dataset(const std::string& csv_path, const std::string& meta_path);

void save_csv_dataset(const Dataset& ds, const std::string& csv_path,
                      const std::string& meta_path, const std::string& test_csv_path = "");

}  // namespace pfnbench
