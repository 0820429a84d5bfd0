#pragma once

#include <cstddef>
#include <filesystem>

#include "fedscore/dataset.hpp"

namespace fedscore {

struct LoadReport {
    std::size_t rows_loaded = 0;
    std::size_t rows_excluded_missing = 0;
};

// RFC-4180 CSV with a required header row. Columns must be exactly the
// schema's predictors plus the outcome, in any order; an optional "split"
// column carries train/validation/test tags. Rows with a missing cell
// (empty or "NA") are dropped and counted in the report; any other
// malformed cell is an error naming the row and column.
SiteDataset load_csv(const std::filesystem::path& path, const Schema& schema,
                     LoadReport* report = nullptr);

void save_csv(const std::filesystem::path& path, const SiteDataset& data,
              bool with_split_column = true);

}  // namespace fedscore
