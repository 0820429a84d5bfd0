#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fedscore/schema.hpp"

namespace fedscore {

enum class Split { Train, Validation, Test };

std::string split_name(Split s);
std::optional<Split> split_from_name(const std::string& name);

// Column storage: continuous values as doubles, categorical values as codes
// into the matching VariableSpec's category list.
using Column = std::variant<std::vector<double>, std::vector<int>>;

struct SiteDataset {
    int site_id = 1;
    Schema schema;
    std::vector<Column> columns;  // parallel to schema.variables
    std::vector<int> outcome;     // 0/1 per row
    std::vector<Split> split;     // per-row tag, defaults to Train

    std::size_t n_rows() const { return outcome.size(); }
    std::size_t count(Split s) const;

    const std::vector<double>& numeric_column(std::size_t var_idx) const;
    const std::vector<int>& categorical_column(std::size_t var_idx) const;
    const std::vector<double>& numeric_column(const std::string& name) const;
    const std::vector<int>& categorical_column(const std::string& name) const;
    // Category label of row `row` for variable `var_idx` (categorical only).
    const std::string& category_label(std::size_t var_idx, std::size_t row) const;

    // Copy of the rows carrying the given tag (tags reset to Train).
    SiteDataset subset(Split s) const;
    SiteDataset select_rows(const std::vector<std::size_t>& rows) const;

    void append_row_from(const SiteDataset& source, std::size_t row);
    // Structural + invariant checks; throws DataError.
    void validate() const;
};

// Concatenate sites into one pooled dataset (site_id 0), keeping split tags.
SiteDataset concat(const std::vector<SiteDataset>& sites);

struct SiteWeights {
    std::vector<double> values;  // normalized, sum 1

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
};

struct FederationConfig {
    enum class WeightsMode { Equal, SampleSize, Custom };

    int sites = 1;
    std::vector<double> proportions;  // length == sites, sum 1
    WeightsMode weights_mode = WeightsMode::Equal;
    std::vector<double> custom_weights;
    std::uint64_t seed = 1;
    std::array<double, 3> split_ratios{0.7, 0.1, 0.2};

    void validate() const;  // throws ConfigError
};

// Normalized per-site weights for the configured mode. `site_sizes` is the
// per-site row count n_j (used by the sample-size mode).
SiteWeights site_weights(const FederationConfig& config,
                         const std::vector<std::size_t>& site_sizes);

// Randomly divide `data` into config.sites disjoint datasets. Site j gets
// floor(proportion_j * n) rows; leftover rows go one each to the sites with
// the largest fractional remainders (ties favor the larger proportion, then
// the lower site index), which reproduces published multi-site cohort sizes.
std::vector<SiteDataset> partition_sites(const SiteDataset& data,
                                         const FederationConfig& config);

// Tag every row train/validation/test. Counts are floor(ratio * n) with the
// remainder assigned to train; assignment is a seeded shuffle.
SiteDataset split_train_valid_test(SiteDataset data,
                                   const std::array<double, 3>& ratios,
                                   std::uint64_t seed);

}  // namespace fedscore
