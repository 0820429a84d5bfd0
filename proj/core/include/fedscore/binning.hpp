#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "fedscore/dataset.hpp"

namespace fedscore {

struct BinningConfig {
    std::array<double, 4> percentiles{5.0, 20.0, 80.0, 95.0};
    int max_categories = 5;
    // When > 0, locally computed cutoffs are rounded to multiples of this
    // grid before they are shared (coarsens what leaves a site).
    double share_grid = 0.0;

    void validate() const;  // throws ConfigError
};

// Interior cutoffs per continuous variable, strictly increasing. A degenerate
// variable (fewer than 2 distinct values) carries an empty vector meaning a
// single category.
struct CutoffSet {
    std::map<std::string, std::vector<double>> cutoffs;

    Json to_json() const;  // {"variable": [cutoffs], ...} -- the federated payload
    static CutoffSet from_json(const Json& j);
};

// Sample quantile with linear interpolation of order statistics (type 7):
// q(p) = x_(floor(h)) + (h - floor(h)) * (x_(floor(h)+1) - x_(floor(h))),
// h = (n-1) p, on the ascending order statistics. `p01` in [0, 1].
double type7_quantile(std::vector<double> values, double p01);

// Per-variable interior cutoffs at the configured percentiles over the
// train-tagged rows; duplicates collapse.
CutoffSet local_cutoffs(const SiteDataset& data, const BinningConfig& config);

// Slot-wise weighted average of site cutoffs. A site whose collapsed vector
// is shorter simply does not contribute to the trailing slots; weights are
// renormalized over contributors per slot. Ties after weighting collapse.
CutoffSet federate_cutoffs(const std::vector<CutoffSet>& locals,
                           const SiteWeights& weights);

// How one categorical variable is capped: categories kept as-is plus an
// optional trailing "Other" bucket absorbing the rest.
struct CategoryMerge {
    std::vector<std::string> kept;
    bool has_other = false;

    std::vector<std::string> final_categories() const;
};

// Everything needed to turn a raw dataset into the unified all-categorical
// form: cutoffs for continuous variables plus merge plans for categorical
// ones. Derived once (lead side) and applied at every site so category sets
// agree everywhere.
struct TransformPlan {
    CutoffSet cutoffs;
    std::map<std::string, CategoryMerge> merges;
};

// Merge plans pick the most frequent max_categories-1 labels on the
// reference dataset's train rows (ties by schema order); the rest fold into
// "Other". Variables already within the cap pass through unchanged.
TransformPlan make_transform_plan(const SiteDataset& reference,
                                  const CutoffSet& unified,
                                  const BinningConfig& config);

SiteDataset apply_transform(const SiteDataset& data, const TransformPlan& plan);

// Single-site convenience: plan from `data` itself, then apply.
SiteDataset transform(const SiteDataset& data, const CutoffSet& cutoffs,
                      const BinningConfig& config = {});

// Rendered interval name for bin `index` under the given interior cutoffs:
// "<c1", "[c1,c2)", ..., ">=c_last"; "all" when there are no cutoffs.
std::string interval_label(const std::vector<double>& cutoffs, std::size_t index);

// Bin index of value v: intervals are left-closed, right-open.
std::size_t bin_index(const std::vector<double>& cutoffs, double v);

}  // namespace fedscore
