#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedscore/dataset.hpp"

namespace fedscore {

struct ForestParams {
    int n_trees = 100;
    int min_leaf = 5;
    int mtry = 0;  // candidate variables per split; 0 = ceil(sqrt(P))

    void validate() const;
};

// One site's view: importances stay private, only ranks are shared.
struct LocalRanking {
    int site_id = 0;
    std::map<std::string, int> ranks;             // 1 = most important
    std::map<std::string, double> importances;    // mean Gini decrease

    Json to_json() const;  // {site_id, ranks} -- importances never serialize
    static LocalRanking from_json(const Json& j);
};

struct GlobalRanking {
    std::map<std::string, double> weighted_sums;  // sum_j w_j q_j
    std::map<std::string, int> global_ranks;      // 1..P, ascending sums

    // Variable names in global-rank order (rank 1 first).
    std::vector<std::string> order() const;
};

// Random-forest mean-decrease-in-Gini importance over the train-tagged rows,
// turned into a dense rank 1..P (ties broken by ascending variable name).
// Bootstrap of size n per tree; categorical variables split natively by
// one-vs-rest over categories ordered by positive rate.
LocalRanking forest_importance(const SiteDataset& data, const ForestParams& params,
                               std::uint64_t seed);

// Weighted rank sums across sites, re-ranked ascending. Sites are folded in
// ascending site_id so the result is independent of input order; rank-sum
// ties break by ascending variable name.
GlobalRanking aggregate_rankings(const std::vector<LocalRanking>& locals,
                                 const SiteWeights& weights);

// The seed stream a given site's forest draws from; shared by every caller
// so rankings agree no matter which command computes them.
std::uint64_t forest_stream_seed(std::uint64_t master, int site_id);

}  // namespace fedscore
