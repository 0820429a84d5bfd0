#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedscore/binning.hpp"
#include "fedscore/eval.hpp"
#include "fedscore/protocol.hpp"
#include "fedscore/ranking.hpp"
#include "fedscore/scorecard.hpp"

namespace fedscore {

// Knobs for one end-to-end score derivation (any K, including K=1 for the
// pooled and per-site local baselines).
struct PipelineConfig {
    BinningConfig binning;
    ForestParams forest;
    FitOptions fit;
    int s_max = 100;
    int d_max = 8;
    double epsilon = 0.005;
    std::vector<std::string> forced;  // forced-include variables (by name)
    std::size_t lead_index = 0;
    std::uint64_t seed = 0;

    void validate() const;
};

// Federated refit on an already-transformed cohort restricted to `variables`.
struct RefitResult {
    Eigen::VectorXd beta;
    DesignEncoding encoding;
    ScoreCard card;
    OneShotResult federation;
};

RefitResult refit_final(const std::vector<SiteDataset>& transformed,
                        const std::vector<std::string>& variables,
                        const SiteWeights& weights, const PipelineConfig& config);

struct PipelineResult {
    std::vector<LocalRanking> local_rankings;  // importances stay in-process
    GlobalRanking ranking;
    std::vector<CutoffSet> local_cutoff_sets;
    CutoffSet unified_cutoffs;
    TransformPlan plan;
    ParsimonyCurve curve;
    int selected_m = 0;
    std::vector<std::string> selected;
    RefitResult fit;
    EvaluationReport report;  // final card on this cohort's own test rows
};

// Modules 1-5 in order: rank -> bin -> parsimony sweep (federated fit +
// scorecard per candidate size) -> plateau selection -> federated refit ->
// test evaluation. `sites` carry split tags; every cross-site exchange runs
// through the one-shot protocol.
PipelineResult run_pipeline(const std::vector<SiteDataset>& sites,
                            const SiteWeights& weights, const PipelineConfig& config);

// Evaluate a finished model (binning plan + card) on each site's test rows;
// the weighted summary gives (M1, M2). Used to score any arm's model across
// the whole cohort, e.g. a local model on the other sites' data.
EvaluationReport evaluate_model(const TransformPlan& plan, const ScoreCard& card,
                                const std::vector<SiteDataset>& sites,
                                const SiteWeights& weights);

}  // namespace fedscore
