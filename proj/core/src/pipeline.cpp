#include "fedscore/pipeline.hpp"

#include <algorithm>
#include <set>

#include "fedscore/errors.hpp"

namespace fedscore {

void PipelineConfig::validate() const {
    binning.validate();
    forest.validate();
    if (s_max < 1) throw ConfigError("pipeline: S_max must be positive");
    if (d_max < 1) throw ConfigError("pipeline: D must be positive");
    if (epsilon < 0.0) throw ConfigError("pipeline: epsilon must be non-negative");
}

namespace {

// Forced variables first (by global rank), then the rest by global rank.
std::vector<std::string> candidate_order(const GlobalRanking& ranking,
                                         const std::set<std::string>& forced) {
    std::vector<std::string> order = ranking.order();
    std::stable_partition(order.begin(), order.end(),
                          [&](const std::string& v) { return forced.count(v) > 0; });
    return order;
}

std::set<std::string> forced_set(const std::vector<SiteDataset>& sites,
                                 const PipelineConfig& config) {
    std::set<std::string> forced;
    for (const auto& var : sites.front().schema.variables)
        if (var.forced_include) forced.insert(var.name);
    for (const auto& name : config.forced) {
        sites.front().schema.variable(name);  // existence check
        forced.insert(name);
    }
    return forced;
}

std::vector<EncodedSite> encode_sites(const std::vector<SiteDataset>& transformed,
                                      const DesignEncoding& encoding) {
    std::vector<EncodedSite> enc;
    enc.reserve(transformed.size());
    for (const auto& site : transformed)
        enc.push_back({site.site_id, encode_with(site.subset(Split::Train), encoding)});
    return enc;
}

}  // namespace

RefitResult refit_final(const std::vector<SiteDataset>& transformed,
                        const std::vector<std::string>& variables,
                        const SiteWeights& weights, const PipelineConfig& config) {
    if (transformed.empty()) throw DataError("refit: no sites");
    if (weights.values.size() != transformed.size())
        throw DataError("refit: weight count does not match site count");
    if (variables.empty()) throw DataError("refit: empty variable set");

    RefitResult result;
    result.encoding = make_encoding(transformed.front().schema, variables);
    const auto enc = encode_sites(transformed, result.encoding);
    result.federation = run_one_shot(enc, config.lead_index, config.fit);
    result.beta = result.federation.beta;
    result.card = derive_points(result.beta, result.encoding, config.s_max);
    return result;
}

PipelineResult run_pipeline(const std::vector<SiteDataset>& sites,
                            const SiteWeights& weights, const PipelineConfig& config) {
    config.validate();
    if (sites.empty()) throw DataError("pipeline: no sites");
    if (weights.values.size() != sites.size())
        throw DataError("pipeline: weight count does not match site count");
    if (config.lead_index >= sites.size())
        throw ConfigError("pipeline: lead index out of range");
    for (std::size_t j = 1; j < sites.size(); ++j)
        if (sites[j].schema.to_json() != sites.front().schema.to_json())
            throw DataError("pipeline: sites disagree on the schema");

    PipelineResult result;

    // Module 1: per-site forest importances, ranks federated and aggregated.
    // Forest seeds derive from the master seed and the site id, so results
    // do not depend on the order sites are listed in.
    for (const auto& site : sites) {
        result.local_rankings.push_back(forest_importance(
            site, config.forest, forest_stream_seed(config.seed, site.site_id)));
    }
    result.ranking = aggregate_rankings(result.local_rankings, weights);

    // Module 2: local quantile cutoffs, federated to one grid; the lead site
    // fixes the category-merge plan so every site bins identically.
    for (const auto& site : sites)
        result.local_cutoff_sets.push_back(local_cutoffs(site, config.binning));
    result.unified_cutoffs = federate_cutoffs(result.local_cutoff_sets, weights);
    result.plan =
        make_transform_plan(sites[config.lead_index], result.unified_cutoffs, config.binning);

    std::vector<SiteDataset> transformed;
    transformed.reserve(sites.size());
    for (const auto& site : sites) transformed.push_back(apply_transform(site, result.plan));

    // Module 4 sweep (each candidate fit is a full module-3 federation).
    const std::set<std::string> forced = forced_set(sites, config);
    const std::vector<std::string> order = candidate_order(result.ranking, forced);
    const int P = static_cast<int>(order.size());
    const int D = std::min(config.d_max, P);
    const int m_min = std::max<int>(1, static_cast<int>(forced.size()));

    result.curve.d_max = D;
    result.curve.epsilon = config.epsilon;
    result.curve.forced.assign(forced.begin(), forced.end());

    for (int m = m_min; m <= D; ++m) {
        ParsimonyPoint point;
        point.m = m;
        point.variables.assign(order.begin(), order.begin() + m);
        try {
            RefitResult fit = refit_final(transformed, point.variables, weights, config);
            for (std::size_t j = 0; j < transformed.size(); ++j) {
                const SiteDataset valid = transformed[j].subset(Split::Validation);
                const std::vector<int> scores = score_rows(fit.card, valid);
                point.phi.push_back(
                    auc(std::vector<double>(scores.begin(), scores.end()), valid.outcome));
            }
            double wsum = 0.0;
            for (double w : weights.values) wsum += w;
            for (std::size_t j = 0; j < point.phi.size(); ++j)
                point.psi += weights.values[j] / wsum * point.phi[j];
            result.curve.points.push_back(std::move(point));
        } catch (const Error& e) {
            result.curve.skipped.emplace_back(m, e.what());
        }
    }
    if (result.curve.points.empty())
        throw NumericError("pipeline: every candidate model size failed to fit (m=" +
                           std::to_string(result.curve.skipped.front().first) + ": " +
                           result.curve.skipped.front().second + ")");

    const ParsimonyPoint& chosen = select_model(result.curve);
    result.selected_m = chosen.m;
    result.selected = chosen.variables;

    // Module 3 again on the selected set, then module 5 on test rows.
    result.fit = refit_final(transformed, result.selected, weights, config);
    result.report = evaluate_model(result.plan, result.fit.card, sites, weights);
    return result;
}

EvaluationReport evaluate_model(const TransformPlan& plan, const ScoreCard& card,
                                const std::vector<SiteDataset>& sites,
                                const SiteWeights& weights) {
    if (sites.empty()) throw DataError("evaluate: no sites");
    if (weights.values.size() != sites.size())
        throw DataError("evaluate: weight count does not match site count");

    EvaluationReport report;
    std::vector<double> mus;
    for (const auto& site : sites) {
        const SiteDataset test = apply_transform(site, plan).subset(Split::Test);
        const std::vector<int> scores = score_rows(card, test);
        const std::vector<double> s(scores.begin(), scores.end());
        SiteEvaluation ev;
        ev.site_id = site.site_id;
        ev.n_test = test.n_rows();
        ev.auc = auc(s, test.outcome);
        std::tie(ev.ci_low, ev.ci_high) = auc_ci(s, test.outcome);
        report.sites.push_back(ev);
        mus.push_back(ev.auc);
    }
    std::tie(report.m1, report.m2) = weighted_metrics(mus, weights.values);
    return report;
}

}  // namespace fedscore
