#include "fedscore/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fedscore/errors.hpp"
#include "fedscore/rng.hpp"

namespace fedscore {

void ForestParams::validate() const {
    if (n_trees < 1) throw ConfigError("forest: n_trees must be positive");
    if (min_leaf < 1) throw ConfigError("forest: min_leaf must be positive");
    if (mtry < 0) throw ConfigError("forest: mtry must be non-negative");
}

Json LocalRanking::to_json() const {
    Json j;
    j["site_id"] = site_id;
    Json r = Json::object();
    for (const auto& [name, rank] : ranks) r[name] = rank;
    j["ranks"] = std::move(r);
    return j;
}

LocalRanking LocalRanking::from_json(const Json& j) {
    LocalRanking lr;
    try {
        lr.site_id = j.at("site_id").get<int>();
        for (const auto& [name, rank] : j.at("ranks").items())
            lr.ranks[name] = rank.get<int>();
    } catch (const Json::exception& e) {
        throw DataError(std::string("local ranking: ") + e.what());
    }
    return lr;
}

std::vector<std::string> GlobalRanking::order() const {
    std::vector<std::string> names(global_ranks.size());
    for (const auto& [name, rank] : global_ranks)
        names[static_cast<std::size_t>(rank - 1)] = name;
    return names;
}

namespace {

// Gini impurity decrease in row-count units: m*G(t) - mL*G(L) - mR*G(R),
// with G = 2p(1-p). All counts are within the bootstrap sample.
double impurity(double pos, double m) {
    const double p = pos / m;
    return 2.0 * p * (1.0 - p) * m;
}

struct SplitChoice {
    double decrease = 0.0;
    std::size_t variable = 0;
    bool valid = false;
    // Continuous: go left iff x < threshold. Categorical: go left iff
    // left_cats[code] is set.
    double threshold = 0.0;
    std::vector<char> left_cats;
};

struct FeatureView {
    bool categorical = false;
    const std::vector<double>* num = nullptr;
    const std::vector<int>* cat = nullptr;
    std::size_t n_cats = 0;
};

class TreeBuilder {
  public:
    TreeBuilder(const std::vector<FeatureView>& features, const std::vector<double>& y,
                int min_leaf, int mtry, Rng& rng, std::vector<double>& importance)
        : features_(features), y_(y), min_leaf_(static_cast<std::size_t>(min_leaf)),
          mtry_(static_cast<std::size_t>(mtry)), rng_(rng), importance_(importance),
          scratch_vars_(features.size()) {
        for (std::size_t v = 0; v < features.size(); ++v) scratch_vars_[v] = v;
    }

    void build(std::vector<std::uint32_t>& rows) { grow(rows); }

  private:
    void grow(std::vector<std::uint32_t>& rows) {
        const double m = static_cast<double>(rows.size());
        double pos = 0.0;
        for (auto r : rows) pos += y_[r];
        if (pos == 0.0 || pos == m || rows.size() < 2 * min_leaf_) return;

        // Draw mtry distinct candidate variables (partial Fisher-Yates).
        const std::size_t k = std::min(mtry_, scratch_vars_.size());
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(
                                          rng_.below(scratch_vars_.size() - i));
            std::swap(scratch_vars_[i], scratch_vars_[j]);
        }

        SplitChoice best;
        for (std::size_t i = 0; i < k; ++i)
            consider(scratch_vars_[i], rows, pos, best);
        if (!best.valid || best.decrease <= 1e-12) return;

        importance_[best.variable] += best.decrease;

        std::vector<std::uint32_t> left, right;
        left.reserve(rows.size());
        right.reserve(rows.size());
        const FeatureView& f = features_[best.variable];
        for (auto r : rows) {
            const bool go_left = f.categorical
                                     ? best.left_cats[static_cast<std::size_t>((*f.cat)[r])] != 0
                                     : (*f.num)[r] < best.threshold;
            (go_left ? left : right).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();
        grow(left);
        grow(right);
    }

    void consider(std::size_t v, const std::vector<std::uint32_t>& rows, double pos,
                  SplitChoice& best) {
        const FeatureView& f = features_[v];
        const double m = static_cast<double>(rows.size());
        const double base = impurity(pos, m);

        if (!f.categorical) {
            auto& pairs = scratch_pairs_;
            pairs.clear();
            pairs.reserve(rows.size());
            for (auto r : rows) pairs.emplace_back((*f.num)[r], y_[r]);
            std::sort(pairs.begin(), pairs.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            double lp = 0.0;
            for (std::size_t i = 1; i < pairs.size(); ++i) {
                lp += pairs[i - 1].second;
                if (pairs[i].first == pairs[i - 1].first) continue;
                if (i < min_leaf_ || pairs.size() - i < min_leaf_) continue;
                const double ml = static_cast<double>(i);
                const double dec = base - impurity(lp, ml) - impurity(pos - lp, m - ml);
                if (!best.valid || dec > best.decrease) {
                    best = {dec, v, true,
                            pairs[i - 1].first + 0.5 * (pairs[i].first - pairs[i - 1].first),
                            {}};
                }
            }
        } else {
            // Order the node's categories by positive rate and scan prefix
            // partitions: the optimal binary split for binary outcomes lies
            // on this ordering.
            std::vector<double> tot(f.n_cats, 0.0), cpos(f.n_cats, 0.0);
            for (auto r : rows) {
                const auto c = static_cast<std::size_t>((*f.cat)[r]);
                tot[c] += 1.0;
                cpos[c] += y_[r];
            }
            std::vector<std::size_t> present;
            for (std::size_t c = 0; c < f.n_cats; ++c)
                if (tot[c] > 0.0) present.push_back(c);
            if (present.size() < 2) return;
            std::sort(present.begin(), present.end(), [&](std::size_t a, std::size_t b) {
                const double ra = cpos[a] / tot[a], rb = cpos[b] / tot[b];
                if (ra != rb) return ra < rb;
                return a < b;
            });
            double ml = 0.0, lp = 0.0;
            for (std::size_t i = 0; i + 1 < present.size(); ++i) {
                ml += tot[present[i]];
                lp += cpos[present[i]];
                if (ml < static_cast<double>(min_leaf_) ||
                    m - ml < static_cast<double>(min_leaf_))
                    continue;
                const double dec = base - impurity(lp, ml) - impurity(pos - lp, m - ml);
                if (!best.valid || dec > best.decrease) {
                    std::vector<char> mask(f.n_cats, 0);
                    for (std::size_t t = 0; t <= i; ++t) mask[present[t]] = 1;
                    best = {dec, v, true, 0.0, std::move(mask)};
                }
            }
        }
    }

    const std::vector<FeatureView>& features_;
    const std::vector<double>& y_;
    const std::size_t min_leaf_;
    const std::size_t mtry_;
    Rng& rng_;
    std::vector<double>& importance_;
    std::vector<std::size_t> scratch_vars_;
    std::vector<std::pair<double, double>> scratch_pairs_;
};

// Dense ranks from importances: descending importance, ties by name.
std::map<std::string, int> assign_ranks(const std::vector<std::string>& names,
                                        const std::vector<double>& importance) {
    std::vector<std::size_t> order(names.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (importance[a] != importance[b]) return importance[a] > importance[b];
        return names[a] < names[b];
    });
    std::map<std::string, int> ranks;
    for (std::size_t i = 0; i < order.size(); ++i)
        ranks[names[order[i]]] = static_cast<int>(i + 1);
    return ranks;
}

}  // namespace

std::uint64_t forest_stream_seed(std::uint64_t master, int site_id) {
    return seed_stream(master, 0xF0A0 + static_cast<std::uint64_t>(site_id));
}

LocalRanking forest_importance(const SiteDataset& data, const ForestParams& params,
                               std::uint64_t seed) {
    params.validate();
    const auto& schema = data.schema;
    const std::size_t P = schema.variables.size();
    if (P == 0) throw DataError("forest: no predictor variables");

    std::vector<std::uint32_t> train;
    for (std::size_t r = 0; r < data.n_rows(); ++r)
        if (data.split[r] == Split::Train) train.push_back(static_cast<std::uint32_t>(r));
    if (train.size() < 10) throw DataError("forest: fewer than 10 training rows");

    std::vector<double> y(data.n_rows(), 0.0);
    double pos = 0.0;
    for (auto r : train) {
        y[r] = data.outcome[r];
        pos += y[r];
    }
    if (pos == 0.0 || pos == static_cast<double>(train.size()))
        throw DataError("forest: single-class outcome");

    std::vector<FeatureView> features(P);
    for (std::size_t v = 0; v < P; ++v) {
        const auto& var = schema.variables[v];
        if (var.kind == VariableKind::Continuous) {
            features[v].num = &data.numeric_column(var.name);
        } else {
            features[v].categorical = true;
            features[v].cat = &data.categorical_column(var.name);
            features[v].n_cats = var.categories.size();
        }
    }

    const int mtry = params.mtry > 0
                         ? params.mtry
                         : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(P))));

    std::vector<double> importance(P, 0.0);
    for (int t = 0; t < params.n_trees; ++t) {
        Rng rng(seed_stream(seed, static_cast<std::uint64_t>(t)));
        std::vector<std::uint32_t> sample(train.size());
        for (auto& r : sample) r = train[rng.below(train.size())];
        TreeBuilder builder(features, y, params.min_leaf, mtry, rng, importance);
        builder.build(sample);
    }
    for (auto& imp : importance) imp /= static_cast<double>(params.n_trees);

    LocalRanking out;
    out.site_id = data.site_id;
    const auto names = schema.variable_names();
    out.ranks = assign_ranks(names, importance);
    for (std::size_t v = 0; v < P; ++v) out.importances[names[v]] = importance[v];
    return out;
}

GlobalRanking aggregate_rankings(const std::vector<LocalRanking>& locals,
                                 const SiteWeights& weights) {
    if (locals.empty()) throw DataError("aggregate_rankings: no site rankings");
    if (weights.values.size() != locals.size())
        throw DataError("aggregate_rankings: weight count does not match site count");

    std::vector<const LocalRanking*> ordered;
    for (const auto& lr : locals) ordered.push_back(&lr);
    std::sort(ordered.begin(), ordered.end(), [](const LocalRanking* a, const LocalRanking* b) {
        return a->site_id < b->site_id;
    });
    std::set<int> ids;
    for (const auto* lr : ordered)
        if (!ids.insert(lr->site_id).second)
            throw DataError("aggregate_rankings: duplicate site id " +
                            std::to_string(lr->site_id));

    // Weight lookup must follow the caller's site order, not the sorted one.
    std::map<int, double> weight_of;
    for (std::size_t j = 0; j < locals.size(); ++j)
        weight_of[locals[j].site_id] = weights.values[j];

    const auto& reference = ordered.front()->ranks;
    double wsum = 0.0;
    for (const auto* lr : ordered) {
        if (lr->ranks.size() != reference.size())
            throw DataError("aggregate_rankings: sites rank different variable sets");
        for (const auto& [name, rank] : lr->ranks) {
            (void)rank;
            if (!reference.count(name))
                throw DataError("aggregate_rankings: variable '" + name +
                                "' is not ranked at every site");
        }
        wsum += weight_of[lr->site_id];
    }
    if (wsum <= 0.0) throw ConfigError("aggregate_rankings: weights sum to zero");

    GlobalRanking out;
    for (const auto& [name, rank] : reference) {
        (void)rank;
        double s = 0.0;
        for (const auto* lr : ordered)
            s += weight_of[lr->site_id] * static_cast<double>(lr->ranks.at(name));
        out.weighted_sums[name] = s / wsum;
    }

    std::vector<std::string> names;
    for (const auto& [name, s] : out.weighted_sums) {
        (void)s;
        names.push_back(name);
    }
    std::sort(names.begin(), names.end(), [&](const std::string& a, const std::string& b) {
        const double sa = out.weighted_sums[a], sb = out.weighted_sums[b];
        if (sa != sb) return sa < sb;
        return a < b;
    });
    for (std::size_t i = 0; i < names.size(); ++i)
        out.global_ranks[names[i]] = static_cast<int>(i + 1);
    return out;
}

}  // namespace fedscore
