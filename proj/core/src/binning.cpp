#include "fedscore/binning.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>

#include "fedscore/errors.hpp"
#include "fedscore/jsonio.hpp"

namespace fedscore {

void BinningConfig::validate() const {
    for (double p : percentiles) {
        if (!(p > 0.0 && p < 100.0))
            throw ConfigError("binning percentiles must lie strictly between 0 and 100");
    }
    for (std::size_t i = 1; i < percentiles.size(); ++i) {
        if (!(percentiles[i] > percentiles[i - 1]))
            throw ConfigError("binning percentiles must be strictly increasing");
    }
    if (max_categories < 2)
        throw ConfigError("max_categories must be at least 2");
    if (share_grid < 0.0 || !std::isfinite(share_grid))
        throw ConfigError("share_grid must be a finite non-negative number");
}

Json CutoffSet::to_json() const {
    Json j = Json::object();
    for (const auto& [name, cs] : cutoffs) {
        Json arr = Json::array();
        for (double c : cs) arr.push_back(c);
        j[name] = std::move(arr);
    }
    return j;
}

CutoffSet CutoffSet::from_json(const Json& j) {
    if (!j.is_object()) throw DataError("cutoff set: expected a JSON object");
    CutoffSet set;
    for (const auto& [name, arr] : j.items()) {
        if (!arr.is_array()) throw DataError("cutoff set: '" + name + "' is not an array");
        std::vector<double> cs;
        cs.reserve(arr.size());
        for (const auto& v : arr) {
            if (!v.is_number()) throw DataError("cutoff set: '" + name + "' has a non-numeric entry");
            cs.push_back(v.get<double>());
        }
        for (std::size_t i = 1; i < cs.size(); ++i) {
            if (!(cs[i] > cs[i - 1]))
                throw DataError("cutoff set: '" + name + "' is not strictly increasing");
        }
        set.cutoffs.emplace(name, std::move(cs));
    }
    return set;
}

double type7_quantile(std::vector<double> values, double p01) {
    if (values.empty()) throw DataError("quantile of an empty sample");
    if (!(p01 >= 0.0 && p01 <= 1.0)) throw ConfigError("quantile level outside [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = static_cast<double>(values.size() - 1) * p01;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

namespace {

// Collapse exact duplicates, keep strictly increasing order.
std::vector<double> dedupe(std::vector<double> cs) {
    std::vector<double> out;
    for (double c : cs) {
        if (out.empty() || c > out.back()) out.push_back(c);
    }
    return out;
}

// Reduce to at most `cap` cutoffs by repeatedly dropping the cutoff closest
// to its left neighbour (merging the two narrowest adjacent bins).
std::vector<double> enforce_cap(std::vector<double> cs, std::size_t cap) {
    while (cs.size() > cap) {
        std::size_t drop = 1;
        for (std::size_t i = 2; i < cs.size(); ++i) {
            if (cs[i] - cs[i - 1] < cs[drop] - cs[drop - 1]) drop = i;
        }
        cs.erase(cs.begin() + static_cast<std::ptrdiff_t>(drop));
    }
    return cs;
}

}  // namespace

CutoffSet local_cutoffs(const SiteDataset& data, const BinningConfig& config) {
    config.validate();
    CutoffSet out;
    for (std::size_t v = 0; v < data.schema.variables.size(); ++v) {
        const auto& var = data.schema.variables[v];
        if (var.kind != VariableKind::Continuous) continue;
        const auto& col = data.numeric_column(var.name);
        std::vector<double> train;
        train.reserve(col.size());
        for (std::size_t r = 0; r < col.size(); ++r) {
            if (data.split[r] == Split::Train) train.push_back(col[r]);
        }
        if (train.empty()) throw DataError("no train rows for variable '" + var.name + "'");

        std::vector<double> cs;
        if (std::set<double>(train.begin(), train.end()).size() >= 2) {
            for (double p : config.percentiles)
                cs.push_back(type7_quantile(train, p / 100.0));
            cs = dedupe(std::move(cs));
            if (config.share_grid > 0.0) {
                for (double& c : cs) c = std::round(c / config.share_grid) * config.share_grid;
                cs = dedupe(std::move(cs));
            }
            cs = enforce_cap(std::move(cs), static_cast<std::size_t>(config.max_categories - 1));
        }
        out.cutoffs.emplace(var.name, std::move(cs));
    }
    return out;
}

CutoffSet federate_cutoffs(const std::vector<CutoffSet>& locals,
                           const SiteWeights& weights) {
    if (locals.empty()) throw DataError("federate_cutoffs: no site cutoffs given");
    if (weights.values.size() != locals.size())
        throw DataError("federate_cutoffs: weight count does not match site count");

    CutoffSet out;
    for (const auto& [name, first] : locals.front().cutoffs) {
        std::size_t slots = first.size();
        for (const auto& site : locals) {
            auto it = site.cutoffs.find(name);
            if (it == site.cutoffs.end())
                throw DataError("federate_cutoffs: variable '" + name + "' missing at a site");
            slots = std::max(slots, it->second.size());
        }
        std::vector<double> unified;
        unified.reserve(slots);
        for (std::size_t s = 0; s < slots; ++s) {
            // m = c0 + sum w_j (c_j - c0) / sum w_j over contributing sites;
            // algebraically the weighted mean, but exact when all sites agree.
            double base = 0.0, num = 0.0, den = 0.0;
            bool have_base = false;
            for (std::size_t j = 0; j < locals.size(); ++j) {
                const auto& cs = locals[j].cutoffs.at(name);
                if (s >= cs.size()) continue;
                if (!have_base) { base = cs[s]; have_base = true; }
                num += weights.values[j] * (cs[s] - base);
                den += weights.values[j];
            }
            if (!have_base || den <= 0.0) continue;
            unified.push_back(base + num / den);
        }
        out.cutoffs.emplace(name, dedupe(std::move(unified)));
    }
    // Every site must describe the same variable set.
    for (const auto& site : locals) {
        if (site.cutoffs.size() != out.cutoffs.size())
            throw DataError("federate_cutoffs: sites disagree on the variable set");
    }
    return out;
}

std::vector<std::string> CategoryMerge::final_categories() const {
    std::vector<std::string> cats = kept;
    if (has_other) cats.push_back("Other");
    return cats;
}

TransformPlan make_transform_plan(const SiteDataset& reference,
                                  const CutoffSet& unified,
                                  const BinningConfig& config) {
    config.validate();
    TransformPlan plan;
    plan.cutoffs = unified;
    for (const auto& var : reference.schema.variables) {
        if (var.kind == VariableKind::Continuous) {
            if (!unified.cutoffs.count(var.name))
                throw DataError("transform: no cutoffs for continuous variable '" + var.name + "'");
            continue;
        }
        const auto cap = static_cast<std::size_t>(config.max_categories);
        if (var.categories.size() <= cap) continue;

        // Too many labels: keep the cap-1 most frequent on train rows
        // (ties favour earlier declaration), fold the rest into "Other".
        const auto& col = reference.categorical_column(var.name);
        std::vector<std::size_t> freq(var.categories.size(), 0);
        for (std::size_t r = 0; r < col.size(); ++r) {
            if (reference.split[r] == Split::Train) ++freq[static_cast<std::size_t>(col[r])];
        }
        std::vector<std::size_t> order(var.categories.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return freq[a] > freq[b]; });
        order.resize(cap - 1);
        std::sort(order.begin(), order.end());  // kept labels stay in declaration order

        CategoryMerge merge;
        for (std::size_t i : order) merge.kept.push_back(var.categories[i]);
        merge.has_other = true;
        plan.merges.emplace(var.name, std::move(merge));
    }
    return plan;
}

std::size_t bin_index(const std::vector<double>& cutoffs, double v) {
    std::size_t i = 0;
    while (i < cutoffs.size() && v >= cutoffs[i]) ++i;
    return i;
}

std::string interval_label(const std::vector<double>& cutoffs, std::size_t index) {
    if (cutoffs.empty()) return "all";
    if (index == 0) return "<" + format_number(cutoffs.front());
    if (index >= cutoffs.size()) return ">=" + format_number(cutoffs.back());
    return "[" + format_number(cutoffs[index - 1]) + "," + format_number(cutoffs[index]) + ")";
}

SiteDataset apply_transform(const SiteDataset& data, const TransformPlan& plan) {
    SiteDataset out;
    out.site_id = data.site_id;
    out.outcome = data.outcome;
    out.split = data.split;
    out.schema.outcome_name = data.schema.outcome_name;

    const std::size_t n = data.n_rows();
    for (const auto& var : data.schema.variables) {
        VariableSpec spec;
        spec.name = var.name;
        spec.kind = VariableKind::Categorical;
        spec.forced_include = var.forced_include;

        std::vector<int> codes(n);
        if (var.kind == VariableKind::Continuous) {
            const auto& cs = plan.cutoffs.cutoffs.at(var.name);
            for (std::size_t i = 0; i <= cs.size(); ++i)
                spec.categories.push_back(interval_label(cs, i));
            const auto& col = data.numeric_column(var.name);
            for (std::size_t r = 0; r < n; ++r)
                codes[r] = static_cast<int>(bin_index(cs, col[r]));
        } else {
            const auto& col = data.categorical_column(var.name);
            auto it = plan.merges.find(var.name);
            if (it == plan.merges.end()) {
                spec.categories = var.categories;
                codes.assign(col.begin(), col.end());
            } else {
                spec.categories = it->second.final_categories();
                const int other = static_cast<int>(it->second.kept.size());
                std::vector<int> remap(var.categories.size(), other);
                for (std::size_t k = 0; k < it->second.kept.size(); ++k) {
                    auto pos = std::find(var.categories.begin(), var.categories.end(),
                                         it->second.kept[k]);
                    if (pos == var.categories.end())
                        throw DataError("transform: kept category '" + it->second.kept[k] +
                                        "' not declared for variable '" + var.name + "'");
                    remap[static_cast<std::size_t>(pos - var.categories.begin())] =
                        static_cast<int>(k);
                }
                for (std::size_t r = 0; r < n; ++r)
                    codes[r] = remap[static_cast<std::size_t>(col[r])];
            }
        }
        out.schema.variables.push_back(std::move(spec));
        out.columns.push_back(Column{std::move(codes)});
    }
    out.schema.validate();
    out.validate();
    return out;
}

SiteDataset transform(const SiteDataset& data, const CutoffSet& cutoffs,
                      const BinningConfig& config) {
    return apply_transform(data, make_transform_plan(data, cutoffs, config));
}

}  // namespace fedscore
