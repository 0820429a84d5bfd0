#include "fedscore/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedscore/errors.hpp"
#include "fedscore/rng.hpp"

namespace fedscore {

std::string split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Validation: return "validation";
        case Split::Test: return "test";
    }
    return "train";
}

std::optional<Split> split_from_name(const std::string& name) {
    if (name == "train") return Split::Train;
    if (name == "validation") return Split::Validation;
    if (name == "test") return Split::Test;
    return std::nullopt;
}

std::size_t SiteDataset::count(Split s) const {
    return static_cast<std::size_t>(std::count(split.begin(), split.end(), s));
}

const std::vector<double>& SiteDataset::numeric_column(std::size_t var_idx) const {
    const auto* col = std::get_if<std::vector<double>>(&columns.at(var_idx));
    if (!col) throw DataError("variable " + schema.variables[var_idx].name + " is not continuous");
    return *col;
}

const std::vector<int>& SiteDataset::categorical_column(std::size_t var_idx) const {
    const auto* col = std::get_if<std::vector<int>>(&columns.at(var_idx));
    if (!col) throw DataError("variable " + schema.variables[var_idx].name + " is not categorical");
    return *col;
}

const std::vector<double>& SiteDataset::numeric_column(const std::string& name) const {
    const int idx = schema.index_of(name);
    if (idx < 0) throw DataError("no variable named '" + name + "'");
    return numeric_column(static_cast<std::size_t>(idx));
}

const std::vector<int>& SiteDataset::categorical_column(const std::string& name) const {
    const int idx = schema.index_of(name);
    if (idx < 0) throw DataError("no variable named '" + name + "'");
    return categorical_column(static_cast<std::size_t>(idx));
}

const std::string& SiteDataset::category_label(std::size_t var_idx, std::size_t row) const {
    const int code = categorical_column(var_idx).at(row);
    return schema.variables[var_idx].categories.at(static_cast<std::size_t>(code));
}

SiteDataset SiteDataset::select_rows(const std::vector<std::size_t>& rows) const {
    SiteDataset out;
    out.site_id = site_id;
    out.schema = schema;
    out.columns.reserve(columns.size());
    for (const auto& col : columns) {
        if (std::holds_alternative<std::vector<double>>(col)) {
            const auto& src = std::get<std::vector<double>>(col);
            std::vector<double> dst;
            dst.reserve(rows.size());
            for (std::size_t r : rows) dst.push_back(src[r]);
            out.columns.emplace_back(std::move(dst));
        } else {
            const auto& src = std::get<std::vector<int>>(col);
            std::vector<int> dst;
            dst.reserve(rows.size());
            for (std::size_t r : rows) dst.push_back(src[r]);
            out.columns.emplace_back(std::move(dst));
        }
    }
    out.outcome.reserve(rows.size());
    out.split.reserve(rows.size());
    for (std::size_t r : rows) {
        out.outcome.push_back(outcome[r]);
        out.split.push_back(split[r]);
    }
    return out;
}

SiteDataset SiteDataset::subset(Split s) const {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < n_rows(); ++r) {
        if (split[r] == s) rows.push_back(r);
    }
    SiteDataset out = select_rows(rows);
    std::fill(out.split.begin(), out.split.end(), Split::Train);
    return out;
}

void SiteDataset::append_row_from(const SiteDataset& source, std::size_t row) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (std::holds_alternative<std::vector<double>>(columns[c])) {
            std::get<std::vector<double>>(columns[c])
                .push_back(std::get<std::vector<double>>(source.columns[c])[row]);
        } else {
            std::get<std::vector<int>>(columns[c])
                .push_back(std::get<std::vector<int>>(source.columns[c])[row]);
        }
    }
    outcome.push_back(source.outcome[row]);
    split.push_back(source.split[row]);
}

void SiteDataset::validate() const {
    schema.validate();
    if (columns.size() != schema.variables.size()) {
        throw DataError("column count does not match schema");
    }
    const std::size_t n = n_rows();
    if (n == 0) throw DataError("dataset has no rows");
    if (split.size() != n) throw DataError("split tags do not cover every row");
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const auto& spec = schema.variables[c];
        if (spec.kind == VariableKind::Continuous) {
            const auto& col = numeric_column(c);
            if (col.size() != n) throw DataError("short column: " + spec.name);
            for (double v : col) {
                if (!std::isfinite(v)) throw DataError("non-finite value in " + spec.name);
            }
        } else {
            const auto& col = categorical_column(c);
            if (col.size() != n) throw DataError("short column: " + spec.name);
            const int c_count = static_cast<int>(spec.categories.size());
            for (int code : col) {
                if (code < 0 || code >= c_count) {
                    throw DataError("category code out of range in " + spec.name);
                }
            }
        }
    }
    for (int y : outcome) {
        if (y != 0 && y != 1) throw DataError("outcome values must be 0 or 1");
    }
}

SiteDataset concat(const std::vector<SiteDataset>& sites) {
    if (sites.empty()) throw DataError("concat needs at least one site");
    SiteDataset out = sites.front().select_rows({});
    out.site_id = 0;
    for (const auto& site : sites) {
        if (site.schema.variable_names() != out.schema.variable_names()) {
            throw DataError("concat: schema mismatch across sites");
        }
        for (std::size_t r = 0; r < site.n_rows(); ++r) out.append_row_from(site, r);
    }
    return out;
}

void FederationConfig::validate() const {
    if (sites < 1) throw ConfigError("federation needs at least one site");
    if (!proportions.empty()) {
        if (static_cast<int>(proportions.size()) != sites) {
            throw ConfigError("proportions length must equal the site count");
        }
        double sum = 0.0;
        for (double p : proportions) {
            if (p <= 0.0) throw ConfigError("site proportions must be positive");
            sum += p;
        }
        if (std::fabs(sum - 1.0) > 1e-9) {
            throw ConfigError("site proportions must sum to 1");
        }
    }
    if (weights_mode == WeightsMode::Custom) {
        if (static_cast<int>(custom_weights.size()) != sites) {
            throw ConfigError("custom weights length must equal the site count");
        }
        for (double w : custom_weights) {
            if (w < 0.0) throw ConfigError("custom weights must be nonnegative");
        }
    }
    double rsum = 0.0;
    for (double r : split_ratios) {
        if (r < 0.0) throw ConfigError("split ratios must be nonnegative");
        rsum += r;
    }
    if (std::fabs(rsum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
}

SiteWeights site_weights(const FederationConfig& config,
                         const std::vector<std::size_t>& site_sizes) {
    config.validate();
    const std::size_t k = static_cast<std::size_t>(config.sites);
    SiteWeights weights;
    weights.values.resize(k, 0.0);
    switch (config.weights_mode) {
        case FederationConfig::WeightsMode::Equal:
            for (auto& w : weights.values) w = 1.0 / static_cast<double>(k);
            break;
        case FederationConfig::WeightsMode::SampleSize: {
            if (site_sizes.size() != k) {
                throw ConfigError("sample-size weights need one size per site");
            }
            const std::size_t total =
                std::accumulate(site_sizes.begin(), site_sizes.end(), std::size_t{0});
            if (total == 0) throw ConfigError("sample-size weights need nonempty sites");
            for (std::size_t j = 0; j < k; ++j) {
                weights.values[j] =
                    static_cast<double>(site_sizes[j]) / static_cast<double>(total);
            }
            break;
        }
        case FederationConfig::WeightsMode::Custom: {
            const double sum = std::accumulate(config.custom_weights.begin(),
                                               config.custom_weights.end(), 0.0);
            if (sum <= 0.0) throw ConfigError("custom weights must have a positive sum");
            for (std::size_t j = 0; j < k; ++j) {
                weights.values[j] = config.custom_weights[j] / sum;
            }
            break;
        }
    }
    return weights;
}

namespace {

// Largest-remainder apportionment of n rows over the proportions.
std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& proportions) {
    const std::size_t k = proportions.size();
    std::vector<std::size_t> counts(k);
    std::vector<double> fractions(k);
    std::size_t assigned = 0;
    for (std::size_t j = 0; j < k; ++j) {
        const double exact = proportions[j] * static_cast<double>(n);
        counts[j] = static_cast<std::size_t>(std::floor(exact));
        fractions[j] = exact - std::floor(exact);
        assigned += counts[j];
    }
    std::size_t leftover = n - assigned;
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (fractions[a] != fractions[b]) return fractions[a] > fractions[b];
        return proportions[a] > proportions[b];
    });
    for (std::size_t i = 0; i < leftover; ++i) counts[order[i % k]] += 1;
    return counts;
}

}  // namespace

std::vector<SiteDataset> partition_sites(const SiteDataset& data,
                                         const FederationConfig& config) {
    config.validate();
    const std::size_t n = data.n_rows();
    const std::size_t k = static_cast<std::size_t>(config.sites);
    if (n < k) throw DataError("fewer rows than sites");

    std::vector<double> proportions = config.proportions;
    if (proportions.empty()) {
        proportions.assign(k, 1.0 / static_cast<double>(k));
    }
    const std::vector<std::size_t> counts = apportion(n, proportions);

    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    Rng rng(seed_stream(config.seed, 0x9A27));
    rng.shuffle(rows);

    std::vector<SiteDataset> sites;
    sites.reserve(k);
    std::size_t offset = 0;
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<std::size_t> site_rows(rows.begin() + static_cast<std::ptrdiff_t>(offset),
                                           rows.begin() + static_cast<std::ptrdiff_t>(offset + counts[j]));
        offset += counts[j];
        SiteDataset site = data.select_rows(site_rows);
        site.site_id = static_cast<int>(j) + 1;
        sites.push_back(std::move(site));
    }
    return sites;
}

SiteDataset split_train_valid_test(SiteDataset data,
                                   const std::array<double, 3>& ratios,
                                   std::uint64_t seed) {
    double rsum = 0.0;
    for (double r : ratios) {
        if (r < 0.0) throw ConfigError("split ratios must be nonnegative");
        rsum += r;
    }
    if (std::fabs(rsum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");

    const std::size_t n = data.n_rows();
    std::size_t n_valid = static_cast<std::size_t>(std::floor(ratios[1] * static_cast<double>(n)));
    std::size_t n_test = static_cast<std::size_t>(std::floor(ratios[2] * static_cast<double>(n)));
    const std::size_t n_train = n - n_valid - n_test;  // remainder goes to train

    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    Rng rng(seed_stream(seed, 0x51D5 + static_cast<std::uint64_t>(data.site_id)));
    rng.shuffle(rows);

    for (std::size_t i = 0; i < n; ++i) {
        Split tag = Split::Train;
        if (i >= n_train && i < n_train + n_valid) tag = Split::Validation;
        if (i >= n_train + n_valid) tag = Split::Test;
        data.split[rows[i]] = tag;
    }
    return data;
}

}  // namespace fedscore
