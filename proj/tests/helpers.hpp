#pragma once

#include <string>
#include <vector>

#include "fedscore/dataset.hpp"
#include "fedscore/rng.hpp"

namespace fedscore::testing {

// A schema of `n_cont` continuous predictors named x1..xn plus outcome y.
inline Schema continuous_schema(int n_cont) {
    Schema s;
    for (int i = 1; i <= n_cont; ++i) {
        VariableSpec v;
        v.name = "x" + std::to_string(i);
        v.kind = VariableKind::Continuous;
        s.variables.push_back(v);
    }
    s.outcome_name = "y";
    return s;
}

// Rows with independent N(0,1) features and y = 1{x1 > 0} flipped with
// probability `noise`; a clean planted-signal generator for ranking tests.
inline SiteDataset planted_signal(int n, int n_cont, double noise, std::uint64_t seed) {
    SiteDataset d;
    d.schema = continuous_schema(n_cont);
    d.columns.assign(d.schema.variables.size(), std::vector<double>{});
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        double x1 = 0.0;
        for (std::size_t v = 0; v < d.columns.size(); ++v) {
            const double draw = rng.normal();
            if (v == 0) x1 = draw;
            std::get<std::vector<double>>(d.columns[v]).push_back(draw);
        }
        int y = x1 > 0.0 ? 1 : 0;
        if (noise > 0.0 && rng.bernoulli(noise)) y = 1 - y;
        d.outcome.push_back(y);
        d.split.push_back(Split::Train);
    }
    return d;
}

// An all-categorical dataset from explicit label rows (schema derived from
// the declared category lists), outcome in the last position.
inline SiteDataset categorical_rows(const std::vector<std::string>& names,
                                    const std::vector<std::vector<std::string>>& categories,
                                    const std::vector<std::vector<int>>& code_rows,
                                    const std::vector<int>& outcomes) {
    SiteDataset d;
    for (std::size_t v = 0; v < names.size(); ++v) {
        VariableSpec spec;
        spec.name = names[v];
        spec.kind = VariableKind::Categorical;
        spec.categories = categories[v];
        d.schema.variables.push_back(spec);
        std::vector<int> col;
        for (const auto& row : code_rows) col.push_back(row[v]);
        d.columns.emplace_back(std::move(col));
    }
    d.schema.outcome_name = "y";
    d.outcome = outcomes;
    d.split.assign(outcomes.size(), Split::Train);
    return d;
}

}  // namespace fedscore::testing
