#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fedscore/dataset.hpp"

namespace fedscore {

// One synthetic feature: a normal continuous draw or a categorical draw
// with the given label probabilities.
struct FeatureGen {
    std::string name;
    VariableKind kind = VariableKind::Continuous;
    double mean = 0.0;
    double sd = 1.0;
    std::vector<double> probs;           // categorical only, sums to 1
    std::vector<std::string> labels;     // optional; defaults to c0, c1, ...
};

struct SyntheticPlan {
    std::vector<FeatureGen> features;
    std::string outcome_name = "y";

    // Design width the true coefficient vector must match: intercept plus
    // one slot per continuous feature and c-1 per categorical feature.
    std::size_t encoded_width() const;
    Schema schema() const;

    Json to_json() const;
    static SyntheticPlan from_json(const Json& j);
};

// Draw n rows with x from the plan and y ~ Bernoulli(sigmoid(x' beta_true)),
// beta_true laid out as (intercept, features in plan order with the first
// category of each categorical as reference). Reproducible per seed.
SiteDataset generate_synthetic(std::size_t n, const Eigen::VectorXd& beta_true,
                               const SyntheticPlan& plan, std::uint64_t seed);

}  // namespace fedscore
