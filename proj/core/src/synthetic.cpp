#include "fedscore/synthetic.hpp"

#include <cmath>

#include "fedscore/errors.hpp"
#include "fedscore/rng.hpp"

namespace fedscore {

std::size_t SyntheticPlan::encoded_width() const {
    std::size_t width = 1;
    for (const auto& f : features) {
        if (f.kind == VariableKind::Continuous) {
            width += 1;
        } else {
            if (f.probs.size() < 2) {
                throw ConfigError("categorical feature " + f.name +
                                  " needs at least 2 probabilities");
            }
            width += f.probs.size() - 1;
        }
    }
    return width;
}

Schema SyntheticPlan::schema() const {
    Schema schema;
    schema.outcome_name = outcome_name;
    int auto_index = 1;
    for (const auto& f : features) {
        VariableSpec spec;
        spec.name = f.name.empty() ? "x" + std::to_string(auto_index) : f.name;
        ++auto_index;
        spec.kind = f.kind;
        if (f.kind == VariableKind::Categorical) {
            if (!f.labels.empty()) {
                if (f.labels.size() != f.probs.size()) {
                    throw ConfigError("feature " + spec.name +
                                      ": labels and probabilities differ in length");
                }
                spec.categories = f.labels;
            } else {
                for (std::size_t c = 0; c < f.probs.size(); ++c) {
                    spec.categories.push_back("c" + std::to_string(c));
                }
            }
        }
        schema.variables.push_back(std::move(spec));
    }
    schema.validate();
    return schema;
}

Json SyntheticPlan::to_json() const {
    Json features_json = Json::array();
    for (const auto& f : features) {
        Json jf;
        jf["name"] = f.name;
        if (f.kind == VariableKind::Continuous) {
            jf["kind"] = "continuous";
            jf["mean"] = f.mean;
            jf["sd"] = f.sd;
        } else {
            jf["kind"] = "categorical";
            jf["probs"] = f.probs;
            if (!f.labels.empty()) jf["labels"] = f.labels;
        }
        features_json.push_back(jf);
    }
    Json j;
    j["features"] = features_json;
    j["outcome"] = outcome_name;
    return j;
}

SyntheticPlan SyntheticPlan::from_json(const Json& j) {
    SyntheticPlan plan;
    for (const auto& jf : j.at("features")) {
        FeatureGen f;
        f.name = jf.value("name", "");
        const std::string kind = jf.at("kind").get<std::string>();
        if (kind == "continuous") {
            f.kind = VariableKind::Continuous;
            f.mean = jf.value("mean", 0.0);
            f.sd = jf.value("sd", 1.0);
            if (f.sd < 0.0) throw ConfigError("feature " + f.name + ": sd must be >= 0");
        } else if (kind == "categorical") {
            f.kind = VariableKind::Categorical;
            f.probs = jf.at("probs").get<std::vector<double>>();
            double sum = 0.0;
            for (double p : f.probs) {
                if (p < 0.0) throw ConfigError("feature " + f.name + ": negative probability");
                sum += p;
            }
            if (std::fabs(sum - 1.0) > 1e-9) {
                throw ConfigError("feature " + f.name + ": probabilities must sum to 1");
            }
            if (jf.contains("labels")) f.labels = jf.at("labels").get<std::vector<std::string>>();
        } else {
            throw ConfigError("unknown feature kind '" + kind + "'");
        }
        plan.features.push_back(std::move(f));
    }
    plan.outcome_name = j.value("outcome", "y");
    return plan;
}

SiteDataset generate_synthetic(std::size_t n, const Eigen::VectorXd& beta_true,
                               const SyntheticPlan& plan, std::uint64_t seed) {
    if (n == 0) throw ConfigError("synthetic row count must be positive");
    const std::size_t width = plan.encoded_width();
    if (static_cast<std::size_t>(beta_true.size()) != width) {
        throw ConfigError("beta_true has " + std::to_string(beta_true.size()) +
                          " entries but the feature plan encodes to " +
                          std::to_string(width) + " (including intercept)");
    }

    SiteDataset data;
    data.schema = plan.schema();
    for (const auto& spec : data.schema.variables) {
        if (spec.kind == VariableKind::Continuous) {
            data.columns.emplace_back(std::vector<double>(n));
        } else {
            data.columns.emplace_back(std::vector<int>(n));
        }
    }
    data.outcome.resize(n);
    data.split.assign(n, Split::Train);

    Rng rng(seed_stream(seed, 0x5E4D));
    for (std::size_t r = 0; r < n; ++r) {
        double eta = beta_true[0];
        std::size_t slot = 1;
        for (std::size_t v = 0; v < plan.features.size(); ++v) {
            const auto& f = plan.features[v];
            if (f.kind == VariableKind::Continuous) {
                const double x = f.mean + f.sd * rng.normal();
                std::get<std::vector<double>>(data.columns[v])[r] = x;
                eta += beta_true[static_cast<Eigen::Index>(slot)] * x;
                slot += 1;
            } else {
                const double u = rng.uniform();
                double cum = 0.0;
                int code = static_cast<int>(f.probs.size()) - 1;
                for (std::size_t c = 0; c < f.probs.size(); ++c) {
                    cum += f.probs[c];
                    if (u < cum) {
                        code = static_cast<int>(c);
                        break;
                    }
                }
                std::get<std::vector<int>>(data.columns[v])[r] = code;
                if (code > 0) eta += beta_true[static_cast<Eigen::Index>(slot + code - 1)];
                slot += f.probs.size() - 1;
            }
        }
        const double p = 1.0 / (1.0 + std::exp(-eta));
        data.outcome[r] = rng.bernoulli(p) ? 1 : 0;
    }
    return data;
}

}  // namespace fedscore
