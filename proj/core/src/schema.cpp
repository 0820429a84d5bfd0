#include "fedscore/schema.hpp"

#include <set>

#include "fedscore/errors.hpp"

namespace fedscore {

int VariableSpec::category_index(const std::string& label) const {
    for (std::size_t i = 0; i < categories.size(); ++i) {
        if (categories[i] == label) return static_cast<int>(i);
    }
    return -1;
}

int Schema::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < variables.size(); ++i) {
        if (variables[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

const VariableSpec& Schema::variable(const std::string& name) const {
    const int idx = index_of(name);
    if (idx < 0) throw ConfigError("unknown variable: " + name);
    return variables[static_cast<std::size_t>(idx)];
}

std::vector<std::string> Schema::variable_names() const {
    std::vector<std::string> names;
    names.reserve(variables.size());
    for (const auto& v : variables) names.push_back(v.name);
    return names;
}

void Schema::validate() const {
    if (variables.empty()) throw ConfigError("schema needs at least one predictor");
    if (outcome_name.empty()) throw ConfigError("schema is missing an outcome name");
    std::set<std::string> seen;
    for (const auto& v : variables) {
        if (v.name.empty()) throw ConfigError("schema has a variable with an empty name");
        if (!seen.insert(v.name).second) {
            throw ConfigError("duplicate variable name: " + v.name);
        }
        if (v.name == outcome_name) {
            throw ConfigError("outcome name collides with predictor: " + v.name);
        }
        if (v.kind == VariableKind::Categorical) {
            // A single label is allowed: binning a constant variable yields
            // one "all" category, and such a variable simply carries no
            // indicator columns downstream.
            std::set<std::string> labels(v.categories.begin(), v.categories.end());
            if (labels.empty() || labels.size() != v.categories.size()) {
                throw ConfigError("categorical variable " + v.name +
                                  " needs a non-empty list of distinct labels");
            }
        } else if (!v.categories.empty()) {
            throw ConfigError("continuous variable " + v.name + " must not list categories");
        }
    }
}

Json Schema::to_json() const {
    Json vars = Json::array();
    for (const auto& v : variables) {
        Json jv;
        jv["name"] = v.name;
        jv["kind"] = v.kind == VariableKind::Continuous ? "continuous" : "categorical";
        if (v.kind == VariableKind::Categorical) jv["categories"] = v.categories;
        if (v.forced_include) jv["forced_include"] = true;
        vars.push_back(jv);
    }
    Json j;
    j["variables"] = vars;
    j["outcome"] = outcome_name;
    return j;
}

Schema Schema::from_json(const Json& j) {
    Schema schema;
    if (!j.contains("variables") || !j.contains("outcome")) {
        throw ConfigError("schema JSON needs 'variables' and 'outcome'");
    }
    for (const auto& jv : j.at("variables")) {
        VariableSpec spec;
        spec.name = jv.at("name").get<std::string>();
        const std::string kind = jv.at("kind").get<std::string>();
        if (kind == "continuous") {
            spec.kind = VariableKind::Continuous;
        } else if (kind == "categorical") {
            spec.kind = VariableKind::Categorical;
            spec.categories = jv.at("categories").get<std::vector<std::string>>();
        } else {
            throw ConfigError("unknown variable kind '" + kind + "' for " + spec.name);
        }
        spec.forced_include = jv.value("forced_include", false);
        schema.variables.push_back(std::move(spec));
    }
    schema.outcome_name = j.at("outcome").get<std::string>();
    schema.validate();
    return schema;
}

Schema Schema::load_file(const std::filesystem::path& path) {
    return from_json(read_json_file(path));
}

void Schema::save_file(const std::filesystem::path& path) const {
    write_json_file(path, to_json());
}

}  // namespace fedscore
