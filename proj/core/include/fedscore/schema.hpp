#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fedscore/jsonio.hpp"

namespace fedscore {

enum class VariableKind { Continuous, Categorical };

struct VariableSpec {
    std::string name;
    VariableKind kind = VariableKind::Continuous;
    std::vector<std::string> categories;  // categorical only, ordered
    bool forced_include = false;

    int category_index(const std::string& label) const;  // -1 when absent
};

struct Schema {
    std::vector<VariableSpec> variables;
    std::string outcome_name;

    std::size_t predictor_count() const { return variables.size(); }
    int index_of(const std::string& name) const;  // -1 when absent
    const VariableSpec& variable(const std::string& name) const;
    std::vector<std::string> variable_names() const;

    // Throws ConfigError on duplicate names, empty predictor list, outcome
    // clashing with a predictor, or a categorical with fewer than 2 labels.
    void validate() const;

    Json to_json() const;
    static Schema from_json(const Json& j);
    static Schema load_file(const std::filesystem::path& path);
    void save_file(const std::filesystem::path& path) const;
};

}  // namespace fedscore
