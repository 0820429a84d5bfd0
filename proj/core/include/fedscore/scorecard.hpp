#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "fedscore/glm.hpp"

namespace fedscore {

// Integer points table: one block per variable, one row per category, points
// in [0, S_max], per-variable minimum 0 (the shifted reference).
struct ScoreCard {
    struct Entry {
        std::string category;
        int points = 0;
    };
    struct Variable {
        std::string name;
        std::vector<Entry> entries;  // reference first, then encoding order

        int max_points() const;
        int points_for(const std::string& category) const;  // DataError if absent
    };

    int s_max = 100;
    // Diagnostic only: points ~= scale * shifted coefficient. Never
    // serialized -- rescaled coefficient vectors must yield identical
    // artifacts, and this is the one field that would absorb the factor.
    double scale = 0.0;
    std::vector<Variable> variables;

    int max_total() const;  // sum over variables of max_points()

    Json to_json() const;
    static ScoreCard from_json(const Json& j);

    // "Variable | Interval | Point" table plus an S_max footer; parsing the
    // rendered text reproduces the card exactly.
    std::string to_markdown() const;
    static ScoreCard from_markdown(const std::string& text);
};

// Shift each variable's category coefficients so the per-variable minimum is
// zero (reference = 0 implicit), scale by S_max / sum of per-variable maxima,
// round half-away-from-zero, then decrement the largest entry while rounding
// slack keeps the attainable total above S_max. The intercept never enters.
ScoreCard derive_points(const Eigen::VectorXd& beta, const DesignEncoding& encoding,
                        int s_max = 100);

// Total points for one row given as variable -> category label.
int apply(const ScoreCard& card, const std::map<std::string, std::string>& row);

// Bulk scoring over a binned dataset (site codes looked up once per variable).
std::vector<int> score_rows(const ScoreCard& card, const SiteDataset& data);

}  // namespace fedscore
