#include "fedscore/scorecard.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fedscore/errors.hpp"
#include "fedscore/jsonio.hpp"

namespace fedscore {

int ScoreCard::Variable::max_points() const {
    int m = 0;
    for (const auto& e : entries) m = std::max(m, e.points);
    return m;
}

int ScoreCard::Variable::points_for(const std::string& category) const {
    for (const auto& e : entries)
        if (e.category == category) return e.points;
    throw DataError("scorecard: variable '" + name + "' has no category '" + category + "'");
}

int ScoreCard::max_total() const {
    int total = 0;
    for (const auto& v : variables) total += v.max_points();
    return total;
}

ScoreCard derive_points(const Eigen::VectorXd& beta, const DesignEncoding& encoding,
                        int s_max) {
    if (s_max < 1) throw ConfigError("scorecard: S_max must be positive");
    if (static_cast<std::size_t>(beta.size()) != encoding.width())
        throw DataError("scorecard: coefficient length does not match encoding width");
    if (!beta.allFinite()) throw NumericError("scorecard: non-finite coefficients");

    // Shifted per-category coefficients, reference included at 0.
    struct Block {
        const DesignEncoding::Group* group;
        std::vector<double> shifted;  // [reference, categories...]
    };
    std::vector<Block> blocks;
    double total_max = 0.0;
    for (const auto& g : encoding.groups) {
        Block b{&g, {0.0}};
        for (std::size_t c = 0; c < g.categories.size(); ++c)
            b.shifted.push_back(beta[static_cast<Eigen::Index>(g.first_column + c)]);
        const double lo = *std::min_element(b.shifted.begin(), b.shifted.end());
        for (double& s : b.shifted) s -= lo;
        total_max += *std::max_element(b.shifted.begin(), b.shifted.end());
        blocks.push_back(std::move(b));
    }
    if (total_max <= 0.0)
        throw NumericError("scorecard: degenerate model (all non-intercept coefficients zero)");

    ScoreCard card;
    card.s_max = s_max;
    card.scale = static_cast<double>(s_max) / total_max;
    for (const auto& b : blocks) {
        ScoreCard::Variable v;
        v.name = b.group->variable;
        v.entries.push_back({b.group->reference,
                             static_cast<int>(std::round(card.scale * b.shifted[0]))});
        for (std::size_t c = 0; c < b.group->categories.size(); ++c)
            v.entries.push_back({b.group->categories[c],
                                 static_cast<int>(std::round(card.scale * b.shifted[c + 1]))});
        card.variables.push_back(std::move(v));
    }

    // Rounding slack can push the attainable total past S_max; shave the
    // largest entry (earliest variable, then earliest category on ties).
    while (card.max_total() > s_max) {
        ScoreCard::Entry* largest = nullptr;
        for (auto& v : card.variables)
            for (auto& e : v.entries)
                if (!largest || e.points > largest->points) largest = &e;
        largest->points -= 1;
    }
    return card;
}

int apply(const ScoreCard& card, const std::map<std::string, std::string>& row) {
    int total = 0;
    for (const auto& v : card.variables) {
        auto it = row.find(v.name);
        if (it == row.end())
            throw DataError("scorecard: row is missing variable '" + v.name + "'");
        total += v.points_for(it->second);
    }
    return total;
}

std::vector<int> score_rows(const ScoreCard& card, const SiteDataset& data) {
    const std::size_t n = data.n_rows();
    std::vector<int> totals(n, 0);
    for (const auto& v : card.variables) {
        const auto& var = data.schema.variable(v.name);
        const auto& col = data.categorical_column(v.name);
        std::vector<int> points(var.categories.size());
        for (std::size_t c = 0; c < var.categories.size(); ++c)
            points[c] = v.points_for(var.categories[c]);
        for (std::size_t r = 0; r < n; ++r)
            totals[r] += points[static_cast<std::size_t>(col[r])];
    }
    return totals;
}

Json ScoreCard::to_json() const {
    Json j;
    j["format_version"] = 1;
    j["s_max"] = s_max;
    Json vars = Json::array();
    for (const auto& v : variables) {
        Json vj;
        vj["name"] = v.name;
        Json entries = Json::array();
        for (const auto& e : v.entries)
            entries.push_back(Json{{"category", e.category}, {"points", e.points}});
        vj["entries"] = std::move(entries);
        vars.push_back(std::move(vj));
    }
    j["variables"] = std::move(vars);
    return j;
}

ScoreCard ScoreCard::from_json(const Json& j) {
    ScoreCard card;
    try {
        card.s_max = j.at("s_max").get<int>();
        for (const auto& vj : j.at("variables")) {
            Variable v;
            v.name = vj.at("name").get<std::string>();
            for (const auto& ej : vj.at("entries"))
                v.entries.push_back(
                    {ej.at("category").get<std::string>(), ej.at("points").get<int>()});
            card.variables.push_back(std::move(v));
        }
    } catch (const Json::exception& e) {
        throw DataError(std::string("scorecard: ") + e.what());
    }
    return card;
}

namespace {

void check_renderable(const std::string& s) {
    if (s.find('|') != std::string::npos || s.find('\n') != std::string::npos)
        throw DataError("scorecard: name '" + s + "' cannot appear in a table cell");
}

std::string trimmed(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

}  // namespace

std::string ScoreCard::to_markdown() const {
    std::string out = "| Variable | Interval | Point |\n| --- | --- | --- |\n";
    for (const auto& v : variables) {
        check_renderable(v.name);
        for (const auto& e : v.entries) {
            check_renderable(e.category);
            out += "| " + v.name + " | " + e.category + " | " + std::to_string(e.points) +
                   " |\n";
        }
    }
    out += "\nS_max: " + std::to_string(s_max) + "\n";
    return out;
}

ScoreCard ScoreCard::from_markdown(const std::string& text) {
    ScoreCard card;
    card.s_max = -1;
    std::istringstream in(text);
    std::string line;
    std::size_t table_rows = 0;
    while (std::getline(in, line)) {
        const std::string t = trimmed(line);
        if (t.rfind("S_max:", 0) == 0) {
            card.s_max = std::stoi(trimmed(t.substr(6)));
            continue;
        }
        if (t.empty() || t.front() != '|') continue;

        // Split "| a | b | c |" into cells.
        std::vector<std::string> cells;
        std::size_t pos = 1;
        while (true) {
            auto next = t.find('|', pos);
            if (next == std::string::npos) break;
            cells.push_back(trimmed(t.substr(pos, next - pos)));
            pos = next + 1;
        }
        if (cells.size() != 3) throw DataError("scorecard table: malformed row: " + t);
        if (cells[0] == "Variable" || cells[0] == "---") continue;
        ++table_rows;
        if (card.variables.empty() || card.variables.back().name != cells[0]) {
            for (const auto& v : card.variables)
                if (v.name == cells[0])
                    throw DataError("scorecard table: variable '" + cells[0] +
                                    "' appears in two separate blocks");
            card.variables.push_back({cells[0], {}});
        }
        int pts = 0;
        try {
            pts = std::stoi(cells[2]);
        } catch (const std::exception&) {
            throw DataError("scorecard table: bad points value '" + cells[2] + "'");
        }
        card.variables.back().entries.push_back({cells[1], pts});
    }
    if (card.s_max < 0 || table_rows == 0)
        throw DataError("scorecard table: missing rows or S_max footer");
    return card;
}

}  // namespace fedscore
