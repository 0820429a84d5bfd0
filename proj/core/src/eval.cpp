#include "fedscore/eval.hpp"

#include <algorithm>
#include <cmath>

#include "fedscore/errors.hpp"

namespace fedscore {

namespace {

// Mid-ranks (1-based, ties share the average rank) of v within itself.
std::vector<double> midranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = shared;
        i = j + 1;
    }
    return rank;
}

struct DelongParts {
    double theta = 0.0;          // the AUC
    std::vector<double> v10;     // per-positive structural components
    std::vector<double> v01;     // per-negative
};

DelongParts delong_parts(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw DataError("auc: scores/labels length mismatch");
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 1)
            pos.push_back(scores[i]);
        else if (labels[i] == 0)
            neg.push_back(scores[i]);
        else
            throw DataError("auc: labels must be 0 or 1");
    }
    if (pos.empty() || neg.empty()) throw DataError("auc: single-class labels");
    const double m = static_cast<double>(pos.size());
    const double n = static_cast<double>(neg.size());

    std::vector<double> all = pos;
    all.insert(all.end(), neg.begin(), neg.end());
    const std::vector<double> r_all = midranks(all);
    const std::vector<double> r_pos = midranks(pos);
    const std::vector<double> r_neg = midranks(neg);

    DelongParts parts;
    parts.v10.resize(pos.size());
    parts.v01.resize(neg.size());
    double sum_r_pos = 0.0;
    for (std::size_t i = 0; i < pos.size(); ++i) {
        parts.v10[i] = (r_all[i] - r_pos[i]) / n;
        sum_r_pos += r_all[i];
    }
    for (std::size_t j = 0; j < neg.size(); ++j)
        parts.v01[j] = 1.0 - (r_all[pos.size() + j] - r_neg[j]) / m;
    parts.theta = (sum_r_pos - m * (m + 1.0) / 2.0) / (m * n);
    return parts;
}

double sample_variance(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(v.size() - 1);
}

// Inverse standard-normal CDF (Acklam's rational approximation), enough
// precision for confidence levels.
double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("confidence level out of range");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) return -normal_quantile(1.0 - p);
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    return delong_parts(scores, labels).theta;
}

std::pair<double, double> auc_ci(const std::vector<double>& scores,
                                 const std::vector<int>& labels, double level) {
    const DelongParts parts = delong_parts(scores, labels);
    const double var = sample_variance(parts.v10) / static_cast<double>(parts.v10.size()) +
                       sample_variance(parts.v01) / static_cast<double>(parts.v01.size());
    if (!(var > 0.0)) return {parts.theta, parts.theta};
    const double z = normal_quantile(0.5 + level / 2.0);
    const double half = z * std::sqrt(var);
    return {std::max(0.0, parts.theta - half), std::min(1.0, parts.theta + half)};
}

std::pair<double, double> weighted_metrics(const std::vector<double>& mus,
                                           const std::vector<double>& weights) {
    if (mus.size() != weights.size())
        throw DataError("weighted_metrics: site count does not match weight count");
    if (mus.empty()) throw DataError("weighted_metrics: no sites");
    double wsum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw ConfigError("weighted_metrics: negative weight");
        wsum += w;
    }
    if (wsum <= 0.0) throw ConfigError("weighted_metrics: weights sum to zero");
    double m1 = 0.0;
    for (std::size_t j = 0; j < mus.size(); ++j) m1 += weights[j] / wsum * mus[j];
    double ss = 0.0;
    for (std::size_t j = 0; j < mus.size(); ++j)
        ss += weights[j] / wsum * (m1 - mus[j]) * (m1 - mus[j]);
    return {m1, std::sqrt(ss)};
}

Json ParsimonyCurve::to_json() const {
    Json j;
    j["format_version"] = 1;
    j["d_max"] = d_max;
    j["epsilon"] = epsilon;
    j["forced"] = forced;
    Json pts = Json::array();
    for (const auto& p : points) {
        Json pj;
        pj["m"] = p.m;
        pj["variables"] = p.variables;
        pj["psi"] = p.psi;
        pj["phi"] = p.phi;
        pts.push_back(std::move(pj));
    }
    j["points"] = std::move(pts);
    Json sk = Json::array();
    for (const auto& [m, reason] : skipped)
        sk.push_back(Json{{"m", m}, {"reason", reason}});
    j["skipped"] = std::move(sk);
    return j;
}

ParsimonyCurve ParsimonyCurve::from_json(const Json& j) {
    ParsimonyCurve curve;
    try {
        curve.d_max = j.at("d_max").get<int>();
        curve.epsilon = j.at("epsilon").get<double>();
        curve.forced = j.at("forced").get<std::vector<std::string>>();
        for (const auto& pj : j.at("points")) {
            ParsimonyPoint p;
            p.m = pj.at("m").get<int>();
            p.variables = pj.at("variables").get<std::vector<std::string>>();
            p.psi = pj.at("psi").get<double>();
            p.phi = pj.at("phi").get<std::vector<double>>();
            curve.points.push_back(std::move(p));
        }
        for (const auto& sj : j.at("skipped"))
            curve.skipped.emplace_back(sj.at("m").get<int>(),
                                       sj.at("reason").get<std::string>());
    } catch (const Json::exception& e) {
        throw DataError(std::string("parsimony curve: ") + e.what());
    }
    return curve;
}

const ParsimonyPoint& select_model(const ParsimonyCurve& curve) {
    if (curve.points.empty()) throw DataError("select_model: empty parsimony curve");
    const ParsimonyPoint* best = &curve.points.front();
    for (const auto& p : curve.points)
        if (p.psi > best->psi) best = &p;  // ties keep the earlier (smaller) m
    for (const auto& p : curve.points)
        if (p.m <= best->m && best->psi - p.psi <= curve.epsilon) return p;
    return *best;
}

Json EvaluationReport::to_json() const {
    Json j;
    j["format_version"] = 1;
    Json sites_json = Json::array();
    for (const auto& s : sites) {
        Json sj;
        sj["site_id"] = s.site_id;
        sj["n_test"] = s.n_test;
        sj["auc"] = s.auc;
        sj["ci_low"] = s.ci_low;
        sj["ci_high"] = s.ci_high;
        sites_json.push_back(std::move(sj));
    }
    j["sites"] = std::move(sites_json);
    j["m1"] = m1;
    j["m2"] = m2;
    return j;
}

EvaluationReport EvaluationReport::from_json(const Json& j) {
    EvaluationReport report;
    try {
        for (const auto& sj : j.at("sites")) {
            SiteEvaluation s;
            s.site_id = sj.at("site_id").get<int>();
            s.n_test = sj.at("n_test").get<std::size_t>();
            s.auc = sj.at("auc").get<double>();
            s.ci_low = sj.at("ci_low").get<double>();
            s.ci_high = sj.at("ci_high").get<double>();
            report.sites.push_back(s);
        }
        report.m1 = j.at("m1").get<double>();
        report.m2 = j.at("m2").get<double>();
    } catch (const Json::exception& e) {
        throw DataError(std::string("evaluation report: ") + e.what());
    }
    return report;
}

}  // namespace fedscore
