#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fedscore/jsonio.hpp"

namespace fedscore {

// Mann-Whitney concordance with half credit for ties:
// (#concordant + 0.5 #tied) / (#pos * #neg). Computed via mid-ranks in
// O(n log n); throws DataError on single-class labels.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

// DeLong structural-components 95% interval, normal approximation clipped to
// [0,1]; degenerate variance collapses to (auc, auc).
std::pair<double, double> auc_ci(const std::vector<double>& scores,
                                 const std::vector<int>& labels, double level = 0.95);

// M1 = sum w_j mu_j, M2 = sqrt(sum w_j (M1 - mu_j)^2), weights renormalized.
std::pair<double, double> weighted_metrics(const std::vector<double>& mus,
                                           const std::vector<double>& weights);

// One evaluated candidate model size on the parsimony curve.
struct ParsimonyPoint {
    int m = 0;
    std::vector<std::string> variables;  // the top-m set (forced first)
    double psi = 0.0;                    // sum_i w_i phi_i
    std::vector<double> phi;             // per-site validation AUC, site order
};

struct ParsimonyCurve {
    std::vector<ParsimonyPoint> points;  // ascending m; failed fits absent
    int d_max = 0;
    double epsilon = 0.0;
    std::vector<std::string> forced;
    std::vector<std::pair<int, std::string>> skipped;  // (m, reason)

    Json to_json() const;
    static ParsimonyCurve from_json(const Json& j);
};

// The plateau rule: m* = argmax psi (ties toward smaller m), then the
// smallest d <= m* with psi(m*) - psi(d) <= epsilon.
const ParsimonyPoint& select_model(const ParsimonyCurve& curve);

// Final cross-site test evaluation of one model.
struct SiteEvaluation {
    int site_id = 0;
    std::size_t n_test = 0;
    double auc = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct EvaluationReport {
    std::vector<SiteEvaluation> sites;
    double m1 = 0.0;  // weighted mean of per-site test AUC
    double m2 = 0.0;  // weighted spread around M1

    Json to_json() const;
    static EvaluationReport from_json(const Json& j);
};

}  // namespace fedscore
