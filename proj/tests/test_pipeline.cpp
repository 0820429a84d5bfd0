#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fedscore/errors.hpp"
#include "fedscore/glm.hpp"
#include "fedscore/pipeline.hpp"
#include "fedscore/rng.hpp"
#include "fedscore/synthetic.hpp"
#include "helpers.hpp"

using namespace fedscore;

namespace {

// Moderate-effect synthetic cohort: three informative continuous features,
// one noise feature, a binary categorical; prevalence near 0.4.
SiteDataset cohort(std::size_t n, std::uint64_t seed) {
    SyntheticPlan plan;
    FeatureGen f1;
    f1.name = "age";
    f1.mean = 60;
    f1.sd = 10;
    FeatureGen f2;
    f2.name = "sbp";
    f2.mean = 120;
    f2.sd = 15;
    FeatureGen f3;
    f3.name = "lactate";
    f3.mean = 2;
    f3.sd = 1;
    FeatureGen f4;
    f4.name = "noise";
    FeatureGen f5;
    f5.name = "sex";
    f5.kind = VariableKind::Categorical;
    f5.probs = {0.5, 0.5};
    plan.features = {f1, f2, f3, f4, f5};
    Eigen::VectorXd beta(6);
    beta << -0.5 - 0.04 * 60 + 0.03 * 120 - 0.5 * 2, 0.04, -0.03, 0.5, 0.0, 0.4;
    return generate_synthetic(n, beta, plan, seed);
}

std::vector<SiteDataset> make_sites(std::size_t n, int k, std::uint64_t seed) {
    FederationConfig cfg;
    cfg.sites = k;
    cfg.proportions.assign(k, 1.0 / k);
    cfg.seed = seed;
    auto sites = partition_sites(cohort(n, seed), cfg);
    for (auto& s : sites)
        s = split_train_valid_test(std::move(s), {0.7, 0.1, 0.2},
                                   seed_stream(seed, 500 + s.site_id));
    return sites;
}

}  // namespace

TEST_CASE("with one site the surrogate refit lands on that site's MLE") {
    auto sites = make_sites(900, 1, 11);
    PipelineConfig cfg;
    cfg.d_max = 4;
    cfg.seed = 11;
    const PipelineResult r = run_pipeline(sites, SiteWeights{{1.0}}, cfg);

    // Recompute the pooled MLE over the selected variables directly.
    const SiteDataset binned = apply_transform(sites[0], r.plan);
    const EncodedData enc = encode(binned.subset(Split::Train), r.selected);
    const FitResult mle = fit_mle(enc.X, enc.y);
    CHECK((r.fit.beta - mle.beta).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("the sweep caps candidate sizes at d_max") {
    auto sites = make_sites(1200, 2, 12);
    PipelineConfig cfg;
    cfg.d_max = 3;
    cfg.seed = 12;
    const PipelineResult r = run_pipeline(sites, SiteWeights{{0.5, 0.5}}, cfg);
    CHECK(r.curve.points.size() + r.curve.skipped.size() == 3);
    for (const auto& p : r.curve.points) CHECK(p.variables.size() == static_cast<std::size_t>(p.m));
    CHECK(r.selected_m <= 3);
}

TEST_CASE("forced variables appear in every candidate set") {
    auto sites = make_sites(1200, 2, 13);
    PipelineConfig cfg;
    cfg.d_max = 4;
    cfg.seed = 13;
    cfg.forced = {"noise"};
    const PipelineResult r = run_pipeline(sites, SiteWeights{{0.5, 0.5}}, cfg);
    for (const auto& p : r.curve.points) {
        REQUIRE(std::find(p.variables.begin(), p.variables.end(), "noise") !=
                p.variables.end());
    }
    CHECK(std::find(r.selected.begin(), r.selected.end(), "noise") != r.selected.end());
}

TEST_CASE("an unknown forced variable is a config error") {
    auto sites = make_sites(600, 2, 14);
    PipelineConfig cfg;
    cfg.forced = {"bogus"};
    cfg.seed = 14;
    CHECK_THROWS_AS(run_pipeline(sites, SiteWeights{{0.5, 0.5}}, cfg), ConfigError);
}

TEST_CASE("refitting a subset is not just slicing the full fit") {
    // Two strongly correlated predictors plus independents: dropping one
    // moves the refitted coefficient of the other.
    Rng rng(15);
    SiteDataset d;
    d.schema = fedscore::testing::continuous_schema(3);
    std::vector<double> x1, x2, x3;
    std::vector<int> y;
    for (int i = 0; i < 2000; ++i) {
        const double a = rng.normal();
        x1.push_back(a);
        x2.push_back(a + 0.3 * rng.normal());  // correlated with x1
        x3.push_back(rng.normal());
        const double eta = 0.9 * a + 0.9 * x2.back() - 0.2;
        y.push_back(rng.bernoulli(sigmoid(eta)) ? 1 : 0);
    }
    d.columns = {x1, x2, x3};
    d.outcome = y;
    d.split.assign(y.size(), Split::Train);

    BinningConfig bcfg;
    const SiteDataset binned = transform(d, local_cutoffs(d, bcfg), bcfg);
    const EncodedData full = encode(binned, {"x1", "x2"});
    const EncodedData sub = encode(binned, {"x1"});
    const FitResult full_fit = fit_mle(full.X, full.y);
    const FitResult sub_fit = fit_mle(sub.X, sub.y);
    // x1's coefficients under the two models differ well beyond tolerance.
    double max_diff = 0.0;
    for (int j = 1; j < sub_fit.beta.size(); ++j)
        max_diff = std::max(max_diff, std::fabs(sub_fit.beta[j] - full_fit.beta[j]));
    CHECK(max_diff > 0.05);
}

TEST_CASE("the full pipeline result is internally consistent") {
    auto sites = make_sites(1500, 3, 16);
    PipelineConfig cfg;
    cfg.d_max = 5;
    cfg.seed = 16;
    const SiteWeights w{{1.0 / 3, 1.0 / 3, 1.0 / 3}};
    const PipelineResult r = run_pipeline(sites, w, cfg);

    CHECK(r.ranking.global_ranks.size() == 5);
    CHECK(!r.curve.points.empty());
    CHECK(static_cast<int>(r.selected.size()) == r.selected_m);
    CHECK(r.fit.card.max_total() <= cfg.s_max);
    REQUIRE(r.report.sites.size() == 3);
    double m1 = 0.0;
    for (std::size_t j = 0; j < 3; ++j) m1 += w[j] * r.report.sites[j].auc;
    CHECK(r.report.m1 == doctest::Approx(m1).epsilon(1e-12));

    // The selected point is reachable from the curve by the plateau rule.
    const ParsimonyPoint& again = select_model(r.curve);
    CHECK(again.m == r.selected_m);
    CHECK(again.variables == r.selected);
}

TEST_CASE("pipeline reruns are bit-identical") {
    auto sites = make_sites(800, 2, 17);
    PipelineConfig cfg;
    cfg.d_max = 3;
    cfg.seed = 17;
    const SiteWeights w{{0.5, 0.5}};
    const PipelineResult a = run_pipeline(sites, w, cfg);
    const PipelineResult b = run_pipeline(sites, w, cfg);
    CHECK(a.curve.to_json() == b.curve.to_json());
    CHECK(a.fit.card.to_json() == b.fit.card.to_json());
    CHECK(a.report.to_json() == b.report.to_json());
}

TEST_CASE("evaluate_model applies one model across all sites") {
    auto sites = make_sites(1200, 3, 18);
    PipelineConfig cfg;
    cfg.d_max = 3;
    cfg.seed = 18;
    const SiteWeights w{{1.0 / 3, 1.0 / 3, 1.0 / 3}};
    const PipelineResult r = run_pipeline(sites, w, cfg);
    const EvaluationReport rep = evaluate_model(r.plan, r.fit.card, sites, w);
    REQUIRE(rep.sites.size() == 3);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(rep.sites[j].n_test == sites[j].count(Split::Test));
        CHECK(rep.sites[j].auc >= 0.0);
        CHECK(rep.sites[j].auc <= 1.0);
        CHECK(rep.sites[j].ci_low <= rep.sites[j].auc);
        CHECK(rep.sites[j].ci_high >= rep.sites[j].auc);
    }
}
