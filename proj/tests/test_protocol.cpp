#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fedscore/errors.hpp"
#include "fedscore/glm.hpp"
#include "fedscore/protocol.hpp"
#include "fedscore/rng.hpp"
#include "fedscore/wire.hpp"
#include "helpers.hpp"

using namespace fedscore;
using fedscore::testing::categorical_rows;

namespace {

// A small binned site: one 3-category variable, outcomes drawn from a fixed
// logistic model so fits are finite.
SiteDataset binned_site(int site_id, int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<int>> rows;
    std::vector<int> y;
    for (int i = 0; i < n; ++i) {
        const int c = static_cast<int>(rng.below(3));
        rows.push_back({c});
        const double eta = -0.3 + 0.8 * (c == 1) + 1.4 * (c == 2);
        y.push_back(rng.bernoulli(sigmoid(eta)) ? 1 : 0);
    }
    y[0] = 0;
    y[1] = 1;
    SiteDataset d = categorical_rows({"v"}, {{"a", "b", "c"}}, rows, y);
    d.site_id = site_id;
    return d;
}

EncodedSite encoded_site(const SiteDataset& d) {
    return {d.site_id, encode(d, {"v"})};
}

}  // namespace

TEST_CASE("wire reals are fixed-width, sign-independent, and exact") {
    CHECK(wire_real(1.0).size() == 24);
    CHECK(wire_real(-1.0).size() == 24);
    CHECK(wire_real(0.0).size() == 24);
    CHECK(wire_real(1e-300).size() == 24);
    CHECK(wire_real(-9.87654321e+250).size() == 24);
    CHECK_THROWS_AS(wire_real(std::nan("")), NumericError);
    CHECK_THROWS_AS(wire_real(INFINITY), NumericError);

    // Round-trip exactness through the JSON parser.
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        const double v = (rng.uniform() - 0.5) * std::pow(10.0, rng.below(40));
        const Json j = Json::parse(wire_real(v));
        CHECK(j.get<double>() == v);
    }
}

TEST_CASE("broadcast packets survive serialization exactly") {
    const SiteDataset d = binned_site(1, 200, 40);
    const EncodedSite site = encoded_site(d);
    const BroadcastPacket packet = lead_initialize(site, {});
    const std::string text = serialize_broadcast(packet);
    const BroadcastPacket back = parse_broadcast(text);
    CHECK(back.version == packet.version);
    CHECK(back.encoding.column_names == packet.encoding.column_names);
    CHECK((back.beta_bar - packet.beta_bar).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("site messages survive serialization exactly") {
    const EncodedSite site = encoded_site(binned_site(2, 150, 41));
    const BroadcastPacket packet = lead_initialize(site, {});
    const SiteMessage m = remote_summarize(packet, site);
    const SiteMessage back = parse_site_message(serialize_site_message(m));
    CHECK(back.site_id == m.site_id);
    CHECK(back.n == m.n);
    CHECK((back.grad - m.grad).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.hess - m.hess).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reply payload size does not depend on the site's row count") {
    const EncodedSite small = encoded_site(binned_site(1, 100, 42));
    const EncodedSite big = encoded_site(binned_site(2, 100000, 43));
    const BroadcastPacket packet = lead_initialize(small, {});
    const std::string a = serialize_site_message(remote_summarize(packet, small));
    const std::string b = serialize_site_message(remote_summarize(packet, big));
    CHECK(a.size() == b.size());
}

TEST_CASE("remote with the lead's own data echoes the lead's gradient") {
    const EncodedSite site = encoded_site(binned_site(1, 300, 44));
    EncodedSite twin = site;
    twin.site_id = 2;
    const BroadcastPacket packet = lead_initialize(site, {});
    const SiteMessage a = remote_summarize(packet, site);
    const SiteMessage b = remote_summarize(packet, twin);
    CHECK((a.grad - b.grad).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a mismatched design is a protocol error") {
    const EncodedSite site = encoded_site(binned_site(1, 100, 45));
    SiteDataset other = categorical_rows({"w"}, {{"a", "b"}}, {{0}, {1}}, {0, 1});
    const EncodedSite bad{7, encode(other, {"w"})};
    const BroadcastPacket packet = lead_initialize(site, {});
    CHECK_THROWS_AS(remote_summarize(packet, bad), DataError);
}

TEST_CASE("aggregating a single message is the identity") {
    const EncodedSite site = encoded_site(binned_site(1, 120, 46));
    const BroadcastPacket packet = lead_initialize(site, {});
    const SiteMessage m = remote_summarize(packet, site);
    const AggregateGradients agg = aggregate({m});
    CHECK(agg.N == static_cast<double>(m.n));
    CHECK((agg.grad_bar - m.grad).cwiseAbs().maxCoeff() == 0.0);
    CHECK((agg.hess_bar - m.hess).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("equal sizes with opposite gradients cancel") {
    SiteMessage a, b;
    a.site_id = 1;
    b.site_id = 2;
    a.n = b.n = 50;
    a.grad = Eigen::VectorXd::Constant(2, 0.3);
    b.grad = -a.grad;
    a.hess = b.hess = Eigen::MatrixXd::Identity(2, 2) * -0.1;
    const AggregateGradients agg = aggregate({a, b});
    CHECK(agg.grad_bar.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sizes (1,3) with gradients (2,-2) average to -1") {
    SiteMessage a, b;
    a.site_id = 1;
    a.n = 1;
    a.grad = Eigen::VectorXd::Constant(1, 2.0);
    a.hess = Eigen::MatrixXd::Constant(1, 1, -0.2);
    b.site_id = 2;
    b.n = 3;
    b.grad = Eigen::VectorXd::Constant(1, -2.0);
    b.hess = Eigen::MatrixXd::Constant(1, 1, -0.2);
    const AggregateGradients agg = aggregate({a, b});
    CHECK(agg.N == 4.0);
    CHECK(agg.grad_bar[0] == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("aggregate rejects duplicates and dimension mismatches") {
    SiteMessage a, b;
    a.site_id = b.site_id = 3;
    a.n = b.n = 10;
    a.grad = b.grad = Eigen::VectorXd::Zero(2);
    a.hess = b.hess = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(aggregate({a, b}), DataError);
    b.site_id = 4;
    b.grad = Eigen::VectorXd::Zero(3);
    b.hess = Eigen::MatrixXd::Zero(3, 3);
    CHECK_THROWS_AS(aggregate({a, b}), DataError);
}

TEST_CASE("aggregate is invariant to message order") {
    const EncodedSite s1 = encoded_site(binned_site(1, 100, 47));
    const EncodedSite s2 = encoded_site(binned_site(2, 200, 48));
    const EncodedSite s3 = encoded_site(binned_site(3, 300, 49));
    const BroadcastPacket packet = lead_initialize(s1, {});
    const SiteMessage m1 = remote_summarize(packet, s1);
    const SiteMessage m2 = remote_summarize(packet, s2);
    const SiteMessage m3 = remote_summarize(packet, s3);
    const AggregateGradients fwd = aggregate({m1, m2, m3});
    const AggregateGradients rev = aggregate({m3, m1, m2});
    CHECK((fwd.grad_bar - rev.grad_bar).cwiseAbs().maxCoeff() == 0.0);
    CHECK((fwd.hess_bar - rev.hess_bar).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("with one site the surrogate is the lead likelihood everywhere") {
    const EncodedSite site = encoded_site(binned_site(1, 150, 50));
    const BroadcastPacket packet = lead_initialize(site, {});
    const AggregateGradients agg = aggregate({remote_summarize(packet, site)});
    Rng rng(51);
    for (int t = 0; t < 20; ++t) {
        Eigen::VectorXd beta(packet.beta_bar.size());
        for (int j = 0; j < beta.size(); ++j) beta[j] = 4.0 * (rng.uniform() - 0.5);
        CHECK(surrogate_loglik(beta, site.data, packet, agg) ==
              doctest::Approx(log_likelihood(beta, site.data.X, site.data.y))
                  .epsilon(1e-12));
    }
}

TEST_CASE("at the anchor the surrogate gradient equals the pooled gradient") {
    const EncodedSite s1 = encoded_site(binned_site(1, 150, 52));
    const EncodedSite s2 = encoded_site(binned_site(2, 250, 53));
    const BroadcastPacket packet = lead_initialize(s1, {});
    const AggregateGradients agg =
        aggregate({remote_summarize(packet, s1), remote_summarize(packet, s2)});
    const Eigen::VectorXd g =
        surrogate_gradient(packet.beta_bar, s1.data, packet, agg);
    CHECK((g - agg.grad_bar).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("surrogate calculus matches finite differences") {
    const EncodedSite s1 = encoded_site(binned_site(1, 150, 54));
    const EncodedSite s2 = encoded_site(binned_site(2, 120, 55));
    const BroadcastPacket packet = lead_initialize(s1, {});
    const AggregateGradients agg =
        aggregate({remote_summarize(packet, s1), remote_summarize(packet, s2)});
    Rng rng(56);
    for (int t = 0; t < 10; ++t) {
        Eigen::VectorXd beta(packet.beta_bar.size());
        for (int j = 0; j < beta.size(); ++j) beta[j] = 2.0 * (rng.uniform() - 0.5);
        const Eigen::VectorXd g = surrogate_gradient(beta, s1.data, packet, agg);
        const Eigen::MatrixXd H = surrogate_hessian(beta, s1.data, packet, agg);
        const double h = 1e-6;
        for (int j = 0; j < beta.size(); ++j) {
            Eigen::VectorXd up = beta, dn = beta;
            up[j] += h;
            dn[j] -= h;
            const double fd = (surrogate_loglik(up, s1.data, packet, agg) -
                               surrogate_loglik(dn, s1.data, packet, agg)) /
                              (2 * h);
            REQUIRE(std::fabs(g[j] - fd) / std::max(1.0, std::fabs(g[j])) < 1e-6);
            const Eigen::VectorXd gfd =
                (surrogate_gradient(up, s1.data, packet, agg) -
                 surrogate_gradient(dn, s1.data, packet, agg)) /
                (2 * h);
            for (int i = 0; i < beta.size(); ++i)
                REQUIRE(std::fabs(H(i, j) - gfd[i]) / std::max(1.0, std::fabs(H(i, j))) <
                        1e-5);
        }
    }
}

TEST_CASE("one site: the global fit is the lead MLE") {
    const EncodedSite site = encoded_site(binned_site(1, 200, 57));
    const OneShotResult r = run_one_shot({site}, 0, {});
    const FitResult mle = fit_mle(site.data.X, site.data.y);
    CHECK((r.beta - mle.beta).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("identical sites: the global fit is each site's own MLE") {
    const SiteDataset base = binned_site(1, 250, 58);
    SiteDataset copy2 = base, copy3 = base;
    copy2.site_id = 2;
    copy3.site_id = 3;
    const std::vector<EncodedSite> sites{encoded_site(base), encoded_site(copy2),
                                         encoded_site(copy3)};
    const OneShotResult r = run_one_shot(sites, 0, {});
    const FitResult mle = fit_mle(sites[0].data.X, sites[0].data.y);
    CHECK((r.beta - mle.beta).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("homogeneous sites: the lead choice does not move the estimate") {
    const SiteDataset base = binned_site(1, 400, 59);
    SiteDataset c2 = base, c3 = base;
    c2.site_id = 2;
    c3.site_id = 3;
    const std::vector<EncodedSite> sites{encoded_site(base), encoded_site(c2),
                                         encoded_site(c3)};
    const Eigen::VectorXd b0 = run_one_shot(sites, 0, {}).beta;
    const Eigen::VectorXd b1 = run_one_shot(sites, 1, {}).beta;
    const Eigen::VectorXd b2 = run_one_shot(sites, 2, {}).beta;
    CHECK((b0 - b1).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((b0 - b2).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("transcript has one broadcast, K-1 replies, and a lead summary") {
    std::vector<EncodedSite> sites;
    for (int j = 1; j <= 4; ++j) sites.push_back(encoded_site(binned_site(j, 150, 60 + j)));
    const OneShotResult r = run_one_shot(sites, 0, {});
    CHECK(r.transcript.count("broadcast") == 1);
    CHECK(r.transcript.count("reply") == 3);
    CHECK(r.transcript.count("lead_summary") == 1);
    CHECK(r.transcript.entries.size() == 5);
    CHECK(r.transcript.entries.front().type == "broadcast");

    // All reply payloads are the same length: nothing row-scaled leaks.
    std::size_t len = 0;
    for (const auto& e : r.transcript.entries) {
        if (e.type != "reply") continue;
        if (len == 0) len = e.payload.size();
        CHECK(e.payload.size() == len);
    }
}

TEST_CASE("scaling one site's rows 1000x leaves every payload size unchanged") {
    std::vector<EncodedSite> small, big;
    for (int j = 1; j <= 3; ++j) {
        small.push_back(encoded_site(binned_site(j, j == 2 ? 60 : 100, 70 + j)));
        big.push_back(encoded_site(binned_site(j, j == 2 ? 60000 : 100, 70 + j)));
    }
    const OneShotResult a = run_one_shot(small, 0, {});
    const OneShotResult b = run_one_shot(big, 0, {});
    REQUIRE(a.transcript.entries.size() == b.transcript.entries.size());
    for (std::size_t i = 0; i < a.transcript.entries.size(); ++i)
        CHECK(a.transcript.entries[i].payload.size() ==
              b.transcript.entries[i].payload.size());
}
