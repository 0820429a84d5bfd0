#include "fedscore/protocol.hpp"

#include <algorithm>
#include <set>

#include "fedscore/errors.hpp"
#include "fedscore/glm.hpp"

namespace fedscore {

BroadcastPacket lead_initialize(const EncodedSite& lead, const FitOptions& options) {
    BroadcastPacket packet;
    packet.encoding = lead.data.encoding;
    packet.beta_bar = fit_mle(lead.data.X, lead.data.y, options).beta;
    return packet;
}

SiteMessage remote_summarize(const BroadcastPacket& packet, const EncodedSite& site) {
    if (packet.encoding.column_names != site.data.encoding.column_names)
        throw DataError("protocol error: site " + std::to_string(site.site_id) +
                        " is encoded against a different design");
    SiteMessage m;
    m.site_id = site.site_id;
    m.n = site.data.n();
    m.grad = gradient(packet.beta_bar, site.data.X, site.data.y);
    m.hess = hessian(packet.beta_bar, site.data.X, site.data.y);
    return m;
}

AggregateGradients aggregate(const std::vector<SiteMessage>& messages) {
    if (messages.empty()) throw DataError("aggregate: no site messages");

    std::vector<const SiteMessage*> ordered;
    ordered.reserve(messages.size());
    for (const auto& m : messages) ordered.push_back(&m);
    std::sort(ordered.begin(), ordered.end(),
              [](const SiteMessage* a, const SiteMessage* b) { return a->site_id < b->site_id; });

    const Eigen::Index p = ordered.front()->grad.size();
    double N = 0.0;
    std::set<int> seen;
    for (const auto* m : ordered) {
        if (!seen.insert(m->site_id).second)
            throw DataError("aggregate: duplicate site id " + std::to_string(m->site_id));
        if (m->grad.size() != p || m->hess.rows() != p || m->hess.cols() != p)
            throw DataError("aggregate: dimension mismatch at site " +
                            std::to_string(m->site_id));
        if (m->n == 0) throw DataError("aggregate: empty site " + std::to_string(m->site_id));
        if ((m->hess - m->hess.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw DataError("aggregate: asymmetric Hessian from site " +
                            std::to_string(m->site_id));
        N += static_cast<double>(m->n);
    }

    AggregateGradients agg;
    agg.N = N;
    agg.grad_bar = Eigen::VectorXd::Zero(p);
    agg.hess_bar = Eigen::MatrixXd::Zero(p, p);
    for (const auto* m : ordered) {
        const double w = static_cast<double>(m->n) / N;  // exactly 1 when K = 1
        agg.grad_bar += w * m->grad;
        agg.hess_bar += w * m->hess;
    }
    return agg;
}

namespace {

struct SurrogateTerms {
    Eigen::VectorXd grad_shift;  // grad_bar - grad1(b0)
    Eigen::MatrixXd hess_shift;  // hess_bar - hess1(b0)
};

SurrogateTerms correction_terms(const EncodedData& lead, const BroadcastPacket& packet,
                                const AggregateGradients& agg) {
    SurrogateTerms t;
    t.grad_shift = agg.grad_bar - gradient(packet.beta_bar, lead.X, lead.y);
    t.hess_shift = agg.hess_bar - hessian(packet.beta_bar, lead.X, lead.y);
    return t;
}

}  // namespace

double surrogate_loglik(const Eigen::VectorXd& beta, const EncodedData& lead,
                        const BroadcastPacket& packet, const AggregateGradients& agg) {
    const SurrogateTerms t = correction_terms(lead, packet, agg);
    const Eigen::VectorXd d = beta - packet.beta_bar;
    return log_likelihood(beta, lead.X, lead.y) + t.grad_shift.dot(beta) +
           0.5 * d.dot(t.hess_shift * d);
}

Eigen::VectorXd surrogate_gradient(const Eigen::VectorXd& beta, const EncodedData& lead,
                                   const BroadcastPacket& packet,
                                   const AggregateGradients& agg) {
    const SurrogateTerms t = correction_terms(lead, packet, agg);
    return gradient(beta, lead.X, lead.y) + t.grad_shift +
           t.hess_shift * (beta - packet.beta_bar);
}

Eigen::MatrixXd surrogate_hessian(const Eigen::VectorXd& beta, const EncodedData& lead,
                                  const BroadcastPacket& packet,
                                  const AggregateGradients& agg) {
    const SurrogateTerms t = correction_terms(lead, packet, agg);
    return hessian(beta, lead.X, lead.y) + t.hess_shift;
}

FitResult fit_global(const EncodedData& lead, const BroadcastPacket& packet,
                     const AggregateGradients& agg, const FitOptions& options) {
    if (packet.beta_bar.size() != lead.X.cols())
        throw DataError("fit_global: anchor dimension does not match lead design");
    const SurrogateTerms t = correction_terms(lead, packet, agg);

    auto value = [&](const Eigen::VectorXd& b) {
        const Eigen::VectorXd d = b - packet.beta_bar;
        return log_likelihood(b, lead.X, lead.y) + t.grad_shift.dot(b) +
               0.5 * d.dot(t.hess_shift * d);
    };
    auto grad = [&](const Eigen::VectorXd& b) {
        return (gradient(b, lead.X, lead.y) + t.grad_shift +
                t.hess_shift * (b - packet.beta_bar)).eval();
    };

    FitResult result;
    result.beta = packet.beta_bar;
    double f = value(result.beta);
    Eigen::VectorXd g = grad(result.beta);

    for (int iter = 1; iter <= options.max_iter; ++iter) {
        // The anchor can land exactly on a stationary point (identical sites
        // make the correction vanish); no strict ascent direction exists
        // there. Near-zero gradients still iterate -- the tiny Newton step
        // either polishes the optimum or trips the stall fallback below.
        if (g.cwiseAbs().maxCoeff() == 0.0) {
            result.converged = true;
            break;
        }
        result.iterations = iter;
        const Eigen::MatrixXd H = hessian(result.beta, lead.X, lead.y) + t.hess_shift;
        const Eigen::VectorXd d = ascent_direction(H, g);

        const double slope = g.dot(d);
        double step = 1.0;
        bool accepted = false;
        Eigen::VectorXd beta_new = result.beta;
        double f_new = f;
        for (int h = 0; h < 40; ++h) {
            beta_new = result.beta + step * d;
            f_new = value(beta_new);
            if (f_new >= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        const double step_inf = (step * d).cwiseAbs().maxCoeff();
        result.beta = beta_new;
        f = f_new;
        g = grad(result.beta);
        if (step_inf < options.tol && g.cwiseAbs().maxCoeff() < options.grad_tol) {
            result.converged = true;
            break;
        }
    }

    result.log_lik = f;
    result.grad_norm = g.cwiseAbs().maxCoeff();
    if (!result.converged && result.grad_norm < options.grad_tol) result.converged = true;
    if (!result.converged)
        throw NumericError("surrogate optimization did not converge");
    return result;
}

OneShotResult run_one_shot(const std::vector<EncodedSite>& sites, std::size_t lead_index,
                           const FitOptions& options) {
    if (sites.empty()) throw DataError("run_one_shot: no sites");
    if (lead_index >= sites.size()) throw ConfigError("run_one_shot: lead index out of range");

    OneShotResult result;
    const EncodedSite& lead = sites[lead_index];
    result.packet = lead_initialize(lead, options);

    const std::string broadcast_text = serialize_broadcast(result.packet);
    result.transcript.entries.push_back({"broadcast", lead.site_id, -1, broadcast_text});

    // Remotes reply in ascending site_id; every value crosses the wire in
    // serialized form so the transcript is exactly what the math consumed.
    std::vector<const EncodedSite*> remotes;
    for (std::size_t i = 0; i < sites.size(); ++i)
        if (i != lead_index) remotes.push_back(&sites[i]);
    std::sort(remotes.begin(), remotes.end(),
              [](const EncodedSite* a, const EncodedSite* b) { return a->site_id < b->site_id; });

    std::vector<SiteMessage> messages;
    const BroadcastPacket received = parse_broadcast(broadcast_text);
    for (const EncodedSite* site : remotes) {
        const std::string reply = serialize_site_message(remote_summarize(received, *site));
        result.transcript.entries.push_back({"reply", site->site_id, lead.site_id, reply});
        messages.push_back(parse_site_message(reply));
    }

    // The lead's own summary never leaves the site; it is logged all the
    // same so the audit sees a complete, symmetric record.
    SiteMessage own = remote_summarize(result.packet, lead);
    result.transcript.entries.push_back(
        {"lead_summary", lead.site_id, lead.site_id, serialize_site_message(own)});
    messages.push_back(std::move(own));

    result.agg = aggregate(messages);
    result.fit = fit_global(lead.data, result.packet, result.agg, options);
    result.beta = result.fit.beta;
    return result;
}

}  // namespace fedscore
