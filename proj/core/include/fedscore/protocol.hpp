#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fedscore/wire.hpp"

namespace fedscore {

// A site's training rows after binning + dummy coding, ready to federate.
struct EncodedSite {
    int site_id = 0;
    EncodedData data;
};

// Sample-size-weighted pooled derivatives at the anchor:
// grad_bar = sum_j n_j grad_j / N, hess_bar likewise.
struct AggregateGradients {
    double N = 0.0;
    Eigen::VectorXd grad_bar;
    Eigen::MatrixXd hess_bar;
};

// Lead fits its local MLE and packages the anchor for broadcasting.
BroadcastPacket lead_initialize(const EncodedSite& lead, const FitOptions& options = {});

// A site's one-shot reply: derivatives of its average log-likelihood at the
// anchor. Errors if the site was encoded against a different design.
SiteMessage remote_summarize(const BroadcastPacket& packet, const EncodedSite& site);

// Combine all site messages (including the lead's own). Order-independent:
// messages are folded in ascending site_id. Errors on duplicate site ids or
// mismatched dimensions.
AggregateGradients aggregate(const std::vector<SiteMessage>& messages);

// Second-order surrogate of the pooled average log-likelihood around the
// anchor b0 = beta_bar:
//   Ls(b) = L1(b) + (grad_bar - grad1(b0))' b
//           + 1/2 (b - b0)' (hess_bar - hess1(b0)) (b - b0)
double surrogate_loglik(const Eigen::VectorXd& beta, const EncodedData& lead,
                        const BroadcastPacket& packet, const AggregateGradients& agg);
Eigen::VectorXd surrogate_gradient(const Eigen::VectorXd& beta, const EncodedData& lead,
                                   const BroadcastPacket& packet,
                                   const AggregateGradients& agg);
Eigen::MatrixXd surrogate_hessian(const Eigen::VectorXd& beta, const EncodedData& lead,
                                  const BroadcastPacket& packet,
                                  const AggregateGradients& agg);

// Newton on the surrogate from the anchor; same convergence rules as
// fit_mle, but non-convergence is an error here.
FitResult fit_global(const EncodedData& lead, const BroadcastPacket& packet,
                     const AggregateGradients& agg, const FitOptions& options = {});

struct OneShotResult {
    Eigen::VectorXd beta;        // the global estimate
    FitResult fit;               // surrogate optimization report
    BroadcastPacket packet;      // what was broadcast
    AggregateGradients agg;
    Transcript transcript;       // every payload that crossed the wire
};

// Full one-shot round: lead_initialize -> broadcast -> one reply per remote
// -> aggregate -> fit_global. All cross-site values pass through the
// serialized wire form (exact round-trip), and the transcript records one
// broadcast, K-1 replies, and the lead's own summary for audit.
OneShotResult run_one_shot(const std::vector<EncodedSite>& sites, std::size_t lead_index,
                           const FitOptions& options = {});

}  // namespace fedscore
