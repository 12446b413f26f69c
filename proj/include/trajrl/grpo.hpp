#pragma once

#include <map>
#include <string>
#include <vector>

#include "trajrl/error.hpp"

namespace trajrl {

// The five reward channels of one rollout.
struct RewardVector {
    double rot = 0.0;
    double trans = 0.0;
    double vis = 0.0;
    double mot = 0.0;
    double hps = 0.0;

    std::map<std::string, double> as_map() const {
        return {{"rot", rot}, {"trans", trans}, {"vis", vis}, {"mot", mot}, {"hps", hps}};
    }
};

struct ChannelWeights {
    double rot = 1.0;
    double trans = 1.0;
    double vis = 0.25;
    double mot = 0.25;
    double hps = 0.25;
};

// Group-normalized advantage: (r - mean) / max(std, eps_std) with the
// population standard deviation. Requires G >= 2.
std::vector<double> normalize_channel(const std::vector<double>& rewards, double eps_std);

// Same, but the denominator is the maximum of the per-group standard
// deviations across a batch of groups (the batch-max mode). Group sizes
// must match.
std::vector<std::vector<double>> normalize_channel_batch_max(
    const std::vector<std::vector<double>>& groups, double eps_std);

// Elementwise weighted sum over channels. All channels must have the same
// group size.
std::vector<double> fuse_advantages(const std::map<std::string, std::vector<double>>& per_channel,
                                    const std::map<std::string, double>& lambda);

// Fixed channel set convenience used by the trainer.
std::vector<double> fuse_advantages(const std::vector<RewardVector>& rewards,
                                    const ChannelWeights& lambda, double eps_std);

// One clipped-surrogate term: the transition densities of one active step
// of one rollout.
struct StepTerm {
    std::size_t rollout = 0;
    std::size_t step = 0;
    double logp_current = 0.0;
    double logp_behavior = 0.0;
    double weight = 0.0;    // w_t, > 0
    double advantage = 0.0; // fused A_total for this rollout
};

struct StepBatch {
    std::size_t group_size = 0;
    std::vector<StepTerm> terms;
};

struct SurrogateResult {
    double value = 0.0;
    // d(value)/d(logp_current) per term, zero where the clipped branch is
    // active. Gradient of the objective w.r.t. parameters is the sum of
    // these coefficients times each term's dlogp/dtheta.
    std::vector<double> dvalue_dlogp;
};

// J = (1/G) sum_j sum_t w_t min(rho A, clip(rho, 1-eps, 1+eps) A), with
// rho = exp(logp_current - logp_behavior). No KL term.
SurrogateResult surrogate_objective(const StepBatch& batch, double eps_clip);

// Per-step loss weights over the active window. `uniform` gives 1/|active|;
// `noise-proportional` weights by sigma_step^2, normalized to sum 1.
std::vector<double> timestep_weights(const std::vector<double>& sigma_steps, bool uniform);

} // namespace trajrl
