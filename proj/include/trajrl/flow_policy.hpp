#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "trajrl/policy_net.hpp"
#include "trajrl/se3.hpp"
#include "trajrl/traj_io.hpp"

namespace trajrl {

// --- latent codec -----------------------------------------------------------

// Gauge-normalizes and flattens a trajectory to 6 values per frame:
// translation followed by the so(3) log of the absolute rotation. Raises
// invalid_argument when a normalized rotation sits within 1e-3 of angle pi.
std::vector<double> encode_trajectory(const Trajectory& t);

// Total on finite vectors: so(3) blocks are clamped into the legal ball
// before exponentiating.
Trajectory decode_latent(const std::vector<double>& z, double frame_rate = 30.0);

// --- policy -----------------------------------------------------------------

// The trainable policy: network parameters plus the architecture and the
// hash of the config that produced them (stored in checkpoints).
class FlowPolicy {
public:
    FlowPolicy(const PolicyArch& arch, std::uint64_t init_seed,
               std::uint64_t config_hash = 0)
        : net_(arch, init_seed), config_hash_(config_hash) {}

    FlowPolicy(const PolicyArch& arch, std::vector<double> params,
               std::uint64_t config_hash)
        : net_(arch, std::move(params)), config_hash_(config_hash) {}

    const PolicyArch& arch() const { return net_.arch(); }
    const PolicyNet& net() const { return net_; }
    PolicyNet& net() { return net_; }
    std::uint64_t config_hash() const { return config_hash_; }
    void set_config_hash(std::uint64_t h) { config_hash_ = h; }

private:
    PolicyNet net_;
    std::uint64_t config_hash_;
};

// Versioned text checkpoint: architecture, config hash, parameters as IEEE
// bit patterns. save(load(x)) is byte-identical to x.
void save_checkpoint(const FlowPolicy& policy, const std::string& path);
std::string serialize_checkpoint(const FlowPolicy& policy);
FlowPolicy load_checkpoint(const std::string& path);
FlowPolicy parse_checkpoint(const std::string& text);

// --- sampling ---------------------------------------------------------------

// One recorded stochastic transition. sigma > 0 always holds for recorded
// transitions; with sde_eta = 0 nothing is recorded and sampling is the
// deterministic ODE.
struct TransitionRecord {
    int step = 0;    // Euler step index in [0, flow_steps)
    double t = 0.0;  // flow time at the step start, step / flow_steps
    double sigma = 0.0;
    std::vector<double> state; // latent before the step
    std::vector<double> next;  // sampled latent after the step
    double logp_behavior = 0.0;
};

struct RolloutSample {
    std::vector<double> final_latent;
    Trajectory decoded;
    std::vector<TransitionRecord> transitions;
    std::uint64_t rollout_seed = 0;
};

// Active-window start for a given iteration: begins at the last
// `window_size` steps and slides one step toward t = 0 every
// `shift_period` iterations, wrapping.
int window_start(int iteration, int flow_steps, int window_size, int shift_period);

// Integrates flow_steps Euler steps from a shared z0 ~ N(0, I). Steps inside
// [win_start, win_start + window_size) add sigma_step * xi noise with
// sigma_step = eta * sqrt(dt) * (1 - t) and record the transition density.
// Rollout j draws its noise from a stream derived from (seed, j).
std::vector<RolloutSample> sample_group(const FlowPolicy& policy,
                                        const std::vector<double>& cond_latent,
                                        int group_size, int flow_steps,
                                        int win_start, int win_size, double eta,
                                        double frame_rate, std::uint64_t seed);

// Isotropic Gaussian log-density of x around mean with scale sigma; the
// closed form used both when recording and when re-deriving densities.
double transition_logpdf(const std::vector<double>& x, const std::vector<double>& mean,
                         double sigma);

// --- rewards on decoded trajectories ----------------------------------------

struct AestheticScores {
    double vis = 0.0; // negated mean rotational second difference
    double mot = 0.0; // negated mean translational second difference
    double hps = 0.0; // negated max frame-to-frame translation jump
};

AestheticScores aesthetic_channels(const Trajectory& t);

// --- training ---------------------------------------------------------------

struct CorpusSample {
    std::vector<double> condition;
    std::vector<double> data;
};

// Velocity regression ||v(z_t, t, c) - (z1 - z0)||^2 with
// z_t = (1 - t) z0 + t z1, minimized by plain minibatch SGD at a constant
// rate. Deterministic given cfg.seed.
FlowPolicy flow_pretrain(const std::vector<CorpusSample>& corpus, const RunConfig& cfg);

// Monte-Carlo flow-matching loss over a corpus with draws fixed by seed.
double flow_matching_loss(const FlowPolicy& policy, const std::vector<CorpusSample>& corpus,
                          std::uint64_t seed);

struct TrainHooks {
    std::function<void(const std::string&)> metrics;                 // one line per iteration
    std::function<void(int, const FlowPolicy&)> checkpoint;          // periodic snapshots
};

// The RL loop: per iteration draws a rescaled condition from the bank,
// samples a group, scores geometry (through the noisy estimator) and
// aesthetic channels, fuses group-normalized advantages, and takes one
// ascent step on the clipped surrogate. Deterministic given cfg.seed.
void grpo_train(FlowPolicy& policy, const std::vector<Trajectory>& bank,
                const RunConfig& cfg, const TrainHooks& hooks = {});

} // namespace trajrl
