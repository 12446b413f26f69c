#include "trajrl/flow_policy.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "trajrl/geometry_reward.hpp"
#include "trajrl/grpo.hpp"
#include "trajrl/rescale.hpp"
#include "trajrl/rng.hpp"

namespace trajrl {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSo3Ball = kPi - 1e-3;
constexpr char kCheckpointMagic[] = "trajrl-checkpoint v1";

std::string hex_double(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, bits);
    return buf;
}

double unhex_double(const std::string& s) {
    if (s.size() != 16 || s.find_first_not_of("0123456789abcdef") != std::string::npos) {
        raise(ErrorCode::checkpoint, "malformed parameter `" + s + "`");
    }
    const std::uint64_t bits = std::strtoull(s.c_str(), nullptr, 16);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

} // namespace

// --- latent codec -----------------------------------------------------------

std::vector<double> encode_trajectory(const Trajectory& t) {
    t.validate();
    const Trajectory g = normalize_gauge(t);
    std::vector<double> z(6 * g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double angle = geodesic_angle(Rotation::identity(), g.poses[i].rotation);
        if (angle >= kSo3Ball) {
            std::ostringstream os;
            os << "frame " << i + 1 << ": gauge-normalized rotation angle " << angle
               << " too close to pi to encode";
            raise(ErrorCode::invalid_argument, os.str());
        }
        const Vec3& tr = g.poses[i].translation;
        const Vec3 omega = log_so3(g.poses[i].rotation);
        z[6 * i + 0] = tr.x();
        z[6 * i + 1] = tr.y();
        z[6 * i + 2] = tr.z();
        z[6 * i + 3] = omega.x();
        z[6 * i + 4] = omega.y();
        z[6 * i + 5] = omega.z();
    }
    return z;
}

Trajectory decode_latent(const std::vector<double>& z, double frame_rate) {
    if (z.size() < 12 || z.size() % 6 != 0) {
        raise(ErrorCode::invalid_argument, "latent size must be 6N with N >= 2");
    }
    for (double v : z) {
        if (!std::isfinite(v)) {
            raise(ErrorCode::invalid_argument, "latent has non-finite entries");
        }
    }
    Trajectory t;
    t.frame_rate = frame_rate;
    t.poses.resize(z.size() / 6);
    const double ball = kSo3Ball - 1e-9;
    for (std::size_t i = 0; i < t.poses.size(); ++i) {
        t.poses[i].translation = Vec3(z[6 * i + 0], z[6 * i + 1], z[6 * i + 2]);
        Vec3 omega(z[6 * i + 3], z[6 * i + 4], z[6 * i + 5]);
        const double n = omega.norm();
        if (n > ball) omega *= ball / n;
        t.poses[i].rotation = exp_so3(omega);
    }
    return t;
}

// --- checkpoints ------------------------------------------------------------

std::string serialize_checkpoint(const FlowPolicy& policy) {
    const PolicyArch& a = policy.arch();
    std::ostringstream os;
    os << kCheckpointMagic << '\n'
       << "n_frames " << a.n_frames << '\n'
       << "t_embed_freqs " << a.t_embed_freqs << '\n'
       << "cond_embed_dim " << a.cond_embed_dim << '\n'
       << "hidden_width " << a.hidden_width << '\n';
    char hashbuf[17];
    std::snprintf(hashbuf, sizeof(hashbuf), "%016" PRIx64, policy.config_hash());
    os << "config_hash " << hashbuf << '\n'
       << "params " << policy.net().param_count() << '\n';
    const auto& p = policy.net().params();
    for (std::size_t i = 0; i < p.size(); ++i) {
        os << hex_double(p[i]);
        os << ((i % 8 == 7 || i + 1 == p.size()) ? '\n' : ' ');
    }
    os << "end\n";
    return os.str();
}

void save_checkpoint(const FlowPolicy& policy, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::io, "cannot open for writing: " + path);
    out << serialize_checkpoint(policy);
    if (!out) raise(ErrorCode::io, "write failed: " + path);
}

FlowPolicy parse_checkpoint(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCheckpointMagic) {
        raise(ErrorCode::checkpoint,
              "not a recognized checkpoint (expected `" + std::string(kCheckpointMagic) + "`)");
    }
    PolicyArch arch;
    std::uint64_t config_hash = 0;
    std::size_t count = 0;
    auto read_field = [&in](const std::string& name) -> std::string {
        std::string l;
        if (!std::getline(in, l)) raise(ErrorCode::checkpoint, "truncated checkpoint header");
        std::istringstream fields(l);
        std::string key, value;
        if (!(fields >> key >> value) || key != name) {
            raise(ErrorCode::checkpoint, "expected checkpoint field `" + name + "`");
        }
        return value;
    };
    arch.n_frames = std::stoi(read_field("n_frames"));
    arch.t_embed_freqs = std::stoi(read_field("t_embed_freqs"));
    arch.cond_embed_dim = std::stoi(read_field("cond_embed_dim"));
    arch.hidden_width = std::stoi(read_field("hidden_width"));
    config_hash = std::strtoull(read_field("config_hash").c_str(), nullptr, 16);
    count = std::stoul(read_field("params"));
    if (count != PolicyNet::param_count(arch)) {
        raise(ErrorCode::checkpoint, "parameter count does not match architecture");
    }

    std::vector<double> params;
    params.reserve(count);
    std::string token;
    while (params.size() < count && in >> token) {
        params.push_back(unhex_double(token));
    }
    if (params.size() != count) raise(ErrorCode::checkpoint, "truncated parameter block");
    if (!(in >> token) || token != "end") {
        raise(ErrorCode::checkpoint, "missing `end` marker");
    }
    return FlowPolicy(arch, std::move(params), config_hash);
}

FlowPolicy load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::io, "cannot open checkpoint: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_checkpoint(buf.str());
}

// --- sampling ---------------------------------------------------------------

double transition_logpdf(const std::vector<double>& x, const std::vector<double>& mean,
                         double sigma) {
    if (!(sigma > 0)) raise(ErrorCode::invalid_argument, "transition_logpdf needs sigma > 0");
    if (x.size() != mean.size()) {
        raise(ErrorCode::invalid_argument, "dimension mismatch in transition_logpdf");
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - mean[i];
        sq += d * d;
    }
    const double d = static_cast<double>(x.size());
    return -0.5 * d * std::log(2.0 * kPi * sigma * sigma) - sq / (2.0 * sigma * sigma);
}

int window_start(int iteration, int flow_steps, int window_size, int shift_period) {
    if (window_size < 1 || window_size > flow_steps) {
        raise(ErrorCode::invalid_argument, "window size must satisfy 1 <= W <= flow_steps");
    }
    if (shift_period < 1) raise(ErrorCode::invalid_argument, "shift period must be >= 1");
    const int positions = flow_steps - window_size + 1;
    const int shifts = (iteration / shift_period) % positions;
    return flow_steps - window_size - shifts;
}

std::vector<RolloutSample> sample_group(const FlowPolicy& policy,
                                        const std::vector<double>& cond_latent,
                                        int group_size, int flow_steps,
                                        int win_start, int win_size, double eta,
                                        double frame_rate, std::uint64_t seed) {
    if (group_size < 1) raise(ErrorCode::invalid_argument, "group size must be >= 1");
    if (flow_steps < 1) raise(ErrorCode::invalid_argument, "flow_steps must be >= 1");
    if (win_size < 1 || win_size > flow_steps || win_start < 0 ||
        win_start + win_size > flow_steps) {
        raise(ErrorCode::invalid_argument, "active window must lie inside [0, flow_steps)");
    }
    if (!(eta >= 0)) raise(ErrorCode::invalid_argument, "eta must be >= 0");

    const int d = policy.arch().latent_dim();
    if (static_cast<int>(cond_latent.size()) != d) {
        raise(ErrorCode::invalid_argument, "condition latent dimension mismatch");
    }

    // z0 is shared across the group; per-rollout streams drive only the
    // in-window noise, so eta = 0 collapses the group to one ODE path.
    std::vector<double> z0(d);
    Rng init_rng(mix_seed(seed, 0));
    for (double& v : z0) v = init_rng.normal();

    const double dt = 1.0 / flow_steps;
    std::vector<RolloutSample> rollouts;
    rollouts.reserve(group_size);

    PolicyNet::Cache cache;
    std::vector<double> z(d), mean(d);
    for (int j = 0; j < group_size; ++j) {
        RolloutSample rollout;
        rollout.rollout_seed = mix_seed(seed, 1 + static_cast<std::uint64_t>(j));
        Rng rng(rollout.rollout_seed);
        z = z0;
        for (int k = 0; k < flow_steps; ++k) {
            const double t = static_cast<double>(k) / flow_steps;
            policy.net().forward(z, t, cond_latent, cache);
            for (int i = 0; i < d; ++i) mean[i] = z[i] + dt * cache.v[i];

            const bool active = k >= win_start && k < win_start + win_size;
            const double sigma = eta * std::sqrt(dt) * (1.0 - t);
            if (active && sigma > 0.0) {
                TransitionRecord rec;
                rec.step = k;
                rec.t = t;
                rec.sigma = sigma;
                rec.state = z;
                rec.next.resize(d);
                for (int i = 0; i < d; ++i) rec.next[i] = mean[i] + sigma * rng.normal();
                rec.logp_behavior = transition_logpdf(rec.next, mean, sigma);
                z = rec.next;
                rollout.transitions.push_back(std::move(rec));
            } else {
                z = mean;
            }
        }
        rollout.final_latent = z;
        rollout.decoded = decode_latent(z, frame_rate);
        rollouts.push_back(std::move(rollout));
    }
    return rollouts;
}

// --- aesthetic channels -----------------------------------------------------

AestheticScores aesthetic_channels(const Trajectory& t) {
    t.validate();
    AestheticScores s;
    const std::size_t n = t.size();

    double max_jump = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        max_jump = std::max(max_jump,
                            (t.poses[i + 1].translation - t.poses[i].translation).norm());
    }
    s.hps = -max_jump;

    if (n >= 3) {
        double mot = 0.0;
        double vis = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            mot += (t.poses[i + 1].translation - 2.0 * t.poses[i].translation +
                    t.poses[i - 1].translation).norm();
            const Rotation step_in = t.poses[i - 1].rotation.transpose() * t.poses[i].rotation;
            const Rotation step_out = t.poses[i].rotation.transpose() * t.poses[i + 1].rotation;
            vis += geodesic_angle(step_in, step_out);
        }
        const double m = static_cast<double>(n - 2);
        s.mot = -mot / m;
        s.vis = -vis / m;
    }
    return s;
}

// --- pretraining ------------------------------------------------------------

namespace {

void check_corpus(const std::vector<CorpusSample>& corpus, int latent_dim) {
    if (corpus.empty()) raise(ErrorCode::invalid_argument, "pretraining corpus is empty");
    for (const auto& s : corpus) {
        if (static_cast<int>(s.condition.size()) != latent_dim ||
            static_cast<int>(s.data.size()) != latent_dim) {
            raise(ErrorCode::invalid_argument, "corpus latent dimension mismatch");
        }
    }
}

} // namespace

FlowPolicy flow_pretrain(const std::vector<CorpusSample>& corpus, const RunConfig& cfg) {
    cfg.validate();
    PolicyArch arch{cfg.n_frames, cfg.t_embed_freqs, cfg.cond_embed_dim, cfg.hidden_width};
    check_corpus(corpus, arch.latent_dim());

    FlowPolicy policy(arch, mix_seed(cfg.seed, 0x11), cfg.hash());
    const int d = arch.latent_dim();
    Rng rng(mix_seed(cfg.seed, 0x12));

    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> grad(policy.net().param_count(), 0.0);
    std::vector<double> z0(d), zt(d), upstream(d);
    PolicyNet::Cache cache;

    for (int epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[rng.below(i)]);
        }
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.pretrain_batch)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.pretrain_batch));
            const double nb = static_cast<double>(stop - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t s = start; s < stop; ++s) {
                const CorpusSample& sample = corpus[order[s]];
                const double t = rng.uniform_open();
                for (int i = 0; i < d; ++i) {
                    z0[i] = rng.normal();
                    zt[i] = (1.0 - t) * z0[i] + t * sample.data[i];
                }
                policy.net().forward(zt, t, sample.condition, cache);
                for (int i = 0; i < d; ++i) {
                    const double target = sample.data[i] - z0[i];
                    upstream[i] = 2.0 * (cache.v[i] - target) / (d * nb);
                }
                policy.net().backward(sample.condition, cache, upstream, grad);
            }
            auto& p = policy.net().params();
            for (std::size_t i = 0; i < p.size(); ++i) p[i] -= cfg.pretrain_lr * grad[i];
        }
    }
    return policy;
}

double flow_matching_loss(const FlowPolicy& policy, const std::vector<CorpusSample>& corpus,
                          std::uint64_t seed) {
    const int d = policy.arch().latent_dim();
    check_corpus(corpus, d);
    Rng rng(seed);
    PolicyNet::Cache cache;
    std::vector<double> z0(d), zt(d);
    double total = 0.0;
    for (const auto& sample : corpus) {
        const double t = rng.uniform_open();
        for (int i = 0; i < d; ++i) {
            z0[i] = rng.normal();
            zt[i] = (1.0 - t) * z0[i] + t * sample.data[i];
        }
        policy.net().forward(zt, t, sample.condition, cache);
        double sq = 0.0;
        for (int i = 0; i < d; ++i) {
            const double r = cache.v[i] - (sample.data[i] - z0[i]);
            sq += r * r;
        }
        total += sq / d;
    }
    return total / static_cast<double>(corpus.size());
}

// --- GRPO training ----------------------------------------------------------

void grpo_train(FlowPolicy& policy, const std::vector<Trajectory>& bank,
                const RunConfig& cfg, const TrainHooks& hooks) {
    cfg.validate();
    if (bank.empty()) raise(ErrorCode::invalid_argument, "trajectory bank is empty");
    if (policy.arch().n_frames != cfg.n_frames) {
        raise(ErrorCode::invalid_argument,
              "policy architecture n_frames does not match config");
    }

    const TemporalWeights weights = make_weights(cfg.n_frames, cfg.weight_schedule);
    const ChannelWeights lambda{cfg.lambda_rot, cfg.lambda_trans, cfg.lambda_vis,
                                cfg.lambda_mot, cfg.lambda_hps};
    const int d = policy.arch().latent_dim();
    const double dt = 1.0 / cfg.flow_steps;

    std::vector<double> grad(policy.net().param_count());
    std::vector<double> mean(d), upstream(d);
    PolicyNet::Cache cache;

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        const auto t_begin = std::chrono::steady_clock::now();
        const std::uint64_t iter_base = static_cast<std::uint64_t>(iter) * 4;

        const RescaleDraw cond_draw =
            sample_target_trajectory(bank, cfg.rescale, mix_seed(cfg.seed, iter_base + 1));
        const std::vector<double> cond = encode_trajectory(cond_draw.trajectory);
        const int ws =
            window_start(iter, cfg.flow_steps, cfg.window_size, cfg.window_shift_period);

        const std::vector<RolloutSample> rollouts =
            sample_group(policy, cond, cfg.group_size, cfg.flow_steps, ws, cfg.window_size,
                         cfg.sde_eta, cfg.frame_rate, mix_seed(cfg.seed, iter_base + 2));

        std::vector<RewardVector> rewards(rollouts.size());
        const std::uint64_t est_base = mix_seed(cfg.seed, iter_base + 3);
        for (std::size_t j = 0; j < rollouts.size(); ++j) {
            EstimatorNoise noise{cfg.est_sigma_trans, cfg.est_sigma_rot,
                                 mix_seed(est_base, j)};
            const Trajectory estimated = noisy_estimator(rollouts[j].decoded, noise);
            const GeometryErrors ge =
                geometry_errors(cond_draw.trajectory, estimated, weights);
            const GeometryReward gr = geometry_reward_channels(ge);
            const AestheticScores aes = aesthetic_channels(rollouts[j].decoded);
            rewards[j] = RewardVector{gr.r_rot, gr.r_trans, aes.vis, aes.mot, aes.hps};
        }

        const std::vector<double> fused = fuse_advantages(rewards, lambda, cfg.eps_std);

        // All rollouts share the window, so the per-step sigmas (and hence
        // the timestep weights) are common to the group.
        std::vector<double> sigmas(cfg.window_size);
        for (int k = 0; k < cfg.window_size; ++k) {
            const double t = static_cast<double>(ws + k) / cfg.flow_steps;
            sigmas[k] = cfg.sde_eta * std::sqrt(dt) * (1.0 - t);
        }
        std::vector<double> wt;
        const bool have_transitions = !rollouts.empty() && !rollouts[0].transitions.empty();
        if (have_transitions) {
            wt = timestep_weights(sigmas,
                                  cfg.timestep_schedule == TimestepSchedule::uniform);
        }

        StepBatch batch;
        batch.group_size = rollouts.size();
        for (std::size_t j = 0; j < rollouts.size(); ++j) {
            for (const TransitionRecord& rec : rollouts[j].transitions) {
                policy.net().forward(rec.state, rec.t, cond, cache);
                for (int i = 0; i < d; ++i) mean[i] = rec.state[i] + dt * cache.v[i];
                StepTerm term;
                term.rollout = j;
                term.step = rec.step;
                term.logp_current = transition_logpdf(rec.next, mean, rec.sigma);
                term.logp_behavior = rec.logp_behavior;
                term.weight = wt.at(rec.step - ws);
                term.advantage = fused[j];
                batch.terms.push_back(std::move(term));
            }
        }

        const SurrogateResult surrogate = surrogate_objective(batch, cfg.eps_clip);

        std::fill(grad.begin(), grad.end(), 0.0);
        std::size_t term_idx = 0;
        for (std::size_t j = 0; j < rollouts.size(); ++j) {
            for (const TransitionRecord& rec : rollouts[j].transitions) {
                const double coeff = surrogate.dvalue_dlogp[term_idx++];
                if (coeff == 0.0) continue;
                policy.net().forward(rec.state, rec.t, cond, cache);
                const double inv_var = 1.0 / (rec.sigma * rec.sigma);
                for (int i = 0; i < d; ++i) {
                    mean[i] = rec.state[i] + dt * cache.v[i];
                    upstream[i] = coeff * dt * (rec.next[i] - mean[i]) * inv_var;
                }
                policy.net().backward(cond, cache, upstream, grad, cfg.freeze_cond_embed);
            }
        }

        double grad_sq = 0.0;
        for (double g : grad) grad_sq += g * g;
        const double grad_norm = std::sqrt(grad_sq);
        if (!std::isfinite(grad_norm)) {
            std::ostringstream os;
            os << "non-finite gradient at iteration " << iter;
            raise(ErrorCode::numeric, os.str());
        }

        auto& p = policy.net().params();
        for (std::size_t i = 0; i < p.size(); ++i) p[i] += cfg.learning_rate * grad[i];

        if (hooks.metrics) {
            MetricsRecord rec;
            rec.iteration = iter;
            rec.window_start = ws;
            std::map<std::string, double> sums;
            for (const auto& r : rewards) {
                for (const auto& [name, value] : r.as_map()) sums[name] += value;
            }
            for (auto& [name, sum] : sums) {
                rec.reward_mean[name] = sum / static_cast<double>(rewards.size());
            }
            rec.adv_mean =
                std::accumulate(fused.begin(), fused.end(), 0.0) / fused.size();
            rec.surrogate = surrogate.value;
            rec.grad_norm = grad_norm;
            rec.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                       t_begin).count();
            hooks.metrics(emit_metrics(rec));
        }
        if (hooks.checkpoint && cfg.checkpoint_period > 0 &&
            (iter + 1) % cfg.checkpoint_period == 0) {
            hooks.checkpoint(iter + 1, policy);
        }
    }
    if (cfg.iterations > 0) policy.set_config_hash(cfg.hash());
}

} // namespace trajrl
