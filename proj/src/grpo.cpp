#include "trajrl/grpo.hpp"

#include <cmath>
#include <sstream>

namespace trajrl {

namespace {

double group_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double group_std(const std::vector<double>& v, double mean) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size()));
}

void check_group(const std::vector<double>& rewards, double eps_std) {
    if (rewards.size() < 2) {
        raise(ErrorCode::invalid_argument, "group normalization needs G >= 2 rewards");
    }
    if (!(eps_std > 0)) raise(ErrorCode::invalid_argument, "eps_std must be > 0");
    for (double r : rewards) {
        if (!std::isfinite(r)) raise(ErrorCode::invalid_argument, "non-finite reward in group");
    }
}

} // namespace

std::vector<double> normalize_channel(const std::vector<double>& rewards, double eps_std) {
    check_group(rewards, eps_std);
    const double mu = group_mean(rewards);
    const double denom = std::max(group_std(rewards, mu), eps_std);
    std::vector<double> out(rewards.size());
    for (std::size_t j = 0; j < rewards.size(); ++j) out[j] = (rewards[j] - mu) / denom;
    return out;
}

std::vector<std::vector<double>> normalize_channel_batch_max(
    const std::vector<std::vector<double>>& groups, double eps_std) {
    if (groups.empty()) raise(ErrorCode::invalid_argument, "empty batch of groups");
    double max_std = 0.0;
    std::vector<double> means(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        check_group(groups[g], eps_std);
        if (groups[g].size() != groups[0].size()) {
            raise(ErrorCode::invalid_argument, "batch groups must share one group size");
        }
        means[g] = group_mean(groups[g]);
        max_std = std::max(max_std, group_std(groups[g], means[g]));
    }
    const double denom = std::max(max_std, eps_std);
    std::vector<std::vector<double>> out(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        out[g].resize(groups[g].size());
        for (std::size_t j = 0; j < groups[g].size(); ++j) {
            out[g][j] = (groups[g][j] - means[g]) / denom;
        }
    }
    return out;
}

std::vector<double> fuse_advantages(const std::map<std::string, std::vector<double>>& per_channel,
                                    const std::map<std::string, double>& lambda) {
    if (per_channel.empty()) raise(ErrorCode::invalid_argument, "no channels to fuse");
    const std::size_t g = per_channel.begin()->second.size();
    std::vector<double> total(g, 0.0);
    for (const auto& [channel, advantages] : per_channel) {
        if (advantages.size() != g) {
            raise(ErrorCode::invalid_argument,
                  "channel `" + channel + "` group size differs from the others");
        }
        const auto it = lambda.find(channel);
        if (it == lambda.end()) {
            raise(ErrorCode::invalid_argument, "no weight for channel `" + channel + "`");
        }
        for (std::size_t j = 0; j < g; ++j) total[j] += it->second * advantages[j];
    }
    return total;
}

std::vector<double> fuse_advantages(const std::vector<RewardVector>& rewards,
                                    const ChannelWeights& lambda, double eps_std) {
    const std::size_t g = rewards.size();
    std::map<std::string, std::vector<double>> per_channel;
    for (const auto& [name, unused] : RewardVector{}.as_map()) {
        (void)unused;
        per_channel[name].reserve(g);
    }
    for (const auto& r : rewards) {
        for (const auto& [name, value] : r.as_map()) per_channel[name].push_back(value);
    }
    std::map<std::string, std::vector<double>> normalized;
    for (auto& [name, values] : per_channel) {
        normalized[name] = normalize_channel(values, eps_std);
    }
    return fuse_advantages(normalized,
                           {{"rot", lambda.rot},
                            {"trans", lambda.trans},
                            {"vis", lambda.vis},
                            {"mot", lambda.mot},
                            {"hps", lambda.hps}});
}

SurrogateResult surrogate_objective(const StepBatch& batch, double eps_clip) {
    if (!(eps_clip > 0 && eps_clip < 1)) {
        raise(ErrorCode::invalid_argument, "eps_clip must lie in (0, 1)");
    }
    if (batch.group_size == 0) {
        raise(ErrorCode::invalid_argument, "surrogate batch has no rollouts");
    }

    SurrogateResult result;
    result.dvalue_dlogp.resize(batch.terms.size(), 0.0);
    const double inv_g = 1.0 / static_cast<double>(batch.group_size);

    for (std::size_t k = 0; k < batch.terms.size(); ++k) {
        const StepTerm& term = batch.terms[k];
        if (!(term.weight > 0)) {
            raise(ErrorCode::invalid_argument, "timestep weight must be > 0");
        }
        const double rho = std::exp(term.logp_current - term.logp_behavior);
        if (!std::isfinite(rho)) {
            std::ostringstream os;
            os << "non-finite probability ratio at rollout " << term.rollout
               << " step " << term.step;
            raise(ErrorCode::numeric, os.str());
        }
        const double clipped = std::min(1.0 + eps_clip, std::max(1.0 - eps_clip, rho));
        const double unclipped_term = rho * term.advantage;
        const double clipped_term = clipped * term.advantage;
        if (unclipped_term <= clipped_term) {
            result.value += inv_g * term.weight * unclipped_term;
            // d/dlogp of rho*A is rho*A itself.
            result.dvalue_dlogp[k] = inv_g * term.weight * unclipped_term;
        } else {
            result.value += inv_g * term.weight * clipped_term;
        }
    }
    return result;
}

std::vector<double> timestep_weights(const std::vector<double>& sigma_steps, bool uniform) {
    if (sigma_steps.empty()) {
        raise(ErrorCode::invalid_argument, "timestep weights need a non-empty active set");
    }
    std::vector<double> w(sigma_steps.size());
    if (uniform) {
        const double v = 1.0 / static_cast<double>(sigma_steps.size());
        for (double& x : w) x = v;
        return w;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < sigma_steps.size(); ++i) {
        w[i] = sigma_steps[i] * sigma_steps[i];
        total += w[i];
    }
    if (!(total > 0)) {
        raise(ErrorCode::invalid_argument,
              "noise-proportional weights need at least one nonzero sigma");
    }
    for (double& x : w) x /= total;
    return w;
}

} // namespace trajrl
