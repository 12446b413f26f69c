#include "trajrl/trajrl.h"

#include <cstring>
#include <string>
#include <vector>

#include "trajrl/flow_policy.hpp"
#include "trajrl/geometry_reward.hpp"
#include "trajrl/rescale.hpp"
#include "trajrl/rng.hpp"
#include "trajrl/synth.hpp"
#include "trajrl/traj_io.hpp"

struct trajrl_trajectory {
    trajrl::Trajectory value;
};

struct trajrl_config {
    trajrl::RunConfig value;
};

struct trajrl_policy {
    trajrl::FlowPolicy value;
};

namespace {

thread_local std::string g_last_error;

trajrl_status set_error(trajrl_status code, const std::string& what) {
    g_last_error = what;
    return code;
}

trajrl_status from_exception(const trajrl::Error& e) {
    return set_error(static_cast<trajrl_status>(static_cast<int>(e.code())), e.what());
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
trajrl_status guarded(Fn&& fn) {
    try {
        fn();
        return TRAJRL_OK;
    } catch (const trajrl::Error& e) {
        return from_exception(e);
    } catch (const std::exception& e) {
        return set_error(TRAJRL_ERR_INTERNAL, e.what());
    } catch (...) {
        return set_error(TRAJRL_ERR_INTERNAL, "unknown error");
    }
}

trajrl_status require(bool ok, const char* what) {
    return ok ? TRAJRL_OK : set_error(TRAJRL_ERR_INVALID_ARGUMENT, what);
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

} // namespace

extern "C" {

const char* trajrl_version(void) { return "0.1.0"; }

const char* trajrl_last_error(void) { return g_last_error.c_str(); }

/* --- trajectories -------------------------------------------------------- */

trajrl_status trajrl_trajectory_load(const char* path, trajrl_trajectory** out) {
    if (auto s = require(path && out, "null argument")) return s;
    return guarded([&] { *out = new trajrl_trajectory{trajrl::load_trajectory(path)}; });
}

trajrl_status trajrl_trajectory_parse(const char* text, trajrl_trajectory** out) {
    if (auto s = require(text && out, "null argument")) return s;
    return guarded([&] {
        *out = new trajrl_trajectory{trajrl::parse_trajectory(std::string(text))};
    });
}

trajrl_status trajrl_trajectory_save(const trajrl_trajectory* t, const char* path) {
    if (auto s = require(t && path, "null argument")) return s;
    return guarded([&] { trajrl::save_trajectory(t->value, path); });
}

trajrl_status trajrl_trajectory_serialize(const trajrl_trajectory* t, char** out_text) {
    if (auto s = require(t && out_text, "null argument")) return s;
    return guarded([&] { *out_text = dup_string(trajrl::serialize_trajectory(t->value)); });
}

trajrl_status trajrl_trajectory_create(const double* rotations, const double* translations,
                                       size_t n_frames, double frame_rate,
                                       trajrl_trajectory** out) {
    if (auto s = require(rotations && translations && out, "null argument")) return s;
    return guarded([&] {
        trajrl::Trajectory traj;
        traj.frame_rate = frame_rate;
        traj.poses.resize(n_frames);
        for (size_t i = 0; i < n_frames; ++i) {
            trajrl::Mat3 m;
            for (int r = 0; r < 3; ++r) {
                for (int c = 0; c < 3; ++c) m(r, c) = rotations[9 * i + 3 * r + c];
            }
            traj.poses[i].rotation = trajrl::Rotation::from_matrix(m);
            traj.poses[i].translation =
                trajrl::Vec3(translations[3 * i], translations[3 * i + 1],
                             translations[3 * i + 2]);
        }
        traj.validate();
        *out = new trajrl_trajectory{std::move(traj)};
    });
}

size_t trajrl_trajectory_frames(const trajrl_trajectory* t) {
    return t ? t->value.size() : 0;
}

double trajrl_trajectory_frame_rate(const trajrl_trajectory* t) {
    return t ? t->value.frame_rate : 0.0;
}

trajrl_status trajrl_trajectory_pose(const trajrl_trajectory* t, size_t index,
                                     double rotation[9], double translation[3]) {
    if (auto s = require(t && rotation && translation, "null argument")) return s;
    if (index >= t->value.size()) {
        return set_error(TRAJRL_ERR_INVALID_ARGUMENT, "frame index out of range");
    }
    const trajrl::Pose& p = t->value.poses[index];
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) rotation[3 * r + c] = p.rotation.matrix()(r, c);
    }
    for (int i = 0; i < 3; ++i) translation[i] = p.translation[i];
    return TRAJRL_OK;
}

void trajrl_trajectory_free(trajrl_trajectory* t) { delete t; }

void trajrl_string_free(char* s) { delete[] s; }

/* --- configuration -------------------------------------------------------- */

trajrl_status trajrl_config_create(trajrl_config** out) {
    if (auto s = require(out != nullptr, "null argument")) return s;
    return guarded([&] { *out = new trajrl_config{trajrl::RunConfig{}}; });
}

trajrl_status trajrl_config_load(const char* path, trajrl_config** out) {
    if (auto s = require(path && out, "null argument")) return s;
    return guarded([&] { *out = new trajrl_config{trajrl::load_config(path)}; });
}

trajrl_status trajrl_config_set(trajrl_config* cfg, const char* key, const char* value) {
    if (auto s = require(cfg && key && value, "null argument")) return s;
    return guarded([&] {
        // Reuse the file parser so syntax and range checks stay identical;
        // a single `key = value` line over the current values.
        trajrl::RunConfig updated = cfg->value;
        std::string text = updated.canonical_text();
        // Remove the existing line for this key, then append the override.
        const std::string needle = std::string(key) + " = ";
        std::string filtered;
        std::size_t pos = 0;
        bool known = false;
        while (pos < text.size()) {
            const std::size_t eol = text.find('\n', pos);
            const std::string line = text.substr(pos, eol - pos);
            if (line.rfind(needle, 0) == 0) {
                known = true;
            } else {
                filtered += line;
                filtered += '\n';
            }
            pos = eol + 1;
        }
        if (!known) {
            trajrl::raise(trajrl::ErrorCode::config,
                          "unknown config key `" + std::string(key) + "`");
        }
        filtered += needle + value + "\n";
        cfg->value = trajrl::parse_config(filtered);
    });
}

trajrl_status trajrl_config_text(const trajrl_config* cfg, char** out_text) {
    if (auto s = require(cfg && out_text, "null argument")) return s;
    return guarded([&] { *out_text = dup_string(cfg->value.canonical_text()); });
}

void trajrl_config_free(trajrl_config* cfg) { delete cfg; }

/* --- geometry reward ------------------------------------------------------ */

trajrl_status trajrl_geometry_errors(const trajrl_trajectory* target,
                                     const trajrl_trajectory* estimated,
                                     const char* weight_schedule, double* d_trans,
                                     double* d_rot) {
    if (auto s = require(target && estimated && d_trans && d_rot, "null argument")) return s;
    return guarded([&] {
        const trajrl::WeightSchedule schedule =
            weight_schedule ? trajrl::parse_weight_schedule(weight_schedule)
                            : trajrl::WeightSchedule::linear;
        const trajrl::TemporalWeights w =
            trajrl::make_weights(target->value.size(), schedule);
        const trajrl::GeometryErrors e =
            trajrl::geometry_errors(target->value, estimated->value, w);
        *d_trans = e.d_trans;
        *d_rot = e.d_rot;
    });
}

trajrl_status trajrl_frame_errors(const trajrl_trajectory* target,
                                  const trajrl_trajectory* estimated, double* trans_err,
                                  double* rot_err) {
    if (auto s = require(target && estimated && trans_err && rot_err, "null argument")) {
        return s;
    }
    return guarded([&] {
        const trajrl::FrameErrors fe = trajrl::frame_errors(target->value, estimated->value);
        std::memcpy(trans_err, fe.trans.data(), fe.trans.size() * sizeof(double));
        std::memcpy(rot_err, fe.rot.data(), fe.rot.size() * sizeof(double));
    });
}

trajrl_status trajrl_noisy_estimate(const trajrl_trajectory* t, double sigma_trans,
                                    double sigma_rot, uint64_t seed,
                                    trajrl_trajectory** out) {
    if (auto s = require(t && out, "null argument")) return s;
    return guarded([&] {
        *out = new trajrl_trajectory{
            trajrl::noisy_estimator(t->value, {sigma_trans, sigma_rot, seed})};
    });
}

/* --- rescaling ------------------------------------------------------------ */

trajrl_status trajrl_max_speeds(const trajrl_trajectory* t, double* v_trans_max,
                                double* v_rot_max) {
    if (auto s = require(t && v_trans_max && v_rot_max, "null argument")) return s;
    return guarded([&] {
        const trajrl::SpeedProfile p = trajrl::max_speeds(t->value);
        *v_trans_max = p.v_trans_max;
        *v_rot_max = p.v_rot_max;
    });
}

trajrl_status trajrl_rescale_sample(const trajrl_trajectory* t, const trajrl_config* cfg,
                                    uint64_t seed, trajrl_trajectory** out,
                                    double stats[4]) {
    if (auto s = require(t && cfg && out, "null argument")) return s;
    return guarded([&] {
        trajrl::RescaleDraw draw =
            trajrl::rescale_with_spec(t->value, cfg->value.rescale, seed);
        if (stats) {
            stats[0] = draw.tau_trans;
            stats[1] = draw.tau_rot;
            stats[2] = draw.factors.s_trans;
            stats[3] = draw.factors.s_rot;
        }
        *out = new trajrl_trajectory{std::move(draw.trajectory)};
    });
}

/* --- synthetic banks ------------------------------------------------------ */

trajrl_status trajrl_synth_trajectory(int n_frames, uint64_t bank_seed, size_t index,
                                      trajrl_trajectory** out) {
    if (auto s = require(out != nullptr, "null argument")) return s;
    return guarded([&] {
        *out = new trajrl_trajectory{
            trajrl::random_smooth_trajectory(n_frames, trajrl::mix_seed(bank_seed, index))};
    });
}

/* --- policy --------------------------------------------------------------- */

namespace {

std::vector<trajrl::Trajectory> collect_bank(const trajrl_trajectory* const* bank,
                                             size_t bank_len) {
    if (!bank || bank_len == 0) {
        trajrl::raise(trajrl::ErrorCode::invalid_argument, "trajectory bank is empty");
    }
    std::vector<trajrl::Trajectory> out;
    out.reserve(bank_len);
    for (size_t i = 0; i < bank_len; ++i) {
        if (!bank[i]) {
            trajrl::raise(trajrl::ErrorCode::invalid_argument, "null bank entry");
        }
        out.push_back(bank[i]->value);
    }
    return out;
}

} // namespace

trajrl_status trajrl_pretrain(const trajrl_config* cfg, const trajrl_trajectory* const* bank,
                              size_t bank_len, trajrl_policy** out) {
    if (auto s = require(cfg && out, "null argument")) return s;
    return guarded([&] {
        const auto trajectories = collect_bank(bank, bank_len);
        const auto corpus = trajrl::build_drift_corpus(
            trajectories, cfg->value.corpus_scale_min, cfg->value.corpus_scale_max,
            trajrl::mix_seed(cfg->value.seed, 0x7001));
        *out = new trajrl_policy{trajrl::flow_pretrain(corpus, cfg->value)};
    });
}

trajrl_status trajrl_policy_save(const trajrl_policy* p, const char* path) {
    if (auto s = require(p && path, "null argument")) return s;
    return guarded([&] { trajrl::save_checkpoint(p->value, path); });
}

trajrl_status trajrl_policy_load(const char* path, trajrl_policy** out) {
    if (auto s = require(path && out, "null argument")) return s;
    return guarded([&] { *out = new trajrl_policy{trajrl::load_checkpoint(path)}; });
}

void trajrl_policy_free(trajrl_policy* p) { delete p; }

trajrl_status trajrl_train(trajrl_policy* p, const trajrl_config* cfg,
                           const trajrl_trajectory* const* bank, size_t bank_len,
                           trajrl_metrics_cb metrics_cb, void* metrics_user,
                           trajrl_checkpoint_cb checkpoint_cb, void* checkpoint_user) {
    if (auto s = require(p && cfg, "null argument")) return s;
    return guarded([&] {
        const auto trajectories = collect_bank(bank, bank_len);
        trajrl::TrainHooks hooks;
        if (metrics_cb) {
            hooks.metrics = [metrics_cb, metrics_user](const std::string& line) {
                metrics_cb(line.c_str(), metrics_user);
            };
        }
        if (checkpoint_cb) {
            hooks.checkpoint = [checkpoint_cb, checkpoint_user](int iteration,
                                                                const trajrl::FlowPolicy& pol) {
                const std::string text = trajrl::serialize_checkpoint(pol);
                checkpoint_cb(iteration, text.c_str(), checkpoint_user);
            };
        }
        trajrl::grpo_train(p->value, trajectories, cfg->value, hooks);
    });
}

trajrl_status trajrl_rollout_group(const trajrl_policy* p, const trajrl_config* cfg,
                                   const trajrl_trajectory* condition, int apply_rescale,
                                   uint64_t seed, trajrl_trajectory*** out_rollouts,
                                   size_t* out_count, trajrl_trajectory** out_condition) {
    if (auto s = require(p && cfg && condition && out_rollouts && out_count,
                         "null argument")) {
        return s;
    }
    return guarded([&] {
        const trajrl::RunConfig& c = cfg->value;
        trajrl::Trajectory cond_traj = condition->value;
        if (apply_rescale) {
            cond_traj = trajrl::rescale_with_spec(cond_traj, c.rescale,
                                                  trajrl::mix_seed(seed, 0x7101))
                            .trajectory;
        }
        const std::vector<double> cond = trajrl::encode_trajectory(cond_traj);
        const int ws = trajrl::window_start(0, c.flow_steps, c.window_size,
                                            c.window_shift_period);
        const auto rollouts = trajrl::sample_group(
            p->value, cond, c.group_size, c.flow_steps, ws, c.window_size, c.sde_eta,
            c.frame_rate, trajrl::mix_seed(seed, 0x7102));
        trajrl_trajectory** arr = new trajrl_trajectory*[rollouts.size()];
        for (size_t j = 0; j < rollouts.size(); ++j) {
            arr[j] = new trajrl_trajectory{rollouts[j].decoded};
        }
        *out_rollouts = arr;
        *out_count = rollouts.size();
        if (out_condition) *out_condition = new trajrl_trajectory{std::move(cond_traj)};
    });
}

void trajrl_trajectory_array_free(trajrl_trajectory** rollouts, size_t count) {
    if (!rollouts) return;
    for (size_t i = 0; i < count; ++i) delete rollouts[i];
    delete[] rollouts;
}

} /* extern "C" */
