#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>

#include "trajrl/se3.hpp"

namespace trajrl {

enum class WeightSchedule { linear, quadratic, uniform };
enum class StdMode { group, batch_max };
enum class TimestepSchedule { uniform, noise_proportional };

// Truncated-Gaussian parameters for target speed sampling, plus the
// division guard used when forming rescale factors.
struct RescaleSpec {
    double mu_trans = 0.05;     // meters/frame
    double sigma_trans = 0.03;
    double min_trans = 0.01;
    double max_trans = 0.15;
    double mu_rot = 0.017;      // radians/frame (~1 degree)
    double sigma_rot = 0.009;
    double min_rot = 0.002;
    double max_rot = 0.05;
    double eps = 1e-8;

    void validate() const;
};

// Every tunable in the pipeline, loadable from a flat `key = value` file.
// Defaults follow the reference run protocol where one exists (T = 25,
// G = 12, constant learning rate, 140 iterations); the rest are artifact
// defaults documented in README.md.
struct RunConfig {
    // Toy trajectory / policy sizes.
    int n_frames = 16;
    double frame_rate = 30.0;

    // Flow sampling.
    int flow_steps = 25;
    int group_size = 12;
    double sde_eta = 0.7;
    int window_size = 5;
    int window_shift_period = 5;

    // RL training.
    double learning_rate = 1e-4;
    int iterations = 140;
    int checkpoint_period = 50; // 0 disables periodic checkpoints
    std::uint64_t seed = 1;

    // Policy network.
    int hidden_width = 64;
    int t_embed_freqs = 4;
    int cond_embed_dim = 64;
    bool freeze_cond_embed = false;

    // Flow-matching pretraining and the scale-corrupted corpus.
    int pretrain_epochs = 400;
    int pretrain_batch = 16;
    double pretrain_lr = 0.02;
    double corpus_scale_min = 0.5;
    double corpus_scale_max = 1.5;

    // Rewards.
    WeightSchedule weight_schedule = WeightSchedule::linear;
    double lambda_rot = 1.0;
    double lambda_trans = 1.0;
    double lambda_vis = 0.25;
    double lambda_mot = 0.25;
    double lambda_hps = 0.25;
    double eps_std = 1e-4;
    double eps_clip = 0.2;
    StdMode std_mode = StdMode::group;
    TimestepSchedule timestep_schedule = TimestepSchedule::uniform;
    double est_sigma_trans = 0.005;
    double est_sigma_rot = 0.002;

    RescaleSpec rescale;

    void validate() const;

    // Canonical `key = value` rendering (sorted keys, full precision); the
    // checkpoint config hash is FNV-1a over these bytes.
    std::string canonical_text() const;
    std::uint64_t hash() const;
};

// Parses `timestamp tx ty tz qx qy qz qw` lines; `#` starts a comment,
// blank lines are skipped. Quaternions are scalar-last Hamilton,
// renormalized when within 1e-3 of unit norm and rejected beyond that.
Trajectory parse_trajectory(std::istream& in);
Trajectory parse_trajectory(const std::string& text);
Trajectory load_trajectory(const std::string& path);

// Inverse of parse_trajectory: timestamps i/frame_rate, 12 significant
// digits, quaternions via Shepperd's method with qw >= 0. Byte-stable for
// a given trajectory.
std::string serialize_trajectory(const Trajectory& t);
void save_trajectory(const Trajectory& t, const std::string& path);

// Flat key = value config parser. Unknown, duplicate, or out-of-range keys
// raise ErrorCode::config naming the key.
RunConfig parse_config(std::istream& in);
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

WeightSchedule parse_weight_schedule(const std::string& name);

// One self-delimiting JSON object per training iteration.
struct MetricsRecord {
    int iteration = 0;
    int window_start = 0;
    std::map<std::string, double> reward_mean; // per channel
    double adv_mean = 0.0;
    double surrogate = 0.0;
    double grad_norm = 0.0;
    double wall_s = 0.0;
};

std::string emit_metrics(const MetricsRecord& record);

} // namespace trajrl
