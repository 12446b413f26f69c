// trajrl command-line frontend. Talks to the library exclusively through
// the C API in trajrl/trajrl.h.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trajrl/trajrl.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitRuntime = 2;

struct CliError {
    std::string message;
};

[[noreturn]] void fail(const std::string& message) { throw CliError{message}; }

void check(trajrl_status status, const std::string& context) {
    if (status != TRAJRL_OK) {
        fail(context + ": " + trajrl_last_error());
    }
}

using TrajectoryPtr = std::unique_ptr<trajrl_trajectory, decltype(&trajrl_trajectory_free)>;
using ConfigPtr = std::unique_ptr<trajrl_config, decltype(&trajrl_config_free)>;
using PolicyPtr = std::unique_ptr<trajrl_policy, decltype(&trajrl_policy_free)>;

TrajectoryPtr load_trajectory(const std::string& path) {
    trajrl_trajectory* t = nullptr;
    check(trajrl_trajectory_load(path.c_str(), &t), "loading " + path);
    return TrajectoryPtr(t, trajrl_trajectory_free);
}

ConfigPtr make_config(const std::string& path) {
    trajrl_config* cfg = nullptr;
    if (path.empty()) {
        check(trajrl_config_create(&cfg), "creating default config");
    } else {
        check(trajrl_config_load(path.c_str(), &cfg), "loading config " + path);
    }
    return ConfigPtr(cfg, trajrl_config_free);
}

void config_set(const ConfigPtr& cfg, const std::string& key, const std::string& value) {
    check(trajrl_config_set(cfg.get(), key.c_str(), value.c_str()),
          "setting config key " + key);
}

std::vector<std::string> list_bank_files(const std::string& dir) {
    if (!fs::is_directory(dir)) fail("bank directory not found: " + dir);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") {
            files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) fail("no .txt trajectory files in " + dir);
    return files;
}

struct Bank {
    std::vector<TrajectoryPtr> owned;
    std::vector<const trajrl_trajectory*> raw;
};

Bank load_bank(const std::string& dir) {
    Bank bank;
    for (const std::string& path : list_bank_files(dir)) {
        bank.owned.push_back(load_trajectory(path));
        bank.raw.push_back(bank.owned.back().get());
    }
    return bank;
}

void apply_reward_set(const ConfigPtr& cfg, const std::string& reward_set) {
    if (reward_set == "full" || reward_set.empty()) return;
    if (reward_set == "geometry-only") {
        config_set(cfg, "lambda_vis", "0");
        config_set(cfg, "lambda_mot", "0");
        config_set(cfg, "lambda_hps", "0");
    } else if (reward_set == "aesthetic-only") {
        config_set(cfg, "lambda_rot", "0");
        config_set(cfg, "lambda_trans", "0");
    } else {
        fail("unknown --reward-set value: " + reward_set);
    }
}

double rad_to_deg(double rad) { return rad * 180.0 / 3.14159265358979323846; }

// --- subcommands ------------------------------------------------------------

int run_eval(const std::string& target_path, const std::string& estimated_path,
             const std::string& weights, const std::string& csv_path) {
    const TrajectoryPtr target = load_trajectory(target_path);
    const TrajectoryPtr estimated = load_trajectory(estimated_path);

    double d_trans = 0.0, d_rot = 0.0;
    check(trajrl_geometry_errors(target.get(), estimated.get(), weights.c_str(), &d_trans,
                                 &d_rot),
          "computing geometry errors");

    const size_t n = trajrl_trajectory_frames(target.get());
    std::vector<double> trans_err(n), rot_err(n);
    check(trajrl_frame_errors(target.get(), estimated.get(), trans_err.data(),
                              rot_err.data()),
          "computing per-frame errors");

    std::printf("frames      %zu\n", n);
    std::printf("weights     %s\n", weights.c_str());
    std::printf("d_trans     %.9g m\n", d_trans);
    std::printf("d_rot       %.9g rad (%.9g deg)\n", d_rot, rad_to_deg(d_rot));

    if (!csv_path.empty()) {
        std::ofstream csv(csv_path);
        if (!csv) fail("cannot open CSV output: " + csv_path);
        csv << "frame,trans_err_m,rot_err_rad,rot_err_deg\n";
        for (size_t i = 0; i < n; ++i) {
            char line[128];
            std::snprintf(line, sizeof(line), "%zu,%.9g,%.9g,%.9g\n", i + 1, trans_err[i],
                          rot_err[i], rad_to_deg(rot_err[i]));
            csv << line;
        }
    }
    return 0;
}

int run_rescale(const std::string& input, const std::string& spec_path, uint64_t seed,
                const std::string& output) {
    const TrajectoryPtr in = load_trajectory(input);
    const ConfigPtr cfg = make_config(spec_path);

    trajrl_trajectory* out = nullptr;
    double stats[4] = {0, 0, 0, 0};
    check(trajrl_rescale_sample(in.get(), cfg.get(), seed, &out, stats), "rescaling");
    const TrajectoryPtr rescaled(out, trajrl_trajectory_free);

    check(trajrl_trajectory_save(rescaled.get(), output.c_str()), "writing " + output);
    std::printf("tau_trans   %.9g m/frame\n", stats[0]);
    std::printf("tau_rot     %.9g rad/frame\n", stats[1]);
    std::printf("s_trans     %.9g\n", stats[2]);
    std::printf("s_rot       %.9g\n", stats[3]);
    return 0;
}

int run_gen_bank(int count, int frames, uint64_t seed, const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir)) fail("cannot create output directory: " + out_dir);

    for (int i = 0; i < count; ++i) {
        trajrl_trajectory* t = nullptr;
        check(trajrl_synth_trajectory(frames, seed, static_cast<size_t>(i), &t),
              "generating trajectory");
        const TrajectoryPtr traj(t, trajrl_trajectory_free);
        char name[64];
        std::snprintf(name, sizeof(name), "bank_%04d.txt", i);
        const std::string path = (fs::path(out_dir) / name).string();
        check(trajrl_trajectory_save(traj.get(), path.c_str()), "writing " + path);
    }
    std::printf("wrote %d trajectories to %s\n", count, out_dir.c_str());
    return 0;
}

int run_pretrain(const std::string& bank_dir, const std::string& config_path,
                 long long seed, int epochs, const std::string& out_path) {
    const ConfigPtr cfg = make_config(config_path);
    if (seed >= 0) config_set(cfg, "seed", std::to_string(seed));
    if (epochs > 0) config_set(cfg, "pretrain_epochs", std::to_string(epochs));

    const Bank bank = load_bank(bank_dir);
    trajrl_policy* p = nullptr;
    check(trajrl_pretrain(cfg.get(), bank.raw.data(), bank.raw.size(), &p), "pretraining");
    const PolicyPtr policy(p, trajrl_policy_free);
    check(trajrl_policy_save(policy.get(), out_path.c_str()), "writing " + out_path);
    std::printf("pretrained on %zu trajectories -> %s\n", bank.raw.size(), out_path.c_str());
    return 0;
}

struct TrainSinks {
    std::ofstream metrics_file;
    bool to_stdout = false;
    std::string checkpoint_base;
};

void metrics_cb(const char* line, void* user) {
    auto* sinks = static_cast<TrainSinks*>(user);
    if (sinks->to_stdout) {
        std::printf("%s\n", line);
    } else {
        sinks->metrics_file << line << '\n';
    }
}

void checkpoint_cb(int iteration, const char* text, void* user) {
    auto* sinks = static_cast<TrainSinks*>(user);
    char suffix[32];
    std::snprintf(suffix, sizeof(suffix), ".iter%06d", iteration);
    std::ofstream out(sinks->checkpoint_base + suffix, std::ios::binary);
    out << text;
}

int run_train(const std::string& checkpoint, const std::string& bank_dir,
              const std::string& config_path, long long iterations, long long seed,
              const std::string& reward_set, const std::string& metrics_path,
              const std::string& out_path) {
    const ConfigPtr cfg = make_config(config_path);
    if (iterations >= 0) config_set(cfg, "iterations", std::to_string(iterations));
    if (seed >= 0) config_set(cfg, "seed", std::to_string(seed));
    apply_reward_set(cfg, reward_set);

    trajrl_policy* p = nullptr;
    check(trajrl_policy_load(checkpoint.c_str(), &p), "loading checkpoint " + checkpoint);
    const PolicyPtr policy(p, trajrl_policy_free);

    const Bank bank = load_bank(bank_dir);

    TrainSinks sinks;
    sinks.checkpoint_base = out_path;
    if (metrics_path.empty()) {
        sinks.to_stdout = true;
    } else {
        sinks.metrics_file.open(metrics_path);
        if (!sinks.metrics_file) fail("cannot open metrics file: " + metrics_path);
    }

    check(trajrl_train(policy.get(), cfg.get(), bank.raw.data(), bank.raw.size(),
                       metrics_cb, &sinks, checkpoint_cb, &sinks),
          "training");
    check(trajrl_policy_save(policy.get(), out_path.c_str()), "writing " + out_path);
    return 0;
}

int run_rollout(const std::string& checkpoint, const std::string& condition_path,
                const std::string& config_path, uint64_t seed, bool rescale_condition,
                const std::string& out_dir) {
    const ConfigPtr cfg = make_config(config_path);
    trajrl_policy* p = nullptr;
    check(trajrl_policy_load(checkpoint.c_str(), &p), "loading checkpoint " + checkpoint);
    const PolicyPtr policy(p, trajrl_policy_free);

    const TrajectoryPtr condition = load_trajectory(condition_path);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir)) fail("cannot create output directory: " + out_dir);

    trajrl_trajectory** rollouts = nullptr;
    size_t count = 0;
    trajrl_trajectory* used_condition = nullptr;
    check(trajrl_rollout_group(policy.get(), cfg.get(), condition.get(),
                               rescale_condition ? 1 : 0, seed, &rollouts, &count,
                               &used_condition),
          "sampling rollout group");
    const TrajectoryPtr reference(used_condition, trajrl_trajectory_free);
    check(trajrl_trajectory_save(reference.get(),
                                 (fs::path(out_dir) / "condition.txt").string().c_str()),
          "writing condition");

    std::printf("rollout  d_trans(m)    d_rot(rad)\n");
    for (size_t j = 0; j < count; ++j) {
        char name[64];
        std::snprintf(name, sizeof(name), "rollout_%02zu.txt", j);
        const std::string path = (fs::path(out_dir) / name).string();
        check(trajrl_trajectory_save(rollouts[j], path.c_str()), "writing " + path);
        double d_trans = 0.0, d_rot = 0.0;
        check(trajrl_geometry_errors(reference.get(), rollouts[j], "linear", &d_trans,
                                     &d_rot),
              "scoring rollout");
        std::printf("%7zu  %-12.9g  %-12.9g\n", j, d_trans, d_rot);
    }
    trajrl_trajectory_array_free(rollouts, count);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"camera-trajectory geometry rewards, rescaling and GRPO training"};
    app.require_subcommand(1);
    app.set_version_flag("--version", trajrl_version());

    // eval
    auto* eval = app.add_subcommand("eval", "geometry errors between two trajectory files");
    std::string eval_target, eval_estimated, eval_weights = "linear", eval_csv;
    eval->add_option("--target", eval_target, "target trajectory file")->required();
    eval->add_option("--estimated", eval_estimated, "estimated trajectory file")->required();
    eval->add_option("--weights", eval_weights, "temporal weights: linear|quadratic|uniform");
    eval->add_option("--csv", eval_csv, "write per-frame errors to this CSV file");

    // rescale
    auto* rescale = app.add_subcommand("rescale", "metric-aware trajectory rescaling");
    std::string rescale_input, rescale_spec, rescale_output;
    uint64_t rescale_seed = 1;
    rescale->add_option("--input", rescale_input, "input trajectory file")->required();
    rescale->add_option("--spec", rescale_spec, "config file with rescale_* keys");
    rescale->add_option("--seed", rescale_seed, "sampling seed");
    rescale->add_option("--output", rescale_output, "output trajectory file")->required();

    // gen-bank
    auto* gen_bank = app.add_subcommand("gen-bank", "generate a synthetic trajectory bank");
    int gb_count = 0, gb_frames = 16;
    uint64_t gb_seed = 1;
    std::string gb_out;
    gen_bank->add_option("--count", gb_count, "number of trajectories")
        ->required()
        ->check(CLI::PositiveNumber);
    gen_bank->add_option("--frames", gb_frames, "frames per trajectory");
    gen_bank->add_option("--seed", gb_seed, "bank seed");
    gen_bank->add_option("--out", gb_out, "output directory")->required();

    // pretrain
    auto* pretrain = app.add_subcommand("pretrain", "flow-matching pretraining on a bank");
    std::string pt_bank, pt_config, pt_out;
    long long pt_seed = -1;
    int pt_epochs = 0;
    pretrain->add_option("--bank", pt_bank, "bank directory")->required();
    pretrain->add_option("--config", pt_config, "config file");
    pretrain->add_option("--seed", pt_seed, "overrides the config seed");
    pretrain->add_option("--epochs", pt_epochs, "overrides pretrain_epochs");
    pretrain->add_option("--out", pt_out, "output checkpoint")->required();

    // train
    auto* train = app.add_subcommand("train", "GRPO training from a checkpoint");
    std::string tr_checkpoint, tr_bank, tr_config, tr_reward_set = "full", tr_metrics, tr_out;
    long long tr_iterations = -1, tr_seed = -1;
    train->add_option("--checkpoint", tr_checkpoint, "input checkpoint")->required();
    train->add_option("--bank", tr_bank, "bank directory")->required();
    train->add_option("--config", tr_config, "config file");
    train->add_option("--iterations", tr_iterations, "overrides config iterations");
    train->add_option("--seed", tr_seed, "overrides the config seed");
    train->add_option("--reward-set", tr_reward_set,
                      "full|geometry-only|aesthetic-only (zeroes the other weights)");
    train->add_option("--metrics", tr_metrics, "metrics output file (default stdout)");
    train->add_option("--out", tr_out, "output checkpoint")->required();

    // rollout
    auto* rollout = app.add_subcommand("rollout", "sample one rollout group from a checkpoint");
    std::string ro_checkpoint, ro_condition, ro_config, ro_out;
    uint64_t ro_seed = 1;
    bool ro_rescale = false;
    rollout->add_option("--checkpoint", ro_checkpoint, "input checkpoint")->required();
    rollout->add_option("--condition", ro_condition, "condition trajectory file")->required();
    rollout->add_option("--config", ro_config, "config file");
    rollout->add_option("--seed", ro_seed, "sampling seed");
    rollout->add_flag("--rescale-condition", ro_rescale,
                      "pass the condition through the rescale pipeline first");
    rollout->add_option("--out", ro_out, "output directory for decoded rollouts")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (eval->parsed()) {
            return run_eval(eval_target, eval_estimated, eval_weights, eval_csv);
        }
        if (rescale->parsed()) {
            return run_rescale(rescale_input, rescale_spec, rescale_seed, rescale_output);
        }
        if (gen_bank->parsed()) {
            return run_gen_bank(gb_count, gb_frames, gb_seed, gb_out);
        }
        if (pretrain->parsed()) {
            return run_pretrain(pt_bank, pt_config, pt_seed, pt_epochs, pt_out);
        }
        if (train->parsed()) {
            return run_train(tr_checkpoint, tr_bank, tr_config, tr_iterations, tr_seed,
                             tr_reward_set, tr_metrics, tr_out);
        }
        if (rollout->parsed()) {
            return run_rollout(ro_checkpoint, ro_condition, ro_config, ro_seed, ro_rescale,
                               ro_out);
        }
    } catch (const CliError& e) {
        std::fprintf(stderr, "error: %s\n", e.message.c_str());
        return kExitRuntime;
    }
    return 0;
}
