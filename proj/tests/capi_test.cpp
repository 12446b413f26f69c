// Exercises the shared-library surface the way an external consumer would:
// only trajrl/trajrl.h, no C++ core headers.
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "trajrl/trajrl.h"

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("trajrl_capi_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string two_pose_file() {
    return "0 0 0 0 0 0 0 1\n1 1 0 0 0 0 0 1\n";
}

} // namespace

TEST_CASE("version and error reporting") {
    CHECK(std::strlen(trajrl_version()) > 0);

    trajrl_trajectory* t = nullptr;
    CHECK(trajrl_trajectory_load("/no/such/file", &t) == TRAJRL_ERR_IO);
    CHECK(std::strlen(trajrl_last_error()) > 0);
    CHECK(trajrl_trajectory_parse("garbage\n", &t) == TRAJRL_ERR_PARSE);
    CHECK(trajrl_trajectory_parse(nullptr, &t) == TRAJRL_ERR_INVALID_ARGUMENT);
}

TEST_CASE("trajectory round trip through the C surface") {
    trajrl_trajectory* t = nullptr;
    REQUIRE(trajrl_trajectory_parse(two_pose_file().c_str(), &t) == TRAJRL_OK);
    CHECK(trajrl_trajectory_frames(t) == 2);
    CHECK(trajrl_trajectory_frame_rate(t) == doctest::Approx(1.0));

    double rotation[9], translation[3];
    REQUIRE(trajrl_trajectory_pose(t, 1, rotation, translation) == TRAJRL_OK);
    CHECK(translation[0] == 1.0);
    CHECK(rotation[0] == 1.0);
    CHECK(rotation[1] == 0.0);
    CHECK(trajrl_trajectory_pose(t, 5, rotation, translation) ==
          TRAJRL_ERR_INVALID_ARGUMENT);

    char* text = nullptr;
    REQUIRE(trajrl_trajectory_serialize(t, &text) == TRAJRL_OK);
    trajrl_trajectory* back = nullptr;
    REQUIRE(trajrl_trajectory_parse(text, &back) == TRAJRL_OK);
    CHECK(trajrl_trajectory_frames(back) == 2);
    trajrl_string_free(text);
    trajrl_trajectory_free(back);

    // create from raw arrays
    const double rotations[18] = {1, 0, 0, 0, 1, 0, 0, 0, 1,
                                  1, 0, 0, 0, 1, 0, 0, 0, 1};
    const double translations[6] = {0, 0, 0, 0.5, 0, 0};
    trajrl_trajectory* made = nullptr;
    REQUIRE(trajrl_trajectory_create(rotations, translations, 2, 30.0, &made) == TRAJRL_OK);
    double v_trans = 0.0, v_rot = 0.0;
    CHECK(trajrl_max_speeds(made, &v_trans, &v_rot) == TRAJRL_OK);
    CHECK(v_trans == doctest::Approx(0.5));
    trajrl_trajectory_free(made);
    trajrl_trajectory_free(t);
}

TEST_CASE("config keys and validation through the C surface") {
    trajrl_config* cfg = nullptr;
    REQUIRE(trajrl_config_create(&cfg) == TRAJRL_OK);
    CHECK(trajrl_config_set(cfg, "group_size", "4") == TRAJRL_OK);
    CHECK(trajrl_config_set(cfg, "group_size", "0") == TRAJRL_ERR_CONFIG);
    CHECK(trajrl_config_set(cfg, "bogus", "1") == TRAJRL_ERR_CONFIG);
    CHECK(std::string(trajrl_last_error()).find("bogus") != std::string::npos);

    char* text = nullptr;
    REQUIRE(trajrl_config_text(cfg, &text) == TRAJRL_OK);
    CHECK(std::string(text).find("group_size = 4") != std::string::npos);
    trajrl_string_free(text);
    trajrl_config_free(cfg);
}

TEST_CASE("geometry errors through the C surface") {
    trajrl_trajectory* target = nullptr;
    trajrl_trajectory* estimated = nullptr;
    REQUIRE(trajrl_trajectory_parse(two_pose_file().c_str(), &target) == TRAJRL_OK);
    REQUIRE(trajrl_trajectory_parse("0 0 0 0 0 0 0 1\n1 0 0 0 0 0 0 1\n", &estimated) ==
            TRAJRL_OK);

    double d_trans = -1.0, d_rot = -1.0;
    REQUIRE(trajrl_geometry_errors(target, estimated, "linear", &d_trans, &d_rot) ==
            TRAJRL_OK);
    CHECK(std::fabs(d_trans - 2.0 / 3.0) < 1e-12);
    CHECK(d_rot == 0.0);

    CHECK(trajrl_geometry_errors(target, estimated, "no-such-schedule", &d_trans,
                                 &d_rot) == TRAJRL_ERR_CONFIG);

    double trans_err[2], rot_err[2];
    REQUIRE(trajrl_frame_errors(target, estimated, trans_err, rot_err) == TRAJRL_OK);
    CHECK(trans_err[0] == 0.0);
    CHECK(trans_err[1] == doctest::Approx(1.0));

    trajrl_trajectory* noisy = nullptr;
    REQUIRE(trajrl_noisy_estimate(target, 0.01, 0.001, 7, &noisy) == TRAJRL_OK);
    CHECK(trajrl_trajectory_frames(noisy) == 2);
    trajrl_trajectory_free(noisy);
    trajrl_trajectory_free(target);
    trajrl_trajectory_free(estimated);
}

TEST_CASE("rescale through the C surface") {
    trajrl_trajectory* t = nullptr;
    REQUIRE(trajrl_synth_trajectory(12, 42, 0, &t) == TRAJRL_OK);

    trajrl_config* cfg = nullptr;
    REQUIRE(trajrl_config_create(&cfg) == TRAJRL_OK);

    trajrl_trajectory* out_a = nullptr;
    trajrl_trajectory* out_b = nullptr;
    double stats_a[4], stats_b[4];
    REQUIRE(trajrl_rescale_sample(t, cfg, 9, &out_a, stats_a) == TRAJRL_OK);
    REQUIRE(trajrl_rescale_sample(t, cfg, 9, &out_b, stats_b) == TRAJRL_OK);
    for (int i = 0; i < 4; ++i) CHECK(stats_a[i] == stats_b[i]);

    double v_trans = 0.0, v_rot = 0.0;
    REQUIRE(trajrl_max_speeds(out_a, &v_trans, &v_rot) == TRAJRL_OK);
    CHECK(v_trans == doctest::Approx(stats_a[0]).epsilon(1e-6)); // tau_trans

    trajrl_trajectory_free(out_a);
    trajrl_trajectory_free(out_b);
    trajrl_trajectory_free(t);
    trajrl_config_free(cfg);
}

namespace {

struct Collected {
    std::vector<std::string> lines;
    int checkpoints = 0;
};

void collect_line(const char* line, void* user) {
    static_cast<Collected*>(user)->lines.push_back(line);
}

void collect_checkpoint(int, const char*, void* user) {
    static_cast<Collected*>(user)->checkpoints += 1;
}

} // namespace

TEST_CASE("pretrain, train, rollout through the C surface") {
    TempDir tmp;

    trajrl_config* cfg = nullptr;
    REQUIRE(trajrl_config_create(&cfg) == TRAJRL_OK);
    REQUIRE(trajrl_config_set(cfg, "n_frames", "6") == TRAJRL_OK);
    REQUIRE(trajrl_config_set(cfg, "flow_steps", "6") == TRAJRL_OK);
    REQUIRE(trajrl_config_set(cfg, "window_size", "2") == TRAJRL_OK);
    REQUIRE(trajrl_config_set(cfg, "group_size", "3") == TRAJRL_OK);
    REQUIRE(trajrl_config_set(cfg, "hidden_width", "16") == TRAJRL_OK);
    REQUIRE(trajrl_config_set(cfg, "cond_embed_dim", "8") == TRAJRL_OK);
    REQUIRE(trajrl_config_set(cfg, "pretrain_epochs", "3") == TRAJRL_OK);
    REQUIRE(trajrl_config_set(cfg, "iterations", "4") == TRAJRL_OK);
    REQUIRE(trajrl_config_set(cfg, "checkpoint_period", "2") == TRAJRL_OK);

    std::vector<trajrl_trajectory*> bank(5, nullptr);
    for (size_t i = 0; i < bank.size(); ++i) {
        REQUIRE(trajrl_synth_trajectory(6, 77, i, &bank[i]) == TRAJRL_OK);
    }

    trajrl_policy* policy = nullptr;
    REQUIRE(trajrl_pretrain(cfg, bank.data(), bank.size(), &policy) == TRAJRL_OK);

    const std::string ck_path = tmp.file("policy.ckpt");
    REQUIRE(trajrl_policy_save(policy, ck_path.c_str()) == TRAJRL_OK);
    trajrl_policy* loaded = nullptr;
    REQUIRE(trajrl_policy_load(ck_path.c_str(), &loaded) == TRAJRL_OK);

    // save(load(x)) is byte-identical
    const std::string ck_path2 = tmp.file("policy2.ckpt");
    REQUIRE(trajrl_policy_save(loaded, ck_path2.c_str()) == TRAJRL_OK);
    std::ifstream f1(ck_path, std::ios::binary), f2(ck_path2, std::ios::binary);
    const std::string bytes1((std::istreambuf_iterator<char>(f1)), {});
    const std::string bytes2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(bytes1 == bytes2);

    Collected metrics;
    REQUIRE(trajrl_train(loaded, cfg, bank.data(), bank.size(), collect_line, &metrics,
                         collect_checkpoint, &metrics) == TRAJRL_OK);
    CHECK(metrics.lines.size() == 4);
    CHECK(metrics.checkpoints == 2);

    trajrl_trajectory** rollouts = nullptr;
    size_t count = 0;
    trajrl_trajectory* used = nullptr;
    REQUIRE(trajrl_rollout_group(loaded, cfg, bank[0], 1, 5, &rollouts, &count, &used) ==
            TRAJRL_OK);
    CHECK(count == 3);
    for (size_t j = 0; j < count; ++j) CHECK(trajrl_trajectory_frames(rollouts[j]) == 6);
    double d_trans = 0.0, d_rot = 0.0;
    CHECK(trajrl_geometry_errors(used, rollouts[0], "linear", &d_trans, &d_rot) ==
          TRAJRL_OK);
    trajrl_trajectory_array_free(rollouts, count);
    trajrl_trajectory_free(used);

    // corrupt checkpoint -> checkpoint error
    {
        std::ofstream bad(tmp.file("bad.ckpt"), std::ios::binary);
        bad << "trajrl-checkpoint v999\nnope\n";
    }
    trajrl_policy* broken = nullptr;
    CHECK(trajrl_policy_load(tmp.file("bad.ckpt").c_str(), &broken) ==
          TRAJRL_ERR_CHECKPOINT);

    trajrl_policy_free(policy);
    trajrl_policy_free(loaded);
    for (auto* t : bank) trajrl_trajectory_free(t);
    trajrl_config_free(cfg);
}
