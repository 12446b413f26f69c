#include "trajrl/synth.hpp"

#include <cmath>

#include "trajrl/rescale.hpp"
#include "trajrl/rng.hpp"

namespace trajrl {

namespace {

// Catmull-Rom evaluation on a padded control polygon. `u` in [0, 1] spans
// the interior points.
Vec3 catmull_rom(const std::vector<Vec3>& ctrl, double u) {
    const std::size_t segments = ctrl.size() - 3;
    double s = u * static_cast<double>(segments);
    std::size_t seg = std::min(segments - 1, static_cast<std::size_t>(s));
    s -= static_cast<double>(seg);

    const Vec3& p0 = ctrl[seg];
    const Vec3& p1 = ctrl[seg + 1];
    const Vec3& p2 = ctrl[seg + 2];
    const Vec3& p3 = ctrl[seg + 3];
    const double s2 = s * s;
    const double s3 = s2 * s;
    return 0.5 * ((2.0 * p1) + (p2 - p0) * s +
                  (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * s2 +
                  (3.0 * p1 - 3.0 * p2 + p0 - p3) * s3);
}

std::vector<Vec3> random_walk_ctrl(int interior, double step, Rng& rng) {
    std::vector<Vec3> ctrl;
    ctrl.reserve(interior + 2);
    Vec3 p = Vec3::Zero();
    ctrl.push_back(p); // padded start
    for (int i = 0; i < interior; ++i) {
        if (i > 0) {
            p += Vec3(step * rng.normal(), step * rng.normal(), step * rng.normal());
        }
        ctrl.push_back(p);
    }
    ctrl.push_back(ctrl.back()); // padded end
    return ctrl;
}

double max_step(const std::vector<Vec3>& path) {
    double m = 0.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        m = std::max(m, (path[i + 1] - path[i]).norm());
    }
    return m;
}

void rescale_path(std::vector<Vec3>& path, double target_speed) {
    const double v = max_step(path);
    if (v <= 0.0) return;
    const double s = target_speed / v;
    for (Vec3& p : path) p *= s;
}

} // namespace

Trajectory random_smooth_trajectory(int n_frames, std::uint64_t seed,
                                    const SynthParams& params) {
    if (n_frames < 2) raise(ErrorCode::invalid_argument, "need at least 2 frames");
    if (params.control_points < 2) {
        raise(ErrorCode::invalid_argument, "need at least 2 control points");
    }

    Rng rng(seed);
    const auto trans_ctrl = random_walk_ctrl(params.control_points, params.ctrl_step_trans, rng);
    const auto rot_ctrl = random_walk_ctrl(params.control_points, params.ctrl_step_rot, rng);
    const double speed_t = rng.uniform(params.speed_trans_min, params.speed_trans_max);
    const double speed_r = rng.uniform(params.speed_rot_min, params.speed_rot_max);

    std::vector<Vec3> trans(n_frames), omega(n_frames);
    for (int i = 0; i < n_frames; ++i) {
        const double u = static_cast<double>(i) / (n_frames - 1);
        trans[i] = catmull_rom(trans_ctrl, u);
        omega[i] = catmull_rom(rot_ctrl, u);
    }
    rescale_path(trans, speed_t);
    rescale_path(omega, speed_r);

    Trajectory t;
    t.poses.resize(n_frames);
    for (int i = 0; i < n_frames; ++i) {
        t.poses[i].translation = trans[i];
        t.poses[i].rotation = exp_so3(omega[i]);
    }
    return normalize_gauge(t);
}

std::vector<Trajectory> generate_bank(int count, int n_frames, std::uint64_t seed,
                                      const SynthParams& params) {
    if (count < 1) raise(ErrorCode::invalid_argument, "bank count must be >= 1");
    std::vector<Trajectory> bank;
    bank.reserve(count);
    for (int i = 0; i < count; ++i) {
        bank.push_back(random_smooth_trajectory(n_frames, mix_seed(seed, i), params));
    }
    return bank;
}

Trajectory scale_translations(const Trajectory& t, double u) {
    Trajectory out = t;
    for (Pose& p : out.poses) p.translation *= u;
    return out;
}

std::vector<CorpusSample> build_drift_corpus(const std::vector<Trajectory>& bank,
                                             double scale_min, double scale_max,
                                             std::uint64_t seed) {
    if (bank.empty()) raise(ErrorCode::invalid_argument, "bank is empty");
    if (!(scale_min > 0) || !(scale_min <= scale_max)) {
        raise(ErrorCode::invalid_argument, "need 0 < scale_min <= scale_max");
    }
    Rng rng(seed);
    std::vector<CorpusSample> corpus;
    corpus.reserve(bank.size());
    for (const Trajectory& t : bank) {
        const double u = rng.uniform(scale_min, scale_max);
        CorpusSample s;
        s.condition = encode_trajectory(t);
        s.data = encode_trajectory(scale_translations(t, u));
        corpus.push_back(std::move(s));
    }
    return corpus;
}

} // namespace trajrl
