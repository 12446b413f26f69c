#pragma once

#include <cstdint>
#include <vector>

#include "trajrl/flow_policy.hpp"
#include "trajrl/se3.hpp"

namespace trajrl {

struct SynthParams {
    int control_points = 6;      // interior spline control points
    double ctrl_step_trans = 0.25; // meters, random-walk step std
    double ctrl_step_rot = 0.12;   // radians per so(3) component
    double speed_trans_min = 0.03; // target max translation speed, m/frame
    double speed_trans_max = 0.12;
    double speed_rot_min = 0.005;  // target max rotation-path speed, rad/frame
    double speed_rot_max = 0.03;
};

// A smooth random camera path: cubic (Catmull-Rom) interpolation through a
// random-walk of control points, in translation and so(3) coordinates,
// rescaled to a sampled peak speed and gauge-normalized. Deterministic
// given the seed.
Trajectory random_smooth_trajectory(int n_frames, std::uint64_t seed,
                                    const SynthParams& params = {});

// Bank of `count` such trajectories with per-entry seeds derived from seed.
std::vector<Trajectory> generate_bank(int count, int n_frames, std::uint64_t seed,
                                      const SynthParams& params = {});

// Returns a copy with every translation multiplied by u.
Trajectory scale_translations(const Trajectory& t, double u);

// The scale-corrupted pretraining corpus: each condition is a bank
// trajectory, and its regression target is the same trajectory with
// translations multiplied by u ~ Uniform[scale_min, scale_max]. The
// pretrained policy therefore reproduces shape but drifts in metric scale,
// which the RL stage must repair.
std::vector<CorpusSample> build_drift_corpus(const std::vector<Trajectory>& bank,
                                             double scale_min, double scale_max,
                                             std::uint64_t seed);

} // namespace trajrl
