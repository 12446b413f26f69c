#pragma once

#include <cstdint>
#include <vector>

#include "trajrl/se3.hpp"
#include "trajrl/traj_io.hpp"

namespace trajrl {

// Maximum frame-to-frame speeds of a trajectory.
struct SpeedProfile {
    double v_trans_max = 0.0; // meters/frame
    double v_rot_max = 0.0;   // radians/frame
};

// v_trans_max = max_i ||t_{i+1} - t_i||, v_rot_max = max_i ||log(R_iᵀR_{i+1})||.
SpeedProfile max_speeds(const Trajectory& t);

// One draw from N(mu, sigma^2) conditioned on [a, b], by inverse CDF:
// x = mu + sigma * Phi^-1(Phi(alpha) + u (Phi(beta) - Phi(alpha))).
// Deterministic given the seed; exactly one uniform is consumed.
double sample_truncated_gaussian(double mu, double sigma, double a, double b,
                                 std::uint64_t seed);

// In-stream variant used when several draws share one generator.
class Rng;
double sample_truncated_gaussian(double mu, double sigma, double a, double b, Rng& rng);

struct RescaleFactors {
    double s_trans = 1.0;
    double s_rot = 1.0;
};

// s = tau / (v_max + eps) for each component.
RescaleFactors rescale_factors(const SpeedProfile& p, double tau_trans, double tau_rot,
                               double eps);

// Gauge-normalizes the input, then scales translations by s_trans and
// rotations by s_rot through the Lie-algebra log/exp. Raises ambiguous_log
// if any gauge-normalized rotation sits within 1e-6 of angle pi.
Trajectory rescale_trajectory(const Trajectory& t, double s_trans, double s_rot);

// Outcome of one pass through the sampling pipeline, for reporting.
struct RescaleDraw {
    std::size_t bank_index = 0;
    double tau_trans = 0.0;
    double tau_rot = 0.0;
    RescaleFactors factors;
    Trajectory trajectory;
};

// Uniformly picks a bank trajectory, draws target speeds from the spec's
// truncated Gaussians, and rescales. Deterministic given the seed.
RescaleDraw sample_target_trajectory(const std::vector<Trajectory>& bank,
                                     const RescaleSpec& spec, std::uint64_t seed);

// Applies the sampled speeds to a fixed trajectory (no bank selection).
RescaleDraw rescale_with_spec(const Trajectory& t, const RescaleSpec& spec,
                              std::uint64_t seed);

} // namespace trajrl
