#include "trajrl/geometry_reward.hpp"

#include <cmath>
#include <sstream>

#include "trajrl/rng.hpp"

namespace trajrl {

TemporalWeights linear_weights(std::size_t n) {
    return make_weights(n, WeightSchedule::linear);
}

TemporalWeights make_weights(std::size_t n, WeightSchedule schedule) {
    if (n < 2) raise(ErrorCode::invalid_argument, "temporal weights need n >= 2");
    TemporalWeights tw;
    tw.w.resize(n);
    switch (schedule) {
        case WeightSchedule::linear: {
            const double denom = static_cast<double>(n) * (n + 1);
            for (std::size_t i = 0; i < n; ++i) tw.w[i] = 2.0 * (i + 1) / denom;
            break;
        }
        case WeightSchedule::quadratic: {
            // i^2 / sum(i^2), sum = n(n+1)(2n+1)/6
            const double denom = static_cast<double>(n) * (n + 1) * (2.0 * n + 1) / 6.0;
            for (std::size_t i = 0; i < n; ++i) {
                tw.w[i] = static_cast<double>((i + 1) * (i + 1)) / denom;
            }
            break;
        }
        case WeightSchedule::uniform:
            for (std::size_t i = 0; i < n; ++i) tw.w[i] = 1.0 / static_cast<double>(n);
            break;
    }
    return tw;
}

GeometryErrors geometry_errors(const Trajectory& target, const Trajectory& estimated,
                               const TemporalWeights& w) {
    target.validate();
    estimated.validate();
    if (target.size() != estimated.size() || target.size() != w.size()) {
        std::ostringstream os;
        os << "length mismatch: target " << target.size() << ", estimated "
           << estimated.size() << ", weights " << w.size();
        raise(ErrorCode::invalid_argument, os.str());
    }

    const Trajectory a = normalize_gauge(target);
    const Trajectory b = normalize_gauge(estimated);

    GeometryErrors e;
    for (std::size_t i = 0; i < a.size(); ++i) {
        e.d_trans += w.w[i] * (a.poses[i].translation - b.poses[i].translation).norm();
        e.d_rot += w.w[i] * geodesic_angle(a.poses[i].rotation, b.poses[i].rotation);
    }
    return e;
}

FrameErrors frame_errors(const Trajectory& target, const Trajectory& estimated) {
    target.validate();
    estimated.validate();
    if (target.size() != estimated.size()) {
        raise(ErrorCode::invalid_argument, "length mismatch between target and estimate");
    }
    const Trajectory a = normalize_gauge(target);
    const Trajectory b = normalize_gauge(estimated);
    FrameErrors fe;
    fe.trans.reserve(a.size());
    fe.rot.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        fe.trans.push_back((a.poses[i].translation - b.poses[i].translation).norm());
        fe.rot.push_back(geodesic_angle(a.poses[i].rotation, b.poses[i].rotation));
    }
    return fe;
}

GeometryReward geometry_reward_channels(const GeometryErrors& e) {
    if (!(e.d_trans >= 0) || !(e.d_rot >= 0) ||
        !std::isfinite(e.d_trans) || !std::isfinite(e.d_rot)) {
        raise(ErrorCode::invalid_argument, "geometry errors must be finite and >= 0");
    }
    return GeometryReward{-e.d_trans, -e.d_rot};
}

Trajectory noisy_estimator(const Trajectory& generated, const EstimatorNoise& noise) {
    generated.validate();
    if (noise.sigma_trans < 0 || noise.sigma_rot < 0) {
        raise(ErrorCode::invalid_argument, "estimator noise sigmas must be >= 0");
    }

    Trajectory out = generated;
    Rng rng(noise.seed);
    for (std::size_t i = 1; i < out.poses.size(); ++i) {
        const Vec3 dt(noise.sigma_trans * rng.normal(),
                      noise.sigma_trans * rng.normal(),
                      noise.sigma_trans * rng.normal());
        const Vec3 dr(noise.sigma_rot * rng.normal(),
                      noise.sigma_rot * rng.normal(),
                      noise.sigma_rot * rng.normal());
        out.poses[i].translation += dt;
        out.poses[i].rotation = exp_so3(dr) * out.poses[i].rotation;
    }
    return out;
}

} // namespace trajrl
