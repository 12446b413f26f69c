#include "trajrl/rescale.hpp"

#include <cmath>
#include <sstream>

#include "trajrl/rng.hpp"

namespace trajrl {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

SpeedProfile max_speeds(const Trajectory& t) {
    t.validate();
    SpeedProfile p;
    for (std::size_t i = 0; i + 1 < t.poses.size(); ++i) {
        const double v_trans =
            (t.poses[i + 1].translation - t.poses[i].translation).norm();
        const Vec3 rel = log_so3(t.poses[i].rotation.transpose() * t.poses[i + 1].rotation);
        p.v_trans_max = std::max(p.v_trans_max, v_trans);
        p.v_rot_max = std::max(p.v_rot_max, rel.norm());
    }
    return p;
}

double sample_truncated_gaussian(double mu, double sigma, double a, double b, Rng& rng) {
    if (!(a < b)) raise(ErrorCode::invalid_argument, "truncated gaussian requires a < b");
    if (!(sigma > 0)) raise(ErrorCode::invalid_argument, "truncated gaussian requires sigma > 0");

    const double pa = norm_cdf((a - mu) / sigma);
    const double pb = norm_cdf((b - mu) / sigma);
    if (pb - pa < 1e-300) {
        std::ostringstream os;
        os << "truncated gaussian support [" << a << ", " << b
           << "] carries no probability mass for mu=" << mu << " sigma=" << sigma;
        raise(ErrorCode::degenerate_support, os.str());
    }

    const double u = rng.uniform_open();
    const double x = mu + sigma * norm_quantile(pa + u * (pb - pa));
    // Inverse-CDF rounding can land epsilon outside the interval.
    return std::min(b, std::max(a, x));
}

double sample_truncated_gaussian(double mu, double sigma, double a, double b,
                                 std::uint64_t seed) {
    Rng rng(seed);
    return sample_truncated_gaussian(mu, sigma, a, b, rng);
}

RescaleFactors rescale_factors(const SpeedProfile& p, double tau_trans, double tau_rot,
                               double eps) {
    if (!(tau_trans > 0) || !(tau_rot > 0)) {
        raise(ErrorCode::invalid_argument, "target speeds must be > 0");
    }
    if (!(eps > 0)) raise(ErrorCode::invalid_argument, "eps must be > 0");
    return RescaleFactors{tau_trans / (p.v_trans_max + eps),
                          tau_rot / (p.v_rot_max + eps)};
}

Trajectory rescale_trajectory(const Trajectory& t, double s_trans, double s_rot) {
    Trajectory out = normalize_gauge(t);
    out.validate();
    for (std::size_t i = 0; i < out.poses.size(); ++i) {
        const double angle = geodesic_angle(Rotation::identity(), out.poses[i].rotation);
        if (angle >= kPi - 1e-6) {
            std::ostringstream os;
            os << "pose " << i + 1 << ": gauge-normalized rotation angle " << angle
               << " is within 1e-6 of pi; log branch is ill-defined";
            raise(ErrorCode::ambiguous_log, os.str());
        }
        out.poses[i].translation *= s_trans;
        out.poses[i].rotation = exp_so3(s_rot * log_so3(out.poses[i].rotation));
    }
    return out;
}

RescaleDraw rescale_with_spec(const Trajectory& t, const RescaleSpec& spec,
                              std::uint64_t seed) {
    spec.validate();
    RescaleDraw draw;
    draw.tau_trans = sample_truncated_gaussian(spec.mu_trans, spec.sigma_trans,
                                               spec.min_trans, spec.max_trans,
                                               mix_seed(seed, 1));
    draw.tau_rot = sample_truncated_gaussian(spec.mu_rot, spec.sigma_rot,
                                             spec.min_rot, spec.max_rot,
                                             mix_seed(seed, 2));
    draw.factors = rescale_factors(max_speeds(t), draw.tau_trans, draw.tau_rot, spec.eps);
    draw.trajectory = rescale_trajectory(t, draw.factors.s_trans, draw.factors.s_rot);
    return draw;
}

RescaleDraw sample_target_trajectory(const std::vector<Trajectory>& bank,
                                     const RescaleSpec& spec, std::uint64_t seed) {
    if (bank.empty()) raise(ErrorCode::invalid_argument, "trajectory bank is empty");
    Rng rng(mix_seed(seed, 0));
    const std::size_t index = static_cast<std::size_t>(rng.below(bank.size()));
    RescaleDraw draw = rescale_with_spec(bank[index], spec, seed);
    draw.bank_index = index;
    return draw;
}

} // namespace trajrl
