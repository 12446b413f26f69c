#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "trajrl/error.hpp"

namespace trajrl {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// A proper rotation matrix. Construction goes through identity(),
// from_matrix() (validated) or the SO(3) maps below, so a Rotation in hand
// is always orthonormal with det +1.
class Rotation {
public:
    Rotation() : m_(Mat3::Identity()) {}

    static Rotation identity() { return Rotation(); }

    // Validates orthonormality and det +1 within tol; throws
    // ErrorCode::invalid_argument otherwise.
    static Rotation from_matrix(const Mat3& m, double tol = 1e-6);

    // Caller guarantees m is a rotation; used by exp_so3 and composition.
    static Rotation from_matrix_unchecked(const Mat3& m) { return Rotation(m); }

    const Mat3& matrix() const { return m_; }

    Rotation transpose() const { return Rotation(m_.transpose()); }

    Rotation operator*(const Rotation& other) const {
        return Rotation(m_ * other.m_);
    }

    Vec3 operator*(const Vec3& v) const { return m_ * v; }

    // Max-abs deviation of mᵀm from the identity.
    double orthonormality_defect() const;

private:
    explicit Rotation(const Mat3& m) : m_(m) {}

    Mat3 m_;
};

struct Pose {
    Rotation rotation;
    Vec3 translation = Vec3::Zero();

    static Pose identity() { return Pose{}; }
};

struct Intrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
};

// Time-ordered camera poses. Intrinsics are carried through I/O untouched;
// no computation in this library reads them.
struct Trajectory {
    std::vector<Pose> poses;
    std::optional<std::vector<Intrinsics>> intrinsics;
    double frame_rate = 30.0;

    std::size_t size() const { return poses.size(); }

    // Throws ErrorCode::validation if fewer than 2 poses, non-finite
    // translations, invalid rotations, or an intrinsics length mismatch.
    void validate() const;
};

// Rodrigues exponential of an axis-angle vector. Second-order Taylor
// expansion of the sin/cos coefficients below angle 1e-8.
Rotation exp_so3(const Vec3& omega);

// Principal axis-angle log with result norm in [0, pi]. Trace-based Taylor
// fallback near zero; dominant-diagonal axis extraction at angle pi.
Vec3 log_so3(const Rotation& r);

// arccos((Tr(aᵀb) - 1) / 2) with the argument clamped to [-1, 1].
double geodesic_angle(const Rotation& a, const Rotation& b);

// Transform taking frame a to frame b, translation expressed in a's frame,
// so that composing a with the result reproduces b.
Pose relative_pose(const Pose& a, const Pose& b);

// Left-multiplies every pose by the inverse of the first, so pose 1 becomes
// the identity. All frame-to-frame relative poses are preserved.
Trajectory normalize_gauge(const Trajectory& t);

} // namespace trajrl
