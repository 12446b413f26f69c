#include "trajrl/se3.hpp"

#include <Eigen/LU>
#include <cmath>
#include <sstream>

namespace trajrl {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSmallAngle = 1e-8;

Mat3 skew(const Vec3& v) {
    Mat3 s;
    s <<    0, -v.z(),  v.y(),
         v.z(),     0, -v.x(),
        -v.y(),  v.x(),     0;
    return s;
}

// vee of the antisymmetric part: returns vee(m - m^T), i.e. 2 sin(theta) * axis
// when m is a rotation.
Vec3 vee_antisym(const Mat3& m) {
    return Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
}

} // namespace

double Rotation::orthonormality_defect() const {
    return (m_.transpose() * m_ - Mat3::Identity()).cwiseAbs().maxCoeff();
}

Rotation Rotation::from_matrix(const Mat3& m, double tol) {
    if (!m.allFinite()) {
        raise(ErrorCode::invalid_argument, "rotation matrix has non-finite entries");
    }
    const double defect = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (defect > tol) {
        std::ostringstream os;
        os << "matrix is not orthonormal (defect " << defect << " > " << tol << ")";
        raise(ErrorCode::invalid_argument, os.str());
    }
    if (std::fabs(m.determinant() - 1.0) > tol) {
        raise(ErrorCode::invalid_argument, "matrix determinant is not +1");
    }
    return Rotation(m);
}

void Trajectory::validate() const {
    if (poses.size() < 2) {
        raise(ErrorCode::validation, "trajectory must contain at least 2 poses");
    }
    if (!(frame_rate > 0.0) || !std::isfinite(frame_rate)) {
        raise(ErrorCode::validation, "frame_rate must be positive and finite");
    }
    for (std::size_t i = 0; i < poses.size(); ++i) {
        if (!poses[i].translation.allFinite()) {
            std::ostringstream os;
            os << "pose " << i + 1 << ": non-finite translation";
            raise(ErrorCode::validation, os.str());
        }
        if (poses[i].rotation.orthonormality_defect() > 1e-6) {
            std::ostringstream os;
            os << "pose " << i + 1 << ": rotation not orthonormal";
            raise(ErrorCode::validation, os.str());
        }
    }
    if (intrinsics) {
        if (intrinsics->size() != poses.size()) {
            raise(ErrorCode::validation, "intrinsics length does not match pose count");
        }
        for (const auto& k : *intrinsics) {
            if (!(k.fx > 0.0) || !(k.fy > 0.0)) {
                raise(ErrorCode::validation, "intrinsics focal lengths must be positive");
            }
        }
    }
}

Rotation exp_so3(const Vec3& omega) {
    if (!omega.allFinite()) {
        raise(ErrorCode::invalid_argument, "exp_so3: non-finite axis-angle vector");
    }
    const double theta2 = omega.squaredNorm();
    const double theta = std::sqrt(theta2);

    double a, b; // sin(t)/t and (1-cos(t))/t^2
    if (theta < kSmallAngle) {
        a = 1.0 - theta2 / 6.0;
        b = 0.5 - theta2 / 24.0;
    } else {
        a = std::sin(theta) / theta;
        b = (1.0 - std::cos(theta)) / theta2;
    }

    const Mat3 k = skew(omega);
    const Mat3 m = Mat3::Identity() + a * k + b * (k * k);
    return Rotation::from_matrix_unchecked(m);
}

Vec3 log_so3(const Rotation& r) {
    if (r.orthonormality_defect() > 1e-6) {
        raise(ErrorCode::invalid_argument, "log_so3: matrix is not a valid rotation");
    }
    const Mat3& m = r.matrix();
    const double cos_theta = std::min(1.0, std::max(-1.0, (m.trace() - 1.0) / 2.0));
    const double theta = std::acos(cos_theta);

    if (theta < kSmallAngle) {
        // vee(R - Rᵀ)/2 equals omega*sinc(theta); invert the sinc to second order.
        return 0.5 * (1.0 + theta * theta / 6.0) * vee_antisym(m);
    }

    if (theta > kPi - 1e-6) {
        // Near pi, R ≈ I + 2[u]x², so (R + I)/2 ≈ u uᵀ. Take the axis from the
        // dominant diagonal, signs from that row, overall sign from vee(R - Rᵀ)
        // when it still carries information.
        const Mat3 b = (m + Mat3::Identity()) / 2.0;
        int i = 0;
        if (b(1, 1) > b(i, i)) i = 1;
        if (b(2, 2) > b(i, i)) i = 2;
        Vec3 axis;
        axis[i] = std::sqrt(std::max(0.0, b(i, i)));
        for (int j = 0; j < 3; ++j) {
            if (j != i) axis[j] = b(i, j) / axis[i];
        }
        axis.normalize();

        const Vec3 v = vee_antisym(m);
        double sign = axis.dot(v);
        if (std::fabs(sign) < 1e-12) {
            // Exactly pi: both signs are principal. Pick the one making the
            // largest-magnitude component positive.
            int k = 0;
            if (std::fabs(axis[1]) > std::fabs(axis[k])) k = 1;
            if (std::fabs(axis[2]) > std::fabs(axis[k])) k = 2;
            sign = axis[k];
        }
        if (sign < 0.0) axis = -axis;
        return theta * axis;
    }

    return theta / (2.0 * std::sin(theta)) * vee_antisym(m);
}

double geodesic_angle(const Rotation& a, const Rotation& b) {
    // atan2 evaluation of arccos((Tr - 1)/2): identical arguments give an
    // exact zero and the conditioning near 0 is eps instead of sqrt(eps).
    const Mat3 m = a.matrix().transpose() * b.matrix();
    const double cos_theta = std::min(1.0, std::max(-1.0, (m.trace() - 1.0) / 2.0));
    const double sin_theta = 0.5 * vee_antisym(m).norm();
    return std::atan2(sin_theta, cos_theta);
}

Pose relative_pose(const Pose& a, const Pose& b) {
    Pose rel;
    rel.rotation = a.rotation.transpose() * b.rotation;
    rel.translation = a.rotation.transpose() * (b.translation - a.translation);
    return rel;
}

Trajectory normalize_gauge(const Trajectory& t) {
    Trajectory out;
    out.intrinsics = t.intrinsics;
    out.frame_rate = t.frame_rate;
    out.poses.reserve(t.poses.size());
    if (t.poses.empty()) return out;

    const Pose& first = t.poses.front();
    for (const Pose& p : t.poses) {
        out.poses.push_back(relative_pose(first, p));
    }
    return out;
}

} // namespace trajrl
