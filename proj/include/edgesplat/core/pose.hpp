// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>

namespace edgesplat {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Tangent6 = Eigen::Matrix<double, 6, 1>; // (translation v, rotation w)

namespace so3 {

inline Mat3 hat(const Vec3 &v) {
    Mat3 m;
    m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
    return m;
}

inline Eigen::Quaterniond exp_quaternion(const Vec3 &omega) {
    const double theta = omega.norm();
    if (theta < 1e-12) {
        Eigen::Quaterniond q(1.0, 0.5 * omega.x(), 0.5 * omega.y(), 0.5 * omega.z());
        return q.normalized();
    }
    const double half = 0.5 * theta;
    const Vec3 axis = omega / theta;
    return Eigen::Quaterniond(std::cos(half), std::sin(half) * axis.x(), std::sin(half) * axis.y(),
                              std::sin(half) * axis.z());
}

inline Mat3 exp(const Vec3 &omega) { return exp_quaternion(omega).toRotationMatrix(); }

/// Rotation vector of a unit quaternion, angle in [0, pi].
inline Vec3 log(const Eigen::Quaterniond &q_in) {
    Eigen::Quaterniond q = q_in.normalized();
    if (q.w() < 0.0) {
        q.coeffs() = -q.coeffs();
    }
    const Vec3 v = q.vec();
    const double s = v.norm();
    if (s < 1e-12) {
        return 2.0 * v / q.w();
    }
    const double theta = 2.0 * std::atan2(s, q.w());
    return theta * v / s;
}

inline Vec3 log(const Mat3 &R) { return log(Eigen::Quaterniond(R)); }

/// Left Jacobian: Exp(phi + d) ~= Exp(J_l(phi) d) Exp(phi).
inline Mat3 left_jacobian(const Vec3 &phi) {
    const double theta = phi.norm();
    const Mat3 K = hat(phi);
    if (theta < 1e-6) {
        return Mat3::Identity() + 0.5 * K + K * K / 6.0;
    }
    const double t2 = theta * theta;
    return Mat3::Identity() + (1.0 - std::cos(theta)) / t2 * K + (theta - std::sin(theta)) / (t2 * theta) * K * K;
}

inline Mat3 left_jacobian_inverse(const Vec3 &phi) {
    const double theta = phi.norm();
    const Mat3 K = hat(phi);
    if (theta < 1e-6) {
        return Mat3::Identity() - 0.5 * K + K * K / 12.0;
    }
    const double t2 = theta * theta;
    const double coeff = 1.0 / t2 - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
    return Mat3::Identity() - 0.5 * K + coeff * K * K;
}

inline Mat3 right_jacobian(const Vec3 &phi) { return left_jacobian(-phi); }
inline Mat3 right_jacobian_inverse(const Vec3 &phi) { return left_jacobian_inverse(-phi); }

} // namespace so3

/// Rigid transform. As a camera pose it maps camera coordinates to world coordinates.
struct PoseSE3 {
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
    Vec3 translation = Vec3::Zero();

    PoseSE3() = default;
    PoseSE3(const Eigen::Quaterniond &q, const Vec3 &t) : rotation(q), translation(t) {}
    PoseSE3(const Mat3 &R, const Vec3 &t) : rotation(R), translation(t) {}

    static PoseSE3 identity() { return {}; }

    Mat3 rotation_matrix() const { return rotation.toRotationMatrix(); }

    Vec3 operator*(const Vec3 &p) const { return rotation * p + translation; }

    PoseSE3 operator*(const PoseSE3 &other) const {
        return {(rotation * other.rotation).normalized(), rotation * other.translation + translation};
    }

    PoseSE3 inverse() const {
        const Eigen::Quaterniond qi = rotation.conjugate();
        return {qi, -(qi * translation)};
    }

    bool is_normalized(double tol = 1e-9) const { return std::abs(rotation.norm() - 1.0) <= tol; }
};

struct TimedPose {
    std::int64_t t_us = 0;
    PoseSE3 pose;
};

namespace se3 {

/// Exp of (v, w) with rotation Exp(w) and translation J_l(w) v.
inline PoseSE3 exp(const Tangent6 &xi) {
    const Vec3 v = xi.head<3>();
    const Vec3 w = xi.tail<3>();
    return {so3::exp_quaternion(w), so3::left_jacobian(w) * v};
}

inline Tangent6 log(const PoseSE3 &T) {
    const Vec3 w = so3::log(T.rotation);
    Tangent6 xi;
    xi.head<3>() = so3::left_jacobian_inverse(w) * T.translation;
    xi.tail<3>() = w;
    return xi;
}

/// Left perturbation Exp(xi) * T, the convention used for every pose gradient.
inline PoseSE3 perturb_left(const PoseSE3 &T, const Tangent6 &xi) { return exp(xi) * T; }

} // namespace se3

/// Shortest-arc rotation interpolation composed with linear translation.
/// R(a) = Exp(a * Log(R_end R_start^T)) R_start, which equals quaternion slerp.
inline PoseSE3 interpolate(const PoseSE3 &start, const PoseSE3 &end, double alpha) {
    if (alpha == 0.0) {
        return start;
    }
    if (alpha == 1.0) {
        return end;
    }
    const Vec3 phi = so3::log(end.rotation * start.rotation.conjugate());
    const Eigen::Quaterniond q = (so3::exp_quaternion(alpha * phi) * start.rotation).normalized();
    return {q, (1.0 - alpha) * start.translation + alpha * end.translation};
}

} // namespace edgesplat
