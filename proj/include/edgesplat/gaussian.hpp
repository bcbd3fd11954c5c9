// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "edgesplat/core/error.hpp"
#include "edgesplat/core/pose.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace edgesplat {

enum class GaussianOrigin : std::uint8_t { random = 0, edge = 1 };

/// Anisotropic 3D Gaussian with covariance R diag(scale^2) R^T and grayscale color.
struct Gaussian3D {
    Vec3 mu = Vec3::Zero();
    Vec3 scale = Vec3::Ones();
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
    double opacity = 0.5;
    double color = 0.5;
    GaussianOrigin origin = GaussianOrigin::random;

    Mat3 covariance() const {
        const Mat3 R = rotation.normalized().toRotationMatrix();
        return R * scale.cwiseAbs2().asDiagonal() * R.transpose();
    }

    void validate() const {
        detail::require(mu.allFinite(), "gaussian: non-finite mean");
        detail::require(scale.allFinite() && (scale.array() > 0.0).all(), "gaussian: scales must be positive");
        detail::require(std::abs(rotation.norm() - 1.0) < 1e-6, "gaussian: rotation must be a unit quaternion");
        detail::require(opacity > 0.0 && opacity < 1.0, "gaussian: opacity must lie in (0, 1)");
        detail::require(color >= 0.0 && color <= 1.0, "gaussian: color must lie in [0, 1]");
    }

    bool operator==(const Gaussian3D &o) const {
        return mu == o.mu && scale == o.scale && rotation.coeffs() == o.rotation.coeffs() && opacity == o.opacity &&
               color == o.color && origin == o.origin;
    }
};

using GaussianScene = std::vector<Gaussian3D>;

} // namespace edgesplat
