// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "edgesplat/core/error.hpp"
#include "edgesplat/core/pose.hpp"

namespace edgesplat {

/// Pinhole intrinsics. Pixel (x, y) has its center at continuous coordinate (x, y).
struct CameraIntrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.5;
    double cy = 0.5;
    int width = 1;
    int height = 1;

    void validate() const {
        detail::require(width > 0 && height > 0, "intrinsics: resolution must be positive");
        detail::require(fx > 0.0 && fy > 0.0, "intrinsics: focal lengths must be positive");
        detail::require(cx > 0.0 && cx < width && cy > 0.0 && cy < height,
                        "intrinsics: principal point must lie inside the image");
    }

    /// Camera-frame point to pixel coordinates. Caller guarantees z > 0.
    Vec2 project(const Vec3 &p) const { return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy}; }

    /// K^-1 [u, v, 1]^T; its z component is exactly 1.
    Vec3 ray(const Vec2 &pixel) const { return {(pixel.x() - cx) / fx, (pixel.y() - cy) / fy, 1.0}; }

    static CameraIntrinsics centered(int width, int height, double focal) {
        return {focal, focal, 0.5 * (width - 1), 0.5 * (height - 1), width, height};
    }
};

} // namespace edgesplat
