// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Reference simulator sequences.
//
//   single-line     one slanted dark bar, lateral drift
//   line-grid       two vertical and two horizontal bars, diagonal drift
//   textured-plane  a striped rectangle with one corner in view, diagonal drift
//   line-orbit      bars at 2-3 m, camera on a constant-speed arc around a far pivot

#include "edgesplat/core/camera.hpp"
#include "edgesplat/core/error.hpp"
#include "edgesplat/core/pose.hpp"
#include "edgesplat/scene_sim.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace edgesplat::sim {

struct Sequence {
    std::string name;
    SyntheticScene scene;
    CameraIntrinsics camera;
    std::vector<TimedPose> trajectory;
    double contrast_threshold = 0.2;
    Duration frame_dt = 250;
    int supersample = 1; // per-axis samples per pixel when rendering frames
};

namespace presets {

inline std::vector<TimedPose> linear_trajectory(const Vec3 &displacement, Duration duration, int samples = 2) {
    std::vector<TimedPose> out;
    for (int i = 0; i < samples; ++i) {
        const double a = static_cast<double>(i) / (samples - 1);
        out.push_back({duration * i / (samples - 1), PoseSE3(Eigen::Quaterniond::Identity(), a * displacement)});
    }
    return out;
}

inline Sequence single_line() {
    Sequence s;
    s.name = "single-line";
    s.camera = CameraIntrinsics::centered(64, 64, 60.0);
    s.scene.background = 0.8;
    s.scene.bounds = {{-3, -3, 0}, {3, 3, 6}};
    s.scene.segments.push_back({{-0.25, -1.5, 3.0}, {0.35, 1.5, 3.0}, 0.03, 0.2});
    s.trajectory = linear_trajectory({0.15, 0.0, 0.0}, 50000);
    return s;
}

inline Sequence line_grid() {
    Sequence s;
    s.name = "line-grid";
    s.camera = CameraIntrinsics::centered(64, 64, 60.0);
    s.scene.background = 0.8;
    s.scene.bounds = {{-3, -3, 0}, {3, 3, 6}};
    for (double u : {-0.6, 0.6}) {
        s.scene.segments.push_back({{u, -0.85, 3.0}, {u, 0.85, 3.0}, 0.03, 0.2});
        s.scene.segments.push_back({{-0.85, u, 3.05}, {0.85, u, 3.05}, 0.03, 0.2});
    }
    s.trajectory = linear_trajectory({0.12, 0.09, 0.0}, 50000);
    return s;
}

inline Sequence textured_plane() {
    Sequence s;
    s.name = "textured-plane";
    s.camera = CameraIntrinsics::centered(64, 64, 60.0);
    s.scene.background = 0.8;
    s.scene.bounds = {{-3, -3, 0}, {3, 3, 6}};
    s.scene.planes.push_back(
        {{0.6, 0.5, 3.0}, Vec3::UnitX(), Vec3::UnitY(), 1.0, 0.9, {TextureKind::stripes, 0.25, 0.5, 1.2}});
    s.trajectory = linear_trajectory({0.12, 0.09, 0.0}, 50000);
    return s;
}

/// Pose on an arc of radius `radius` around `pivot` about the y axis, looking at the pivot.
inline PoseSE3 orbit_pose(const Vec3 &pivot, double radius, double angle) {
    const Eigen::Quaterniond q(Eigen::AngleAxisd(angle, Vec3::UnitY()));
    return {q, pivot + q * Vec3(0.0, 0.0, -radius)};
}

inline Sequence line_orbit() {
    Sequence s;
    s.name = "line-orbit";
    s.supersample = 4;
    s.camera = CameraIntrinsics::centered(64, 64, 60.0);
    s.scene.background = 0.8;
    s.scene.bounds = {{-3, -3, 0}, {3, 3, 6}};
    // Lines spread over 1.8-4.8 m so rotation and translation are separable,
    // with radii proportional to depth (about 1.2 px in the image).
    s.scene.segments = {
        {{-0.45, -1.2, 1.8}, {-0.40, 1.2, 1.9}, 0.037, 0.2},  {{0.35, -1.5, 3.6}, {0.45, 1.5, 3.4}, 0.07, 0.25},
        {{-1.2, -1.0, 2.6}, {1.2, 1.1, 3.0}, 0.056, 0.15},    {{-1.8, -0.45, 4.4}, {1.8, -0.35, 4.6}, 0.09, 0.2},
        {{-1.2, 0.45, 2.2}, {1.2, 0.55, 2.0}, 0.042, 0.25},   {{1.0, -1.5, 4.8}, {0.9, 1.5, 4.6}, 0.094, 0.2},
    };
    const Vec3 pivot(0.0, 0.0, 6.0);
    const double radius = 6.0;
    const double sweep = 0.24;      // radians over the sequence
    const Duration duration = 400000; // 8 chunks of 50 ms
    const int samples = 41;
    for (int i = 0; i < samples; ++i) {
        const double a = static_cast<double>(i) / (samples - 1);
        s.trajectory.push_back({duration * i / (samples - 1), orbit_pose(pivot, radius, -0.5 * sweep + a * sweep)});
    }
    return s;
}

inline std::vector<std::string> names() { return {"single-line", "line-grid", "textured-plane", "line-orbit"}; }

inline Sequence by_name(const std::string &name) {
    if (name == "single-line") {
        return single_line();
    }
    if (name == "line-grid") {
        return line_grid();
    }
    if (name == "textured-plane") {
        return textured_plane();
    }
    if (name == "line-orbit") {
        return line_orbit();
    }
    throw InvalidArgument("unknown preset '" + name + "'");
}

} // namespace presets

/// Total camera path length of a sampled trajectory.
inline double path_length(const std::vector<TimedPose> &trajectory) {
    double len = 0.0;
    for (std::size_t i = 1; i < trajectory.size(); ++i) {
        len += (trajectory[i].pose.translation - trajectory[i - 1].pose.translation).norm();
    }
    return len;
}

/// Ideal (noise-free) events of a sequence with its own threshold, frame step and supersampling.
inline EventStream generate_ideal_events(const Sequence &seq) {
    return generate_ideal_events(seq.scene, seq.trajectory, seq.camera, seq.contrast_threshold, seq.frame_dt,
                                 seq.supersample);
}

} // namespace edgesplat::sim
