// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Randomized renderer fixtures and a central-difference gradient oracle.

#include "edgesplat/core/random.hpp"
#include "edgesplat/splat_render.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace testing_support {

using namespace edgesplat;

struct RenderFixture {
    GaussianScene scene;
    PoseSE3 pose;
    CameraIntrinsics camera;
    RenderSettings settings;
    Image upstream;
};

inline RenderFixture random_fixture(std::uint64_t seed, int count, int size = 32) {
    Rng rng(seed);
    auto u = [&](double lo, double hi) { return lo + (hi - lo) * uniform01(rng); };
    RenderFixture fx;
    fx.camera = CameraIntrinsics::centered(size, size, 30.0 * size / 32.0);
    const Vec3 axis = Vec3(u(-1, 1), u(-1, 1), u(-1, 1)).normalized();
    fx.pose = PoseSE3(Eigen::Quaterniond(Eigen::AngleAxisd(u(0.0, 0.1), axis)), Vec3(u(-0.1, 0.1), u(-0.1, 0.1), u(-0.1, 0.1)));
    fx.settings = {0.5, 0.01, 0.0};
    for (int i = 0; i < count; ++i) {
        Gaussian3D g;
        const Vec2 px(u(0.2, 0.8) * size, u(0.2, 0.8) * size);
        g.mu = fx.pose * (u(2.0, 4.0) * fx.camera.ray(px));
        g.scale = Vec3(u(0.05, 0.25), u(0.05, 0.25), u(0.05, 0.25));
        g.rotation = Eigen::Quaterniond(u(-1, 1), u(-1, 1), u(-1, 1), u(-1, 1)).normalized();
        g.rotation.coeffs() *= u(0.8, 1.2); // gradients must also hold off the unit sphere
        g.opacity = u(0.2, 0.8);
        g.color = u(0.05, 0.95);
        fx.scene.push_back(g);
    }
    fx.upstream = Image(size, size);
    for (double &v : fx.upstream) {
        v = u(-1.0, 1.0);
    }
    return fx;
}

inline double weighted_sum(const RenderFixture &fx, const GaussianScene &scene, const PoseSE3 &pose) {
    const Image img = rasterize(scene, pose, fx.camera, fx.settings).image;
    double s = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) {
        s += fx.upstream[i] * img[i];
    }
    return s;
}

inline double relative_error(const std::vector<double> &a, const std::vector<double> &b) {
    double num = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
    return std::sqrt(num) / denom;
}

/// Relative error ||analytic - numeric|| / max(||analytic||, ||numeric||) per parameter class.
inline std::vector<std::pair<std::string, double>> gradient_check(const RenderFixture &fx) {
    const RenderGradients g = rasterize_with_grad(fx.scene, fx.pose, fx.camera, fx.settings, fx.upstream);
    auto central = [&](const std::function<void(GaussianScene &, PoseSE3 &, double)> &apply, double base) {
        const double h = 1e-4 * std::max(std::abs(base), 1e-2);
        GaussianScene sp = fx.scene;
        PoseSE3 pp = fx.pose;
        apply(sp, pp, h);
        GaussianScene sm = fx.scene;
        PoseSE3 pm = fx.pose;
        apply(sm, pm, -h);
        return (weighted_sum(fx, sp, pp) - weighted_sum(fx, sm, pm)) / (2.0 * h);
    };
    std::vector<double> a_mu, n_mu, a_scale, n_scale, a_rot, n_rot, a_op, n_op, a_col, n_col, a_pose, n_pose;
    for (std::size_t i = 0; i < fx.scene.size(); ++i) {
        const Gaussian3D &gi = fx.scene[i];
        for (int k = 0; k < 3; ++k) {
            a_mu.push_back(g.scene.mu[i](k));
            n_mu.push_back(central([&](GaussianScene &s, PoseSE3 &, double h) { s[i].mu(k) += h; }, gi.mu(k)));
            a_scale.push_back(g.scene.scale[i](k));
            n_scale.push_back(central([&](GaussianScene &s, PoseSE3 &, double h) { s[i].scale(k) += h; }, gi.scale(k)));
        }
        for (int k = 0; k < 4; ++k) {
            // Gradient layout (w, x, y, z); Eigen coeffs() are (x, y, z, w).
            const int c = k == 0 ? 3 : k - 1;
            a_rot.push_back(g.scene.rotation[i](k));
            n_rot.push_back(central([&](GaussianScene &s, PoseSE3 &, double h) { s[i].rotation.coeffs()(c) += h; },
                                    gi.rotation.coeffs()(c)));
        }
        a_op.push_back(g.scene.opacity[i]);
        n_op.push_back(central([&](GaussianScene &s, PoseSE3 &, double h) { s[i].opacity += h; }, gi.opacity));
        a_col.push_back(g.scene.color[i]);
        n_col.push_back(central([&](GaussianScene &s, PoseSE3 &, double h) { s[i].color += h; }, gi.color));
    }
    for (int k = 0; k < 6; ++k) {
        a_pose.push_back(g.pose(k));
        n_pose.push_back(central(
            [&](GaussianScene &, PoseSE3 &p, double h) {
                Tangent6 xi = Tangent6::Zero();
                xi(k) = h;
                p = se3::perturb_left(p, xi);
            },
            1.0));
    }
    return {{"mu", relative_error(a_mu, n_mu)},          {"scale", relative_error(a_scale, n_scale)},
            {"rotation", relative_error(a_rot, n_rot)},  {"opacity", relative_error(a_op, n_op)},
            {"color", relative_error(a_col, n_col)},     {"pose", relative_error(a_pose, n_pose)}};
}

} // namespace testing_support
