// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// CPU Gaussian splatting for grayscale brightness: projection, depth-sorted
// front-to-back alpha blending, and analytic reverse-mode gradients with
// respect to every Gaussian parameter and the camera pose.

#include "edgesplat/core/camera.hpp"
#include "edgesplat/core/error.hpp"
#include "edgesplat/core/grid.hpp"
#include "edgesplat/core/pose.hpp"
#include "edgesplat/gaussian.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace edgesplat {

using Mat23 = Eigen::Matrix<double, 2, 3>;
using Vec4 = Eigen::Vector4d;

inline constexpr double kLowPassFloor = 0.3;   // px^2 added to the 2D covariance diagonal
inline constexpr double kMaxAlpha = 0.99;
inline constexpr double kMinBrightness = 1e-5;

struct RenderSettings {
    double background = 0.5;
    double near = 0.01;
    /// Mahalanobis radius beyond which a splat is skipped; 0 evaluates every
    /// splat at every pixel.
    double cutoff = 0.0;

    void validate() const {
        detail::require(background >= 0.0 && background <= 1.0, "render: background must lie in [0, 1]");
        detail::require(near > 0.0, "render: near plane must be positive");
        detail::require(cutoff >= 0.0, "render: cutoff must be non-negative");
    }
};

struct Splat2D {
    Vec2 mean2d = Vec2::Zero();
    Mat2 cov2d = Mat2::Identity();
    double depth = 1.0;
    double opacity = 0.5;
    double color = 0.5;

    // Cached for the backward pass.
    Mat2 conic = Mat2::Identity();
    Vec3 p_cam = Vec3::Zero();
    Mat23 jacobian = Mat23::Zero();
    Mat3 cov_cam = Mat3::Identity();
    Mat3 rotation = Mat3::Identity(); // normalized Gaussian rotation
    double radius = 0.0;              // 3 sigma of the major axis, pixels
    std::size_t index = 0;            // position in the input list
};

/// Perspective projection of one Gaussian, or nothing when it is culled.
inline std::optional<Splat2D> project(const Gaussian3D &g, const PoseSE3 &pose, const CameraIntrinsics &K,
                                      double near) {
    const Mat3 W = pose.rotation.conjugate().toRotationMatrix();
    const Vec3 p = W * (g.mu - pose.translation);
    if (!(p.z() > near)) {
        return std::nullopt;
    }
    Splat2D s;
    s.p_cam = p;
    s.depth = p.z();
    const double iz = 1.0 / p.z();
    s.mean2d = {K.fx * p.x() * iz + K.cx, K.fy * p.y() * iz + K.cy};
    s.jacobian << K.fx * iz, 0.0, -K.fx * p.x() * iz * iz, 0.0, K.fy * iz, -K.fy * p.y() * iz * iz;
    s.rotation = g.rotation.normalized().toRotationMatrix();
    const Mat3 M = s.rotation * g.scale.asDiagonal();
    s.cov_cam = W * (M * M.transpose()) * W.transpose();
    s.cov2d = s.jacobian * s.cov_cam * s.jacobian.transpose();
    s.cov2d(0, 0) += kLowPassFloor;
    s.cov2d(1, 1) += kLowPassFloor;
    const double a = s.cov2d(0, 0);
    const double b = s.cov2d(0, 1);
    const double c = s.cov2d(1, 1);
    const double det = a * c - b * b;
    if (!(det > 0.0)) {
        return std::nullopt;
    }
    s.conic << c / det, -b / det, -b / det, a / det;
    const double mid = 0.5 * (a + c);
    const double lambda_max = mid + std::sqrt(std::max(0.1, mid * mid - det));
    s.radius = 3.0 * std::sqrt(lambda_max);
    if (s.mean2d.x() < -0.5 - s.radius || s.mean2d.x() > K.width - 0.5 + s.radius || s.mean2d.y() < -0.5 - s.radius ||
        s.mean2d.y() > K.height - 0.5 + s.radius) {
        return std::nullopt;
    }
    s.opacity = g.opacity;
    s.color = g.color;
    return s;
}

struct Contribution {
    std::uint32_t splat = 0; // index into RenderOutput::splats
    double alpha = 0.0;
    double transmittance = 1.0; // before this splat
    bool saturated = false;     // alpha hit the clamp
};

struct RenderOutput {
    Image image;
    Image raw;           // unclamped blend
    Image transmittance; // after all splats
    std::vector<Splat2D> splats; // front to back
    std::vector<std::size_t> offsets; // per pixel: contributions[offsets[i] .. offsets[i + 1])
    std::vector<Contribution> contributions;
    RenderSettings settings;
};

namespace render_detail {

struct PixelBox {
    int x0, x1, y0, y1; // inclusive
};

inline PixelBox bounds(const Splat2D &s, const CameraIntrinsics &K, double cutoff) {
    if (cutoff <= 0.0) {
        return {0, K.width - 1, 0, K.height - 1};
    }
    const double rx = cutoff * std::sqrt(s.cov2d(0, 0));
    const double ry = cutoff * std::sqrt(s.cov2d(1, 1));
    return {std::max(0, static_cast<int>(std::ceil(s.mean2d.x() - rx))),
            std::min(K.width - 1, static_cast<int>(std::floor(s.mean2d.x() + rx))),
            std::max(0, static_cast<int>(std::ceil(s.mean2d.y() - ry))),
            std::min(K.height - 1, static_cast<int>(std::floor(s.mean2d.y() + ry)))};
}

} // namespace render_detail

inline RenderOutput rasterize(const GaussianScene &gaussians, const PoseSE3 &pose, const CameraIntrinsics &K,
                              const RenderSettings &settings = {}) {
    settings.validate();
    K.validate();
    RenderOutput out;
    out.settings = settings;
    for (std::size_t i = 0; i < gaussians.size(); ++i) {
        if (auto s = project(gaussians[i], pose, K, settings.near)) {
            s->index = i;
            out.splats.push_back(*s);
        }
    }
    std::stable_sort(out.splats.begin(), out.splats.end(),
                     [](const Splat2D &a, const Splat2D &b) { return a.depth < b.depth; });

    const int w = K.width;
    const int h = K.height;
    const std::size_t npix = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    std::vector<std::pair<std::uint32_t, Contribution>> flat; // (pixel, contribution) in splat order
    std::vector<std::size_t> counts(npix, 0);
    Image trans(w, h, 1.0);
    Image accum(w, h, 0.0);
    const double cut2 = settings.cutoff * settings.cutoff;
    for (std::size_t si = 0; si < out.splats.size(); ++si) {
        const Splat2D &s = out.splats[si];
        const auto box = render_detail::bounds(s, K, settings.cutoff);
        const double ca = s.conic(0, 0);
        const double cb = s.conic(0, 1);
        const double cc = s.conic(1, 1);
        for (int y = box.y0; y <= box.y1; ++y) {
            const double dy = y - s.mean2d.y();
            for (int x = box.x0; x <= box.x1; ++x) {
                const double dx = x - s.mean2d.x();
                const double q = ca * dx * dx + 2.0 * cb * dx * dy + cc * dy * dy;
                if (cut2 > 0.0 && q > cut2) {
                    continue;
                }
                const double raw_alpha = s.opacity * std::exp(-0.5 * q);
                const bool saturated = raw_alpha > kMaxAlpha;
                const double alpha = saturated ? kMaxAlpha : raw_alpha;
                if (!(alpha > 0.0)) {
                    continue;
                }
                const std::size_t pi = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
                const double T = trans[pi];
                flat.push_back({static_cast<std::uint32_t>(pi), {static_cast<std::uint32_t>(si), alpha, T, saturated}});
                ++counts[pi];
                accum[pi] += s.color * alpha * T;
                trans[pi] = T * (1.0 - alpha);
            }
        }
    }
    out.raw = Image(w, h);
    out.image = Image(w, h);
    out.offsets.resize(npix + 1, 0);
    for (std::size_t i = 0; i < npix; ++i) {
        out.offsets[i + 1] = out.offsets[i] + counts[i];
        out.raw[i] = accum[i] + settings.background * trans[i];
        out.image[i] = std::clamp(out.raw[i], kMinBrightness, 1.0);
    }
    // Stable counting sort by pixel keeps each pixel's list front to back.
    out.contributions.resize(flat.size());
    std::vector<std::size_t> cursor(out.offsets.begin(), out.offsets.end() - 1);
    for (const auto &[pi, c] : flat) {
        out.contributions[cursor[pi]++] = c;
    }
    out.transmittance = std::move(trans);
    return out;
}

/// Log-brightness change between two renders; both must be strictly positive.
inline Image synthesize_event_map(const Image &first, const Image &second) {
    require_same_shape(first, second, "synthesize_event_map");
    Image out(first.width(), first.height());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(first[i] > 0.0 && second[i] > 0.0)) {
            throw InvalidArgument("synthesize_event_map: non-positive brightness");
        }
        out[i] = std::log(second[i]) - std::log(first[i]);
    }
    return out;
}

struct SceneGradient {
    std::vector<Vec3> mu;
    std::vector<Vec3> scale;
    std::vector<Vec4> rotation; // (w, x, y, z) of the stored, possibly unnormalized quaternion
    std::vector<double> opacity;
    std::vector<double> color;

    SceneGradient() = default;
    explicit SceneGradient(std::size_t n)
        : mu(n, Vec3::Zero()), scale(n, Vec3::Zero()), rotation(n, Vec4::Zero()), opacity(n, 0.0), color(n, 0.0) {}

    std::size_t size() const noexcept { return mu.size(); }

    SceneGradient &operator+=(const SceneGradient &o) {
        detail::require(o.size() == size(), "scene gradient: size mismatch");
        for (std::size_t i = 0; i < size(); ++i) {
            mu[i] += o.mu[i];
            scale[i] += o.scale[i];
            rotation[i] += o.rotation[i];
            opacity[i] += o.opacity[i];
            color[i] += o.color[i];
        }
        return *this;
    }
};

struct RenderGradients {
    SceneGradient scene;
    Tangent6 pose = Tangent6::Zero(); // left-perturbation tangent (v, w)
};

namespace render_detail {

/// dR/dq_k for the rotation matrix of a unit quaternion (w, x, y, z).
inline std::array<Mat3, 4> rotation_partials(const Eigen::Quaterniond &q) {
    const double w = q.w();
    const double x = q.x();
    const double y = q.y();
    const double z = q.z();
    std::array<Mat3, 4> d;
    d[0] << 0, -z, y, z, 0, -x, -y, x, 0;
    d[1] << 0, y, z, y, -2 * x, -w, z, w, -2 * x;
    d[2] << -2 * y, x, w, x, 0, z, -w, z, -2 * y;
    d[3] << -2 * z, -w, x, w, -2 * z, y, x, y, 0;
    for (Mat3 &m : d) {
        m *= 2.0;
    }
    return d;
}

} // namespace render_detail

/// Gradients of sum_x upstream(x) * image(x) given a forward pass `fwd` of the same inputs.
inline RenderGradients backward(const RenderOutput &fwd, const GaussianScene &gaussians, const PoseSE3 &pose,
                                const CameraIntrinsics &K, const Image &upstream) {
    detail::require(upstream.width() == K.width && upstream.height() == K.height,
                    "rasterize_with_grad: upstream gradient resolution mismatch");
    const std::size_t ns = fwd.splats.size();
    std::vector<Vec2> g_mean(ns, Vec2::Zero());
    std::vector<Vec3> g_conic(ns, Vec3::Zero()); // d/da, d/db (off-diagonal, counted once), d/dc
    std::vector<double> g_opacity(ns, 0.0);
    std::vector<double> g_color(ns, 0.0);

    const std::size_t npix = upstream.size();
    for (std::size_t pi = 0; pi < npix; ++pi) {
        const double raw = fwd.raw[pi];
        double g = upstream[pi];
        if (g == 0.0 || raw < kMinBrightness || raw > 1.0) {
            continue;
        }
        const int x = static_cast<int>(pi % static_cast<std::size_t>(K.width));
        const int y = static_cast<int>(pi / static_cast<std::size_t>(K.width));
        double after = fwd.settings.background * fwd.transmittance[pi];
        for (std::size_t k = fwd.offsets[pi + 1]; k-- > fwd.offsets[pi];) {
            const Contribution &c = fwd.contributions[k];
            const Splat2D &s = fwd.splats[c.splat];
            const double T = c.transmittance;
            g_color[c.splat] += g * c.alpha * T;
            const double d_alpha = g * (s.color * T - after / (1.0 - c.alpha));
            after += s.color * c.alpha * T;
            if (c.saturated) {
                continue;
            }
            const double gauss = c.alpha / s.opacity;
            g_opacity[c.splat] += d_alpha * gauss;
            // alpha = o exp(-q / 2): d alpha / d q = -alpha / 2.
            const double d_q = -0.5 * c.alpha * d_alpha;
            const double dx = x - s.mean2d.x();
            const double dy = y - s.mean2d.y();
            g_conic[c.splat] += d_q * Vec3(dx * dx, 2.0 * dx * dy, dy * dy);
            // dq/d mean = -2 A delta.
            g_mean[c.splat] += d_q * -2.0 * (s.conic * Vec2(dx, dy));
        }
    }

    RenderGradients out;
    out.scene = SceneGradient(gaussians.size());
    const Mat3 W = pose.rotation.conjugate().toRotationMatrix();
    Mat3 g_W_cov = Mat3::Zero();
    for (std::size_t si = 0; si < ns; ++si) {
        const Splat2D &s = fwd.splats[si];
        const Gaussian3D &gs = gaussians[s.index];
        const std::size_t gi = s.index;
        out.scene.color[gi] = g_color[si];
        out.scene.opacity[gi] = g_opacity[si];

        // Conic A = inverse(S) with S the 2D covariance: dL/dS = -A G_A A.
        Mat2 G_A;
        G_A << g_conic[si](0), 0.5 * g_conic[si](1), 0.5 * g_conic[si](1), g_conic[si](2);
        const Mat2 G_S = -s.conic * G_A * s.conic;
        // S = J C J^T + floor.
        const Mat3 G_C = s.jacobian.transpose() * G_S * s.jacobian;
        const Mat23 G_J = 2.0 * G_S * s.jacobian * s.cov_cam;
        // C = W Sigma W^T.
        const Mat3 G_Sigma = W.transpose() * G_C * W;
        const Mat3 Sigma = s.rotation * gs.scale.cwiseAbs2().asDiagonal() * s.rotation.transpose();
        g_W_cov += 2.0 * G_C * W * Sigma;
        // Sigma = M M^T, M = R diag(scale).
        const Mat3 M = s.rotation * gs.scale.asDiagonal();
        const Mat3 G_M = 2.0 * G_Sigma * M;
        for (int k = 0; k < 3; ++k) {
            out.scene.scale[gi](k) = G_M.col(k).dot(s.rotation.col(k));
        }
        const Mat3 G_R = G_M * gs.scale.asDiagonal();
        const double qn = gs.rotation.norm();
        const Eigen::Quaterniond qhat = gs.rotation.normalized();
        const auto dR = render_detail::rotation_partials(qhat);
        Vec4 g_qhat;
        for (int k = 0; k < 4; ++k) {
            g_qhat(k) = G_R.cwiseProduct(dR[static_cast<std::size_t>(k)]).sum();
        }
        const Vec4 u(qhat.w(), qhat.x(), qhat.y(), qhat.z());
        out.scene.rotation[gi] = (g_qhat - u * u.dot(g_qhat)) / qn;

        // Camera-frame point: through the projected mean and the Jacobian.
        const Vec3 &p = s.p_cam;
        const double iz = 1.0 / p.z();
        const double iz2 = iz * iz;
        Vec3 g_p = s.jacobian.transpose() * g_mean[si];
        g_p.x() += G_J(0, 2) * -K.fx * iz2;
        g_p.y() += G_J(1, 2) * -K.fy * iz2;
        g_p.z() += G_J(0, 0) * -K.fx * iz2 + G_J(0, 2) * 2.0 * K.fx * p.x() * iz2 * iz + G_J(1, 1) * -K.fy * iz2 +
                   G_J(1, 2) * 2.0 * K.fy * p.y() * iz2 * iz;
        const Vec3 g_mu = W.transpose() * g_p;
        out.scene.mu[gi] = g_mu;
        // Left perturbation moves world points by -(v + w x mu) in the camera's view.
        out.pose.head<3>() -= g_mu;
        out.pose.tail<3>() += g_mu.cross(gs.mu);
    }
    // Rotation part of the world-to-camera map becomes W (I - [w]x).
    for (int k = 0; k < 3; ++k) {
        out.pose(3 + k) -= g_W_cov.cwiseProduct(W * so3::hat(Vec3::Unit(k))).sum();
    }
    return out;
}

inline RenderGradients rasterize_with_grad(const GaussianScene &gaussians, const PoseSE3 &pose,
                                           const CameraIntrinsics &K, const RenderSettings &settings,
                                           const Image &upstream) {
    return backward(rasterize(gaussians, pose, K, settings), gaussians, pose, K, upstream);
}

} // namespace edgesplat
