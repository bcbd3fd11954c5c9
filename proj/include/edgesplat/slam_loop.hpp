// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Pose-free reconstruction: chunk trajectories interpolated between boundary
// poses, edge-weighted and structural event-map losses, tracking of new
// chunks against a frozen scene, and sliding-window bundle adjustment.

#include "edgesplat/core/error.hpp"
#include "edgesplat/core/grid.hpp"
#include "edgesplat/core/pose.hpp"
#include "edgesplat/core/random.hpp"
#include "edgesplat/edge_detect.hpp"
#include "edgesplat/edge_init.hpp"
#include "edgesplat/event_core.hpp"
#include "edgesplat/gaussian.hpp"
#include "edgesplat/splat_render.hpp"
#include "edgesplat/ssim.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <string>
#include <vector>

namespace edgesplat {

using Mat6 = Eigen::Matrix<double, 6, 6>;

struct ChunkTrajectory {
    PoseSE3 T_start;
    PoseSE3 T_end;
    int chunk_index = 0;
};

inline PoseSE3 interpolate_pose(const ChunkTrajectory &traj, double alpha) {
    detail::require(alpha >= 0.0 && alpha <= 1.0, "interpolate_pose: alpha must lie in [0, 1]");
    return interpolate(traj.T_start, traj.T_end, alpha);
}

/// Linear maps from left-perturbation tangents of the two boundary poses to
/// the left-perturbation tangent of the interpolated pose.
struct InterpolationJacobian {
    Mat6 d_start = Mat6::Zero();
    Mat6 d_end = Mat6::Zero();
};

inline InterpolationJacobian interpolation_jacobian(const ChunkTrajectory &traj, double alpha) {
    const Vec3 phi = so3::log(traj.T_end.rotation * traj.T_start.rotation.conjugate());
    const Mat3 Ja = alpha * so3::left_jacobian(alpha * phi);
    const Mat3 Ms = so3::exp(alpha * phi) - Ja * so3::right_jacobian_inverse(phi);
    const Mat3 Me = Ja * so3::left_jacobian_inverse(phi);
    const Vec3 t = (1.0 - alpha) * traj.T_start.translation + alpha * traj.T_end.translation;
    const Mat3 I = Mat3::Identity();

    InterpolationJacobian J;
    J.d_start.topLeftCorner<3, 3>() = (1.0 - alpha) * I;
    J.d_start.topRightCorner<3, 3>() = -(1.0 - alpha) * so3::hat(traj.T_start.translation) + so3::hat(t) * Ms;
    J.d_start.bottomRightCorner<3, 3>() = Ms;
    J.d_end.topLeftCorner<3, 3>() = alpha * I;
    J.d_end.topRightCorner<3, 3>() = -alpha * so3::hat(traj.T_end.translation) + so3::hat(t) * Me;
    J.d_end.bottomRightCorner<3, 3>() = Me;
    return J;
}

// ---------------------------------------------------------------------------
// Losses

struct LossWeights {
    double beta = 2.0;   // edge emphasis
    double lambda = 0.2; // structural share

    void validate() const {
        detail::require(beta >= 0.0 && std::isfinite(beta), "loss weights: beta must be non-negative");
        detail::require(lambda >= 0.0 && lambda <= 1.0, "loss weights: lambda must lie in [0, 1]");
    }
};

inline double mean_squared_error(const Image &a, const Image &b) {
    require_same_shape(a, b, "mean_squared_error");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double r = a[i] - b[i];
        s += r * r;
    }
    return s / static_cast<double>(a.size());
}

/// mean over pixels of (1 + beta M) (E_hat - E)^2
inline double edge_weighted_loss(const Image &E_hat, const Image &E, const Image &M, double beta) {
    require_same_shape(E_hat, E, "edge_weighted_loss");
    require_same_shape(E_hat, M, "edge_weighted_loss");
    double s = 0.0;
    for (std::size_t i = 0; i < E.size(); ++i) {
        const double r = E_hat[i] - E[i];
        s += (1.0 + beta * M[i]) * (r * r);
    }
    return s / static_cast<double>(E.size());
}

inline double dssim_loss(const Image &E_hat, const Image &E) { return 1.0 - ssim(E_hat, E); }

inline double total_loss(double edge, double dssim, const LossWeights &w) {
    return (1.0 - w.lambda) * edge + w.lambda * dssim;
}

inline double total_loss(const Image &E_hat, const Image &E, const Image &M, const LossWeights &w) {
    w.validate();
    return total_loss(edge_weighted_loss(E_hat, E, M, w.beta), dssim_loss(E_hat, E), w);
}

struct LossTerms {
    double edge = 0.0;
    double dssim = 0.0;
    double total = 0.0;

    LossTerms &operator+=(const LossTerms &o) {
        edge += o.edge;
        dssim += o.dssim;
        total += o.total;
        return *this;
    }
    LossTerms &operator*=(double k) {
        edge *= k;
        dssim *= k;
        total *= k;
        return *this;
    }
};

struct LossEvaluation {
    LossTerms terms;
    Image grad; // d total / d E_hat
};

inline LossEvaluation evaluate_loss(const Image &E_hat, const Image &E, const Image &M, const LossWeights &w) {
    w.validate();
    require_same_shape(E_hat, E, "evaluate_loss");
    require_same_shape(E_hat, M, "evaluate_loss");
    LossEvaluation out;
    out.terms.edge = edge_weighted_loss(E_hat, E, M, w.beta);
    const SsimResult s = ssim_full(E_hat, E, w.lambda > 0.0);
    out.terms.dssim = 1.0 - s.value;
    out.terms.total = total_loss(out.terms.edge, out.terms.dssim, w);
    out.grad = Image(E.width(), E.height());
    const double k = 2.0 * (1.0 - w.lambda) / static_cast<double>(E.size());
    for (std::size_t i = 0; i < E.size(); ++i) {
        out.grad[i] = k * (1.0 + w.beta * M[i]) * (E_hat[i] - E[i]);
        if (w.lambda > 0.0) {
            out.grad[i] -= w.lambda * s.grad_a[i];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Supervision of one chunk

struct SupervisionParams {
    int n_samples = 8;
    Duration dt_min = 10000;
    Duration dt_max = 25000;
    double contrast_threshold = 0.2;
    RenderSettings render{0.8, 0.01, 3.5};

    void validate() const {
        detail::require(n_samples >= 1, "supervision: n_samples must be positive");
        detail::require(dt_min > 0 && dt_min <= dt_max, "supervision: need 0 < dt_min <= dt_max");
        detail::require(contrast_threshold > 0.0, "supervision: contrast threshold must be positive");
        render.validate();
    }
};

struct SupervisionResult {
    LossTerms loss;
    Tangent6 grad_start = Tangent6::Zero();
    Tangent6 grad_end = Tangent6::Zero();
    SceneGradient scene;
};

inline double chunk_alpha(const Chunk &chunk, Timestamp t) {
    return static_cast<double>(t - chunk.t_start) / static_cast<double>(chunk.t_end - chunk.t_start);
}

inline Image measured_event_map(const Chunk &chunk, Timestamp t0, Timestamp t1, double contrast_threshold) {
    return accumulate(chunk.events, t0, t1 - t0, contrast_threshold).values;
}

/// Loss and gradients for one interval [t0, t1) inside the chunk.
inline SupervisionResult supervise_interval(const Chunk &chunk, const ChunkTrajectory &traj, const GaussianScene &scene,
                                            const Image &M, const LossWeights &weights, const CameraIntrinsics &K,
                                            const SupervisionParams &params, Timestamp t0, Timestamp t1) {
    detail::require(chunk.t_start <= t0 && t0 < t1 && t1 <= chunk.t_end, "supervise: interval outside the chunk");
    const Image E = measured_event_map(chunk, t0, t1, params.contrast_threshold);
    const double a0 = chunk_alpha(chunk, t0);
    const double a1 = chunk_alpha(chunk, t1);
    const PoseSE3 P0 = interpolate_pose(traj, a0);
    const PoseSE3 P1 = interpolate_pose(traj, a1);
    const RenderOutput r0 = rasterize(scene, P0, K, params.render);
    const RenderOutput r1 = rasterize(scene, P1, K, params.render);
    const Image E_hat = synthesize_event_map(r0.image, r1.image);
    const LossEvaluation loss = evaluate_loss(E_hat, E, M, weights);

    Image up0(K.width, K.height);
    Image up1(K.width, K.height);
    for (std::size_t i = 0; i < up0.size(); ++i) {
        up0[i] = -loss.grad[i] / r0.image[i];
        up1[i] = loss.grad[i] / r1.image[i];
    }
    const RenderGradients g0 = backward(r0, scene, P0, K, up0);
    const RenderGradients g1 = backward(r1, scene, P1, K, up1);
    const InterpolationJacobian J0 = interpolation_jacobian(traj, a0);
    const InterpolationJacobian J1 = interpolation_jacobian(traj, a1);

    SupervisionResult out;
    out.loss = loss.terms;
    out.grad_start = J0.d_start.transpose() * g0.pose + J1.d_start.transpose() * g1.pose;
    out.grad_end = J0.d_end.transpose() * g0.pose + J1.d_end.transpose() * g1.pose;
    out.scene = g0.scene;
    out.scene += g1.scene;
    return out;
}

/// Mean loss over n_samples random intervals: t uniform in the chunk, length
/// from sample_interval, clamped at the chunk end.
inline SupervisionResult supervise_chunk(const Chunk &chunk, const ChunkTrajectory &traj, const GaussianScene &scene,
                                         const Image &M, const LossWeights &weights, const CameraIntrinsics &K,
                                         const SupervisionParams &params, Rng &rng) {
    params.validate();
    detail::require(chunk.t_end > chunk.t_start, "supervise_chunk: empty chunk");
    detail::require(M.width() == K.width && M.height() == K.height, "supervise_chunk: edge map resolution mismatch");
    SupervisionResult total;
    total.scene = SceneGradient(scene.size());
    std::uniform_int_distribution<Timestamp> start(chunk.t_start, chunk.t_end - 1);
    for (int s = 0; s < params.n_samples; ++s) {
        const Timestamp t = start(rng);
        const auto [t0, t1] = sample_interval(rng, t, params.dt_min, params.dt_max);
        const SupervisionResult r =
            supervise_interval(chunk, traj, scene, M, weights, K, params, t0, std::min(t1, chunk.t_end));
        total.loss += r.loss;
        total.grad_start += r.grad_start;
        total.grad_end += r.grad_end;
        total.scene += r.scene;
    }
    const double k = 1.0 / params.n_samples;
    total.loss *= k;
    total.grad_start *= k;
    total.grad_end *= k;
    for (std::size_t i = 0; i < scene.size(); ++i) {
        total.scene.mu[i] *= k;
        total.scene.scale[i] *= k;
        total.scene.rotation[i] *= k;
        total.scene.opacity[i] *= k;
        total.scene.color[i] *= k;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Optimizer

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const {
        detail::require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "adam: betas must lie in [0, 1)");
        detail::require(epsilon > 0.0, "adam: epsilon must be positive");
    }
};

/// Adam with bias-corrected moments; step() returns the update to subtract.
class Adam {
  public:
    Adam() = default;
    Adam(Eigen::Index size, const AdamParams &params)
        : params_(params), m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {}

    Eigen::VectorXd step(const Eigen::VectorXd &grad, const Eigen::VectorXd &lr) {
        detail::require(grad.size() == m_.size() && lr.size() == m_.size(), "adam: size mismatch");
        ++t_;
        m_ = params_.beta1 * m_ + (1.0 - params_.beta1) * grad;
        v_ = params_.beta2 * v_ + (1.0 - params_.beta2) * grad.cwiseAbs2();
        const double c1 = 1.0 - std::pow(params_.beta1, t_);
        const double c2 = 1.0 - std::pow(params_.beta2, t_);
        return lr.cwiseProduct((m_ / c1).cwiseQuotient(((v_ / c2).cwiseSqrt().array() + params_.epsilon).matrix()));
    }

    Eigen::Index size() const { return m_.size(); }
    int iterations() const { return t_; }

  private:
    AdamParams params_;
    Eigen::VectorXd m_;
    Eigen::VectorXd v_;
    int t_ = 0;
};

struct LearningRates {
    double pose_translation = 2e-3; // m
    double pose_rotation = 1e-3;    // rad
    double mean = 2e-3;             // m
    double log_scale = 1e-2;
    double rotation = 5e-3; // quaternion components
    double opacity_logit = 5e-2;
    double color = 1e-2;
    double final_ratio = 0.1; // exponential decay target at the last iteration of a phase

    void validate() const {
        for (double v : {pose_translation, pose_rotation, mean, log_scale, rotation, opacity_logit, color}) {
            detail::require(v >= 0.0 && std::isfinite(v), "learning rates must be non-negative");
        }
        detail::require(final_ratio > 0.0 && final_ratio <= 1.0, "learning rate final ratio must lie in (0, 1]");
    }

    double decay(int iter, int iterations) const {
        return iterations <= 1 ? 1.0 : std::pow(final_ratio, static_cast<double>(iter) / (iterations - 1));
    }
};

inline constexpr Eigen::Index kSceneParamsPerGaussian = 12; // mu 3, log scale 3, quaternion 4, logit 1, color 1

namespace loop_detail {

inline Eigen::VectorXd scene_learning_rates(std::size_t n, const LearningRates &lr, double k) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(n) * kSceneParamsPerGaussian);
    for (std::size_t i = 0; i < n; ++i) {
        auto seg = out.segment(static_cast<Eigen::Index>(i) * kSceneParamsPerGaussian, kSceneParamsPerGaussian);
        seg.head<3>().setConstant(k * lr.mean);
        seg.segment<3>(3).setConstant(k * lr.log_scale);
        seg.segment<4>(6).setConstant(k * lr.rotation);
        seg(10) = k * lr.opacity_logit;
        seg(11) = k * lr.color;
    }
    return out;
}

/// Gradient in the unconstrained parameterization (log scale, opacity logit).
inline Eigen::VectorXd pack_gradient(const GaussianScene &scene, const SceneGradient &g) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(scene.size()) * kSceneParamsPerGaussian);
    for (std::size_t i = 0; i < scene.size(); ++i) {
        auto seg = out.segment(static_cast<Eigen::Index>(i) * kSceneParamsPerGaussian, kSceneParamsPerGaussian);
        seg.head<3>() = g.mu[i];
        seg.segment<3>(3) = g.scale[i].cwiseProduct(scene[i].scale);
        seg.segment<4>(6) = g.rotation[i];
        seg(10) = g.opacity[i] * scene[i].opacity * (1.0 - scene[i].opacity);
        seg(11) = g.color[i];
    }
    return out;
}

inline void apply_scene_step(GaussianScene &scene, const Eigen::VectorXd &step) {
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const auto seg = step.segment(static_cast<Eigen::Index>(i) * kSceneParamsPerGaussian, kSceneParamsPerGaussian);
        Gaussian3D &g = scene[i];
        g.mu -= seg.head<3>();
        g.scale = g.scale.cwiseProduct((-seg.segment<3>(3)).array().exp().matrix());
        Eigen::Quaterniond q(g.rotation.w() - seg(6), g.rotation.x() - seg(7), g.rotation.y() - seg(8),
                             g.rotation.z() - seg(9));
        g.rotation = q.norm() > 1e-12 ? q.normalized() : g.rotation;
        const double logit = std::log(g.opacity / (1.0 - g.opacity)) - seg(10);
        g.opacity = std::clamp(1.0 / (1.0 + std::exp(-logit)), 1e-4, 1.0 - 1e-4);
        g.color = std::clamp(g.color - seg(11), 0.0, 1.0);
    }
}

inline Eigen::VectorXd pose_learning_rates(const LearningRates &lr, double k) {
    Eigen::VectorXd out(6);
    out << k * lr.pose_translation, k * lr.pose_translation, k * lr.pose_translation, k * lr.pose_rotation,
        k * lr.pose_rotation, k * lr.pose_rotation;
    return out;
}

/// Point on the optical axis at the median depth of the Gaussians in front of the camera.
/// Pose steps rotate about it, which separates the rotation-translation valley of
/// the photometric loss into nearly independent directions.
inline Vec3 pose_pivot(const GaussianScene &scene, const PoseSE3 &pose) {
    const PoseSE3 inv = pose.inverse();
    std::vector<double> depths;
    for (const Gaussian3D &g : scene) {
        const double z = (inv * g.mu).z();
        if (z > 0.0) {
            depths.push_back(z);
        }
    }
    if (depths.empty()) {
        return pose.translation;
    }
    auto mid = depths.begin() + static_cast<std::ptrdiff_t>(depths.size() / 2);
    std::nth_element(depths.begin(), mid, depths.end());
    return pose * Vec3(0.0, 0.0, *mid);
}

/// Left-perturbation gradient re-expressed for a rotation about `pivot`.
inline Tangent6 pivot_gradient(const Tangent6 &g, const Vec3 &pivot) {
    Tangent6 out;
    out.head<3>() = g.head<3>();
    out.tail<3>() = g.tail<3>() - pivot.cross(Vec3(g.head<3>()));
    return out;
}

inline PoseSE3 apply_pose_step(const PoseSE3 &T, const Eigen::VectorXd &step, const Vec3 &pivot) {
    const Vec3 w = -step.tail<3>();
    Tangent6 xi;
    xi.head<3>() = -step.head<3>() + pivot.cross(w);
    xi.tail<3>() = w;
    PoseSE3 out = se3::perturb_left(T, xi);
    out.rotation.normalize();
    return out;
}

} // namespace loop_detail

// ---------------------------------------------------------------------------
// Tracking and mapping

struct LoopParams {
    Duration chunk_duration = 50000;
    int window = 4;
    int init_iterations = 300;
    int track_iterations = 150;
    int map_iterations = 300;
    double divergence_factor = 10.0;
    SupervisionParams supervision;
    LearningRates lr;
    AdamParams adam;

    void validate() const {
        detail::require(chunk_duration > 0, "loop: chunk duration must be positive");
        detail::require(window >= 1, "loop: window must hold at least one chunk");
        detail::require(init_iterations >= 0 && track_iterations >= 0 && map_iterations >= 0,
                        "loop: iteration counts must be non-negative");
        detail::require(divergence_factor > 1.0, "loop: divergence factor must exceed 1");
        supervision.validate();
        lr.validate();
        adam.validate();
    }
};

struct LossRecord {
    int iter = 0;
    int chunk = 0;
    std::string phase; // init, track or map
    LossTerms loss;
};

using LossLog = std::vector<LossRecord>;

inline std::string encode_loss_log(const LossLog &log) {
    std::string out = "iter,chunk,phase,loss_edge,loss_dssim,loss_total\n";
    char buf[160];
    for (const LossRecord &r : log) {
        std::snprintf(buf, sizeof buf, "%d,%d,%s,%.9g,%.9g,%.9g\n", r.iter, r.chunk, r.phase.c_str(), r.loss.edge,
                      r.loss.dssim, r.loss.total);
        out += buf;
    }
    return out;
}

/// Chunk data the optimizer needs besides poses: events and edge map.
struct ChunkData {
    Chunk chunk;
    Image edge_map;
};

struct WindowState {
    GaussianScene scene;
    std::deque<ChunkTrajectory> trajectories; // oldest first; consecutive chunks share boundary poses
    Adam scene_optimizer;
};

struct TrackResult {
    ChunkTrajectory trajectory;
    bool failed = false;
    double initial_loss = 0.0;
    double final_loss = 0.0;
};

inline bool diverged(double loss, double initial, double factor) {
    return !std::isfinite(loss) || (initial > 0.0 && loss > factor * initial);
}

/// Optimizes T_end of a new chunk with the scene frozen. T_start is the previous
/// chunk's T_end; T_end starts from the previous relative motion applied again.
inline TrackResult track_chunk(const WindowState &prev, const ChunkData &data, const CameraIntrinsics &K,
                               const LossWeights &weights, const LoopParams &params, Rng &rng,
                               LossLog *log = nullptr) {
    params.validate();
    detail::require(!prev.trajectories.empty(), "track_chunk: window holds no optimized trajectory");
    const ChunkTrajectory &last = prev.trajectories.back();
    TrackResult out;
    out.trajectory.chunk_index = data.chunk.index;
    out.trajectory.T_start = last.T_end;
    out.trajectory.T_end = last.T_end * (last.T_start.inverse() * last.T_end);

    Adam opt(6, params.adam);
    const Vec3 pivot = loop_detail::pose_pivot(prev.scene, out.trajectory.T_end);
    for (int it = 0; it < params.track_iterations; ++it) {
        const SupervisionResult r =
            supervise_chunk(data.chunk, out.trajectory, prev.scene, data.edge_map, weights, K, params.supervision, rng);
        if (log != nullptr) {
            log->push_back({it, data.chunk.index, "track", r.loss});
        }
        if (it == 0) {
            out.initial_loss = r.loss.total;
        }
        out.final_loss = r.loss.total;
        if (diverged(r.loss.total, out.initial_loss, params.divergence_factor)) {
            out.failed = true;
            return out;
        }
        const Eigen::VectorXd step = opt.step(loop_detail::pivot_gradient(r.grad_end, pivot),
                                              loop_detail::pose_learning_rates(params.lr, params.lr.decay(it, params.track_iterations)));
        out.trajectory.T_end = loop_detail::apply_pose_step(out.trajectory.T_end, step, pivot);
    }
    return out;
}

/// Joint optimization of the in-window boundary poses and all Gaussians. The
/// oldest boundary (first T_start) is held fixed as the gauge anchor.
/// `chunks` are aligned with `window.trajectories`.
inline WindowState bundle_adjust(WindowState window, const std::vector<const ChunkData *> &chunks,
                                 const CameraIntrinsics &K, const LossWeights &weights, const LoopParams &params,
                                 int iterations, Rng &rng, LossLog *log = nullptr, const char *phase = "map") {
    params.validate();
    detail::require(!window.trajectories.empty(), "bundle_adjust: empty window");
    detail::require(chunks.size() == window.trajectories.size(), "bundle_adjust: chunk list does not match window");
    const std::size_t nc = chunks.size();
    const Eigen::Index np = static_cast<Eigen::Index>(window.scene.size()) * kSceneParamsPerGaussian;
    if (window.scene_optimizer.size() != np) {
        window.scene_optimizer = Adam(np, params.adam);
    }
    std::vector<PoseSE3> boundary(nc + 1);
    boundary[0] = window.trajectories.front().T_start;
    for (std::size_t c = 0; c < nc; ++c) {
        boundary[c + 1] = window.trajectories[c].T_end;
    }
    std::vector<Adam> pose_opt(nc + 1, Adam(6, params.adam));
    std::vector<Vec3> pivot(nc + 1);
    for (std::size_t b = 0; b <= nc; ++b) {
        pivot[b] = loop_detail::pose_pivot(window.scene, boundary[b]);
    }
    const int newest = chunks.back()->chunk.index;

    double initial = 0.0;
    for (int it = 0; it < iterations; ++it) {
        std::vector<Tangent6> g_pose(nc + 1, Tangent6::Zero());
        SceneGradient g_scene(window.scene.size());
        LossTerms loss;
        for (std::size_t c = 0; c < nc; ++c) {
            const ChunkTrajectory traj{boundary[c], boundary[c + 1], chunks[c]->chunk.index};
            const SupervisionResult r = supervise_chunk(chunks[c]->chunk, traj, window.scene, chunks[c]->edge_map,
                                                        weights, K, params.supervision, rng);
            loss += r.loss;
            g_pose[c] += r.grad_start;
            g_pose[c + 1] += r.grad_end;
            g_scene += r.scene;
        }
        if (log != nullptr) {
            log->push_back({it, newest, phase, loss});
        }
        if (it == 0) {
            initial = loss.total;
        }
        if (diverged(loss.total, initial, params.divergence_factor)) {
            throw TrackingFailure(newest, std::string(phase) + " loss diverged");
        }
        const double k = params.lr.decay(it, iterations);
        for (std::size_t b = 1; b <= nc; ++b) {
            const Eigen::VectorXd step = pose_opt[b].step(loop_detail::pivot_gradient(g_pose[b], pivot[b]),
                                                          loop_detail::pose_learning_rates(params.lr, k));
            boundary[b] = loop_detail::apply_pose_step(boundary[b], step, pivot[b]);
        }
        const Eigen::VectorXd step = window.scene_optimizer.step(
            loop_detail::pack_gradient(window.scene, g_scene),
            loop_detail::scene_learning_rates(window.scene.size(), params.lr, k));
        loop_detail::apply_scene_step(window.scene, step);
    }
    for (std::size_t c = 0; c < nc; ++c) {
        window.trajectories[c].T_start = boundary[c];
        window.trajectories[c].T_end = boundary[c + 1];
    }
    return window;
}

// ---------------------------------------------------------------------------
// Full pipeline

struct PipelineConfig {
    DetectorParams detector;
    EdgeFitParams edge_fit;
    InitBudget budget;
    InitParams init;
    double d_min = 1.0;
    double d_max = 5.0;
    LossWeights loss;
    LoopParams loop;
    std::uint64_t seed = 0;

    void validate() const {
        detector.validate();
        edge_fit.validate();
        budget.validate();
        init.validate();
        detail::require(d_min > 0.0 && d_min < d_max, "config: need 0 < init.d_min < init.d_max");
        loss.validate();
        loop.validate();
        detail::require(loop.chunk_duration >= detector.num_maps,
                        "config: chunk duration too short for the detector's sub-map count");
    }
};

struct PipelineResult {
    GaussianScene scene;
    std::vector<TimedPose> trajectory; // boundary poses at chunk start/end timestamps
    LossLog log;
    std::vector<Image> edge_maps;
};

/// Edge map of a chunk from its T equal sub-interval event maps.
inline Image chunk_edge_map(const Chunk &chunk, const DetectorParams &detector, double contrast_threshold) {
    return detect_edges(accumulate_sequence(chunk.events, chunk.t_start, chunk.t_end, detector.num_maps,
                                            contrast_threshold),
                        detector)
        .values;
}

inline PipelineResult run_pipeline(const EventStream &stream, const CameraIntrinsics &K, const PipelineConfig &config) {
    config.validate();
    K.validate();
    detail::require(stream.width() == K.width && stream.height() == K.height,
                    "run_pipeline: stream resolution does not match the camera");
    detail::require(!stream.empty(), "run_pipeline: empty event stream");
    const LoopParams &lp = config.loop;
    const double C = lp.supervision.contrast_threshold;

    std::vector<ChunkData> data;
    for (Chunk &c : chunk_stream(stream, lp.chunk_duration)) {
        Image M = chunk_edge_map(c, config.detector, C);
        data.push_back({std::move(c), std::move(M)});
    }

    PipelineResult result;
    for (const ChunkData &d : data) {
        result.edge_maps.push_back(d.edge_map);
    }
    Rng init_rng = keyed_rng(config.seed, 1);
    WindowState window;
    window.scene = initialize_gaussians(edge_gaussians_from_map(data[0].edge_map, config.edge_fit), config.budget, K,
                                        PoseSE3::identity(), config.d_min, config.d_max, init_rng, config.init);
    window.trajectories.push_back({PoseSE3::identity(), PoseSE3::identity(), 0});
    std::vector<PoseSE3> boundary{PoseSE3::identity(), PoseSE3::identity()};

    Rng rng0 = keyed_rng(config.seed, 2);
    window = bundle_adjust(std::move(window), {&data[0]}, K, config.loss, lp, lp.init_iterations, rng0, &result.log,
                           "init");
    boundary[1] = window.trajectories.back().T_end;

    for (std::size_t c = 1; c < data.size(); ++c) {
        Rng track_rng = keyed_rng(config.seed, 1000 + c);
        const TrackResult tr = track_chunk(window, data[c], K, config.loss, lp, track_rng, &result.log);
        if (tr.failed) {
            throw TrackingFailure(static_cast<int>(c), "tracking loss diverged");
        }
        window.trajectories.push_back(tr.trajectory);
        while (window.trajectories.size() > static_cast<std::size_t>(lp.window)) {
            window.trajectories.pop_front();
        }
        const std::size_t first = c + 1 - window.trajectories.size();
        std::vector<const ChunkData *> in_window;
        for (std::size_t k = first; k <= c; ++k) {
            in_window.push_back(&data[k]);
        }
        Rng map_rng = keyed_rng(config.seed, 2000 + c);
        window = bundle_adjust(std::move(window), in_window, K, config.loss, lp, lp.map_iterations, map_rng,
                               &result.log);
        boundary.resize(c + 2);
        for (std::size_t k = 0; k < window.trajectories.size(); ++k) {
            boundary[first + k + 1] = window.trajectories[k].T_end;
        }
    }

    result.scene = std::move(window.scene);
    result.trajectory.push_back({data[0].chunk.t_start, boundary[0]});
    for (std::size_t c = 0; c < data.size(); ++c) {
        result.trajectory.push_back({data[c].chunk.t_end, boundary[c + 1]});
    }
    return result;
}

} // namespace edgesplat
