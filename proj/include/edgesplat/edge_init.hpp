// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Edge-guided Gaussian initialization: 2D edge Gaussians from an edge map,
// lifted to 3D by inverse-depth sampling along their viewing rays and mixed
// with random frustum points.

#include "edgesplat/core/camera.hpp"
#include "edgesplat/core/error.hpp"
#include "edgesplat/core/grid.hpp"
#include "edgesplat/core/pose.hpp"
#include "edgesplat/core/random.hpp"
#include "edgesplat/edge_detect.hpp"
#include "edgesplat/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

namespace edgesplat {

struct EdgeGaussian2D {
    Vec2 center = Vec2::Zero();
    Vec2 normal = Vec2::UnitX();
    double tangent_extent = 0.5;
    double normal_extent = 0.5;
    int support_count = 1;
};

struct EdgeNormal {
    Vec2 normal = Vec2::UnitX();
    bool degenerate = false;
};

/// Pixel centers with confidence >= confidence_min, in raster order.
inline std::vector<Vec2> extract_edge_points(const Image &edge_map, double confidence_min) {
    detail::require(confidence_min > 0.0 && confidence_min <= 1.0, "extract_edge_points: confidence must lie in (0, 1]");
    std::vector<Vec2> points;
    for (int y = 0; y < edge_map.height(); ++y) {
        for (int x = 0; x < edge_map.width(); ++x) {
            if (edge_map(x, y) >= confidence_min) {
                points.emplace_back(x, y);
            }
        }
    }
    return points;
}

inline std::vector<Vec2> extract_edge_points(const EdgeMap &edge_map, double confidence_min) {
    return extract_edge_points(edge_map.values, confidence_min);
}

/// Axial direction canonicalization: y >= 0, and x >= 0 when y vanishes.
inline Vec2 canonical_normal(Vec2 n) {
    constexpr double eps = 1e-12;
    if (n.y() < -eps || (std::abs(n.y()) <= eps && n.x() < 0.0)) {
        n = -n;
    }
    if (std::abs(n.y()) <= eps) {
        n = {n.x() < 0.0 ? -1.0 : 1.0, 0.0};
    }
    return n;
}

namespace init_detail {

struct Neighbor {
    double dist2;
    double y;
    double x;
    bool operator<(const Neighbor &o) const {
        if (dist2 != o.dist2) {
            return dist2 < o.dist2;
        }
        if (y != o.y) {
            return y < o.y;
        }
        return x < o.x;
    }
};

/// Tangent angle in (-pi/2, pi/2] of the point set's principal axis, or NaN for zero scatter.
inline double principal_angle(const std::vector<Vec2> &pts) {
    Vec2 mean = Vec2::Zero();
    for (const Vec2 &p : pts) {
        mean += p;
    }
    mean /= static_cast<double>(pts.size());
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (const Vec2 &p : pts) {
        const Vec2 d = p - mean;
        sxx += d.x() * d.x();
        syy += d.y() * d.y();
        sxy += d.x() * d.y();
    }
    if (sxx + syy <= 1e-12) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return 0.5 * std::atan2(2.0 * sxy, sxx - syy);
}

} // namespace init_detail

/// Unit tangent per point from PCA over the point and its k nearest neighbors
/// (ties broken by y then x, so the result ignores input order). Zero scatter
/// gives tangent (0, 1) and a degenerate flag.
inline std::vector<EdgeNormal> edge_tangents(const std::vector<Vec2> &points, int k) {
    detail::require(k >= 2, "edge_normals: k must be at least 2");
    if (points.size() < static_cast<std::size_t>(k) + 1) {
        throw InvalidArgument("edge_normals: need at least k + 1 = " + std::to_string(k + 1) + " points, got " +
                              std::to_string(points.size()));
    }
    std::vector<EdgeNormal> out(points.size());
    std::vector<init_detail::Neighbor> cand(points.size());
    std::vector<Vec2> hood;
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = 0; j < points.size(); ++j) {
            cand[j] = {(points[j] - points[i]).squaredNorm(), points[j].y(), points[j].x()};
        }
        const auto mid = cand.begin() + k + 1;
        std::partial_sort(cand.begin(), mid, cand.end());
        hood.clear();
        for (auto it = cand.begin(); it != mid; ++it) {
            hood.emplace_back(it->x, it->y);
        }
        const double theta = init_detail::principal_angle(hood);
        if (std::isnan(theta)) {
            out[i] = {Vec2(0.0, 1.0), true};
        } else {
            out[i] = {Vec2(std::cos(theta), std::sin(theta)), false};
        }
    }
    return out;
}

/// Unit normals perpendicular to the PCA tangents, canonicalized.
inline std::vector<EdgeNormal> edge_normals(const std::vector<Vec2> &points, int k) {
    auto result = edge_tangents(points, k);
    for (EdgeNormal &e : result) {
        e.normal = e.degenerate ? Vec2::UnitX() : canonical_normal(Vec2(-e.normal.y(), e.normal.x()));
    }
    return result;
}

/// Circular standard deviation of axial directions (angles modulo pi), in radians.
inline double axial_circular_std(const std::vector<Vec2> &normals) {
    detail::require(!normals.empty(), "axial_circular_std: empty input");
    double c = 0.0;
    double s = 0.0;
    for (const Vec2 &n : normals) {
        const double a = 2.0 * std::atan2(n.y(), n.x());
        c += std::cos(a);
        s += std::sin(a);
    }
    const double r = std::hypot(c, s) / static_cast<double>(normals.size());
    if (r <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 0.5 * std::sqrt(std::max(0.0, -2.0 * std::log(std::min(r, 1.0))));
}

/// Axial mean direction, canonicalized.
inline Vec2 axial_mean(const std::vector<Vec2> &normals) {
    double c = 0.0;
    double s = 0.0;
    for (const Vec2 &n : normals) {
        const double a = 2.0 * std::atan2(n.y(), n.x());
        c += std::cos(a);
        s += std::sin(a);
    }
    const double half = 0.5 * std::atan2(s, c);
    return canonical_normal(Vec2(std::cos(half), std::sin(half)));
}

namespace init_detail {

struct TileFitter {
    const std::vector<Vec2> &points;
    const std::vector<Vec2> &normals;
    double theta;
    int max_depth;
    std::vector<EdgeGaussian2D> out;

    void emit(const std::vector<std::size_t> &idx, const std::vector<Vec2> &ns) {
        EdgeGaussian2D g;
        Vec2 mean = Vec2::Zero();
        for (std::size_t i : idx) {
            mean += points[i];
        }
        mean /= static_cast<double>(idx.size());
        g.center = mean;
        g.normal = axial_mean(ns);
        const Vec2 t(-g.normal.y(), g.normal.x());
        double vt = 0.0;
        double vn = 0.0;
        for (std::size_t i : idx) {
            const Vec2 d = points[i] - mean;
            vt += d.dot(t) * d.dot(t);
            vn += d.dot(g.normal) * d.dot(g.normal);
        }
        const double n = static_cast<double>(idx.size());
        g.normal_extent = std::max(0.5, std::sqrt(vn / n));
        g.tangent_extent = std::max(g.normal_extent, std::max(0.5, std::sqrt(vt / n)));
        g.support_count = static_cast<int>(idx.size());
        out.push_back(g);
    }

    void fit(const std::vector<std::size_t> &candidates, int x0, int y0, int w, int h, int depth) {
        std::vector<std::size_t> idx;
        for (std::size_t i : candidates) {
            const double x = points[i].x();
            const double y = points[i].y();
            if (x >= x0 - 0.5 && x < x0 + w - 0.5 && y >= y0 - 0.5 && y < y0 + h - 0.5) {
                idx.push_back(i);
            }
        }
        if (idx.empty()) {
            return;
        }
        std::vector<Vec2> ns;
        ns.reserve(idx.size());
        for (std::size_t i : idx) {
            ns.push_back(normals[i]);
        }
        if (depth >= max_depth || w < 2 || h < 2 || axial_circular_std(ns) < theta) {
            emit(idx, ns);
            return;
        }
        const int w0 = w / 2;
        const int h0 = h / 2;
        fit(idx, x0, y0, w0, h0, depth + 1);
        fit(idx, x0 + w0, y0, w - w0, h0, depth + 1);
        fit(idx, x0, y0 + h0, w0, h - h0, depth + 1);
        fit(idx, x0 + w0, y0 + h0, w - w0, h - h0, depth + 1);
    }
};

} // namespace init_detail

/// Recursive tiling over a width x height image: s x s tiles anchored at
/// multiples of s, split into quadrants while the axial spread of normals is
/// at least theta and the depth is below max_depth.
inline std::vector<EdgeGaussian2D> fit_edge_gaussians(const std::vector<Vec2> &points, const std::vector<Vec2> &normals,
                                                      int tile_size, double angle_threshold, int max_depth, int width,
                                                      int height) {
    detail::require(tile_size >= 2, "fit_edge_gaussians: tile size must be at least 2");
    detail::require(max_depth >= 0, "fit_edge_gaussians: max depth must be non-negative");
    detail::require(angle_threshold >= 0.0, "fit_edge_gaussians: angle threshold must be non-negative");
    detail::require(width > 0 && height > 0, "fit_edge_gaussians: resolution must be positive");
    detail::require(points.size() == normals.size(), "fit_edge_gaussians: points and normals differ in length");
    init_detail::TileFitter fitter{points, normals, angle_threshold, max_depth, {}};
    std::vector<std::size_t> all(points.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        all[i] = i;
    }
    for (int y0 = 0; y0 < height; y0 += tile_size) {
        for (int x0 = 0; x0 < width; x0 += tile_size) {
            fitter.fit(all, x0, y0, std::min(tile_size, width - x0), std::min(tile_size, height - y0), 0);
        }
    }
    return std::move(fitter.out);
}

inline std::vector<EdgeGaussian2D> fit_edge_gaussians(const std::vector<Vec2> &points,
                                                      const std::vector<EdgeNormal> &normals, int tile_size,
                                                      double angle_threshold, int max_depth, int width, int height) {
    std::vector<Vec2> ns;
    ns.reserve(normals.size());
    for (const EdgeNormal &n : normals) {
        ns.push_back(n.normal);
    }
    return fit_edge_gaussians(points, ns, tile_size, angle_threshold, max_depth, width, height);
}

/// d = 1 / (1/d_max + u (1/d_min - 1/d_max)); density proportional to 1/d^2.
inline double sample_inverse_depth(double u, double d_min, double d_max) {
    if (!(d_min > 0.0 && d_min < d_max)) {
        throw InvalidArgument("sample_inverse_depth: need 0 < d_min < d_max");
    }
    detail::require(u >= 0.0 && u <= 1.0, "sample_inverse_depth: u must lie in [0, 1]");
    if (u == 0.0) {
        return d_max;
    }
    if (u == 1.0) {
        return d_min;
    }
    const double d = 1.0 / (1.0 / d_max + u * (1.0 / d_min - 1.0 / d_max));
    return std::clamp(d, d_min, d_max);
}

/// World point at camera-frame depth d along the ray of `pixel`.
inline Vec3 backproject(const Vec2 &pixel, double d, const CameraIntrinsics &K, const PoseSE3 &pose) {
    detail::require(d > 0.0, "backproject: depth must be positive");
    return pose * (d * K.ray(pixel));
}

struct InitBudget {
    int n_total = 1000;
    double r_edge = 0.3;

    void validate() const {
        detail::require(n_total > 0, "init budget: total count must be positive");
        detail::require(r_edge >= 0.0 && r_edge <= 1.0, "init budget: edge ratio must lie in [0, 1]");
    }
    /// floor(r_edge * N_total); the tiny epsilon keeps products like 0.29 * 100 at 29.
    int n_edge() const { return static_cast<int>(std::floor(r_edge * n_total + 1e-9)); }
    int n_random() const { return n_total - n_edge(); }
};

struct InitParams {
    double opacity = 0.5;
    double color = 0.5;
    double edge_scale_px = 1.5;   // projected size of edge Gaussians along the edge and the ray
    double edge_thin_ratio = 0.3; // normal-axis scale relative to edge_scale_px
    double random_scale_px = 2.0; // projected size of isotropic random Gaussians

    void validate() const {
        detail::require(opacity > 0.0 && opacity < 1.0, "init: opacity must lie in (0, 1)");
        detail::require(color >= 0.0 && color <= 1.0, "init: color must lie in [0, 1]");
        detail::require(edge_scale_px > 0.0 && random_scale_px > 0.0, "init: scales must be positive");
        detail::require(edge_thin_ratio > 0.0 && edge_thin_ratio <= 1.0, "init: thin ratio must lie in (0, 1]");
    }
};

/// Camera-frame rotation whose first axis is the edge normal lifted to 3D and
/// made orthogonal to the viewing ray, second the edge tangent, third the ray.
inline Mat3 edge_frame(const Vec2 &pixel, const Vec2 &normal, const CameraIntrinsics &K) {
    const Vec3 r = K.ray(pixel).normalized();
    Vec3 a(normal.x() / K.fx, normal.y() / K.fy, 0.0);
    a -= a.dot(r) * r;
    a.normalize();
    Mat3 R;
    R.col(0) = a;
    R.col(1) = r.cross(a);
    R.col(2) = r;
    return R;
}

/// Edge Gaussians first (n_d samples each plus one leftover sample for the
/// first few), then random frustum Gaussians. Every Gaussian draws from its
/// own generator keyed by its index under one base seed taken from `rng`.
inline GaussianScene initialize_gaussians(const std::vector<EdgeGaussian2D> &edges, const InitBudget &budget,
                                          const CameraIntrinsics &K, const PoseSE3 &pose, double d_min, double d_max,
                                          Rng &rng, const InitParams &params = {}) {
    budget.validate();
    params.validate();
    K.validate();
    if (!(d_min > 0.0 && d_min < d_max)) {
        throw InvalidArgument("initialize_gaussians: need 0 < d_min < d_max");
    }
    const std::uint64_t base = rng();
    const int n_g = static_cast<int>(edges.size());
    const int n_edge = n_g > 0 ? budget.n_edge() : 0;
    const int n_random = budget.n_total - n_edge;
    const Mat3 Rw = pose.rotation_matrix();

    GaussianScene scene;
    scene.reserve(static_cast<std::size_t>(budget.n_total));
    if (n_g > 0) {
        const int n_d = n_edge / n_g;
        const int leftover = n_edge - n_d * n_g;
        for (int i = 0; i < n_g; ++i) {
            const EdgeGaussian2D &e = edges[static_cast<std::size_t>(i)];
            Rng local = keyed_rng(base, static_cast<std::uint64_t>(i));
            const Mat3 Rc = edge_frame(e.center, e.normal, K);
            const Eigen::Quaterniond q(Rw * Rc);
            const int count = n_d + (i < leftover ? 1 : 0);
            for (int j = 0; j < count; ++j) {
                const double d = sample_inverse_depth(uniform01(local), d_min, d_max);
                Gaussian3D g;
                g.mu = backproject(e.center, d, K, pose);
                const double s = params.edge_scale_px * d / K.fx;
                g.scale = Vec3(params.edge_thin_ratio * s, s, s);
                g.rotation = q.normalized();
                g.opacity = params.opacity;
                g.color = params.color;
                g.origin = GaussianOrigin::edge;
                scene.push_back(g);
            }
        }
    }
    const double c0 = d_min * d_min * d_min;
    const double c1 = d_max * d_max * d_max;
    for (int j = 0; j < n_random; ++j) {
        Rng local = keyed_rng(base, (std::uint64_t{1} << 32) + static_cast<std::uint64_t>(j));
        const double px = -0.5 + K.width * uniform01(local);
        const double py = -0.5 + K.height * uniform01(local);
        const double d = std::clamp(std::cbrt(c0 + uniform01(local) * (c1 - c0)), d_min, d_max);
        Gaussian3D g;
        g.mu = backproject({px, py}, d, K, pose);
        g.scale = Vec3::Constant(params.random_scale_px * d / K.fx);
        g.rotation = pose.rotation;
        g.opacity = params.opacity;
        g.color = params.color;
        g.origin = GaussianOrigin::random;
        scene.push_back(g);
    }
    return scene;
}

/// Edge map to 2D edge Gaussians: point extraction, PCA normals, recursive tiling.
struct EdgeFitParams {
    double confidence_min = 0.5;
    int k = 8;
    int tile_size = 32;
    double angle_threshold = 0.2;
    int max_depth = 3;

    void validate() const {
        detail::require(confidence_min > 0.0 && confidence_min <= 1.0, "init: confidence must lie in (0, 1]");
        detail::require(k >= 2, "init: k must be at least 2");
        detail::require(tile_size >= 2, "init: tile size must be at least 2");
        detail::require(angle_threshold > 0.0 && angle_threshold < std::numbers::pi / 2,
                        "init: angle threshold must lie in (0, pi/2)");
        detail::require(max_depth >= 0, "init: max depth must be non-negative");
    }
};

/// Fewer than k + 1 edge points yields no edge Gaussians.
inline std::vector<EdgeGaussian2D> edge_gaussians_from_map(const Image &edge_map, const EdgeFitParams &p) {
    p.validate();
    const auto points = extract_edge_points(edge_map, p.confidence_min);
    if (points.size() < static_cast<std::size_t>(p.k) + 1) {
        return {};
    }
    return fit_edge_gaussians(points, edge_normals(points, p.k), p.tile_size, p.angle_threshold, p.max_depth,
                              edge_map.width(), edge_map.height());
}

} // namespace edgesplat
