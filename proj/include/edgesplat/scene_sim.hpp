// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Synthetic event camera used as ground truth: a ray-cast grayscale renderer
// for textured rectangles and capsule line segments, the ideal
// threshold-crossing event model, uniform background noise, and oracle edge masks.

#include "edgesplat/core/camera.hpp"
#include "edgesplat/core/error.hpp"
#include "edgesplat/core/filters.hpp"
#include "edgesplat/core/grid.hpp"
#include "edgesplat/core/pose.hpp"
#include "edgesplat/core/random.hpp"
#include "edgesplat/event_core.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

namespace edgesplat::sim {

enum class TextureKind { constant, checker, stripes, sinusoid };

/// Albedo over plane coordinates (u, v) in meters from the plane center.
///   constant: a
///   checker:  a or b on square cells of side `period`
///   stripes:  a or b on bands of width `period` along u
///   sinusoid: a + b sin(2 pi u / period)
struct Texture {
    TextureKind kind = TextureKind::constant;
    double a = 0.5;
    double b = 0.5;
    double period = 1.0;

    double eval(double u, double v) const {
        switch (kind) {
        case TextureKind::constant:
            return a;
        case TextureKind::checker: {
            const auto cu = static_cast<long long>(std::floor(u / period));
            const auto cv = static_cast<long long>(std::floor(v / period));
            return ((cu + cv) % 2 == 0) ? a : b;
        }
        case TextureKind::stripes:
            return (static_cast<long long>(std::floor(u / period)) % 2 == 0) ? a : b;
        case TextureKind::sinusoid:
            return a + b * std::sin(2.0 * std::numbers::pi * u / period);
        }
        return a;
    }

    double min_value() const {
        switch (kind) {
        case TextureKind::constant:
            return a;
        case TextureKind::sinusoid:
            return a - std::abs(b);
        default:
            return std::min(a, b);
        }
    }

    double max_value() const {
        switch (kind) {
        case TextureKind::constant:
            return a;
        case TextureKind::sinusoid:
            return a + std::abs(b);
        default:
            return std::max(a, b);
        }
    }
};

/// Rectangle spanned by unit axes u, v around `center`.
struct Plane {
    Vec3 center = Vec3::Zero();
    Vec3 axis_u = Vec3::UnitX();
    Vec3 axis_v = Vec3::UnitY();
    double half_u = 1.0;
    double half_v = 1.0;
    Texture texture;

    Vec3 normal() const { return axis_u.cross(axis_v); }
    Vec3 corner(double su, double sv) const { return center + su * half_u * axis_u + sv * half_v * axis_v; }
};

/// Capsule around the segment p0-p1.
struct Segment {
    Vec3 p0 = Vec3::Zero();
    Vec3 p1 = Vec3::UnitX();
    double radius = 0.01;
    double albedo = 0.2;
};

struct Bounds {
    Vec3 min = Vec3::Constant(-10.0);
    Vec3 max = Vec3::Constant(10.0);

    bool contains(const Vec3 &p, double slack = 1e-9) const {
        return (p.array() >= min.array() - slack).all() && (p.array() <= max.array() + slack).all();
    }
};

struct SyntheticScene {
    double background = 0.8;
    Bounds bounds;
    std::vector<Plane> planes;
    std::vector<Segment> segments;

    void validate() const {
        detail::require(background > 0.0 && background <= 1.0, "scene: background must lie in (0, 1]");
        for (const Plane &p : planes) {
            detail::require(std::abs(p.axis_u.norm() - 1.0) < 1e-9 && std::abs(p.axis_v.norm() - 1.0) < 1e-9,
                            "scene: plane axes must be unit vectors");
            detail::require(std::abs(p.axis_u.dot(p.axis_v)) < 1e-9, "scene: plane axes must be orthogonal");
            detail::require(p.half_u > 0.0 && p.half_v > 0.0, "scene: plane extents must be positive");
            detail::require(p.texture.min_value() > 0.0 && p.texture.max_value() <= 1.0,
                            "scene: plane albedo must lie in (0, 1]");
            detail::require(p.texture.kind == TextureKind::constant || p.texture.period > 0.0,
                            "scene: texture period must be positive");
            for (double su : {-1.0, 1.0}) {
                for (double sv : {-1.0, 1.0}) {
                    detail::require(bounds.contains(p.corner(su, sv)), "scene: plane outside the declared bounds");
                }
            }
        }
        for (const Segment &s : segments) {
            detail::require(s.radius > 0.0, "scene: segment radius must be positive");
            detail::require(s.albedo > 0.0 && s.albedo <= 1.0, "scene: segment albedo must lie in (0, 1]");
            detail::require(bounds.contains(s.p0) && bounds.contains(s.p1), "scene: segment outside the declared bounds");
        }
    }
};

struct Hit {
    double distance = std::numeric_limits<double>::infinity(); // along the unit ray
    double albedo = 0.0;
};

namespace raycast {

inline double intersect_plane(const Plane &plane, const Vec3 &origin, const Vec3 &dir, double &albedo) {
    const Vec3 n = plane.normal();
    const double denom = n.dot(dir);
    if (std::abs(denom) < 1e-14) {
        return -1.0;
    }
    const double t = n.dot(plane.center - origin) / denom;
    if (t <= 0.0) {
        return -1.0;
    }
    const Vec3 local = origin + t * dir - plane.center;
    const double u = local.dot(plane.axis_u);
    const double v = local.dot(plane.axis_v);
    if (std::abs(u) > plane.half_u || std::abs(v) > plane.half_v) {
        return -1.0;
    }
    albedo = plane.texture.eval(u, v);
    return t;
}

/// Ray/capsule intersection for a unit direction; -1 on miss.
inline double intersect_capsule(const Segment &s, const Vec3 &origin, const Vec3 &dir) {
    const Vec3 ba = s.p1 - s.p0;
    const Vec3 oa = origin - s.p0;
    const double baba = ba.dot(ba);
    const double bard = ba.dot(dir);
    const double baoa = ba.dot(oa);
    const double rdoa = dir.dot(oa);
    const double oaoa = oa.dot(oa);
    const double r2 = s.radius * s.radius;
    const double a = baba - bard * bard;
    const double b = baba * rdoa - baoa * bard;
    const double c = baba * oaoa - baoa * baoa - r2 * baba;
    double h = b * b - a * c;
    if (h >= 0.0 && a > 1e-300) {
        const double t = (-b - std::sqrt(h)) / a;
        const double y = baoa + t * bard;
        if (y > 0.0 && y < baba) {
            return t > 0.0 ? t : -1.0;
        }
        const Vec3 oc = (y <= 0.0) ? oa : Vec3(origin - s.p1);
        const double bb = dir.dot(oc);
        const double cc = oc.dot(oc) - r2;
        h = bb * bb - cc;
        if (h > 0.0) {
            const double t2 = -bb - std::sqrt(h);
            return t2 > 0.0 ? t2 : -1.0;
        }
        return -1.0;
    }
    // Ray parallel to the axis: only the caps can be hit.
    double best = -1.0;
    for (const Vec3 &p : {s.p0, s.p1}) {
        const Vec3 oc = origin - p;
        const double bb = dir.dot(oc);
        const double cc = oc.dot(oc) - r2;
        const double hh = bb * bb - cc;
        if (hh > 0.0) {
            const double t = -bb - std::sqrt(hh);
            if (t > 0.0 && (best < 0.0 || t < best)) {
                best = t;
            }
        }
    }
    return best;
}

inline double point_segment_distance(const Vec3 &p, const Vec3 &a, const Vec3 &b) {
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (a + t * ab - p).norm();
}

} // namespace raycast

/// Nearest intersection along a unit-direction ray.
inline std::optional<Hit> cast_ray(const SyntheticScene &scene, const Vec3 &origin, const Vec3 &dir) {
    Hit best;
    bool found = false;
    for (const Plane &p : scene.planes) {
        double albedo = 0.0;
        const double t = raycast::intersect_plane(p, origin, dir, albedo);
        if (t > 0.0 && t < best.distance) {
            best = {t, albedo};
            found = true;
        }
    }
    for (const Segment &s : scene.segments) {
        const double t = raycast::intersect_capsule(s, origin, dir);
        if (t > 0.0 && t < best.distance) {
            best = {t, s.albedo};
            found = true;
        }
    }
    return found ? std::optional<Hit>(best) : std::nullopt;
}

inline void require_camera_outside(const SyntheticScene &scene, const PoseSE3 &pose) {
    for (const Segment &s : scene.segments) {
        if (raycast::point_segment_distance(pose.translation, s.p0, s.p1) <= s.radius) {
            throw InvalidArgument("render: camera center lies inside a segment primitive");
        }
    }
}

/// Pinhole render with z-buffered ray casting. `supersample` x `supersample`
/// rays per pixel on a regular sub-grid are box-averaged.
inline Image render_brightness(const SyntheticScene &scene, const PoseSE3 &pose, const CameraIntrinsics &K,
                               int supersample = 1) {
    K.validate();
    detail::require(supersample >= 1, "render: supersample must be >= 1");
    require_camera_outside(scene, pose);
    const Mat3 R = pose.rotation_matrix();
    const Vec3 origin = pose.translation;
    Image image(K.width, K.height, scene.background);
    const double step = 1.0 / supersample;
    const double inv_n = 1.0 / (supersample * supersample);
    for (int y = 0; y < K.height; ++y) {
        for (int x = 0; x < K.width; ++x) {
            double acc = 0.0;
            for (int sy = 0; sy < supersample; ++sy) {
                for (int sx = 0; sx < supersample; ++sx) {
                    const Vec2 px(x - 0.5 + (sx + 0.5) * step, y - 0.5 + (sy + 0.5) * step);
                    const Vec3 dir = (R * K.ray(px)).normalized();
                    const auto hit = cast_ray(scene, origin, dir);
                    acc += hit ? hit->albedo : scene.background;
                }
            }
            image(x, y) = acc * inv_n;
        }
    }
    return image;
}

/// Camera-frame depth (z) of the first surface through each pixel center; +inf on miss.
inline Image render_depth(const SyntheticScene &scene, const PoseSE3 &pose, const CameraIntrinsics &K) {
    const Mat3 R = pose.rotation_matrix();
    Image depth(K.width, K.height, std::numeric_limits<double>::infinity());
    for (int y = 0; y < K.height; ++y) {
        for (int x = 0; x < K.width; ++x) {
            const Vec3 ray = K.ray(Vec2(x, y));
            const auto hit = cast_ray(scene, pose.translation, (R * ray).normalized());
            if (hit) {
                depth(x, y) = hit->distance / ray.norm();
            }
        }
    }
    return depth;
}

/// Pose at time t from a time-sorted trajectory (clamped at the ends).
inline PoseSE3 pose_at(const std::vector<TimedPose> &trajectory, Timestamp t) {
    detail::require(!trajectory.empty(), "pose_at: empty trajectory");
    if (t <= trajectory.front().t_us) {
        return trajectory.front().pose;
    }
    if (t >= trajectory.back().t_us) {
        return trajectory.back().pose;
    }
    const auto it = std::upper_bound(trajectory.begin(), trajectory.end(), t,
                                     [](Timestamp v, const TimedPose &s) { return v < s.t_us; });
    const TimedPose &b = *it;
    const TimedPose &a = *(it - 1);
    const double alpha = static_cast<double>(t - a.t_us) / static_cast<double>(b.t_us - a.t_us);
    return interpolate(a.pose, b.pose, alpha);
}

/// Ideal event generation over frames rendered every `frame_dt` along the trajectory.
/// Per pixel, log brightness is linear between frames; an event of sign(change) fires each
/// time it departs from the pixel's reference level by one threshold, and the reference
/// then moves by exactly one threshold (the residual carries forward).
/// `render(pose)` must return an Image with strictly positive values.
template <typename RenderFn>
    requires std::invocable<RenderFn &, const PoseSE3 &>
EventStream generate_ideal_events(RenderFn &&render, const std::vector<TimedPose> &trajectory,
                                  const CameraIntrinsics &K, double contrast_threshold, Duration frame_dt) {
    detail::require(trajectory.size() >= 2, "generate_ideal_events: need at least two trajectory samples");
    detail::require(contrast_threshold > 0.0, "generate_ideal_events: contrast threshold must be positive");
    detail::require(frame_dt > 0, "generate_ideal_events: frame_dt must be positive");
    for (std::size_t i = 1; i < trajectory.size(); ++i) {
        detail::require(trajectory[i].t_us > trajectory[i - 1].t_us,
                                   "generate_ideal_events: trajectory timestamps must increase");
    }
    K.validate();
    const Timestamp t_begin = trajectory.front().t_us;
    const Timestamp t_end = trajectory.back().t_us;

    auto log_image = [&](Timestamp t) {
        Image img = render(pose_at(trajectory, t));
        detail::require(img.width() == K.width && img.height() == K.height,
                                   "generate_ideal_events: renderer resolution mismatch");
        for (double &v : img) {
            detail::require(v > 0.0, "generate_ideal_events: renderer produced a non-positive pixel");
            v = std::log(v);
        }
        return img;
    };

    const double tol = 1e-9 * contrast_threshold;
    Image prev = log_image(t_begin);
    Image reference = prev;
    std::vector<Event> events;
    for (Timestamp t0 = t_begin; t0 < t_end;) {
        const Timestamp t1 = std::min(t0 + frame_dt, t_end);
        const Image next = log_image(t1);
        const double span = static_cast<double>(t1 - t0);
        for (int y = 0; y < K.height; ++y) {
            for (int x = 0; x < K.width; ++x) {
                const double l0 = prev(x, y);
                const double l1 = next(x, y);
                double &ref = reference(x, y);
                while (true) {
                    int polarity = 0;
                    if (l1 - ref >= contrast_threshold - tol) {
                        polarity = 1;
                    } else if (ref - l1 >= contrast_threshold - tol) {
                        polarity = -1;
                    } else {
                        break;
                    }
                    const double level = ref + polarity * contrast_threshold;
                    const double f = (l1 != l0) ? std::clamp((level - l0) / (l1 - l0), 0.0, 1.0) : 1.0;
                    Timestamp t = t0 + static_cast<Timestamp>(std::floor(f * span));
                    t = std::clamp(t, t_begin, t_end - 1);
                    events.push_back({t, x, y, polarity});
                    ref = level;
                }
            }
        }
        prev = next;
        t0 = t1;
    }
    std::sort(events.begin(), events.end(), event_less);
    return EventStream(K.width, K.height, std::move(events), TimeSpan{t_begin, t_end});
}

inline EventStream generate_ideal_events(const SyntheticScene &scene, const std::vector<TimedPose> &trajectory,
                                         const CameraIntrinsics &K, double contrast_threshold, Duration frame_dt,
                                         int supersample = 1) {
    scene.validate();
    return generate_ideal_events(
        [&](const PoseSE3 &pose) { return render_brightness(scene, pose, K, supersample); }, trajectory, K,
        contrast_threshold, frame_dt);
}

/// Adds events uniform in space and time with random polarity at `noise_rate`
/// events per pixel per second; the count is Poisson distributed.
inline EventStream inject_noise(const EventStream &stream, double noise_rate, Rng &rng) {
    detail::require(noise_rate >= 0.0, "inject_noise: rate must be non-negative");
    const auto span = stream.span();
    if (noise_rate == 0.0 || !span || span->duration() <= 0) {
        return stream;
    }
    const double seconds = static_cast<double>(span->duration()) * 1e-6;
    const double expected = noise_rate * seconds * stream.width() * stream.height();
    std::poisson_distribution<long long> count_dist(expected);
    const long long count = count_dist(rng);
    std::uniform_int_distribution<Timestamp> t_dist(span->begin, span->end - 1);
    std::uniform_int_distribution<int> x_dist(0, stream.width() - 1);
    std::uniform_int_distribution<int> y_dist(0, stream.height() - 1);
    std::bernoulli_distribution sign_dist(0.5);
    std::vector<Event> events = stream.events();
    events.reserve(events.size() + static_cast<std::size_t>(count));
    for (long long i = 0; i < count; ++i) {
        Event e;
        e.t = t_dist(rng);
        e.x = x_dist(rng);
        e.y = y_dist(rng);
        e.polarity = sign_dist(rng) ? 1 : -1;
        events.push_back(e);
    }
    std::sort(events.begin(), events.end(), event_less);
    return EventStream(stream.width(), stream.height(), std::move(events), stream.declared_span());
}

/// Noise rate that adds as many noise events as `signal_events` over the span.
inline double matched_noise_rate(std::size_t signal_events, const TimeSpan &span, int width, int height) {
    const double seconds = static_cast<double>(span.duration()) * 1e-6;
    return static_cast<double>(signal_events) / (seconds * width * height);
}

/// 3D segments on which the scene has an albedo discontinuity or a silhouette:
/// plane borders, checker/stripe boundaries, and segment center lines.
inline std::vector<std::pair<Vec3, Vec3>> edge_segments(const SyntheticScene &scene) {
    std::vector<std::pair<Vec3, Vec3>> out;
    for (const Plane &p : scene.planes) {
        out.emplace_back(p.corner(-1, -1), p.corner(1, -1));
        out.emplace_back(p.corner(1, -1), p.corner(1, 1));
        out.emplace_back(p.corner(1, 1), p.corner(-1, 1));
        out.emplace_back(p.corner(-1, 1), p.corner(-1, -1));
        const Texture &tex = p.texture;
        if ((tex.kind == TextureKind::checker || tex.kind == TextureKind::stripes) && tex.a != tex.b) {
            const auto k0 = static_cast<long long>(std::ceil(-p.half_u / tex.period));
            const auto k1 = static_cast<long long>(std::floor(p.half_u / tex.period));
            for (long long k = k0; k <= k1; ++k) {
                const double u = k * tex.period;
                if (std::abs(u) >= p.half_u) {
                    continue;
                }
                out.emplace_back(p.center + u * p.axis_u - p.half_v * p.axis_v,
                                 p.center + u * p.axis_u + p.half_v * p.axis_v);
            }
            if (tex.kind == TextureKind::checker) {
                const auto m0 = static_cast<long long>(std::ceil(-p.half_v / tex.period));
                const auto m1 = static_cast<long long>(std::floor(p.half_v / tex.period));
                for (long long m = m0; m <= m1; ++m) {
                    const double v = m * tex.period;
                    if (std::abs(v) >= p.half_v) {
                        continue;
                    }
                    out.emplace_back(p.center - p.half_u * p.axis_u + v * p.axis_v,
                                     p.center + p.half_u * p.axis_u + v * p.axis_v);
                }
            }
        }
    }
    for (const Segment &s : scene.segments) {
        out.emplace_back(s.p0, s.p1);
    }
    return out;
}

/// Marks the pixel nearest to every visible point of the projected edge segments
/// and dilates by a disc of radius `dilation_px`.
inline BinaryMask ground_truth_edge_mask(const SyntheticScene &scene, const PoseSE3 &pose, const CameraIntrinsics &K,
                                         int dilation_px) {
    detail::require(dilation_px >= 0, "ground_truth_edge_mask: dilation must be non-negative");
    K.validate();
    constexpr double kNear = 1e-3;
    const Image depth = render_depth(scene, pose, K);
    const PoseSE3 world_to_camera = pose.inverse();
    double max_radius = 0.0;
    for (const Segment &s : scene.segments) {
        max_radius = std::max(max_radius, s.radius);
    }
    BinaryMask mask(K.width, K.height, 0);
    for (const auto &[a_world, b_world] : edge_segments(scene)) {
        Vec3 a = world_to_camera * a_world;
        Vec3 b = world_to_camera * b_world;
        if (a.z() < kNear && b.z() < kNear) {
            continue;
        }
        // Clip to the near plane.
        if (a.z() < kNear) {
            a = a + (kNear - a.z()) / (b.z() - a.z()) * (b - a);
        } else if (b.z() < kNear) {
            b = b + (kNear - b.z()) / (a.z() - b.z()) * (a - b);
        }
        const double px_len = (K.project(a) - K.project(b)).norm();
        const double zr = std::max(a.z(), b.z()) / std::min(a.z(), b.z());
        const auto samples = static_cast<long long>(std::min(4.0 * px_len * zr + 2.0, 2e5));
        for (long long i = 0; i <= samples; ++i) {
            const Vec3 p = a + (static_cast<double>(i) / samples) * (b - a);
            const Vec2 uv = K.project(p);
            const auto px = static_cast<int>(std::lround(uv.x()));
            const auto py = static_cast<int>(std::lround(uv.y()));
            if (!mask.contains(px, py)) {
                continue;
            }
            const double tol = 1e-2 * p.z() + 2.0 * max_radius;
            if (p.z() <= depth(px, py) + tol) {
                mask(px, py) = 1;
            }
        }
    }
    return dilation_px > 0 ? dilate(mask, dilation_px) : mask;
}

} // namespace edgesplat::sim
