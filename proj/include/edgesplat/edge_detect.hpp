// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Patch-based temporal-coherence edge detection over consecutive event maps.

#include "edgesplat/core/error.hpp"
#include "edgesplat/core/filters.hpp"
#include "edgesplat/core/grid.hpp"
#include "edgesplat/event_core.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace edgesplat {

/// Axis-aligned pixel rectangle [x0, x0 + width) x [y0, y0 + height).
struct PatchRegion {
    int x0 = 0;
    int y0 = 0;
    int width = 0;
    int height = 0;

    bool contains(int x, int y) const { return x >= x0 && y >= y0 && x < x0 + width && y < y0 + height; }
    bool operator==(const PatchRegion &) const = default;
};

/// Overlapping p x p patches. Anchors advance by the stride and a final
/// clamped anchor is added so that every pixel is covered.
class PatchGrid {
  public:
    PatchGrid(int width, int height, int patch_size, double overlap_ratio)
        : width_(width), height_(height), patch_size_(patch_size), overlap_ratio_(overlap_ratio) {
        detail::require(width > 0 && height > 0, "patch grid: resolution must be positive");
        detail::require(patch_size >= 1, "patch grid: patch size must be positive");
        detail::require(overlap_ratio >= 0.0 && overlap_ratio < 1.0, "patch grid: overlap must lie in [0, 1)");
        stride_ = std::max(1, static_cast<int>(std::lround(patch_size * (1.0 - overlap_ratio))));
        xs_ = anchors(width_);
        ys_ = anchors(height_);
    }

    int patch_size() const noexcept { return patch_size_; }
    double overlap_ratio() const noexcept { return overlap_ratio_; }
    int stride() const noexcept { return stride_; }
    const std::vector<int> &anchors_x() const noexcept { return xs_; }
    const std::vector<int> &anchors_y() const noexcept { return ys_; }
    std::size_t size() const noexcept { return xs_.size() * ys_.size(); }

    /// Patches in row-major anchor order.
    std::vector<PatchRegion> regions() const {
        std::vector<PatchRegion> out;
        out.reserve(size());
        const int pw = std::min(patch_size_, width_);
        const int ph = std::min(patch_size_, height_);
        for (int y : ys_) {
            for (int x : xs_) {
                out.push_back({x, y, pw, ph});
            }
        }
        return out;
    }

  private:
    std::vector<int> anchors(int extent) const {
        const int last = std::max(0, extent - patch_size_);
        std::vector<int> a;
        for (int v = 0; v < last; v += stride_) {
            a.push_back(v);
        }
        a.push_back(last);
        return a;
    }

    int width_;
    int height_;
    int patch_size_;
    double overlap_ratio_;
    int stride_ = 1;
    std::vector<int> xs_;
    std::vector<int> ys_;
};

struct DetectorParams {
    int num_maps = 5;              // T
    int patch_size = 4;            // p
    double overlap = 0.75;         // rho
    double sigma = 0.75;           // temporal-difference window
    double tau_percentile = 85.0;  // patch classification
    double smooth_sigma = 1.0;     // post-processing smoothing
    double keep_percentile = 50.0; // post-processing threshold over nonzero values
    int closing_radius = 1;

    void validate() const {
        detail::require(num_maps >= 2, "detector: need at least two event maps");
        detail::require(patch_size >= 1, "detector: patch size must be positive");
        detail::require(overlap >= 0.0 && overlap < 1.0, "detector: overlap must lie in [0, 1)");
        detail::require(sigma > 0.0 && smooth_sigma > 0.0, "detector: smoothing widths must be positive");
        detail::require(tau_percentile > 0.0 && tau_percentile < 100.0, "detector: tau percentile must lie in (0, 100)");
        detail::require(keep_percentile >= 0.0 && keep_percentile < 100.0,
                        "detector: keep percentile must lie in [0, 100)");
        detail::require(closing_radius >= 0, "detector: closing radius must be non-negative");
    }

    bool operator==(const DetectorParams &) const = default;
};

/// Normalized edge confidence in [0, 1] with the settings that produced it.
struct EdgeMap {
    Image values;
    DetectorParams params;
    double tau = 0.0; // classification threshold of this run
};

inline Image gaussian_filter(const Image &map, double sigma) {
    detail::require(sigma > 0.0, "gaussian_filter: sigma must be positive");
    return gaussian_blur(map, sigma);
}

inline Image gaussian_filter(const EventMap &map, double sigma) { return gaussian_filter(map.values, sigma); }

/// D = |G * E_curr - G * E_prev|.
inline Image temporal_difference(const EventMap &prev, const EventMap &curr, double sigma) {
    require_same_shape(prev.values, curr.values, "temporal_difference");
    const Image a = gaussian_filter(prev, sigma);
    const Image b = gaussian_filter(curr, sigma);
    Image d(a.width(), a.height());
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] = std::abs(b[i] - a[i]);
    }
    return d;
}

/// Population variance of `image` over `region`.
inline double region_variance(const Image &image, const PatchRegion &region) {
    double mean = 0.0;
    for (int y = region.y0; y < region.y0 + region.height; ++y) {
        for (int x = region.x0; x < region.x0 + region.width; ++x) {
            mean += image(x, y);
        }
    }
    const double n = static_cast<double>(region.width) * region.height;
    mean /= n;
    double var = 0.0;
    for (int y = region.y0; y < region.y0 + region.height; ++y) {
        for (int x = region.x0; x < region.x0 + region.width; ++x) {
            const double d = image(x, y) - mean;
            var += d * d;
        }
    }
    return var / n;
}

/// C(P) = max_t Var(D_t(P)) for every patch of `grid`, in regions() order.
inline std::vector<double> patch_contrast(const std::vector<Image> &differences, const PatchGrid &grid) {
    detail::require(!differences.empty(), "patch_contrast: need at least one difference map");
    const auto regions = grid.regions();
    std::vector<double> c(regions.size(), 0.0);
    for (const Image &d : differences) {
        require_same_shape(d, differences.front(), "patch_contrast");
        for (std::size_t i = 0; i < regions.size(); ++i) {
            c[i] = std::max(c[i], region_variance(d, regions[i]));
        }
    }
    return c;
}

/// Linearly interpolated percentile: rank q / 100 * (n - 1) of the sorted values.
inline double percentile(std::vector<double> values, double q) {
    detail::require(!values.empty(), "percentile: empty input");
    detail::require(q >= 0.0 && q <= 100.0, "percentile: q must lie in [0, 100]");
    std::sort(values.begin(), values.end());
    const double rank = q / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double f = rank - static_cast<double>(lo);
    return values[lo] + f * (values[hi] - values[lo]);
}

inline double adaptive_threshold(const std::vector<double> &contrasts, double percentile_q) {
    detail::require(!contrasts.empty(), "adaptive_threshold: empty contrast list");
    detail::require(percentile_q > 0.0 && percentile_q < 100.0, "adaptive_threshold: percentile must lie in (0, 100)");
    return percentile(contrasts, percentile_q);
}

/// Per pixel, the maximum strength of the classified patches covering it.
inline Image aggregate_raw(const std::vector<std::pair<PatchRegion, double>> &patches, int width, int height) {
    Image raw(width, height, 0.0);
    for (const auto &[r, s] : patches) {
        detail::require(s >= 0.0, "aggregate_raw: strengths must be non-negative");
        const int x1 = std::min(r.x0 + r.width, width);
        const int y1 = std::min(r.y0 + r.height, height);
        for (int y = std::max(r.y0, 0); y < y1; ++y) {
            for (int x = std::max(r.x0, 0); x < x1; ++x) {
                raw(x, y) = std::max(raw(x, y), s);
            }
        }
    }
    return raw;
}

/// Smoothing, percentile threshold over nonzero values, closing of the kept
/// support, then the smoothed strengths on that support normalized to max 1.
inline Image postprocess(const Image &raw, double smooth_sigma, double keep_percentile, int closing_radius) {
    detail::require(smooth_sigma > 0.0, "postprocess: smoothing sigma must be positive");
    detail::require(keep_percentile >= 0.0 && keep_percentile < 100.0, "postprocess: keep percentile must lie in [0, 100)");
    detail::require(closing_radius >= 0, "postprocess: closing radius must be non-negative");
    const Image smooth = gaussian_blur(raw, smooth_sigma);
    std::vector<double> nonzero;
    for (double v : smooth) {
        if (v > 0.0) {
            nonzero.push_back(v);
        }
    }
    Image out(raw.width(), raw.height(), 0.0);
    if (nonzero.empty()) {
        return out;
    }
    const double thr = percentile(std::move(nonzero), keep_percentile);
    BinaryMask support(raw.width(), raw.height(), 0);
    for (std::size_t i = 0; i < smooth.size(); ++i) {
        support[i] = (smooth[i] > 0.0 && smooth[i] >= thr) ? 1 : 0;
    }
    const BinaryMask closed = close(support, closing_radius);
    double peak = 0.0;
    for (std::size_t i = 0; i < smooth.size(); ++i) {
        out[i] = closed[i] ? smooth[i] : 0.0;
        peak = std::max(peak, out[i]);
    }
    if (peak > 0.0) {
        for (double &v : out) {
            v /= peak;
        }
    }
    return out;
}

/// Difference maps D_t for t = 2..T.
inline std::vector<Image> temporal_differences(const std::vector<EventMap> &maps, double sigma) {
    std::vector<Image> diffs;
    for (std::size_t t = 1; t < maps.size(); ++t) {
        diffs.push_back(temporal_difference(maps[t - 1], maps[t], sigma));
    }
    return diffs;
}

inline EdgeMap detect_edges(const std::vector<EventMap> &maps, const DetectorParams &params) {
    params.validate();
    if (maps.size() < 2) {
        throw InvalidArgument("detect_edges: need at least two event maps, got " + std::to_string(maps.size()));
    }
    const int w = maps.front().values.width();
    const int h = maps.front().values.height();
    const PatchGrid grid(w, h, params.patch_size, params.overlap);
    const auto regions = grid.regions();
    const auto contrast = patch_contrast(temporal_differences(maps, params.sigma), grid);
    const double tau = adaptive_threshold(contrast, params.tau_percentile);
    std::vector<std::pair<PatchRegion, double>> classified;
    for (std::size_t i = 0; i < regions.size(); ++i) {
        if (contrast[i] > tau) {
            classified.emplace_back(regions[i], contrast[i]);
        }
    }
    EdgeMap edge;
    edge.values = postprocess(aggregate_raw(classified, w, h), params.smooth_sigma, params.keep_percentile,
                              params.closing_radius);
    edge.params = params;
    edge.tau = tau;
    return edge;
}

} // namespace edgesplat
