// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "edgesplat/core/error.hpp"
#include "edgesplat/core/grid.hpp"

#include <cmath>
#include <utility>
#include <vector>

namespace edgesplat {

/// Normalized sampled Gaussian with radius ceil(3 sigma); index i holds offset i - radius.
inline std::vector<double> gaussian_kernel(double sigma) {
    detail::require(sigma > 0.0, "gaussian kernel: sigma must be positive");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double &v : k) {
        v /= sum;
    }
    return k;
}

/// Separable correlation with a symmetric 1D kernel, reflection at the borders.
inline Image separable_filter(const Image &in, const std::vector<double> &kernel) {
    const int radius = static_cast<int>(kernel.size() / 2);
    const int w = in.width();
    const int h = in.height();
    Image tmp(w, h, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                acc += kernel[static_cast<std::size_t>(i + radius)] * in(reflect_index(x + i, w), y);
            }
            tmp(x, y) = acc;
        }
    }
    Image out(w, h, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                acc += kernel[static_cast<std::size_t>(i + radius)] * tmp(x, reflect_index(y + i, h));
            }
            out(x, y) = acc;
        }
    }
    return out;
}

/// Adjoint of separable_filter: for every image a, b, <filter(a), b> == <a, filter_adjoint(b)>.
inline Image separable_filter_adjoint(const Image &in, const std::vector<double> &kernel) {
    const int radius = static_cast<int>(kernel.size() / 2);
    const int w = in.width();
    const int h = in.height();
    Image tmp(w, h, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double v = in(x, y);
            for (int i = -radius; i <= radius; ++i) {
                tmp(x, reflect_index(y + i, h)) += kernel[static_cast<std::size_t>(i + radius)] * v;
            }
        }
    }
    Image out(w, h, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double v = tmp(x, y);
            for (int i = -radius; i <= radius; ++i) {
                out(reflect_index(x + i, w), y) += kernel[static_cast<std::size_t>(i + radius)] * v;
            }
        }
    }
    return out;
}

inline Image gaussian_blur(const Image &in, double sigma) { return separable_filter(in, gaussian_kernel(sigma)); }

/// Offsets (dx, dy) with dx^2 + dy^2 <= radius^2.
inline std::vector<std::pair<int, int>> disc_offsets(int radius) {
    std::vector<std::pair<int, int>> offsets;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            if (dx * dx + dy * dy <= radius * radius) {
                offsets.emplace_back(dx, dy);
            }
        }
    }
    return offsets;
}

// With half-sample reflection a mirrored pixel is never closer than its source,
// so reflected padding reduces to ignoring out-of-range neighbors.

inline BinaryMask dilate(const BinaryMask &in, int radius) {
    detail::require(radius >= 0, "dilate: radius must be non-negative");
    const auto offsets = disc_offsets(radius);
    BinaryMask out(in.width(), in.height(), 0);
    for (int y = 0; y < in.height(); ++y) {
        for (int x = 0; x < in.width(); ++x) {
            if (!in(x, y)) {
                continue;
            }
            for (const auto &[dx, dy] : offsets) {
                if (out.contains(x + dx, y + dy)) {
                    out(x + dx, y + dy) = 1;
                }
            }
        }
    }
    return out;
}

inline BinaryMask erode(const BinaryMask &in, int radius) {
    detail::require(radius >= 0, "erode: radius must be non-negative");
    const auto offsets = disc_offsets(radius);
    BinaryMask out(in.width(), in.height(), 0);
    for (int y = 0; y < in.height(); ++y) {
        for (int x = 0; x < in.width(); ++x) {
            bool keep = in(x, y) != 0;
            for (std::size_t k = 0; keep && k < offsets.size(); ++k) {
                const int qx = x + offsets[k].first;
                const int qy = y + offsets[k].second;
                if (in.contains(qx, qy) && !in(qx, qy)) {
                    keep = false;
                }
            }
            out(x, y) = keep ? 1 : 0;
        }
    }
    return out;
}

inline BinaryMask close(const BinaryMask &in, int radius) { return erode(dilate(in, radius), radius); }

} // namespace edgesplat
