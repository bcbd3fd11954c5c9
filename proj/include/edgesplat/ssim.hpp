// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Structural similarity with an 11-tap Gaussian window (sigma 1.5), reflected
// borders, and stabilizers from the joint dynamic range (floored at 1).
// Shared by the DSSIM loss and the evaluation metric.

#include "edgesplat/core/error.hpp"
#include "edgesplat/core/filters.hpp"
#include "edgesplat/core/grid.hpp"

#include <algorithm>
#include <vector>

namespace edgesplat {

inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

namespace ssim_detail {

inline const std::vector<double> &window() {
    static const std::vector<double> w = gaussian_kernel(kSsimSigma); // radius ceil(4.5) = 5, 11 taps
    return w;
}

struct Extremes {
    double lo;
    double hi;
    std::size_t lo_index;
    std::size_t hi_index;
    bool lo_in_a;
    bool hi_in_a;
};

inline Extremes extremes(const Image &a, const Image &b) {
    Extremes e{a[0], a[0], 0, 0, true, true};
    auto visit = [&e](const Image &img, bool in_a) {
        for (std::size_t i = 0; i < img.size(); ++i) {
            if (img[i] < e.lo) {
                e.lo = img[i];
                e.lo_index = i;
                e.lo_in_a = in_a;
            }
            if (img[i] > e.hi) {
                e.hi = img[i];
                e.hi_index = i;
                e.hi_in_a = in_a;
            }
        }
    };
    visit(a, true);
    visit(b, false);
    return e;
}

} // namespace ssim_detail

/// Dynamic range used for the stabilizers: max - min over both images, at least 1.
inline double ssim_dynamic_range(const Image &a, const Image &b) {
    const auto e = ssim_detail::extremes(a, b);
    return std::max(e.hi - e.lo, 1.0);
}

struct SsimResult {
    double value = 1.0;
    Image ssim_map;
    Image grad_a; // d value / d a, filled only on request
};

/// Mean SSIM of (a, b); with `with_grad`, also its gradient with respect to a.
inline SsimResult ssim_full(const Image &a, const Image &b, bool with_grad) {
    require_same_shape(a, b, "ssim");
    detail::require(!a.empty(), "ssim: empty images");
    const auto &w = ssim_detail::window();
    const auto ext = ssim_detail::extremes(a, b);
    const double range = std::max(ext.hi - ext.lo, 1.0);
    const double C1 = (kSsimK1 * range) * (kSsimK1 * range);
    const double C2 = (kSsimK2 * range) * (kSsimK2 * range);

    const std::size_t n = a.size();
    Image aa(a.width(), a.height());
    Image bb(a.width(), a.height());
    Image ab(a.width(), a.height());
    for (std::size_t i = 0; i < n; ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    const Image mx = separable_filter(a, w);
    const Image my = separable_filter(b, w);
    const Image mxx = separable_filter(aa, w);
    const Image myy = separable_filter(bb, w);
    const Image mxy = separable_filter(ab, w);

    SsimResult r;
    r.ssim_map = Image(a.width(), a.height());
    Image d_mx;
    Image d_mxx;
    Image d_mxy;
    double d_range = 0.0;
    if (with_grad) {
        d_mx = Image(a.width(), a.height());
        d_mxx = Image(a.width(), a.height());
        d_mxy = Image(a.width(), a.height());
    }
    double total = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double A1 = 2.0 * mx[i] * my[i] + C1;
        const double A2 = 2.0 * (mxy[i] - mx[i] * my[i]) + C2;
        const double B1 = mx[i] * mx[i] + my[i] * my[i] + C1;
        const double B2 = mxx[i] - mx[i] * mx[i] + myy[i] - my[i] * my[i] + C2;
        const double s = A1 * A2 / (B1 * B2);
        r.ssim_map[i] = s;
        total += s;
        if (with_grad) {
            const double B = B1 * B2;
            d_mx[i] = inv_n * ((2.0 * my[i] * A2 - 2.0 * my[i] * A1) / B - s * (2.0 * mx[i] / B1 - 2.0 * mx[i] / B2));
            d_mxx[i] = inv_n * (-s / B2);
            d_mxy[i] = inv_n * (2.0 * A1 / B);
            const double dC1 = A2 / B - s / B1;
            const double dC2 = A1 / B - s / B2;
            d_range += inv_n * (dC1 * 2.0 * kSsimK1 * kSsimK1 * range + dC2 * 2.0 * kSsimK2 * kSsimK2 * range);
        }
    }
    r.value = total * inv_n;
    if (with_grad) {
        const Image gx = separable_filter_adjoint(d_mx, w);
        const Image gxx = separable_filter_adjoint(d_mxx, w);
        const Image gxy = separable_filter_adjoint(d_mxy, w);
        r.grad_a = Image(a.width(), a.height());
        for (std::size_t i = 0; i < n; ++i) {
            r.grad_a[i] = gx[i] + 2.0 * a[i] * gxx[i] + b[i] * gxy[i];
        }
        if (ext.hi - ext.lo > 1.0) {
            if (ext.hi_in_a) {
                r.grad_a[ext.hi_index] += d_range;
            }
            if (ext.lo_in_a) {
                r.grad_a[ext.lo_index] -= d_range;
            }
        }
    }
    return r;
}

inline double ssim(const Image &a, const Image &b) { return ssim_full(a, b, false).value; }

} // namespace edgesplat
