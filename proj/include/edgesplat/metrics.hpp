// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Image quality (PSNR and SSIM after a least-squares affine color fit) and
// trajectory accuracy (ATE RMSE after rigid Umeyama alignment).

#include "edgesplat/core/error.hpp"
#include "edgesplat/core/grid.hpp"
#include "edgesplat/core/pose.hpp"
#include "edgesplat/ssim.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace edgesplat {

struct ColorFit {
    double a = 1.0;
    double b = 0.0;
    Image corrected;
};

/// Least-squares a, b minimizing ||a pred + b - gt||^2; constant pred gives a = 0, b = mean(gt).
inline ColorFit linear_color_transform(const Image &pred, const Image &gt) {
    require_same_shape(pred, gt, "linear_color_transform");
    detail::require(!pred.empty(), "linear_color_transform: empty images");
    const double n = static_cast<double>(pred.size());
    double mp = 0.0;
    double mg = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        mp += pred[i];
        mg += gt[i];
    }
    mp /= n;
    mg /= n;
    const auto [lo, hi] = std::minmax_element(pred.begin(), pred.end());
    ColorFit fit;
    if (*lo == *hi) {
        fit.a = 0.0;
        fit.b = mg;
    } else {
        double spg = 0.0;
        double spp = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            spg += (pred[i] - mp) * (gt[i] - mg);
            spp += (pred[i] - mp) * (pred[i] - mp);
        }
        fit.a = spg / spp;
        fit.b = mg - fit.a * mp;
    }
    fit.corrected = Image(pred.width(), pred.height());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        fit.corrected[i] = fit.a * pred[i] + fit.b;
    }
    return fit;
}

/// 10 log10(peak^2 / MSE); identical images give +infinity.
inline double psnr(const Image &pred, const Image &gt, double peak = 1.0) {
    require_same_shape(pred, gt, "psnr");
    detail::require(!pred.empty(), "psnr: empty images");
    detail::require(peak > 0.0, "psnr: peak must be positive");
    double mse = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        mse += (pred[i] - gt[i]) * (pred[i] - gt[i]);
    }
    mse /= static_cast<double>(pred.size());
    if (mse == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(peak * peak / mse);
}

struct ImageScores {
    double psnr_db = 0.0;
    double ssim = 0.0;
};

/// PSNR (peak 1) and SSIM of the color-corrected prediction.
inline ImageScores image_scores(const Image &pred, const Image &gt) {
    const Image c = linear_color_transform(pred, gt).corrected;
    return {psnr(c, gt, 1.0), ssim(c, gt)};
}

using Trajectory = std::vector<TimedPose>;

inline void validate_trajectory(const Trajectory &t, const char *what) {
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (t[i].t_us <= t[i - 1].t_us) {
            throw InvalidArgument(std::string(what) + ": timestamps must be strictly increasing");
        }
    }
}

struct Association {
    std::vector<Vec3> est;
    std::vector<Vec3> gt;
    std::size_t dropped = 0; // estimate samples without a ground-truth partner
};

/// Nearest-timestamp pairing of estimate samples with ground truth within `tolerance_us`.
inline Association associate(const Trajectory &est, const Trajectory &gt, std::int64_t tolerance_us = 1000) {
    validate_trajectory(est, "associate");
    validate_trajectory(gt, "associate");
    Association out;
    std::size_t j = 0;
    for (const TimedPose &e : est) {
        while (j + 1 < gt.size() && gt[j + 1].t_us <= e.t_us) {
            ++j;
        }
        std::size_t best = gt.size();
        std::int64_t best_dt = std::numeric_limits<std::int64_t>::max();
        for (std::size_t k = j; k < std::min(j + 2, gt.size()); ++k) {
            const std::int64_t dt = std::abs(gt[k].t_us - e.t_us);
            if (dt < best_dt) {
                best_dt = dt;
                best = k;
            }
        }
        if (best < gt.size() && best_dt <= tolerance_us) {
            out.est.push_back(e.pose.translation);
            out.gt.push_back(gt[best].pose.translation);
        } else {
            ++out.dropped;
        }
    }
    return out;
}

struct Alignment {
    PoseSE3 transform; // maps estimate positions onto ground truth
    double scale = 1.0;
    bool degenerate = false; // point sets (nearly) collinear, rotation about the line is arbitrary
};

/// Closed-form least squares R, t (and optionally s) minimizing sum ||s R p_est + t - p_gt||^2.
inline Alignment umeyama_align(const std::vector<Vec3> &est, const std::vector<Vec3> &gt, bool with_scale = false) {
    if (est.size() != gt.size()) {
        throw InvalidArgument("umeyama_align: point lists differ in length");
    }
    if (est.size() < 3) {
        throw InvalidArgument("umeyama_align: need at least 3 associated pairs, got " + std::to_string(est.size()));
    }
    const double n = static_cast<double>(est.size());
    Vec3 me = Vec3::Zero();
    Vec3 mg = Vec3::Zero();
    for (std::size_t i = 0; i < est.size(); ++i) {
        me += est[i];
        mg += gt[i];
    }
    me /= n;
    mg /= n;
    Mat3 cov = Mat3::Zero();
    double var_e = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) {
        cov += (gt[i] - mg) * (est[i] - me).transpose();
        var_e += (est[i] - me).squaredNorm();
    }
    cov /= n;
    var_e /= n;
    const Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec3 sign = Vec3::Ones();
    if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) {
        sign(2) = -1.0;
    }
    const Mat3 R = svd.matrixU() * sign.asDiagonal() * svd.matrixV().transpose();
    Alignment out;
    const Vec3 sv = svd.singularValues();
    out.degenerate = !(sv(1) > 1e-9 * sv(0));
    out.scale = with_scale && var_e > 0.0 ? sv.dot(sign) / var_e : 1.0;
    out.transform = PoseSE3(Eigen::Quaterniond(R).normalized(), mg - out.scale * (R * me));
    return out;
}

inline Alignment umeyama_align(const Trajectory &est, const Trajectory &gt, bool with_scale = false,
                               std::int64_t tolerance_us = 1000) {
    const Association a = associate(est, gt, tolerance_us);
    return umeyama_align(a.est, a.gt, with_scale);
}

struct AteResult {
    double rmse = 0.0;
    std::size_t n_pairs = 0;
    std::size_t dropped = 0;
    Alignment alignment;
};

/// Position RMSE after alignment. The scale-aligned variant is a diagnostic only.
inline AteResult absolute_trajectory_error(const Trajectory &est, const Trajectory &gt, bool with_scale = false,
                                           std::int64_t tolerance_us = 1000) {
    const Association a = associate(est, gt, tolerance_us);
    AteResult r;
    r.alignment = umeyama_align(a.est, a.gt, with_scale);
    r.n_pairs = a.est.size();
    r.dropped = a.dropped;
    double sum = 0.0;
    const Mat3 R = r.alignment.transform.rotation_matrix();
    for (std::size_t i = 0; i < a.est.size(); ++i) {
        const Vec3 d = r.alignment.scale * (R * a.est[i]) + r.alignment.transform.translation - a.gt[i];
        sum += d.squaredNorm();
    }
    r.rmse = std::sqrt(sum / static_cast<double>(a.est.size()));
    return r;
}

inline double ate_rmse(const Trajectory &est, const Trajectory &gt) { return absolute_trajectory_error(est, gt).rmse; }

} // namespace edgesplat
