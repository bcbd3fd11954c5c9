// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#include "edgesplat/edge_detect.hpp"
#include "edgesplat/presets.hpp"
#include "edgesplat/scene_sim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

using namespace edgesplat;

namespace {

Image random_image(int w, int h, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    Image img(w, h);
    for (double &v : img) {
        v = scale * (2.0 * uniform01(rng) - 1.0);
    }
    return img;
}

EventMap as_map(Image img) { return {std::move(img), 0, 1}; }

// Direct 2D correlation with the outer-product kernel and reflected borders.
Image direct_blur(const Image &in, double sigma) {
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    double sum = 0.0;
    for (int j = -r; j <= r; ++j) {
        for (int i = -r; i <= r; ++i) {
            sum += std::exp(-0.5 * (i * i + j * j) / (sigma * sigma));
        }
    }
    Image out(in.width(), in.height(), 0.0);
    for (int y = 0; y < in.height(); ++y) {
        for (int x = 0; x < in.width(); ++x) {
            double acc = 0.0;
            for (int j = -r; j <= r; ++j) {
                for (int i = -r; i <= r; ++i) {
                    int u = x + i;
                    int v = y + j;
                    // Mirror with the edge sample repeated: -1 -> 0, w -> w - 1.
                    while (u < 0 || u >= in.width()) {
                        u = u < 0 ? -u - 1 : 2 * in.width() - 1 - u;
                    }
                    while (v < 0 || v >= in.height()) {
                        v = v < 0 ? -v - 1 : 2 * in.height() - 1 - v;
                    }
                    acc += std::exp(-0.5 * (i * i + j * j) / (sigma * sigma)) / sum * in(u, v);
                }
            }
            out(x, y) = acc;
        }
    }
    return out;
}

BinaryMask brute_close(const BinaryMask &in, int r) {
    auto op = [r](const BinaryMask &m, bool dilation) {
        BinaryMask out(m.width(), m.height(), 0);
        for (int y = 0; y < m.height(); ++y) {
            for (int x = 0; x < m.width(); ++x) {
                bool any = false;
                bool all = true;
                for (int v = y - r; v <= y + r; ++v) {
                    for (int u = x - r; u <= x + r; ++u) {
                        if ((u - x) * (u - x) + (v - y) * (v - y) > r * r) {
                            continue;
                        }
                        const bool on = m.contains(u, v) && m(u, v);
                        const bool inside = m.contains(u, v);
                        any = any || on;
                        all = all && (on || !inside);
                    }
                }
                out(x, y) = dilation ? any : all;
            }
        }
        return out;
    };
    return op(op(in, true), false);
}

} // namespace

TEST(GaussianFilter, SeparableMatchesDirect2D) {
    for (double sigma : {0.5, 1.0, 1.7}) {
        const Image img = random_image(19, 13, 3);
        const Image a = gaussian_filter(img, sigma);
        const Image b = direct_blur(img, sigma);
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_NEAR(a[i], b[i], 1e-10);
        }
    }
}

TEST(GaussianFilter, ConstantImpulseAndMass) {
    const Image c = gaussian_filter(Image(9, 7, 0.3), 1.2);
    for (double v : c) {
        EXPECT_NEAR(v, 0.3, 1e-10);
    }
    Image impulse(21, 21, 0.0);
    impulse(10, 10) = 1.0;
    const Image g = gaussian_filter(impulse, 1.0);
    EXPECT_NEAR(g(10, 10), 1.0 / (2.0 * std::numbers::pi), 1e-3);
    double sum = 0.0;
    for (double v : g) {
        sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-8);
    EXPECT_THROW(gaussian_filter(impulse, 0.0), InvalidArgument);
}

TEST(TemporalDifference, IdentitySymmetryAndReference) {
    const auto seq = sim::presets::single_line();
    const EventStream s =
        sim::generate_ideal_events(seq.scene, seq.trajectory, seq.camera, seq.contrast_threshold, seq.frame_dt);
    const auto maps = accumulate_sequence(s, 0, 50000, 2, seq.contrast_threshold);
    const Image same = temporal_difference(maps[0], maps[0], 1.0);
    for (double v : same) {
        EXPECT_EQ(v, 0.0);
    }
    const Image d = temporal_difference(maps[0], maps[1], 1.0);
    EXPECT_EQ(d, temporal_difference(maps[1], maps[0], 1.0));
    const Image a = direct_blur(maps[0].values, 1.0);
    const Image b = direct_blur(maps[1].values, 1.0);
    double total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_NEAR(d[i], std::abs(b[i] - a[i]), 1e-10);
        total += d[i];
    }
    EXPECT_GT(total, 0.0);
    EXPECT_THROW(temporal_difference(maps[0], as_map(Image(3, 3)), 1.0), InvalidArgument);
}

TEST(PatchGrid, CoversEveryPixel) {
    for (int p : {1, 3, 4, 16, 70}) {
        for (double rho : {0.0, 0.5, 0.75, 0.9}) {
            const PatchGrid grid(37, 23, p, rho);
            EXPECT_EQ(grid.stride(), std::max(1, static_cast<int>(std::lround(p * (1.0 - rho)))));
            Grid<int> cover(37, 23, 0);
            for (const PatchRegion &r : grid.regions()) {
                ASSERT_GE(r.x0, 0);
                ASSERT_LE(r.x0 + r.width, 37);
                ASSERT_LE(r.y0 + r.height, 23);
                for (int y = r.y0; y < r.y0 + r.height; ++y) {
                    for (int x = r.x0; x < r.x0 + r.width; ++x) {
                        ++cover(x, y);
                    }
                }
            }
            for (int v : cover) {
                EXPECT_GE(v, 1);
            }
        }
    }
    EXPECT_THROW(PatchGrid(8, 8, 4, 1.0), InvalidArgument);
}

TEST(PatchContrast, ConstantAndTwoLevelPatches) {
    const PatchGrid grid(4, 4, 4, 0.0);
    EXPECT_EQ(patch_contrast({Image(4, 4, 2.5)}, grid), std::vector<double>{0.0});
    Image half(4, 4, 0.0);
    const double a = 3.0;
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 2; ++x) {
            half(x, y) = a;
        }
    }
    EXPECT_DOUBLE_EQ(patch_contrast({half}, grid)[0], a * a / 4.0);
    // Max over difference maps.
    EXPECT_DOUBLE_EQ(patch_contrast({Image(4, 4, 1.0), half, Image(4, 4)}, grid)[0], a * a / 4.0);
}

TEST(AdaptiveThreshold, PercentileExamples) {
    std::vector<double> c(100);
    for (int i = 0; i < 100; ++i) {
        c[static_cast<std::size_t>(i)] = i;
    }
    EXPECT_NEAR(adaptive_threshold(c, 90.0), 89.1, 1e-12);
    EXPECT_EQ(adaptive_threshold(std::vector<double>(10, 4.0), 85.0), 4.0);
    EXPECT_THROW(adaptive_threshold({}, 50.0), InvalidArgument);
    std::vector<double> scaled = c;
    for (double &v : scaled) {
        v *= 7.5;
    }
    EXPECT_NEAR(adaptive_threshold(scaled, 90.0), 7.5 * 89.1, 1e-9);
}

TEST(AggregateRaw, MaxSemantics) {
    EXPECT_EQ(aggregate_raw({}, 5, 5), Image(5, 5, 0.0));
    const Image one = aggregate_raw({{{1, 1, 2, 2}, 3.0}}, 5, 5);
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 5; ++x) {
            EXPECT_EQ(one(x, y), (x >= 1 && x < 3 && y >= 1 && y < 3) ? 3.0 : 0.0);
        }
    }
    const Image two = aggregate_raw({{{0, 0, 3, 3}, 2.0}, {{2, 2, 3, 3}, 5.0}}, 5, 5);
    EXPECT_EQ(two(2, 2), 5.0);
    EXPECT_EQ(two(0, 0), 2.0);
    EXPECT_EQ(two(4, 4), 5.0);
}

TEST(Postprocess, ClosingConnectsGapAndMatchesReference) {
    Image raw(40, 20, 0.0);
    for (int x = 5; x < 17; ++x) {
        raw(x, 10) = 1.0;
    }
    for (int x = 20; x < 33; ++x) { // gap of 3 pixels < 2 * radius
        raw(x, 10) = 1.0;
    }
    const int radius = 2;
    const Image out = postprocess(raw, 0.5, 50.0, radius);
    for (int x = 5; x < 33; ++x) {
        EXPECT_GT(out(x, 10), 0.0) << x;
    }
    // Support equals the reference closing of the thresholded smoothed map.
    const Image smooth = gaussian_filter(raw, 0.5);
    std::vector<double> nz;
    for (double v : smooth) {
        if (v > 0.0) {
            nz.push_back(v);
        }
    }
    const double thr = percentile(nz, 50.0);
    BinaryMask support(40, 20, 0);
    for (std::size_t i = 0; i < smooth.size(); ++i) {
        support[i] = smooth[i] > 0.0 && smooth[i] >= thr;
    }
    const BinaryMask ref = brute_close(support, radius);
    for (std::size_t i = 0; i < out.size(); ++i) {
        EXPECT_EQ(out[i] > 0.0, ref[i] != 0);
    }
}

TEST(Postprocess, MaxIsZeroOrOne) {
    EXPECT_EQ(postprocess(Image(8, 8, 0.0), 1.0, 70.0, 2), Image(8, 8, 0.0));
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Image raw = random_image(16, 16, seed, 10.0);
        for (double &v : raw) {
            v = std::max(0.0, v);
        }
        const Image out = postprocess(raw, 1.0, 70.0, 2);
        double mx = 0.0;
        for (double v : out) {
            EXPECT_GE(v, 0.0);
            mx = std::max(mx, v);
        }
        EXPECT_EQ(mx, 1.0);
    }
}

TEST(DetectEdges, ZeroAndIdenticalMapsGiveEmptyMap) {
    DetectorParams p;
    const std::vector<EventMap> zeros(5, as_map(Image(32, 32, 0.0)));
    const EdgeMap m = detect_edges(zeros, p);
    EXPECT_EQ(m.values, Image(32, 32, 0.0));
    EXPECT_EQ(m.params, p);
    const std::vector<EventMap> same(4, as_map(random_image(32, 32, 9)));
    EXPECT_EQ(detect_edges(same, p).values, Image(32, 32, 0.0));
}

TEST(DetectEdges, FewerThanTwoMapsIsError) {
    DetectorParams p;
    EXPECT_THROW(detect_edges({as_map(Image(8, 8))}, p), InvalidArgument);
    EXPECT_THROW(detect_edges({}, p), InvalidArgument);
}

TEST(DetectEdges, ScaleEquivariance) {
    const auto seq = sim::presets::line_grid();
    const EventStream s =
        sim::generate_ideal_events(seq.scene, seq.trajectory, seq.camera, seq.contrast_threshold, seq.frame_dt);
    const DetectorParams p;
    const auto maps = accumulate_sequence(s, 0, 50000, p.num_maps, seq.contrast_threshold);
    const double k = 3.0;
    std::vector<EventMap> scaled = maps;
    for (EventMap &m : scaled) {
        for (double &v : m.values) {
            v *= k;
        }
    }
    const PatchGrid grid(64, 64, p.patch_size, p.overlap);
    const auto c0 = patch_contrast(temporal_differences(maps, p.sigma), grid);
    const auto c1 = patch_contrast(temporal_differences(scaled, p.sigma), grid);
    const double t0 = adaptive_threshold(c0, p.tau_percentile);
    const double t1 = adaptive_threshold(c1, p.tau_percentile);
    for (std::size_t i = 0; i < c0.size(); ++i) {
        EXPECT_NEAR(c1[i], k * k * c0[i], 1e-9 * (1.0 + c1[i]));
        EXPECT_EQ(c0[i] > t0, c1[i] > t1);
    }
    const EdgeMap a = detect_edges(maps, p);
    const EdgeMap b = detect_edges(scaled, p);
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        EXPECT_NEAR(a.values[i], b.values[i], 1e-9);
    }
}

TEST(DetectEdges, SelfCorrectionStaleStructure) {
    // A block present only in the first map shows up only in the first difference.
    std::vector<EventMap> maps(4, as_map(Image(24, 24, 0.0)));
    for (int y = 8; y < 12; ++y) {
        for (int x = 8; x < 12; ++x) {
            maps[0].values(x, y) = 1.0;
        }
    }
    const auto diffs = temporal_differences(maps, 1.0);
    ASSERT_EQ(diffs.size(), 3u);
    EXPECT_GT(diffs[0](10, 10), 0.0);
    EXPECT_EQ(diffs[1], Image(24, 24, 0.0));
    EXPECT_EQ(diffs[2], Image(24, 24, 0.0));
}

TEST(DetectEdges, CoherentEdgesBeatNoisePatches) {
    const auto seq = sim::presets::single_line();
    const DetectorParams p;
    const EventStream clean =
        sim::generate_ideal_events(seq.scene, seq.trajectory, seq.camera, seq.contrast_threshold, seq.frame_dt);
    Rng rng(11);
    const EventStream noisy = sim::inject_noise(clean, sim::matched_noise_rate(clean.size(), *clean.span(), 64, 64), rng);
    const auto maps = accumulate_sequence(noisy, 0, 50000, p.num_maps, seq.contrast_threshold);
    const EdgeMap m = detect_edges(maps, p);
    const BinaryMask gt = sim::ground_truth_edge_mask(seq.scene, seq.trajectory.front().pose, seq.camera, 2);
    // The detected support touches the true edge and its peak lies on it.
    double best = 0.0;
    int bx = 0;
    int by = 0;
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
            if (m.values(x, y) > best) {
                best = m.values(x, y);
                bx = x;
                by = y;
            }
        }
    }
    EXPECT_EQ(best, 1.0);
    const BinaryMask gt_end = sim::ground_truth_edge_mask(seq.scene, seq.trajectory.back().pose, seq.camera, 4);
    EXPECT_TRUE(gt(bx, by) || gt_end(bx, by));
}
