// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#include "edgesplat/event_core.hpp"
#include "edgesplat/scene_sim.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace edgesplat;

namespace {

EventStream random_stream(std::uint64_t seed, int w, int h, std::size_t n, Timestamp span) {
    Rng rng(seed);
    std::vector<Event> events;
    for (std::size_t i = 0; i < n; ++i) {
        events.push_back({static_cast<Timestamp>(rng() % static_cast<std::uint64_t>(span)),
                          static_cast<int>(rng() % static_cast<std::uint64_t>(w)),
                          static_cast<int>(rng() % static_cast<std::uint64_t>(h)), (rng() & 1) ? 1 : -1});
    }
    std::sort(events.begin(), events.end(), event_less);
    return EventStream(w, h, std::move(events), TimeSpan{0, span});
}

// A vertical bar sweeping horizontally across a bright plane.
sim::SyntheticScene moving_line_scene() {
    sim::SyntheticScene scene;
    scene.background = 0.9;
    scene.bounds = {{-3, -3, -1}, {3, 3, 6}};
    scene.segments.push_back({{0.0, -2.0, 3.0}, {0.0, 2.0, 3.0}, 0.05, 0.2});
    return scene;
}

std::vector<TimedPose> lateral_trajectory(double dx, Timestamp duration) {
    return {{0, PoseSE3::identity()}, {duration, PoseSE3(Eigen::Quaterniond::Identity(), Vec3(dx, 0.0, 0.0))}};
}

} // namespace

TEST(Accumulate, EmptyStreamGivesZeroMap) {
    const EventStream s(8, 6, {}, TimeSpan{0, 1000});
    const EventMap m = accumulate(s, 100, 200, 0.2);
    EXPECT_EQ(m.values, Image(8, 6, 0.0));
    EXPECT_EQ(m.t_start, 100);
    EXPECT_EQ(m.t_end, 300);
}

TEST(Accumulate, SingleImpulse) {
    const EventStream s(8, 6, {{50, 3, 4, 1}}, TimeSpan{0, 100});
    const EventMap m = accumulate(s, 0, 100, 0.2);
    for (int y = 0; y < 6; ++y) {
        for (int x = 0; x < 8; ++x) {
            EXPECT_EQ(m.values(x, y), (x == 3 && y == 4) ? 0.2 : 0.0);
        }
    }
}

TEST(Accumulate, HalfOpenInterval) {
    const EventStream s(2, 1, {{10, 0, 0, 1}, {20, 1, 0, 1}}, TimeSpan{0, 30});
    const EventMap m = accumulate(s, 10, 10, 1.0);
    EXPECT_EQ(m.values(0, 0), 1.0);
    EXPECT_EQ(m.values(1, 0), 0.0);
}

TEST(Accumulate, OutsideRangeIsError) {
    const EventStream s(4, 4, {}, TimeSpan{0, 100});
    EXPECT_THROW(accumulate(s, 50, 60, 0.2), InvalidArgument);
    EXPECT_THROW(accumulate(s, -1, 10, 0.2), InvalidArgument);
    EXPECT_THROW(accumulate(s, 0, 0, 0.2), InvalidArgument);
}

TEST(Accumulate, SimulatorStreamMatchesBruteForce) {
    const auto K = CameraIntrinsics::centered(32, 24, 30.0);
    const EventStream s = sim::generate_ideal_events(moving_line_scene(), lateral_trajectory(0.2, 20000), K, 0.15, 500);
    ASSERT_GT(s.size(), 50u);
    const EventMap m = accumulate(s, 0, 20000, 0.15);
    std::vector<int> counts(32 * 24, 0);
    for (const Event &e : s.events()) {
        if (e.t >= 0 && e.t < 20000) {
            counts[static_cast<std::size_t>(e.y * 32 + e.x)] += e.polarity;
        }
    }
    for (std::size_t i = 0; i < counts.size(); ++i) {
        EXPECT_EQ(m.values[i], 0.15 * counts[i]);
    }
}

TEST(Accumulate, LinearityOverSplits) {
    const EventStream s = random_stream(1, 10, 7, 2000, 10000);
    const EventMap whole = accumulate(s, 1000, 8000, 0.3);
    for (Timestamp split : {1000 + 1, 4321, 8999}) {
        const EventMap a = accumulate(s, 1000, split - 1000, 0.3);
        const EventMap b = accumulate(s, split, 9000 - split, 0.3);
        for (std::size_t i = 0; i < whole.values.size(); ++i) {
            // Values are threshold multiples of integer counts; compare the counts exactly.
            EXPECT_EQ(std::llround(whole.values[i] / 0.3), std::llround(a.values[i] / 0.3) + std::llround(b.values[i] / 0.3));
        }
    }
}

TEST(Accumulate, PolarityAntisymmetry) {
    const EventStream s = random_stream(2, 9, 9, 1500, 5000);
    std::vector<Event> flipped = s.events();
    for (Event &e : flipped) {
        e.polarity = -e.polarity;
    }
    const EventStream f(9, 9, flipped, s.declared_span());
    const EventMap a = accumulate(s, 0, 5000, 0.25);
    const EventMap b = accumulate(f, 0, 5000, 0.25);
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        EXPECT_EQ(a.values[i], -b.values[i]);
    }
}

TEST(Accumulate, SumEqualsNetPolarity) {
    const EventStream s = random_stream(3, 6, 5, 777, 3000);
    const EventMap m = accumulate(s, 0, 3000, 0.2);
    long long net = 0;
    for (const Event &e : s.events()) {
        net += e.polarity;
    }
    double sum = 0.0;
    for (double v : m.values) {
        sum += v;
    }
    EXPECT_NEAR(sum, 0.2 * static_cast<double>(net), 1e-9);
}

TEST(Accumulate, Deterministic) {
    const EventStream s = random_stream(4, 16, 16, 5000, 10000);
    EXPECT_EQ(accumulate(s, 0, 10000, 0.2).values, accumulate(s, 0, 10000, 0.2).values);
}

TEST(SampleInterval, DegenerateRange) {
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        const auto [a, b] = sample_interval(rng, 500, 2000, 2000);
        EXPECT_EQ(a, 500);
        EXPECT_EQ(b, 2500);
    }
}

TEST(SampleInterval, MeanOfUniform) {
    Rng rng(2);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const auto [a, b] = sample_interval(rng, 0, 1000, 3000);
        ASSERT_GE(b - a, 1000);
        ASSERT_LE(b - a, 3000);
        sum += static_cast<double>(b - a);
    }
    EXPECT_NEAR(sum / n, 2000.0, 20.0);
}

TEST(SampleInterval, SameSeedSameSequence) {
    Rng a(99);
    Rng b(99);
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(sample_interval(a, 0, 10, 5000), sample_interval(b, 0, 10, 5000));
    }
}

TEST(SampleInterval, InvalidRange) {
    Rng rng(1);
    EXPECT_THROW(sample_interval(rng, 0, 3, 2), InvalidArgument);
    EXPECT_THROW(sample_interval(rng, 0, 0, 2), InvalidArgument);
}

TEST(ChunkStream, ExactDivision) {
    const EventStream s(4, 4, {}, TimeSpan{0, 100000});
    const auto chunks = chunk_stream(s, 25000);
    ASSERT_EQ(chunks.size(), 4u);
    for (int i = 0; i < 4; ++i) {
        EXPECT_EQ(chunks[static_cast<std::size_t>(i)].index, i);
        EXPECT_EQ(chunks[static_cast<std::size_t>(i)].t_start, 25000 * i);
        EXPECT_EQ(chunks[static_cast<std::size_t>(i)].t_end, 25000 * (i + 1));
    }
}

TEST(ChunkStream, Remainder) {
    const EventStream s(4, 4, {}, TimeSpan{0, 90000});
    const auto chunks = chunk_stream(s, 25000);
    ASSERT_EQ(chunks.size(), 4u);
    EXPECT_EQ(chunks.back().t_start, 75000);
    EXPECT_EQ(chunks.back().t_end - chunks.back().t_start, 15000);
}

TEST(ChunkStream, PartitionPreservesOrder) {
    const auto K = CameraIntrinsics::centered(32, 24, 30.0);
    const EventStream s = sim::generate_ideal_events(moving_line_scene(), lateral_trajectory(0.3, 40000), K, 0.15, 500);
    const auto chunks = chunk_stream(s, 7000);
    std::vector<Event> joined;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        if (i > 0) {
            EXPECT_EQ(chunks[i].t_start, chunks[i - 1].t_end);
        }
        for (const Event &e : chunks[i].events.events()) {
            EXPECT_GE(e.t, chunks[i].t_start);
            if (i + 1 < chunks.size()) {
                EXPECT_LT(e.t, chunks[i].t_end);
            }
        }
        joined.insert(joined.end(), chunks[i].events.events().begin(), chunks[i].events.events().end());
    }
    EXPECT_EQ(joined, s.events());
}

TEST(ChunkStream, UnsortedIsError) {
    const EventStream s(4, 4, {{10, 0, 0, 1}, {5, 1, 1, 1}}, TimeSpan{0, 20});
    EXPECT_THROW(chunk_stream(s, 5), InvalidArgument);
}

TEST(EventStream, Validate) {
    EXPECT_THROW(EventStream(4, 4, {{1, 4, 0, 1}}).validate(), InvalidArgument);
    EXPECT_THROW(EventStream(4, 4, {{1, 0, 0, 2}}).validate(), InvalidArgument);
    EXPECT_NO_THROW(EventStream(4, 4, {{1, 3, 3, -1}}).validate());
}
