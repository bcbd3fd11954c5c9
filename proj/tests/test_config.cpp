// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#include "edgesplat/config.hpp"

#include <gtest/gtest.h>

using namespace edgesplat;

TEST(Config, DefaultsRoundTrip) {
    const Config def;
    const std::string text = encode_config(def);
    EXPECT_TRUE(parse_config(text) == def);
    EXPECT_EQ(config_keys().size(), static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')));
}

TEST(Config, OverridesAndComments) {
    const Config c = parse_config("# comment\n\nloss.beta = 0.5   # inline\n  seed=17\nsim.preset = single-line\n"
                                  "loop.lr.mean = 1e-4\nloop.window = 3\n");
    EXPECT_EQ(c.pipeline.loss.beta, 0.5);
    EXPECT_EQ(c.pipeline.seed, 17u);
    EXPECT_EQ(c.sim.preset, "single-line");
    EXPECT_EQ(c.pipeline.loop.lr.mean, 1e-4);
    EXPECT_EQ(c.pipeline.loop.window, 3);
    EXPECT_EQ(c.pipeline.loss.lambda, LossWeights{}.lambda);
}

TEST(Config, ExactDoubleRoundTrip) {
    Config c;
    c.pipeline.loss.beta = 0.1 + 0.2;
    c.pipeline.loop.lr.pose_rotation = 1.0 / 3.0;
    EXPECT_TRUE(parse_config(encode_config(c)) == c);
    EXPECT_EQ(parse_config(encode_config(c)).pipeline.loss.beta, 0.1 + 0.2);
}

TEST(Config, Errors) {
    try {
        parse_config("loss.beta = 1\nloss.gamma = 2\n");
        FAIL();
    } catch (const FormatError &e) {
        EXPECT_NE(std::string(e.what()).find("loss.gamma"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
    EXPECT_THROW(parse_config("loss.beta = 1\nloss.beta = 2\n"), FormatError);
    EXPECT_THROW(parse_config("loss.beta\n"), FormatError);
    EXPECT_THROW(parse_config("loss.beta =\n"), FormatError);
    EXPECT_THROW(parse_config("loss.beta = 1x\n"), FormatError);
    EXPECT_THROW(parse_config("loop.window = 2.5\n"), FormatError);
    EXPECT_THROW(parse_config("seed = -1\n"), FormatError);
    EXPECT_THROW(parse_config("loss.beta = -1\n"), InvalidArgument);
    EXPECT_THROW(parse_config("loss.lambda = 1.5\n"), InvalidArgument);
    EXPECT_THROW(parse_config("init.r_edge = 2\n"), InvalidArgument);
    EXPECT_THROW(parse_config("loop.dt_min_us = 30000\n"), InvalidArgument);
    EXPECT_THROW(parse_config("detector.tau_percentile = 100\n"), InvalidArgument);
    EXPECT_THROW(parse_config("init.d_min = 6\n"), InvalidArgument);
    EXPECT_THROW(parse_config("sim.noise_ratio = -0.5\n"), InvalidArgument);
    EXPECT_THROW(load_config("/nonexistent/config.txt"), FormatError);
}

TEST(Config, SetValue) {
    Config c;
    set_config_value(c, "loop.n_samples", "3");
    EXPECT_EQ(c.pipeline.loop.supervision.n_samples, 3);
    EXPECT_THROW(set_config_value(c, "nope", "1"), FormatError);
}
