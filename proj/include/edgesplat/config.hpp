// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Run configuration: flat `key = value` text with dotted namespaces. Every key
// has a default; unknown keys, duplicates and out-of-range values are errors.
// See docs/formats.md for the key list.

#include "edgesplat/core/error.hpp"
#include "edgesplat/io/file.hpp"
#include "edgesplat/presets.hpp"
#include "edgesplat/slam_loop.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace edgesplat {

struct SimulationConfig {
    std::string preset = "line-orbit";
    double noise_ratio = 0.0; // noise events per signal event; 1 gives a 1:1 mix

    void validate() const {
        detail::require(noise_ratio >= 0.0 && std::isfinite(noise_ratio), "config: sim.noise_ratio must be >= 0");
        const auto names = sim::presets::names();
        detail::require(std::find(names.begin(), names.end(), preset) != names.end(),
                        "config: unknown sim.preset '" + preset + "'");
    }
};

struct Config {
    PipelineConfig pipeline;
    SimulationConfig sim;

    void validate() const {
        pipeline.validate();
        sim.validate();
    }
};

namespace config_detail {

inline std::string trim(const std::string &s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) {
        return {};
    }
    return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

inline std::string format(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename T>
T parse_number(const std::string &key, const std::string &text) {
    T v{};
    const char *end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw FormatError("config: key '" + key + "' has invalid value '" + text + "'");
    }
    return v;
}

struct Entry {
    std::function<void(const std::string &)> set;
    std::function<std::string()> get;
};

template <typename T>
Entry bind(const std::string &key, T &field) {
    if constexpr (std::is_same_v<T, std::string>) {
        return {[&field](const std::string &v) { field = v; }, [&field] { return field; }};
    } else if constexpr (std::is_floating_point_v<T>) {
        return {[key, &field](const std::string &v) { field = parse_number<T>(key, v); },
                [&field] { return format(field); }};
    } else {
        return {[key, &field](const std::string &v) { field = parse_number<T>(key, v); },
                [&field] { return std::to_string(field); }};
    }
}

/// Keys in snapshot order.
inline std::vector<std::pair<std::string, Entry>> entries(Config &c) {
    PipelineConfig &p = c.pipeline;
    LoopParams &l = p.loop;
    std::vector<std::pair<std::string, Entry>> e;
    auto add = [&e](const std::string &key, auto &field) { e.emplace_back(key, bind(key, field)); };
    add("seed", p.seed);
    add("sim.preset", c.sim.preset);
    add("sim.noise_ratio", c.sim.noise_ratio);
    add("detector.T", p.detector.num_maps);
    add("detector.p", p.detector.patch_size);
    add("detector.rho", p.detector.overlap);
    add("detector.sigma", p.detector.sigma);
    add("detector.tau_percentile", p.detector.tau_percentile);
    add("detector.smooth_sigma", p.detector.smooth_sigma);
    add("detector.keep_percentile", p.detector.keep_percentile);
    add("detector.closing_radius", p.detector.closing_radius);
    add("init.confidence_min", p.edge_fit.confidence_min);
    add("init.k", p.edge_fit.k);
    add("init.s", p.edge_fit.tile_size);
    add("init.theta", p.edge_fit.angle_threshold);
    add("init.D_max", p.edge_fit.max_depth);
    add("init.N_total", p.budget.n_total);
    add("init.r_edge", p.budget.r_edge);
    add("init.d_min", p.d_min);
    add("init.d_max", p.d_max);
    add("init.opacity", p.init.opacity);
    add("init.color", p.init.color);
    add("init.edge_scale_px", p.init.edge_scale_px);
    add("init.edge_thin_ratio", p.init.edge_thin_ratio);
    add("init.random_scale_px", p.init.random_scale_px);
    add("loss.beta", p.loss.beta);
    add("loss.lambda", p.loss.lambda);
    add("loop.chunk_duration_us", l.chunk_duration);
    add("loop.window", l.window);
    add("loop.n_samples", l.supervision.n_samples);
    add("loop.init_iterations", l.init_iterations);
    add("loop.track_iterations", l.track_iterations);
    add("loop.map_iterations", l.map_iterations);
    add("loop.dt_min_us", l.supervision.dt_min);
    add("loop.dt_max_us", l.supervision.dt_max);
    add("loop.contrast_threshold", l.supervision.contrast_threshold);
    add("loop.divergence_factor", l.divergence_factor);
    add("loop.lr.pose_translation", l.lr.pose_translation);
    add("loop.lr.pose_rotation", l.lr.pose_rotation);
    add("loop.lr.mean", l.lr.mean);
    add("loop.lr.log_scale", l.lr.log_scale);
    add("loop.lr.rotation", l.lr.rotation);
    add("loop.lr.opacity_logit", l.lr.opacity_logit);
    add("loop.lr.color", l.lr.color);
    add("loop.lr.final_ratio", l.lr.final_ratio);
    add("loop.adam.beta1", l.adam.beta1);
    add("loop.adam.beta2", l.adam.beta2);
    add("loop.adam.epsilon", l.adam.epsilon);
    add("render.background", l.supervision.render.background);
    add("render.near", l.supervision.render.near);
    add("render.cutoff", l.supervision.render.cutoff);
    return e;
}

} // namespace config_detail

/// Every configuration key in snapshot order.
inline std::vector<std::string> config_keys() {
    Config c;
    std::vector<std::string> out;
    for (const auto &[key, entry] : config_detail::entries(c)) {
        out.push_back(key);
    }
    return out;
}

/// Sets one key from its text value (no range validation; see Config::validate).
inline void set_config_value(Config &c, const std::string &key, const std::string &value) {
    for (auto &[k, entry] : config_detail::entries(c)) {
        if (k == key) {
            entry.set(value);
            return;
        }
    }
    throw FormatError("config: unknown key '" + key + "'");
}

/// Applies `key = value` lines on top of `base`; '#' starts a comment. The result is validated.
inline Config parse_config(const std::string &text, Config base = {}) {
    auto entries = config_detail::entries(base);
    std::map<std::string, config_detail::Entry *> index;
    for (auto &[k, entry] : entries) {
        index[k] = &entry;
    }
    std::set<std::string> seen;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? text.size() : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = config_detail::trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        const std::string where = "config: line " + std::to_string(line_no) + ": ";
        if (eq == std::string::npos) {
            throw FormatError(where + "expected 'key = value'");
        }
        const std::string key = config_detail::trim(line.substr(0, eq));
        const std::string value = config_detail::trim(line.substr(eq + 1));
        const auto it = index.find(key);
        if (it == index.end()) {
            throw FormatError(where + "unknown key '" + key + "'");
        }
        if (!seen.insert(key).second) {
            throw FormatError(where + "duplicate key '" + key + "'");
        }
        if (value.empty()) {
            throw FormatError(where + "key '" + key + "' has no value");
        }
        it->second->set(value);
    }
    base.validate();
    return base;
}

inline Config load_config(const std::string &path) { return parse_config(io::detail::read_file(path)); }

/// Every key with its effective value; parse_config(encode_config(c)) reproduces c exactly.
inline std::string encode_config(const Config &c) {
    Config copy = c;
    std::string out;
    for (const auto &[key, entry] : config_detail::entries(copy)) {
        out += key + " = " + entry.get() + "\n";
    }
    return out;
}

inline bool operator==(const Config &a, const Config &b) { return encode_config(a) == encode_config(b); }

} // namespace edgesplat
