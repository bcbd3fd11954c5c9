// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// ASCII PLY for Gaussian sets. One vertex per Gaussian with properties
// x y z scale_0..2 rot_0..3 (w, x, y, z) opacity gray origin_tag.

#include "edgesplat/core/error.hpp"
#include "edgesplat/gaussian.hpp"
#include "edgesplat/io/file.hpp"

#include <array>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace edgesplat::io {

namespace ply_detail {

inline constexpr std::array<const char *, 12> kRealProperties = {
    "x", "y", "z", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3", "opacity", "gray"};

} // namespace ply_detail

inline std::string encode_ply(const GaussianScene &scene) {
    std::string out = "ply\nformat ascii 1.0\ncomment edgesplat gaussians\nelement vertex " +
                      std::to_string(scene.size()) + "\n";
    for (const char *name : ply_detail::kRealProperties) {
        out += std::string("property double ") + name + "\n";
    }
    out += "property uchar origin_tag\nend_header\n";
    char buf[512];
    for (const Gaussian3D &g : scene) {
        const Eigen::Quaterniond &q = g.rotation;
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %d\n",
                      g.mu.x(), g.mu.y(), g.mu.z(), g.scale.x(), g.scale.y(), g.scale.z(), q.w(), q.x(), q.y(), q.z(),
                      g.opacity, g.color, static_cast<int>(g.origin));
        out += buf;
    }
    return out;
}

inline GaussianScene decode_ply(const std::string &text) {
    std::istringstream in(text);
    std::string line;
    auto next = [&](const char *what) {
        if (!std::getline(in, line)) {
            throw FormatError(std::string("ply: unexpected end of file in ") + what);
        }
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
    };
    next("header");
    if (line != "ply") {
        throw FormatError("ply: missing magic line");
    }
    next("header");
    if (line != "format ascii 1.0") {
        throw FormatError("ply: only 'format ascii 1.0' is supported");
    }
    long long count = -1;
    std::vector<std::string> props;
    for (;;) {
        next("header");
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw == "comment" || kw.empty()) {
            continue;
        }
        if (kw == "end_header") {
            break;
        }
        if (kw == "element") {
            std::string name;
            if (!(ls >> name >> count) || name != "vertex" || count < 0 || !props.empty()) {
                throw FormatError("ply: expected a single 'element vertex <n>'");
            }
        } else if (kw == "property") {
            std::string type;
            std::string name;
            if (!(ls >> type >> name) || count < 0) {
                throw FormatError("ply: malformed property line '" + line + "'");
            }
            const bool is_tag = name == "origin_tag";
            if (is_tag ? type != "uchar" : (type != "double" && type != "float")) {
                throw FormatError("ply: unsupported type '" + type + "' for property " + name);
            }
            props.push_back(name);
        } else {
            throw FormatError("ply: unknown header keyword '" + kw + "'");
        }
    }
    std::vector<std::string> expected(ply_detail::kRealProperties.begin(), ply_detail::kRealProperties.end());
    expected.emplace_back("origin_tag");
    if (props != expected) {
        throw FormatError("ply: property list does not match the Gaussian layout");
    }
    GaussianScene scene;
    scene.reserve(static_cast<std::size_t>(count));
    for (long long i = 0; i < count; ++i) {
        next("vertex data");
        std::istringstream ls(line);
        double v[12];
        int tag = -1;
        for (double &x : v) {
            if (!(ls >> x)) {
                throw FormatError("ply: malformed vertex " + std::to_string(i));
            }
        }
        if (!(ls >> tag) || (tag != 0 && tag != 1)) {
            throw FormatError("ply: bad origin_tag in vertex " + std::to_string(i));
        }
        Gaussian3D g;
        g.mu = {v[0], v[1], v[2]};
        g.scale = {v[3], v[4], v[5]};
        g.rotation = Eigen::Quaterniond(v[6], v[7], v[8], v[9]);
        g.opacity = v[10];
        g.color = v[11];
        g.origin = static_cast<GaussianOrigin>(tag);
        try {
            g.validate();
        } catch (const InvalidArgument &e) {
            throw FormatError("ply: vertex " + std::to_string(i) + ": " + e.what());
        }
        scene.push_back(g);
    }
    return scene;
}

inline void write_ply(const std::string &path, const GaussianScene &scene) { detail::write_file(path, encode_ply(scene)); }

inline GaussianScene read_ply(const std::string &path) { return decode_ply(detail::read_file(path)); }

} // namespace edgesplat::io
