// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Scene description files: `key = value` lines, one primitive per block.
// Global keys precede the first block; blocks start with `[plane]` or `[segment]`.
// See docs/formats.md.

#include "edgesplat/core/error.hpp"
#include "edgesplat/io/file.hpp"
#include "edgesplat/scene_sim.hpp"

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace edgesplat::io {

namespace scene_detail {

inline std::string trim(const std::string &s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) {
        return {};
    }
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::vector<double> numbers(const std::string &value, std::size_t expected, const std::string &key, int line) {
    std::istringstream in(value);
    std::vector<double> out;
    double v = 0.0;
    while (in >> v) {
        out.push_back(v);
    }
    if (!in.eof() || out.size() != expected) {
        throw FormatError("scene: line " + std::to_string(line) + ": '" + key + "' expects " +
                          std::to_string(expected) + " numbers");
    }
    return out;
}

inline Vec3 vec3(const std::string &value, const std::string &key, int line) {
    const auto n = numbers(value, 3, key, line);
    return {n[0], n[1], n[2]};
}

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fmt(const Vec3 &v) { return fmt(v.x()) + " " + fmt(v.y()) + " " + fmt(v.z()); }

} // namespace scene_detail

inline sim::SyntheticScene decode_scene(const std::string &text) {
    using namespace scene_detail;
    sim::SyntheticScene scene;
    enum class Block { global, plane, segment } block = Block::global;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) {
            continue;
        }
        if (line == "[plane]") {
            scene.planes.emplace_back();
            block = Block::plane;
            continue;
        }
        if (line == "[segment]") {
            scene.segments.emplace_back();
            block = Block::segment;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw FormatError("scene: line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto unknown = [&]() {
            return FormatError("scene: line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        };
        if (block == Block::global) {
            if (key == "background") {
                scene.background = numbers(value, 1, key, line_no)[0];
            } else if (key == "bounds") {
                const auto n = numbers(value, 6, key, line_no);
                scene.bounds.min = {n[0], n[1], n[2]};
                scene.bounds.max = {n[3], n[4], n[5]};
            } else {
                throw unknown();
            }
        } else if (block == Block::plane) {
            sim::Plane &p = scene.planes.back();
            if (key == "center") {
                p.center = vec3(value, key, line_no);
            } else if (key == "axis_u") {
                p.axis_u = vec3(value, key, line_no);
            } else if (key == "axis_v") {
                p.axis_v = vec3(value, key, line_no);
            } else if (key == "half_extent") {
                const auto n = numbers(value, 2, key, line_no);
                p.half_u = n[0];
                p.half_v = n[1];
            } else if (key == "texture") {
                std::istringstream ts(value);
                std::string kind;
                ts >> kind;
                const std::string rest = trim(value.substr(kind.size()));
                if (kind == "constant") {
                    p.texture = {sim::TextureKind::constant, numbers(rest, 1, key, line_no)[0], 0.0, 1.0};
                } else if (kind == "checker" || kind == "stripes" || kind == "sinusoid") {
                    const auto n = numbers(rest, 3, key, line_no);
                    const auto k = kind == "checker"   ? sim::TextureKind::checker
                                   : kind == "stripes" ? sim::TextureKind::stripes
                                                       : sim::TextureKind::sinusoid;
                    p.texture = {k, n[0], n[1], n[2]};
                } else {
                    throw FormatError("scene: line " + std::to_string(line_no) + ": unknown texture '" + kind + "'");
                }
            } else {
                throw unknown();
            }
        } else {
            sim::Segment &s = scene.segments.back();
            if (key == "p0") {
                s.p0 = vec3(value, key, line_no);
            } else if (key == "p1") {
                s.p1 = vec3(value, key, line_no);
            } else if (key == "radius") {
                s.radius = numbers(value, 1, key, line_no)[0];
            } else if (key == "albedo") {
                s.albedo = numbers(value, 1, key, line_no)[0];
            } else {
                throw unknown();
            }
        }
    }
    try {
        scene.validate();
    } catch (const InvalidArgument &e) {
        throw FormatError(e.what());
    }
    return scene;
}

inline std::string encode_scene(const sim::SyntheticScene &scene) {
    using namespace scene_detail;
    std::string out = "# edgesplat scene v1\n";
    out += "background = " + fmt(scene.background) + "\n";
    out += "bounds = " + fmt(scene.bounds.min) + " " + fmt(scene.bounds.max) + "\n";
    for (const sim::Plane &p : scene.planes) {
        out += "\n[plane]\ncenter = " + fmt(p.center) + "\naxis_u = " + fmt(p.axis_u) + "\naxis_v = " + fmt(p.axis_v) +
               "\nhalf_extent = " + fmt(p.half_u) + " " + fmt(p.half_v) + "\ntexture = ";
        switch (p.texture.kind) {
        case sim::TextureKind::constant:
            out += "constant " + fmt(p.texture.a);
            break;
        case sim::TextureKind::checker:
            out += "checker ";
            break;
        case sim::TextureKind::stripes:
            out += "stripes ";
            break;
        case sim::TextureKind::sinusoid:
            out += "sinusoid ";
            break;
        }
        if (p.texture.kind != sim::TextureKind::constant) {
            out += fmt(p.texture.a) + " " + fmt(p.texture.b) + " " + fmt(p.texture.period);
        }
        out += "\n";
    }
    for (const sim::Segment &s : scene.segments) {
        out += "\n[segment]\np0 = " + fmt(s.p0) + "\np1 = " + fmt(s.p1) + "\nradius = " + fmt(s.radius) +
               "\nalbedo = " + fmt(s.albedo) + "\n";
    }
    return out;
}

inline sim::SyntheticScene read_scene(const std::string &path) { return decode_scene(detail::read_file(path)); }

inline void write_scene(const std::string &path, const sim::SyntheticScene &scene) {
    detail::write_file(path, encode_scene(scene));
}

} // namespace edgesplat::io
