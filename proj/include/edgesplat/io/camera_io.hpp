// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Pinhole intrinsics files: one line `fx fy cx cy width height`, '#' comments.

#include "edgesplat/core/camera.hpp"
#include "edgesplat/core/error.hpp"
#include "edgesplat/io/file.hpp"

#include <cstdio>
#include <sstream>
#include <string>

namespace edgesplat::io {

inline std::string encode_camera(const CameraIntrinsics &K) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "# fx fy cx cy width height\n%.17g %.17g %.17g %.17g %d %d\n", K.fx, K.fy, K.cx, K.cy,
                  K.width, K.height);
    return buf;
}

inline CameraIntrinsics decode_camera(const std::string &text) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        std::istringstream ls(line);
        CameraIntrinsics K;
        std::string rest;
        if (!(ls >> K.fx >> K.fy >> K.cx >> K.cy >> K.width >> K.height) || (ls >> rest)) {
            throw FormatError("camera: expected 'fx fy cx cy width height'");
        }
        K.validate();
        return K;
    }
    throw FormatError("camera: no intrinsics record");
}

inline CameraIntrinsics read_camera(const std::string &path) { return decode_camera(detail::read_file(path)); }

inline void write_camera(const std::string &path, const CameraIntrinsics &K) { detail::write_file(path, encode_camera(K)); }

} // namespace edgesplat::io
