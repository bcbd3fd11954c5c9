// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// TUM trajectories: `timestamp tx ty tz qx qy qz qw` per line, timestamp in
// seconds, '#' comments. Poses are camera-to-world.

#include "edgesplat/core/error.hpp"
#include "edgesplat/core/pose.hpp"
#include "edgesplat/io/file.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace edgesplat::io {

inline std::string encode_tum(const std::vector<TimedPose> &trajectory) {
    std::string out;
    char buf[256];
    for (const TimedPose &s : trajectory) {
        const Eigen::Quaterniond q = s.pose.rotation.normalized();
        const Vec3 &t = s.pose.translation;
        const long long sec = s.t_us / 1000000;
        const long long frac = s.t_us % 1000000;
        std::snprintf(buf, sizeof(buf), "%lld.%06lld %.9f %.9f %.9f %.9f %.9f %.9f %.9f\n", sec, frac, t.x(), t.y(),
                      t.z(), q.x(), q.y(), q.z(), q.w());
        out += buf;
    }
    return out;
}

inline std::vector<TimedPose> decode_tum(const std::string &text) {
    std::istringstream in(text);
    std::string line;
    std::vector<TimedPose> out;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        std::istringstream ls(line);
        double ts = 0.0;
        double v[7];
        if (!(ls >> ts >> v[0] >> v[1] >> v[2] >> v[3] >> v[4] >> v[5] >> v[6])) {
            throw FormatError("tum: malformed record at line " + std::to_string(line_no));
        }
        Eigen::Quaterniond q(v[6], v[3], v[4], v[5]);
        if (q.norm() < 1e-12) {
            throw FormatError("tum: zero quaternion at line " + std::to_string(line_no));
        }
        out.push_back({static_cast<std::int64_t>(std::llround(ts * 1e6)), PoseSE3(q.normalized(), Vec3(v[0], v[1], v[2]))});
    }
    return out;
}

inline void write_tum(const std::string &path, const std::vector<TimedPose> &trajectory) {
    detail::write_file(path, encode_tum(trajectory));
}

inline std::vector<TimedPose> read_tum(const std::string &path) { return decode_tum(detail::read_file(path)); }

} // namespace edgesplat::io
