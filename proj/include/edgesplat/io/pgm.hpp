// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Binary PGM (P5), maxval 65535, row-major, 16-bit big-endian samples.
// Stored sample = round(65535 * clamp(value, 0, 1)).

#include "edgesplat/core/grid.hpp"
#include "edgesplat/io/file.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstdint>
#include <sstream>
#include <string>

namespace edgesplat::io {

inline std::uint16_t to_pgm_sample(double v) {
    return static_cast<std::uint16_t>(std::lround(65535.0 * std::clamp(v, 0.0, 1.0)));
}

inline std::string encode_pgm(const Image &image) {
    std::string out = "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n65535\n";
    out.reserve(out.size() + 2 * image.size());
    for (double v : image) {
        const std::uint16_t s = to_pgm_sample(v);
        out.push_back(static_cast<char>(s >> 8));
        out.push_back(static_cast<char>(s & 0xFF));
    }
    return out;
}

inline Image decode_pgm(const std::string &bytes) {
    std::size_t pos = 0;
    auto next_token = [&]() {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') {
                    ++pos;
                }
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
        const std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
            ++pos;
        }
        return bytes.substr(start, pos - start);
    };
    if (next_token() != "P5") {
        throw FormatError("pgm: expected P5 magic");
    }
    int width = 0;
    int height = 0;
    int maxval = 0;
    try {
        width = std::stoi(next_token());
        height = std::stoi(next_token());
        maxval = std::stoi(next_token());
    } catch (const std::exception &) {
        throw FormatError("pgm: malformed header");
    }
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
        throw FormatError("pgm: invalid header values");
    }
    ++pos; // single whitespace after maxval
    const std::size_t bytes_per = maxval > 255 ? 2 : 1;
    const std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * bytes_per;
    if (bytes.size() < pos + need) {
        throw FormatError("pgm: truncated pixel data");
    }
    Image image(width, height);
    const auto *p = reinterpret_cast<const unsigned char *>(bytes.data() + pos);
    for (std::size_t i = 0; i < image.size(); ++i) {
        const unsigned v = bytes_per == 2 ? (static_cast<unsigned>(p[2 * i]) << 8) | p[2 * i + 1] : p[i];
        image[i] = static_cast<double>(v) / maxval;
    }
    return image;
}

inline void write_pgm(const std::string &path, const Image &image) { detail::write_file(path, encode_pgm(image)); }

inline Image read_pgm(const std::string &path) { return decode_pgm(detail::read_file(path)); }

inline void write_pgm(const std::string &path, const BinaryMask &mask) {
    Image image(mask.width(), mask.height());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        image[i] = mask[i] ? 1.0 : 0.0;
    }
    write_pgm(path, image);
}

} // namespace edgesplat::io
