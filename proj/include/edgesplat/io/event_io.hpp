// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Event files. Text: one `t_us x y p` record per line, p in {1, -1} or {1, 0},
// '#' comments. `# resolution W H` and `# span BEGIN END` comments are written
// by this library and honored when present.
//
// Binary: 16-byte header "E2ES" | u32 version | u16 W | u16 H | 4 reserved bytes,
// then packed little-endian records u64 t_us | u16 x | u16 y | i8 p.

#include "edgesplat/core/error.hpp"
#include "edgesplat/event_core.hpp"
#include "edgesplat/io/file.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace edgesplat::io {

inline constexpr std::array<char, 4> kEventMagic = {'E', '2', 'E', 'S'};
inline constexpr std::uint32_t kEventBinaryVersion = 1;
inline constexpr std::size_t kEventRecordSize = 13;

namespace detail {

template <typename T>
void put_le(std::string &out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFFu));
    }
}

template <typename T>
T get_le(const unsigned char *p) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    }
    return static_cast<T>(v);
}

inline void require_dims(const EventStream &stream) {
    if (stream.width() > 0xFFFF || stream.height() > 0xFFFF) {
        throw InvalidArgument("events: resolution does not fit the binary header");
    }
}

} // namespace detail

inline std::string encode_events_text(const EventStream &stream) {
    std::ostringstream out;
    out << "# edgesplat events v1\n";
    out << "# resolution " << stream.width() << ' ' << stream.height() << '\n';
    if (const auto &span = stream.declared_span()) {
        out << "# span " << span->begin << ' ' << span->end << '\n';
    }
    for (const Event &e : stream.events()) {
        out << e.t << ' ' << e.x << ' ' << e.y << ' ' << e.polarity << '\n';
    }
    return out.str();
}

inline std::string encode_events_binary(const EventStream &stream) {
    detail::require_dims(stream);
    std::string out(kEventMagic.begin(), kEventMagic.end());
    detail::put_le<std::uint32_t>(out, kEventBinaryVersion);
    detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(stream.width()));
    detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(stream.height()));
    detail::put_le<std::uint32_t>(out, 0);
    out.reserve(out.size() + stream.size() * kEventRecordSize);
    for (const Event &e : stream.events()) {
        detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(e.t));
        detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(e.x));
        detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(e.y));
        out.push_back(static_cast<char>(static_cast<std::int8_t>(e.polarity)));
    }
    return out;
}

inline EventStream decode_events_text(const std::string &text, int width = 0, int height = 0) {
    std::istringstream in(text);
    std::string line;
    std::vector<Event> events;
    std::optional<TimeSpan> span;
    int line_no = 0;
    int max_x = -1;
    int max_y = -1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            continue;
        }
        if (line[first] == '#') {
            std::istringstream cs(line.substr(first + 1));
            std::string key;
            cs >> key;
            if (key == "resolution") {
                int w = 0;
                int h = 0;
                if (cs >> w >> h && width == 0 && height == 0) {
                    width = w;
                    height = h;
                }
            } else if (key == "span") {
                TimeSpan s;
                if (cs >> s.begin >> s.end) {
                    span = s;
                }
            }
            continue;
        }
        std::istringstream ls(line);
        long long t = 0;
        int x = 0;
        int y = 0;
        int p = 0;
        std::string extra;
        if (!(ls >> t >> x >> y >> p) || (ls >> extra)) {
            throw FormatError("events: malformed record at line " + std::to_string(line_no));
        }
        if (p == 0) {
            p = -1;
        }
        if (p != 1 && p != -1) {
            throw FormatError("events: polarity must be 1, 0 or -1 at line " + std::to_string(line_no));
        }
        max_x = std::max(max_x, x);
        max_y = std::max(max_y, y);
        events.push_back({t, x, y, p});
    }
    if (width == 0 || height == 0) {
        width = std::max(max_x + 1, 1);
        height = std::max(max_y + 1, 1);
    }
    EventStream stream(width, height, std::move(events), span);
    stream.validate();
    return stream;
}

inline EventStream decode_events_binary(const std::string &bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kEventMagic.data(), 4) != 0) {
        throw FormatError("events: missing binary header");
    }
    const auto *p = reinterpret_cast<const unsigned char *>(bytes.data());
    const auto version = detail::get_le<std::uint32_t>(p + 4);
    if (version != kEventBinaryVersion) {
        throw FormatError("events: unsupported binary version " + std::to_string(version));
    }
    const int width = detail::get_le<std::uint16_t>(p + 8);
    const int height = detail::get_le<std::uint16_t>(p + 10);
    const std::size_t payload = bytes.size() - 16;
    if (payload % kEventRecordSize != 0) {
        throw FormatError("events: truncated binary record");
    }
    std::vector<Event> events(payload / kEventRecordSize);
    for (std::size_t i = 0; i < events.size(); ++i) {
        const unsigned char *r = p + 16 + i * kEventRecordSize;
        Event &e = events[i];
        e.t = static_cast<Timestamp>(detail::get_le<std::uint64_t>(r));
        e.x = detail::get_le<std::uint16_t>(r + 8);
        e.y = detail::get_le<std::uint16_t>(r + 10);
        e.polarity = static_cast<std::int8_t>(r[12]);
        if (e.polarity == 0) {
            e.polarity = -1;
        }
    }
    EventStream stream(width, height, std::move(events));
    stream.validate();
    return stream;
}

/// Auto-detects binary vs text by the magic bytes.
inline EventStream decode_events(const std::string &bytes) {
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), kEventMagic.data(), 4) == 0) {
        return decode_events_binary(bytes);
    }
    return decode_events_text(bytes);
}

inline EventStream read_events(const std::string &path) { return decode_events(detail::read_file(path)); }

inline void write_events(const std::string &path, const EventStream &stream, bool binary = false) {
    detail::write_file(path, binary ? encode_events_binary(stream) : encode_events_text(stream));
}

} // namespace edgesplat::io
