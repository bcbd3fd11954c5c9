// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Events, interval accumulation into event maps, and stream chunking.

#include "edgesplat/core/error.hpp"
#include "edgesplat/core/grid.hpp"
#include "edgesplat/core/random.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace edgesplat {

using Timestamp = std::int64_t; // microseconds
using Duration = std::int64_t;  // microseconds

struct Event {
    Timestamp t = 0;
    int x = 0;
    int y = 0;
    int polarity = 1; // +1 or -1

    bool operator==(const Event &) const = default;
};

/// Canonical event ordering (t, y, x, polarity).
inline bool event_less(const Event &a, const Event &b) {
    return std::tie(a.t, a.y, a.x, a.polarity) < std::tie(b.t, b.y, b.x, b.polarity);
}

/// Half-open time interval [begin, end).
struct TimeSpan {
    Timestamp begin = 0;
    Timestamp end = 0;

    Duration duration() const { return end - begin; }
    bool contains(Timestamp t) const { return t >= begin && t < end; }
    bool operator==(const TimeSpan &) const = default;
};

/// Events of one sensor with its resolution. The declared span, when present,
/// is the recording interval; otherwise it is derived from the events.
class EventStream {
  public:
    EventStream() = default;
    EventStream(int width, int height, std::vector<Event> events = {}, std::optional<TimeSpan> span = std::nullopt)
        : width_(width), height_(height), events_(std::move(events)), declared_span_(span) {
        detail::require(width > 0 && height > 0, "event stream: resolution must be positive");
        if (span) {
            detail::require(span->end >= span->begin, "event stream: span end precedes begin");
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    const std::vector<Event> &events() const noexcept { return events_; }
    std::size_t size() const noexcept { return events_.size(); }
    bool empty() const noexcept { return events_.empty(); }
    const std::optional<TimeSpan> &declared_span() const noexcept { return declared_span_; }

    std::optional<TimeSpan> span() const {
        if (declared_span_) {
            return declared_span_;
        }
        if (events_.empty()) {
            return std::nullopt;
        }
        return TimeSpan{events_.front().t, events_.back().t + 1};
    }

    bool is_sorted() const {
        return std::is_sorted(events_.begin(), events_.end(), [](const Event &a, const Event &b) { return a.t < b.t; });
    }

    /// Throws when an event is out of bounds, has a bad polarity or timestamps decrease.
    void validate() const {
        for (std::size_t i = 0; i < events_.size(); ++i) {
            const Event &e = events_[i];
            if (e.x < 0 || e.y < 0 || e.x >= width_ || e.y >= height_) {
                throw InvalidArgument("event " + std::to_string(i) + " outside " + std::to_string(width_) + "x" +
                                      std::to_string(height_));
            }
            if (e.polarity != 1 && e.polarity != -1) {
                throw InvalidArgument("event " + std::to_string(i) + " has polarity " + std::to_string(e.polarity));
            }
            if (e.t < 0) {
                throw InvalidArgument("event " + std::to_string(i) + " has a negative timestamp");
            }
            if (i > 0 && e.t < events_[i - 1].t) {
                throw InvalidArgument("event stream is not sorted by timestamp at index " + std::to_string(i));
            }
        }
    }

    /// Index range of events with t in [t0, t1).
    std::pair<std::size_t, std::size_t> range(Timestamp t0, Timestamp t1) const {
        const auto lo = std::lower_bound(events_.begin(), events_.end(), t0,
                                         [](const Event &e, Timestamp t) { return e.t < t; });
        const auto hi = std::lower_bound(lo, events_.end(), t1, [](const Event &e, Timestamp t) { return e.t < t; });
        return {static_cast<std::size_t>(lo - events_.begin()), static_cast<std::size_t>(hi - events_.begin())};
    }

  private:
    int width_ = 1;
    int height_ = 1;
    std::vector<Event> events_;
    std::optional<TimeSpan> declared_span_;
};

/// Signed accumulation of events over [t_start, t_end), in units of log-brightness.
struct EventMap {
    Image values;
    Timestamp t_start = 0;
    Timestamp t_end = 0;
};

/// Contiguous slice of a stream. Chunks are half-open except the last, which
/// also owns events stamped exactly at the stream end.
struct Chunk {
    int index = 0;
    Timestamp t_start = 0;
    Timestamp t_end = 0;
    EventStream events;
};

/// values(x) = contrast_threshold * (signed count of events at x within [t, t + dt)).
inline EventMap accumulate(const EventStream &stream, Timestamp t, Duration dt, double contrast_threshold) {
    detail::require(dt > 0, "accumulate: dt must be positive");
    detail::require(contrast_threshold > 0.0, "accumulate: contrast threshold must be positive");
    if (const auto span = stream.span()) {
        if (t < span->begin || t + dt > span->end) {
            throw InvalidArgument("accumulate: interval [" + std::to_string(t) + ", " + std::to_string(t + dt) +
                                  ") outside stream range [" + std::to_string(span->begin) + ", " +
                                  std::to_string(span->end) + ")");
        }
    }
    // Integer counts first so the result does not depend on summation order.
    Grid<std::int64_t> counts(stream.width(), stream.height(), 0);
    const auto [lo, hi] = stream.range(t, t + dt);
    const auto &events = stream.events();
    for (std::size_t i = lo; i < hi; ++i) {
        counts(events[i].x, events[i].y) += events[i].polarity;
    }
    EventMap map{Image(stream.width(), stream.height(), 0.0), t, t + dt};
    for (std::size_t i = 0; i < counts.size(); ++i) {
        map.values[i] = contrast_threshold * static_cast<double>(counts[i]);
    }
    return map;
}

/// Draws (t, t + dt) with dt uniform over the integers in [dt_min, dt_max].
inline std::pair<Timestamp, Timestamp> sample_interval(Rng &rng, Timestamp t, Duration dt_min, Duration dt_max) {
    detail::require(dt_min > 0, "sample_interval: dt_min must be positive");
    detail::require(dt_min <= dt_max, "sample_interval: dt_min exceeds dt_max");
    std::uniform_int_distribution<Duration> dist(dt_min, dt_max);
    return {t, t + dist(rng)};
}

inline std::vector<Chunk> chunk_stream(const EventStream &stream, Duration chunk_duration) {
    detail::require(chunk_duration > 0, "chunk_stream: chunk duration must be positive");
    if (!stream.is_sorted()) {
        throw InvalidArgument("chunk_stream: stream is not sorted by timestamp");
    }
    const auto span = stream.span();
    detail::require(span.has_value() && span->duration() > 0, "chunk_stream: stream has an empty time span");

    std::vector<Chunk> chunks;
    const auto &events = stream.events();
    std::size_t cursor = 0;
    for (Timestamp begin = span->begin; begin < span->end; begin += chunk_duration) {
        const Timestamp end = std::min(begin + chunk_duration, span->end);
        const bool last = end == span->end;
        std::size_t stop = cursor;
        while (stop < events.size() && (events[stop].t < end || last)) {
            ++stop;
        }
        std::vector<Event> slice(events.begin() + static_cast<std::ptrdiff_t>(cursor),
                                 events.begin() + static_cast<std::ptrdiff_t>(stop));
        Chunk chunk;
        chunk.index = static_cast<int>(chunks.size());
        chunk.t_start = begin;
        chunk.t_end = end;
        chunk.events = EventStream(stream.width(), stream.height(), std::move(slice), TimeSpan{begin, end});
        chunks.push_back(std::move(chunk));
        cursor = stop;
    }
    return chunks;
}

/// Splits [t_start, t_end) into `count` equal sub-intervals and accumulates each.
inline std::vector<EventMap> accumulate_sequence(const EventStream &stream, Timestamp t_start, Timestamp t_end,
                                                 int count, double contrast_threshold) {
    detail::require(count >= 1, "accumulate_sequence: count must be positive");
    detail::require(t_end - t_start >= count, "accumulate_sequence: interval too short for the requested split");
    std::vector<EventMap> maps;
    maps.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const Timestamp a = t_start + (t_end - t_start) * i / count;
        const Timestamp b = t_start + (t_end - t_start) * (i + 1) / count;
        maps.push_back(accumulate(stream, a, b - a, contrast_threshold));
    }
    return maps;
}

} // namespace edgesplat
