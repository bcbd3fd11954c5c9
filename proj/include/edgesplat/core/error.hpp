// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace edgesplat {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
  public:
    using Error::Error;
};

/// A file or text record could not be parsed.
class FormatError : public Error {
  public:
    using Error::Error;
};

/// Tracking or mapping diverged. Carries the index of the chunk being optimized.
class TrackingFailure : public Error {
  public:
    TrackingFailure(int chunk_index, const std::string &what)
        : Error("tracking failure at chunk " + std::to_string(chunk_index) + ": " + what),
          chunk_index_(chunk_index) {}

    int chunk_index() const noexcept { return chunk_index_; }

  private:
    int chunk_index_;
};

namespace detail {

inline void require(bool condition, const std::string &message) {
    if (!condition) {
        throw InvalidArgument(message);
    }
}

} // namespace detail
} // namespace edgesplat
