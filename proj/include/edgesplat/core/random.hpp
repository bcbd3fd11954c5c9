// Copyright Contributors to the edgesplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

namespace edgesplat {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer, used to derive independent per-key seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Generator for item `key` under `seed`. Output depends only on (seed, key),
/// so items can be processed in any order with identical results.
inline Rng keyed_rng(std::uint64_t seed, std::uint64_t key) { return Rng(mix_seed(mix_seed(seed) ^ mix_seed(key + 1))); }

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

} // namespace edgesplat
