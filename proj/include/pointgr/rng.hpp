#pragma once

#include <cstdint>
#include <random>

#include "pointgr/tensor.hpp"

namespace pointgr {

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// Derives an independent stream for sub-task `index` of a run seeded with
/// `seed`. Stable across runs of the same build.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t x = seed * 0x9E3779B97F4A7C15ull + index + 1;
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

template <typename T>
Tensor<T> random_uniform(Rng& rng, Shape shape, T lo, T hi) {
    Tensor<T> t(std::move(shape));
    std::uniform_real_distribution<T> dist(lo, hi);
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = dist(rng);
    return t;
}

template <typename T>
Tensor<T> random_normal(Rng& rng, Shape shape, T mean, T stddev) {
    Tensor<T> t(std::move(shape));
    std::normal_distribution<T> dist(mean, stddev);
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = dist(rng);
    return t;
}

} // namespace pointgr
