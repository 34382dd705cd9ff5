#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace favmap {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed of sub-stream `stream` under `master`:
///   splitmix64(master + 0x9E3779B97F4A7C15 * (stream + 1)).
/// Every randomized component (tree, repeat, fold) gets its own stream so
/// results do not depend on execution order or thread count.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept;

/// Uniform integer in [0, n) by rejection sampling; n > 0. Unlike
/// std::uniform_int_distribution the draw sequence is identical on every
/// standard library.
std::size_t uniform_index(Rng& rng, std::size_t n);

/// Uniform real in [0, 1) from the top 53 bits of one draw.
double uniform_real(Rng& rng) noexcept;

/// Standard normal via Box-Muller (one value per call).
double standard_normal(Rng& rng) noexcept;

/// Fisher-Yates shuffle driven by uniform_index.
template <class T>
void shuffle(std::span<T> values, Rng& rng)
{
    for (std::size_t i = values.size(); i > 1; --i) {
        std::size_t j = uniform_index(rng, i);
        using std::swap;
        swap(values[i - 1], values[j]);
    }
}

} // namespace favmap
