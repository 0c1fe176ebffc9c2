#pragma once

// Portable seeded draws. std::*_distribution algorithms are implementation
// defined, so byte-exact goldens use these on top of std::mt19937_64 instead.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <utility>

namespace glassynth {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Child seed for stream `index` of `master`; independent of evaluation order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept
{
    return mix64(master ^ mix64(index + 0x632BE59BD9B4E019ull));
}

// Uniform in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform in [lo, hi); returns lo exactly when lo == hi.
inline double uniform_between(Rng& rng, double lo, double hi)
{
    const double u = uniform_unit(rng);
    return lo == hi ? lo : lo + (hi - lo) * u;
}

// Unbiased uniform integer in [0, n) by rejection. n must be > 0.
inline std::size_t uniform_index(Rng& rng, std::size_t n)
{
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t x = rng();
    while (x >= limit)
        x = rng();
    return static_cast<std::size_t>(x % bound);
}

// Standard normal via Box-Muller (one value per call, the sine branch is dropped).
inline double standard_normal(Rng& rng)
{
    double u1 = uniform_unit(rng);
    while (u1 <= 0.0)
        u1 = uniform_unit(rng);
    const double u2 = uniform_unit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <typename T>
void shuffle_in_place(std::span<T> items, Rng& rng)
{
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = uniform_index(rng, i);
        std::swap(items[i - 1], items[j]);
    }
}

} // namespace glassynth
