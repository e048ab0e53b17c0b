#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace silmpc {

// Counter-based draws: the value depends only on (seed, stream, index), so
// any step of a seeded series can be evaluated independently of the others.

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
    return splitmix64(seed ^ splitmix64(salt));
}

// Uniform on the open interval (0, 1).
inline double hashed_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
    const std::uint64_t h = splitmix64(mix_seed(seed, stream) + splitmix64(index));
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal via Box-Muller.
inline double hashed_gaussian(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
    const double u1 = hashed_uniform(seed, stream, 2 * index);
    const double u2 = hashed_uniform(seed, stream, 2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace silmpc
