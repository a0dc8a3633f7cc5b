/**
 * @file rng.hpp
 * @brief Counter-based random streams for reproducible simulation.
 *
 * Every stream is a pure function of a 64-bit key and a draw counter, so a
 * given (seed, stream index) reproduces the same variates on every platform
 * and regardless of the order in which streams are consumed.
 *
 * Algorithm id: "splitmix64-boxmuller/1". Changing either the mixer or the
 * normal transform must bump the version suffix.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sdar {

inline constexpr const char* kRngAlgorithm = "splitmix64-boxmuller/1";

namespace detail {

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

}  // namespace detail

/// Derives an independent stream key from a parent seed and a stream index.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return detail::mix64(detail::mix64(seed ^ detail::kGolden) + detail::mix64(index + 1) * detail::kGolden);
}

class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) noexcept : key_(detail::mix64(seed)) {}

    std::uint64_t next_u64() noexcept {
        ++counter_;
        return detail::mix64(key_ + counter_ * detail::kGolden);
    }

    /// Uniform on the open interval (0, 1) with 53 bits of resolution.
    double uniform() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; both variates of a pair are used.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    std::uint64_t draws() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace sdar
