#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace sdar {

/// Pairwise (cascade) summation; result depends only on the element order.
inline double pairwise_sum(std::span<const double> xs) {
    constexpr std::size_t kBlock = 16;
    if (xs.size() <= kBlock) {
        double acc = 0.0;
        for (double x : xs) acc += x;
        return acc;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline double pairwise_mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean of empty range");
    return pairwise_sum(xs) / static_cast<double>(xs.size());
}

/// Radical inverse of `index` in the given prime base (van der Corput).
inline double radical_inverse(std::size_t index, unsigned base) {
    double result = 0.0;
    double f = 1.0 / base;
    while (index > 0) {
        result += f * static_cast<double>(index % base);
        index /= base;
        f /= base;
    }
    return result;
}

/// Point `index` (1-based is recommended, 0 maps to the origin) of the
/// Halton sequence in `dim` dimensions, dim <= 8.
inline std::vector<double> halton_point(std::size_t index, std::size_t dim) {
    static constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19};
    if (dim > std::size(kPrimes)) throw std::invalid_argument("halton_point: dim > 8");
    std::vector<double> p(dim);
    for (std::size_t d = 0; d < dim; ++d) p[d] = radical_inverse(index, kPrimes[d]);
    return p;
}

/// Empirical quantile of already sorted data, linear interpolation between
/// order statistics (Hyndman-Fan type 7).
inline double sorted_quantile(std::span<const double> sorted, double prob) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty range");
    if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("quantile probability outside [0,1]");
    const double h = prob * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace sdar
