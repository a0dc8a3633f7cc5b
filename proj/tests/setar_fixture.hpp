// SETAR(2,3,3) generator with the CAC40 regime coefficients.
#pragma once

#include "sdar/rng.hpp"
#include "sdar/setar.hpp"

#include <vector>

namespace fixture {

inline sdar::SetarFit cac40_setar(double threshold, double sigma) {
    sdar::SetarFit f;
    f.d1 = f.d2 = 3;
    f.c1 = -1.3292280;
    f.phi1 = {0.2297850, 0.2442498, 0.1805137};
    f.c2 = -0.6589916;
    f.phi2 = {0.4226148, 0.3088542, 0.1112698};
    f.sigma1 = f.sigma2 = sigma;
    f.threshold = threshold;
    return f;
}

/// n observations after a burn-in of 500, started at the threshold.
inline sdar::TimeSeries simulate_setar(const sdar::SetarFit& f, std::size_t n, std::uint64_t seed) {
    sdar::CounterRng rng(seed);
    const std::size_t burn = 500;
    std::vector<double> y(burn + n, f.threshold);
    const auto p = static_cast<std::size_t>(f.max_lag());
    for (std::size_t t = p; t < y.size(); ++t) {
        const bool low = y[t - 1] <= f.threshold;
        const auto& phi = low ? f.phi1 : f.phi2;
        double m = low ? f.c1 : f.c2;
        for (std::size_t i = 0; i < phi.size(); ++i) m += phi[i] * y[t - 1 - i];
        y[t] = m + (low ? f.sigma1 : f.sigma2) * rng.normal();
    }
    return sdar::TimeSeries(std::vector<double>(y.begin() + static_cast<std::ptrdiff_t>(burn), y.end()));
}

/// Position of `value` among threshold candidates: index of the largest
/// candidate <= value (-1 if none).
inline long candidate_index(const std::vector<double>& cands, double value) {
    long idx = -1;
    for (std::size_t i = 0; i < cands.size(); ++i)
        if (cands[i] <= value) idx = static_cast<long>(i);
    return idx;
}

}  // namespace fixture
