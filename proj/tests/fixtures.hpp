// Shared random (theta, series) generators for derivative checks.
#pragma once

#include "sdar/model.hpp"
#include "sdar/rng.hpp"

#include <vector>

namespace fixture {

struct Case {
    sdar::SdarParams theta;
    sdar::TimeSeries series;
};

/// Series simulated from a stationary draw; theta is a nearby feasible point
/// (not the generator) so gradients are far from zero.
inline Case random_case(sdar::CounterRng& rng, sdar::PersistenceKind kind, std::size_t n) {
    using sdar::PersistenceKind;
    auto u = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
    sdar::SdarParams gen{u(-2.0, 1.0), {kind == PersistenceKind::M1 ? u(0.1, 1.5) : u(1.2, 3.0), u(0.02, 1.0), u(0.2, 1.5)},
                         u(0.2, 1.0), kind};
    sdar::TimeSeries y = sdar::simulate(gen, n, rng.next_u64());
    sdar::SdarParams at = gen;
    at.alpha += u(-0.3, 0.3);
    at.pf.gamma0 += u(-0.1, 0.3);
    at.pf.gamma1 *= u(0.5, 1.5);
    at.pf.r *= u(0.7, 1.3);
    at.sigma *= u(0.7, 1.4);
    return {at, y};
}

inline std::vector<double> to_vec(const sdar::Vector5& v) { return {v(0), v(1), v(2), v(3), v(4)}; }

inline sdar::SdarParams from_vec(const std::vector<double>& v, sdar::PersistenceKind kind) {
    return sdar::SdarParams{v[0], {v[1], v[2], v[3]}, v[4], kind};
}

/// |a - b| relative to |b|, with a floor tied to the magnitude of the
/// surrounding vector or matrix so that near-zero entries are compared on
/// the scale of the object.
inline double rel_err(double a, double b, double scale) {
    return std::abs(a - b) / std::max(std::abs(b), 1e-6 * scale);
}

}  // namespace fixture
