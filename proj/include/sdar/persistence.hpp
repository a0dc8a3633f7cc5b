/**
 * @file persistence.hpp
 * @brief Persistence functions of the state-dependent AR(1) model.
 *
 * Two specifications are supported, both driven by u = |y|^{2r}:
 *
 *   M1 (exponential):  psi(y) = exp(-(gamma0 + gamma1 * u))
 *   M2 (rational):     psi(y) = 1 / (gamma0 + gamma1 * u)
 *
 * Parameter derivatives are taken in the order (gamma0, gamma1, r). The r
 * derivative involves u * ln(y^2), whose limit at y = 0 is zero; that limit
 * is used as the value at the origin.
 */

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sdar {

enum class PersistenceKind { M1, M2 };

inline std::string_view to_string(PersistenceKind kind) noexcept {
    return kind == PersistenceKind::M1 ? "M1" : "M2";
}

inline PersistenceKind parse_kind(std::string_view s) {
    if (s == "M1" || s == "m1") return PersistenceKind::M1;
    if (s == "M2" || s == "m2") return PersistenceKind::M2;
    throw std::invalid_argument("unknown persistence kind '" + std::string(s) + "' (expected M1 or M2)");
}

struct PersistenceParams {
    double gamma0 = 0.0;
    double gamma1 = 0.0;
    double r = 1.0;
};

/// Throws std::invalid_argument unless `p` is admissible for `kind`.
inline void validate(PersistenceKind kind, const PersistenceParams& p) {
    if (!std::isfinite(p.gamma0) || !std::isfinite(p.gamma1) || !std::isfinite(p.r)) {
        throw std::invalid_argument("persistence parameters must be finite");
    }
    if (p.gamma1 < 0.0) throw std::invalid_argument("gamma1 must be >= 0");
    if (p.r <= 0.0) throw std::invalid_argument("r must be > 0");
    if (kind == PersistenceKind::M2 && p.gamma0 <= 1.0) {
        throw std::invalid_argument("M2 requires gamma0 > 1");
    }
}

namespace detail {

/// |y|^{2r} and its r-derivative factors u*ln(y^2), u*ln(y^2)^2.
struct PowerTerms {
    double u = 0.0;
    double u_log = 0.0;
    double u_log2 = 0.0;
};

inline PowerTerms power_terms(double log_y2, bool y_is_zero, double r) noexcept {
    if (y_is_zero) return {};
    const double u = std::exp(r * log_y2);
    return {u, u * log_y2, u * log_y2 * log_y2};
}

inline PowerTerms power_terms(double y, double r) noexcept {
    if (y == 0.0) return {};
    return power_terms(2.0 * std::log(std::abs(y)), false, r);
}

inline double scaled_u(double gamma1, double u) noexcept { return gamma1 == 0.0 ? 0.0 : gamma1 * u; }

inline double psi_from_u(PersistenceKind kind, const PersistenceParams& p, double u) noexcept {
    const double w = scaled_u(p.gamma1, u);
    return kind == PersistenceKind::M1 ? std::exp(-(p.gamma0 + w)) : 1.0 / (p.gamma0 + w);
}

/// psi, its (gamma0, gamma1, r) gradient and Hessian from precomputed power
/// terms. Shared by the public evaluators and the likelihood loop.
struct PsiDerivatives {
    double value = 0.0;
    Eigen::Vector3d grad = Eigen::Vector3d::Zero();
    Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
};

inline double psi_with_grad(PersistenceKind kind, const PersistenceParams& p, const PowerTerms& t,
                            Eigen::Vector3d& grad) noexcept {
    const double psi = psi_from_u(kind, p, t.u);
    // dpsi/dgamma_k = -f(psi) * dD/dgamma_k with D = gamma0 + gamma1 u and
    // f = psi (M1) or psi^2 (M2).
    const double f = kind == PersistenceKind::M1 ? psi : psi * psi;
    grad(0) = -f;
    grad(1) = -t.u * f;
    grad(2) = -p.gamma1 * t.u_log * f;
    return psi;
}

inline PsiDerivatives psi_derivatives(PersistenceKind kind, const PersistenceParams& p, const PowerTerms& t) noexcept {
    PsiDerivatives out;
    out.value = psi_with_grad(kind, p, t, out.grad);
    const double psi = out.value;
    const double g1 = p.gamma1;
    // First derivatives of D = gamma0 + gamma1 u and the nonzero second ones.
    const double d0 = 1.0;
    const double d1 = t.u;
    const double dr = g1 * t.u_log;
    const double d1r = t.u_log;
    const double drr = g1 * t.u_log2;
    const double dd[3] = {d0, d1, dr};
    double d2[3][3] = {{0, 0, 0}, {0, 0, d1r}, {0, d1r, drr}};
    if (kind == PersistenceKind::M1) {
        // psi = exp(-D): psi_ab = psi * (D_a D_b - D_ab)
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) out.hess(a, b) = psi * (dd[a] * dd[b] - d2[a][b]);
    } else {
        // psi = 1/D: psi_ab = 2 D_a D_b psi^3 - D_ab psi^2
        const double psi2 = psi * psi;
        const double psi3 = psi2 * psi;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) out.hess(a, b) = 2.0 * dd[a] * dd[b] * psi3 - d2[a][b] * psi2;
    }
    return out;
}

}  // namespace detail

inline double psi(PersistenceKind kind, double y, const PersistenceParams& p) {
    validate(kind, p);
    return detail::psi_from_u(kind, p, detail::power_terms(y, p.r).u);
}

/// y * dpsi/dy, with the limit value 0 at y = 0.
inline double y_psi_dy(PersistenceKind kind, double y, const PersistenceParams& p) {
    validate(kind, p);
    if (y == 0.0 || p.gamma1 == 0.0) return 0.0;
    const double u = detail::power_terms(y, p.r).u;
    const double val = detail::psi_from_u(kind, p, u);
    const double f = kind == PersistenceKind::M1 ? val : val * val;
    return -2.0 * p.r * p.gamma1 * u * f;
}

/// dpsi/dy. Empty when the derivative is singular (y = 0 with 2r < 1).
inline std::optional<double> psi_dy(PersistenceKind kind, double y, const PersistenceParams& p) {
    validate(kind, p);
    if (p.gamma1 == 0.0) return 0.0;
    if (y == 0.0) {
        if (2.0 * p.r < 1.0) return std::nullopt;
        return 0.0;
    }
    return y_psi_dy(kind, y, p) / y;
}

inline Eigen::Vector3d psi_grad(PersistenceKind kind, double y, const PersistenceParams& p) {
    validate(kind, p);
    Eigen::Vector3d g;
    detail::psi_with_grad(kind, p, detail::power_terms(y, p.r), g);
    return g;
}

inline Eigen::Matrix3d psi_hess(PersistenceKind kind, double y, const PersistenceParams& p) {
    validate(kind, p);
    return detail::psi_derivatives(kind, p, detail::power_terms(y, p.r)).hess;
}

// ---------------------------------------------------------------------------
// Contraction bound sup_y |psi(y)| + |y psi'(y)|
// ---------------------------------------------------------------------------

/// Closed-form supremum of |psi| + |y psi'|. For r > 1/2 the maximum is
/// interior (at gamma1 u = (2r-1)/(2r) for M1, gamma1 u = (2r-1) gamma0/(1+2r)
/// for M2); for r <= 1/2 or gamma1 = 0 the function is nonincreasing in |y|
/// and the supremum is psi(0).
inline double a1_bound_closed_form(PersistenceKind kind, const PersistenceParams& p) {
    validate(kind, p);
    const double r = p.r;
    const bool interior = r > 0.5 && p.gamma1 > 0.0;
    if (kind == PersistenceKind::M1) {
        if (!interior) return std::exp(-p.gamma0);
        return 2.0 * r * std::exp(-(2.0 * r * p.gamma0 + 2.0 * r - 1.0) / (2.0 * r));
    }
    if (!interior) return 1.0 / p.gamma0;
    return (1.0 + 2.0 * r) * (1.0 + 2.0 * r) / (8.0 * r * p.gamma0);
}

/// |psi(y)| + |y psi'(y)| evaluated without overflow for very large |y|.
inline double a1_objective(PersistenceKind kind, double y, const PersistenceParams& p) {
    if (y == 0.0 || p.gamma1 == 0.0) return std::abs(detail::psi_from_u(kind, p, 0.0));
    const double log_w = std::log(p.gamma1) + 2.0 * p.r * std::log(std::abs(y));
    const double w = std::exp(log_w);
    if (kind == PersistenceKind::M1) {
        const double level = std::exp(-(p.gamma0 + w));
        const double slope = std::exp(std::log(2.0 * p.r) + log_w - p.gamma0 - w);
        return level + slope;
    }
    const double denom = p.gamma0 + w;
    return 1.0 / denom + 2.0 * p.r / (denom * (p.gamma0 / w + 1.0));
}

/// Grid half-width that contains the interior maximiser with a wide margin.
inline double default_grid_extent(PersistenceKind kind, const PersistenceParams& p) {
    validate(kind, p);
    if (p.gamma1 == 0.0) return 10.0;
    const double scale = std::max(1.0, std::abs(p.gamma0)) / p.gamma1;
    const double extent = 10.0 * std::exp(std::log(scale) / (2.0 * p.r));
    return std::clamp(extent, 10.0, 1e100);
}

struct GridMaximum {
    double value = 0.0;
    double location = 0.0;
};

/// Maximum of |psi| + |y psi'| over a symmetric grid on [-y_max, y_max]:
/// the origin plus log-spaced points spanning twelve decades below y_max on
/// each side.
inline GridMaximum a1_grid_maximum(PersistenceKind kind, const PersistenceParams& p, double y_max,
                                   std::size_t grid_points) {
    validate(kind, p);
    if (!(y_max > 0.0) || !std::isfinite(y_max)) throw std::invalid_argument("y_max must be positive and finite");
    if (grid_points < 1000) throw std::invalid_argument("grid_points must be >= 1000");
    const std::size_t per_side = grid_points / 2;
    const double log_hi = std::log(y_max);
    const double log_lo = log_hi - 12.0 * std::log(10.0);
    GridMaximum best{a1_objective(kind, 0.0, p), 0.0};
    for (int sign : {1, -1}) {
        for (std::size_t i = 0; i < per_side; ++i) {
            const double t = static_cast<double>(i) / static_cast<double>(per_side - 1);
            const double y = sign * std::exp(log_lo + t * (log_hi - log_lo));
            const double v = a1_objective(kind, y, p);
            if (v > best.value) best = {v, y};
        }
    }
    return best;
}

inline double a1_bound_numeric(PersistenceKind kind, const PersistenceParams& p, double y_max,
                               std::size_t grid_points) {
    return a1_grid_maximum(kind, p, y_max, grid_points).value;
}

struct AssumptionReport {
    double sup_bound_closed_form = 0.0;
    double sup_bound_numeric = 0.0;
    bool a1_satisfied = false;
    bool a2_satisfied = false;
    /// Parameter derivatives (and their products with y) bounded in y.
    bool a4_a5_satisfied = false;
    double grid_max_location = 0.0;
};

/// Contraction (a1), bounded skeleton psi(y) y (a2) and bounded parameter
/// derivatives (a4/a5) at a single parameter point.
inline AssumptionReport check_assumptions(PersistenceKind kind, const PersistenceParams& p,
                                          std::size_t grid_points = 100001) {
    validate(kind, p);
    AssumptionReport rep;
    rep.sup_bound_closed_form = a1_bound_closed_form(kind, p);
    const auto grid = a1_grid_maximum(kind, p, default_grid_extent(kind, p), grid_points);
    rep.sup_bound_numeric = grid.value;
    rep.grid_max_location = std::abs(grid.location);
    rep.a1_satisfied = std::max(rep.sup_bound_closed_form, rep.sup_bound_numeric) < 1.0;
    // psi(y) y ~ |y| exp(-gamma1 |y|^{2r}) for M1 and ~ |y|^{1-2r} / gamma1 for M2.
    const bool decays = p.gamma1 > 0.0;
    if (kind == PersistenceKind::M1) {
        rep.a2_satisfied = decays;
        rep.a4_a5_satisfied = decays;
    } else {
        rep.a2_satisfied = decays && p.r >= 0.5;
        // The r-derivative times y grows like ln|y| |y|^{1-2r}.
        rep.a4_a5_satisfied = decays && p.r > 0.5;
    }
    return rep;
}

}  // namespace sdar
