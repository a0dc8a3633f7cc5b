/**
 * @file qml.hpp
 * @brief Quasi-maximum-likelihood estimation of the SDAR model.
 *
 * The estimator maximises the Gaussian quasi-log-likelihood over a compact
 * parameter box with a projected BFGS run from several deterministic starts.
 * Inference uses the sandwich covariance (1/n) Hbar^{-1} G Hbar^{-1}, where
 * Hbar is the mean per-observation Hessian and G the mean outer product of
 * per-observation scores, both evaluated at the estimate.
 */

#pragma once

#include "sdar/model.hpp"
#include "sdar/numeric.hpp"
#include "sdar/optimizer.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdar {

/// Compact parameter box in (alpha, gamma0, gamma1, r, sigma) order.
/// lower == upper pins a component.
struct ParamBox {
    Vector5 lower;
    Vector5 upper;

    bool pinned(int i) const { return lower(i) == upper(i); }
};

inline ParamBox default_box(PersistenceKind kind) {
    ParamBox box;
    const double g0_lo = kind == PersistenceKind::M1 ? -2.0 : 1.0 + 1e-6;
    box.lower << -10.0, g0_lo, 0.0, 1e-3, 1e-4;
    box.upper << 10.0, 5.0, 5.0, 3.0, 10.0;
    return box;
}

inline void validate(const ParamBox& box, PersistenceKind kind) {
    for (int i = 0; i < kNumParams; ++i) {
        if (!std::isfinite(box.lower(i)) || !std::isfinite(box.upper(i))) {
            throw std::invalid_argument("parameter box must be finite");
        }
        if (box.lower(i) > box.upper(i)) {
            throw std::invalid_argument(std::string("parameter box: lower > upper for ") + kParamNames[i]);
        }
    }
    if (box.lower(kSigma) <= 0.0) throw std::invalid_argument("parameter box: sigma lower bound must be > 0");
    if (box.lower(kGamma1) < 0.0) throw std::invalid_argument("parameter box: gamma1 lower bound must be >= 0");
    if (box.lower(kR) <= 0.0) throw std::invalid_argument("parameter box: r lower bound must be > 0");
    if (kind == PersistenceKind::M2 && box.lower(kGamma0) <= 1.0) {
        throw std::invalid_argument("parameter box: M2 requires gamma0 lower bound > 1");
    }
}

struct SandwichMatrices {
    Matrix5 H_bar = Matrix5::Zero();
    Matrix5 G = Matrix5::Zero();
};

struct SandwichResult {
    SandwichMatrices matrices;
    Matrix5 covariance = Matrix5::Zero();
};

class SingularMatrixError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kMaxConditionNumber = 1e12;

namespace detail {

/// Sandwich covariance restricted to the components flagged in `active`;
/// inactive rows and columns are zero. Empty if Hbar is numerically singular
/// on the active block.
inline std::optional<Matrix5> sandwich_from(const SandwichMatrices& m, std::size_t n,
                                            const std::array<bool, kNumParams>& active) {
    std::vector<int> idx;
    for (int i = 0; i < kNumParams; ++i)
        if (active[i]) idx.push_back(i);
    const auto k = static_cast<Eigen::Index>(idx.size());
    if (k == 0) return std::nullopt;
    Eigen::MatrixXd h(k, k), g(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = 0; b < k; ++b) {
            h(a, b) = m.H_bar(idx[a], idx[b]);
            g(a, b) = m.G(idx[a], idx[b]);
        }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (!(sv(k - 1) > 0.0) || sv(0) / sv(k - 1) > kMaxConditionNumber) return std::nullopt;
    const Eigen::MatrixXd h_inv = svd.solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::MatrixXd cov = h_inv * g * h_inv.transpose() / static_cast<double>(n);
    cov = 0.5 * (cov + cov.transpose()).eval();
    Matrix5 out = Matrix5::Zero();
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = 0; b < k; ++b) out(idx[a], idx[b]) = cov(a, b);
    return out;
}

inline SandwichMatrices sandwich_matrices(const SdarLikelihood& lik, const SdarParams& params) {
    const auto sums = lik.score_sums(params, true);
    const double n = static_cast<double>(sums.n);
    return {sums.hessian / n, sums.outer / n};
}

}  // namespace detail

/// Empirical sandwich at `params`. Throws SingularMatrixError when Hbar has
/// condition number above 1e12.
inline SandwichResult sandwich_cov(const SdarParams& params, const TimeSeries& series, bool condition_on_first = true) {
    if (series.size() < 6) throw std::invalid_argument("sandwich_cov needs at least 6 observations");
    const SdarLikelihood lik(series.view(), condition_on_first);
    SandwichResult out;
    out.matrices = detail::sandwich_matrices(lik, params);
    std::array<bool, kNumParams> all;
    all.fill(true);
    const auto cov = detail::sandwich_from(out.matrices, lik.n_used(), all);
    if (!cov) throw SingularMatrixError("sandwich_cov: mean Hessian is numerically singular");
    out.covariance = *cov;
    return out;
}

inline double aic(double loglik, int k) { return 2.0 * k - 2.0 * loglik; }

struct StartTrace {
    Vector5 start;
    double start_loglik = 0.0;
    double final_loglik = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct FitResult {
    SdarParams theta_hat;
    Matrix5 covariance = Matrix5::Zero();
    bool covariance_available = false;
    Vector5 std_errors = Vector5::Constant(std::numeric_limits<double>::quiet_NaN());
    double loglik = 0.0;
    double aic = 0.0;
    int n_params = kNumParams;
    std::size_t n_obs = 0;
    bool converged = false;
    int n_starts = 0;
    double grad_norm = 0.0;
    std::array<bool, kNumParams> at_bound{};
    bool condition_on_first = true;
    AssumptionReport assumptions;
    std::vector<StartTrace> starts;

    bool boundary_solution() const {
        return std::any_of(at_bound.begin(), at_bound.end(), [](bool b) { return b; });
    }
};

struct FitOptions {
    int n_starts = 16;
    std::uint64_t seed = 0;
    bool condition_on_first = true;
    BoxMinimizerOptions minimizer;
};

namespace detail {

/// Projected gradient of the (maximised) log-likelihood in natural
/// coordinates: components that are pinned, or on a bound with the ascent
/// direction pointing out of the box, are zeroed.
inline Vector5 projected_gradient(const Vector5& theta, const Vector5& grad, const ParamBox& box) {
    Vector5 pg = grad;
    for (int i = 0; i < kNumParams; ++i) {
        if (box.pinned(i) || (theta(i) <= box.lower(i) && grad(i) < 0.0) || (theta(i) >= box.upper(i) && grad(i) > 0.0)) {
            pg(i) = 0.0;
        }
    }
    return pg;
}

inline bool stationary(double loglik, const Vector5& projected) {
    return projected.norm() <= 1e-6 * std::max(1.0, std::abs(loglik));
}

/// Optimiser coordinates: theta with sigma replaced by log(sigma).
inline Eigen::VectorXd to_internal(const Vector5& theta) {
    Eigen::VectorXd x = theta;
    x(kSigma) = std::log(theta(kSigma));
    return x;
}

inline Vector5 to_natural(const Eigen::VectorXd& x) {
    Vector5 theta = x;
    theta(kSigma) = std::exp(x(kSigma));
    return theta;
}

/// Starting point informed by a least-squares AR(1) fit of the lag pairs:
/// the persistence is matched to the AR slope at a small gamma1 and r = 1/2.
inline Vector5 regression_start(const SdarLikelihood& lik, const std::vector<double>& targets, PersistenceKind kind,
                                const ParamBox& box) {
    const auto lags = lik.lags();
    const auto n = static_cast<double>(lags.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lags.size(); ++i) {
        mx += lags[i];
        my += targets[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lags.size(); ++i) {
        sxx += (lags[i] - mx) * (lags[i] - mx);
        sxy += (lags[i] - mx) * (targets[i] - my);
    }
    const double phi = std::clamp(sxx > 0 ? sxy / sxx : 0.5, 0.05, 0.95);
    const double alpha = my - phi * mx;
    double ss = 0, mean_abs = 0;
    for (std::size_t i = 0; i < lags.size(); ++i) {
        const double e = targets[i] - alpha - phi * lags[i];
        ss += e * e;
        mean_abs += std::abs(lags[i]);
    }
    mean_abs /= n;
    const double gamma1 = 0.05;
    const double r = 0.5;
    const double gamma0 = kind == PersistenceKind::M1 ? -std::log(phi) - gamma1 * mean_abs : 1.0 / phi - gamma1 * mean_abs;
    Vector5 theta;
    theta << alpha, gamma0, gamma1, r, std::sqrt(std::max(ss / n, 1e-12));
    return theta.cwiseMax(box.lower).cwiseMin(box.upper);
}

/// Damped Newton refinement on the free block using the analytic Hessian.
/// Each iteration solves (-H + lambda I) step = grad, raising lambda from 0
/// until the system is positive definite and a backtracked step improves.
inline Vector5 newton_refine(const SdarLikelihood& lik, PersistenceKind kind, const ParamBox& box, Vector5 theta,
                             int max_steps = 100) {
    Vector5 grad;
    double value = lik.value_grad(unpack(theta, kind), grad);
    for (int it = 0; it < max_steps; ++it) {
        Vector5 pg = projected_gradient(theta, grad, box);
        if (stationary(value, pg)) break;
        std::vector<int> idx;
        const bool gamma1_free = pg(kGamma1) != 0.0 || (!box.pinned(kGamma1) && theta(kGamma1) > box.lower(kGamma1) &&
                                                          theta(kGamma1) < box.upper(kGamma1));
        const bool r_inert = theta(kGamma1) == 0.0 && !gamma1_free;
        for (int i = 0; i < kNumParams; ++i) {
            if (i == kR && r_inert) continue;
            if (pg(i) != 0.0 || (!box.pinned(i) && theta(i) > box.lower(i) && theta(i) < box.upper(i))) idx.push_back(i);
        }
        const auto k = static_cast<Eigen::Index>(idx.size());
        if (k == 0) break;
        const Matrix5 hess = lik.hessian(unpack(theta, kind));
        Eigen::MatrixXd neg_h(k, k);
        Eigen::VectorXd g(k);
        for (Eigen::Index a = 0; a < k; ++a) {
            g(a) = grad(idx[a]);
            for (Eigen::Index b = 0; b < k; ++b) neg_h(a, b) = -hess(idx[a], idx[b]);
        }
        const double scale = std::max(neg_h.diagonal().cwiseAbs().maxCoeff(), 1e-12);

        bool improved = false;
        for (double lambda = 0.0; !improved && lambda <= 1e6 * scale; lambda = lambda == 0.0 ? 1e-10 * scale : lambda * 100) {
            Eigen::MatrixXd m = neg_h;
            m.diagonal().array() += lambda;
            const Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
            if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || (ldlt.vectorD().array() <= 0.0).any()) continue;
            const Eigen::VectorXd step = ldlt.solve(g);
            if (!step.allFinite()) continue;
            double t = 1.0;
            for (int b = 0; b < 20 && !improved; ++b, t *= 0.5) {
                Vector5 trial = theta;
                for (Eigen::Index a = 0; a < k; ++a) trial(idx[a]) += t * step(a);
                trial = trial.cwiseMax(box.lower).cwiseMin(box.upper);
                Vector5 trial_grad;
                const double trial_value = lik.value_grad(unpack(trial, kind), trial_grad);
                if (!std::isfinite(trial_value)) continue;
                const double noise = 1e-11 * std::max(1.0, std::abs(value));
                const bool ascent = trial_value > value;
                const bool flatter = trial_value >= value - noise &&
                                     projected_gradient(trial, trial_grad, box).norm() < pg.norm();
                if (ascent || flatter) {
                    theta = trial;
                    value = trial_value;
                    grad = trial_grad;
                    improved = true;
                }
            }
        }
        if (!improved) break;
    }
    return theta;
}

}  // namespace detail

/// Multi-start QML fit. Start 0 is regression-informed; starts 1.. are
/// Halton points over the box (sigma spread on the log scale).
inline FitResult fit(const TimeSeries& series, PersistenceKind kind, const ParamBox& box, const FitOptions& options = {}) {
    validate(box, kind);
    if (series.size() < 20) throw std::invalid_argument("fit: series must have at least 20 observations");
    if (options.n_starts < 1) throw std::invalid_argument("fit: n_starts must be >= 1");
    {
        const double first = series.values.front();
        const bool constant = std::all_of(series.values.begin(), series.values.end(), [&](double v) { return v == first; });
        if (constant) throw DataError("fit: degenerate series (zero variance)");
    }

    const SdarLikelihood lik(series.view(), options.condition_on_first);
    const double n = static_cast<double>(lik.n_used());
    std::vector<double> targets(series.values.end() - static_cast<std::ptrdiff_t>(lik.n_used()), series.values.end());

    const Eigen::VectorXd lo = detail::to_internal(box.lower);
    const Eigen::VectorXd hi = detail::to_internal(box.upper);

    auto objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        const SdarParams p = unpack(detail::to_natural(x), kind);
        Vector5 grad;
        const double value = lik.value_grad(p, grad);
        g = -grad / n;
        g(kSigma) *= p.sigma;
        return -value / n;
    };
    auto done = [&](const Eigen::VectorXd& x, double f, const Eigen::VectorXd& g) {
        const Vector5 theta = detail::to_natural(x);
        Vector5 grad = -g * n;
        grad(kSigma) /= theta(kSigma);
        return detail::stationary(-f * n, detail::projected_gradient(theta, grad, box));
    };

    FitResult out;
    out.n_starts = options.n_starts;
    out.condition_on_first = options.condition_on_first;
    out.n_obs = lik.n_used();
    double best = -std::numeric_limits<double>::infinity();
    Vector5 best_theta = box.lower;

    // Halton index offset by the seed so different seeds explore different points.
    const std::size_t halton_offset = 1 + static_cast<std::size_t>(options.seed % 1000003ULL);
    for (int s = 0; s < options.n_starts; ++s) {
        Vector5 start;
        if (s == 0) {
            start = detail::regression_start(lik, targets, kind, box);
        } else {
            const auto u = halton_point(halton_offset + static_cast<std::size_t>(s - 1), kNumParams);
            const Eigen::VectorXd x = lo + (hi - lo).cwiseProduct(Eigen::Map<const Eigen::VectorXd>(u.data(), kNumParams));
            start = detail::to_natural(x);
        }
        StartTrace trace;
        trace.start = start;
        trace.start_loglik = lik.value(unpack(start, kind));
        const auto res = minimize_in_box(objective, detail::to_internal(start), lo, hi, done, options.minimizer);
        const Vector5 theta = detail::newton_refine(lik, kind, box, detail::to_natural(res.x));
        Vector5 grad_end;
        trace.final_loglik = lik.value_grad(unpack(theta, kind), grad_end);
        trace.iterations = res.iterations;
        trace.converged = detail::stationary(trace.final_loglik, detail::projected_gradient(theta, grad_end, box));
        if (trace.final_loglik > best) {
            best = trace.final_loglik;
            best_theta = theta;
        }
        out.starts.push_back(trace);
    }

    out.theta_hat = unpack(best_theta, kind);
    Vector5 grad;
    out.loglik = lik.value_grad(out.theta_hat, grad);
    const Vector5 pg = detail::projected_gradient(best_theta, grad, box);
    out.grad_norm = pg.norm();
    out.converged = detail::stationary(out.loglik, pg);

    std::array<bool, kNumParams> active{};
    out.n_params = 0;
    // With gamma1 fixed at 0 the exponent r drops out of the model.
    const bool r_inert = box.pinned(kGamma1) && box.lower(kGamma1) == 0.0;
    for (int i = 0; i < kNumParams; ++i) {
        active[i] = !box.pinned(i) && !(i == kR && r_inert);
        if (active[i]) ++out.n_params;
        const double tol = 1e-6 * (box.upper(i) - box.lower(i));
        out.at_bound[i] = active[i] && (best_theta(i) - box.lower(i) <= tol || box.upper(i) - best_theta(i) <= tol);
    }
    out.aic = aic(out.loglik, out.n_params);

    // Standard errors only for interior estimates; r goes with gamma1 = 0.
    std::array<bool, kNumParams> interior{};
    const bool r_lost = best_theta(kGamma1) == 0.0 && !(active[kGamma1] && !out.at_bound[kGamma1]);
    for (int i = 0; i < kNumParams; ++i) interior[i] = active[i] && !out.at_bound[i] && !(i == kR && r_lost);

    const auto cov = detail::sandwich_from(detail::sandwich_matrices(lik, out.theta_hat), lik.n_used(), interior);
    if (cov) {
        out.covariance = *cov;
        out.covariance_available = true;
        for (int i = 0; i < kNumParams; ++i)
            if (interior[i]) out.std_errors(i) = std::sqrt(std::max(0.0, out.covariance(i, i)));
    }
    out.assumptions = check_assumptions(kind, out.theta_hat.pf);
    return out;
}

inline FitResult fit(const TimeSeries& series, PersistenceKind kind, const FitOptions& options = {}) {
    return fit(series, kind, default_box(kind), options);
}

/// Index of the minimum AIC; ties resolve to the first occurrence.
inline std::size_t select_model(std::span<const double> aics) {
    if (aics.empty()) throw std::invalid_argument("select_model: empty candidate list");
    std::size_t best = 0;
    for (std::size_t i = 1; i < aics.size(); ++i)
        if (aics[i] < aics[best]) best = i;
    return best;
}

inline std::size_t select_model(std::span<const FitResult> fits) {
    std::vector<double> aics;
    aics.reserve(fits.size());
    for (const auto& f : fits) aics.push_back(f.aic);
    return select_model(std::span<const double>(aics));
}

}  // namespace sdar
