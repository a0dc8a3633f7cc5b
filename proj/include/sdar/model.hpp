/**
 * @file model.hpp
 * @brief State-dependent AR(1) model: simulation, residuals and the Gaussian
 *        quasi-log-likelihood with analytic gradient and Hessian.
 *
 *   Y_t = alpha + psi(Y_{t-1}; gamma) Y_{t-1} + xi_t,   xi_t ~ N(0, sigma^2)
 *
 * Every vector or matrix in parameter space is indexed
 * (alpha, gamma0, gamma1, r, sigma); see ParamIndex.
 */

#pragma once

#include "sdar/data_ingest.hpp"
#include "sdar/persistence.hpp"
#include "sdar/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace sdar {

inline constexpr int kNumParams = 5;
using Vector5 = Eigen::Matrix<double, kNumParams, 1>;
using Matrix5 = Eigen::Matrix<double, kNumParams, kNumParams>;

enum ParamIndex : int { kAlpha = 0, kGamma0 = 1, kGamma1 = 2, kR = 3, kSigma = 4 };

inline constexpr const char* kParamNames[kNumParams] = {"alpha", "gamma0", "gamma1", "r", "sigma"};

struct SdarParams {
    double alpha = 0.0;
    PersistenceParams pf;
    double sigma = 1.0;
    PersistenceKind kind = PersistenceKind::M1;
};

inline void validate(const SdarParams& p) {
    if (!std::isfinite(p.alpha)) throw std::invalid_argument("alpha must be finite");
    if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) throw std::invalid_argument("sigma must be > 0");
    validate(p.kind, p.pf);
}

inline Vector5 pack(const SdarParams& p) {
    Vector5 v;
    v << p.alpha, p.pf.gamma0, p.pf.gamma1, p.pf.r, p.sigma;
    return v;
}

inline SdarParams unpack(const Vector5& v, PersistenceKind kind) {
    return SdarParams{v(kAlpha), {v(kGamma0), v(kGamma1), v(kR)}, v(kSigma), kind};
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

struct SimulatedPath {
    TimeSeries series;
    std::vector<double> innovations;
};

/// Y_1..Y_n from Y_0 = y0, innovations drawn from CounterRng(seed).
inline SimulatedPath simulate_with_innovations(const SdarParams& params, std::size_t n, std::uint64_t seed,
                                               double y0 = 0.0) {
    validate(params);
    if (n < 1) throw std::invalid_argument("simulate: n must be >= 1");
    CounterRng rng(seed);
    SimulatedPath out;
    out.series.values.resize(n);
    out.innovations.resize(n);
    double prev = y0;
    for (std::size_t t = 0; t < n; ++t) {
        const double xi = params.sigma * rng.normal();
        const double mean = params.alpha + detail::psi_from_u(params.kind, params.pf, detail::power_terms(prev, params.pf.r).u) * prev;
        prev = mean + xi;
        out.series.values[t] = prev;
        out.innovations[t] = xi;
    }
    return out;
}

inline TimeSeries simulate(const SdarParams& params, std::size_t n, std::uint64_t seed, double y0 = 0.0) {
    return simulate_with_innovations(params, n, seed, y0).series;
}

// ---------------------------------------------------------------------------
// Likelihood
// ---------------------------------------------------------------------------

/// Sums of per-observation Hessians and score outer products.
struct ScoreSums {
    Matrix5 hessian = Matrix5::Zero();
    Matrix5 outer = Matrix5::Zero();
    std::size_t n = 0;
};

/// Quasi-log-likelihood of one series. Lag logarithms are cached so repeated
/// evaluation (optimisation) only pays for one exp per observation.
///
/// With `condition_on_first` the index set is t = 2..n; otherwise t = 1..n
/// with Y_0 = 0.
class SdarLikelihood {
public:
    SdarLikelihood(std::span<const double> y, bool condition_on_first) {
        if (y.size() < 2) throw std::invalid_argument("likelihood needs at least 2 observations");
        const std::size_t start = condition_on_first ? 1 : 0;
        const std::size_t m = y.size() - start;
        lag_.resize(m);
        target_.resize(m);
        log_lag2_.resize(m);
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t t = start + i;
            lag_[i] = t == 0 ? 0.0 : y[t - 1];
            target_[i] = y[t];
            log_lag2_[i] = lag_[i] == 0.0 ? 0.0 : 2.0 * std::log(std::abs(lag_[i]));
        }
    }

    std::size_t n_used() const noexcept { return target_.size(); }
    std::span<const double> lags() const noexcept { return lag_; }

    std::vector<double> residuals(const SdarParams& p) const {
        validate(p);
        std::vector<double> xi(n_used());
        for (std::size_t i = 0; i < n_used(); ++i) xi[i] = target_[i] - p.alpha - psi_at(p, i) * lag_[i];
        return xi;
    }

    double value(const SdarParams& p) const {
        validate(p);
        double ss = 0.0;
        for (std::size_t i = 0; i < n_used(); ++i) {
            const double xi = target_[i] - p.alpha - psi_at(p, i) * lag_[i];
            ss += xi * xi;
        }
        return constant_part(p.sigma) - ss / (2.0 * p.sigma * p.sigma);
    }

    /// Log-likelihood and its gradient in one pass.
    double value_grad(const SdarParams& p, Vector5& grad) const {
        validate(p);
        const double s2 = p.sigma * p.sigma;
        double ss = 0.0;
        double sum_xi = 0.0;
        Eigen::Vector3d sum_gamma = Eigen::Vector3d::Zero();
        Eigen::Vector3d dpsi;
        for (std::size_t i = 0; i < n_used(); ++i) {
            const double psi = detail::psi_with_grad(p.kind, p.pf, terms(p, i), dpsi);
            const double xi = target_[i] - p.alpha - psi * lag_[i];
            ss += xi * xi;
            sum_xi += xi;
            sum_gamma += (xi * lag_[i]) * dpsi;
        }
        const double n = static_cast<double>(n_used());
        grad(kAlpha) = sum_xi / s2;
        grad.segment<3>(kGamma0) = sum_gamma / s2;
        grad(kSigma) = (ss - n * s2) / (s2 * p.sigma);
        return constant_part(p.sigma) - ss / (2.0 * s2);
    }

    Vector5 gradient(const SdarParams& p) const {
        Vector5 g;
        value_grad(p, g);
        return g;
    }

    Matrix5 hessian(const SdarParams& p) const { return score_sums(p, false).hessian; }

    /// Per-observation Hessian sum and, if requested, sum of score outer products.
    ScoreSums score_sums(const SdarParams& p, bool with_outer = true) const {
        validate(p);
        const double s = p.sigma;
        const double s2 = s * s;
        const double s3 = s2 * s;
        const double s4 = s2 * s2;
        ScoreSums out;
        out.n = n_used();
        Vector5 score;
        for (std::size_t i = 0; i < n_used(); ++i) {
            const auto d = detail::psi_derivatives(p.kind, p.pf, terms(p, i));
            const double y = lag_[i];
            const double xi = target_[i] - p.alpha - d.value * y;
            Matrix5& h = out.hessian;
            h(kAlpha, kAlpha) += -1.0 / s2;
            h(kAlpha, kSigma) += -2.0 * xi / s3;
            h(kSigma, kSigma) += 1.0 / s2 - 3.0 * xi * xi / s4;
            for (int k = 0; k < 3; ++k) {
                h(kAlpha, kGamma0 + k) += -y * d.grad(k) / s2;
                h(kGamma0 + k, kSigma) += -2.0 * xi * y * d.grad(k) / s3;
                for (int j = k; j < 3; ++j) {
                    h(kGamma0 + k, kGamma0 + j) += (xi * y * d.hess(k, j) - y * y * d.grad(k) * d.grad(j)) / s2;
                }
            }
            if (with_outer) {
                score(kAlpha) = xi / s2;
                score.segment<3>(kGamma0) = (xi * y / s2) * d.grad;
                score(kSigma) = (xi * xi - s2) / s3;
                out.outer.noalias() += score * score.transpose();
            }
        }
        out.hessian = out.hessian.selfadjointView<Eigen::Upper>();
        return out;
    }

private:
    detail::PowerTerms terms(const SdarParams& p, std::size_t i) const noexcept {
        return detail::power_terms(log_lag2_[i], lag_[i] == 0.0, p.pf.r);
    }

    double psi_at(const SdarParams& p, std::size_t i) const noexcept {
        return detail::psi_from_u(p.kind, p.pf, terms(p, i).u);
    }

    double constant_part(double sigma) const noexcept {
        const double n = static_cast<double>(n_used());
        return -n * (0.5 * std::log(2.0 * std::numbers::pi) + std::log(sigma));
    }

    std::vector<double> lag_;
    std::vector<double> target_;
    std::vector<double> log_lag2_;
};

inline std::vector<double> residuals(const SdarParams& params, const TimeSeries& series, bool condition_on_first = true) {
    return SdarLikelihood(series.view(), condition_on_first).residuals(params);
}

inline double loglik(const SdarParams& params, const TimeSeries& series, bool condition_on_first = true) {
    return SdarLikelihood(series.view(), condition_on_first).value(params);
}

inline Vector5 loglik_grad(const SdarParams& params, const TimeSeries& series, bool condition_on_first = true) {
    return SdarLikelihood(series.view(), condition_on_first).gradient(params);
}

inline Matrix5 loglik_hess(const SdarParams& params, const TimeSeries& series, bool condition_on_first = true) {
    return SdarLikelihood(series.view(), condition_on_first).hessian(params);
}

/// psi(y_{t-1}) for t = 2..n: the fitted time-varying persistence.
inline std::vector<double> persistence_series(const SdarParams& params, const TimeSeries& series) {
    validate(params);
    if (series.size() < 2) throw std::invalid_argument("persistence_series needs at least 2 observations");
    std::vector<double> out(series.size() - 1);
    for (std::size_t t = 1; t < series.size(); ++t) {
        out[t - 1] = detail::psi_from_u(params.kind, params.pf, detail::power_terms(series.values[t - 1], params.pf.r).u);
    }
    return out;
}

}  // namespace sdar
