/**
 * @file forecasting.hpp
 * @brief Monte-Carlo multi-step forecasts and forecast-accuracy metrics.
 *
 * Forecasts iterate the fitted map with fresh Gaussian innovations along M
 * independent paths; the point forecast at each horizon is the path average.
 * Path m draws from CounterRng(derive_seed(seed, m)), so results do not
 * depend on the order in which paths are simulated.
 */

#pragma once

#include "sdar/model.hpp"
#include "sdar/numeric.hpp"
#include "sdar/qml.hpp"
#include "sdar/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdar {

inline constexpr double kDefaultQuantiles[] = {0.05, 0.25, 0.5, 0.75, 0.95};

struct ForecastResult {
    std::size_t horizon = 0;
    std::vector<double> means;
    /// Sample standard deviation of the simulated values at each horizon.
    std::vector<double> path_sd;
    std::map<double, std::vector<double>> quantiles;
    std::size_t paths = 0;
    std::uint64_t seed = 0;
    /// Share of paths whose step h was generated by the low regime (SETAR
    /// forecasts only; empty otherwise).
    std::vector<double> low_regime_share;
};

namespace detail {

/// Collapses per-horizon path values (values[h][m]) into a ForecastResult.
inline ForecastResult summarize_paths(std::vector<std::vector<double>>& values, std::span<const double> probs,
                                      std::uint64_t seed) {
    ForecastResult out;
    out.horizon = values.size();
    out.paths = values.empty() ? 0 : values.front().size();
    out.seed = seed;
    out.means.resize(out.horizon);
    out.path_sd.resize(out.horizon);
    for (double p : probs) out.quantiles[p].resize(out.horizon);
    std::vector<double> dev;
    for (std::size_t h = 0; h < out.horizon; ++h) {
        auto& v = values[h];
        const double mean = pairwise_mean(v);
        out.means[h] = mean;
        dev.resize(v.size());
        for (std::size_t m = 0; m < v.size(); ++m) dev[m] = (v[m] - mean) * (v[m] - mean);
        out.path_sd[h] = v.size() > 1 ? std::sqrt(pairwise_sum(dev) / static_cast<double>(v.size() - 1)) : 0.0;
        std::sort(v.begin(), v.end());
        for (double p : probs) out.quantiles[p][h] = sorted_quantile(v, p);
    }
    return out;
}

}  // namespace detail

/// Monte-Carlo forecast of an SDAR model from the last observation `y_n`.
inline ForecastResult mc_forecast_sdar(const SdarParams& params, double y_n, std::size_t horizon, std::size_t paths,
                                       std::uint64_t seed, std::span<const double> probs = kDefaultQuantiles) {
    validate(params);
    if (horizon < 1) throw std::invalid_argument("forecast horizon must be >= 1");
    if (paths < 1) throw std::invalid_argument("number of Monte-Carlo paths must be >= 1");
    if (!std::isfinite(y_n)) throw std::invalid_argument("forecast origin must be finite");
    std::vector<std::vector<double>> values(horizon, std::vector<double>(paths));
    for (std::size_t m = 0; m < paths; ++m) {
        CounterRng rng(derive_seed(seed, m));
        double prev = y_n;
        for (std::size_t h = 0; h < horizon; ++h) {
            const double psi = detail::psi_from_u(params.kind, params.pf, detail::power_terms(prev, params.pf.r).u);
            prev = params.alpha + psi * prev + params.sigma * rng.normal();
            values[h][m] = prev;
        }
    }
    return detail::summarize_paths(values, probs, seed);
}

inline ForecastResult mc_forecast_sdar(const FitResult& fit, double y_n, std::size_t horizon, std::size_t paths,
                                       std::uint64_t seed, std::span<const double> probs = kDefaultQuantiles) {
    return mc_forecast_sdar(fit.theta_hat, y_n, horizon, paths, seed, probs);
}

// ---------------------------------------------------------------------------
// Accuracy
// ---------------------------------------------------------------------------

/// Per-horizon MAFE, MSFE and MAPE (as a fraction, not percent). A MAPE
/// entry is NaN when an actual value at that horizon is zero.
struct AccuracyReport {
    std::vector<double> mafe;
    std::vector<double> msfe;
    std::vector<double> mape;
    std::size_t n_origins = 0;

    std::size_t horizon() const noexcept { return mafe.size(); }
};

inline AccuracyReport evaluate_forecasts(std::span<const double> actuals, std::span<const double> point_forecasts) {
    if (actuals.size() != point_forecasts.size()) {
        throw std::invalid_argument("evaluate_forecasts: actuals and forecasts differ in length");
    }
    const std::size_t H = actuals.size();
    AccuracyReport rep;
    rep.n_origins = 1;
    rep.mafe.resize(H);
    rep.msfe.resize(H);
    rep.mape.resize(H);
    for (std::size_t h = 0; h < H; ++h) {
        const double e = actuals[h] - point_forecasts[h];
        rep.mafe[h] = std::abs(e);
        rep.msfe[h] = e * e;
        rep.mape[h] = actuals[h] == 0.0 ? std::numeric_limits<double>::quiet_NaN() : std::abs(e) / std::abs(actuals[h]);
    }
    return rep;
}

inline AccuracyReport evaluate_forecasts(std::span<const double> actuals, const ForecastResult& forecast) {
    if (actuals.size() != forecast.horizon) {
        throw std::invalid_argument("evaluate_forecasts: actuals length must equal the forecast horizon");
    }
    return evaluate_forecasts(actuals, std::span<const double>(forecast.means));
}

enum class EvaluationMode { SingleOrigin, RollingOrigin };

inline EvaluationMode parse_mode(const std::string& s) {
    if (s == "single" || s == "single-origin") return EvaluationMode::SingleOrigin;
    if (s == "rolling" || s == "rolling-origin") return EvaluationMode::RollingOrigin;
    throw std::invalid_argument("unknown evaluation mode '" + s + "' (expected single-origin or rolling-origin)");
}

inline std::string to_string(EvaluationMode m) {
    return m == EvaluationMode::SingleOrigin ? "single-origin" : "rolling-origin";
}

/// Number of forecast origins used by rolling evaluation: every origin whose
/// full H-step path lies inside the test window.
inline std::size_t rolling_origin_count(std::size_t test_len, std::size_t horizon) {
    return test_len >= horizon ? test_len - horizon + 1 : 0;
}

/// Out-of-sample evaluation of `forecaster`, a callable
/// `ForecastResult(std::span<const double> history, std::size_t H, std::size_t M, std::uint64_t seed)`.
///
/// SingleOrigin forecasts once from the end of `train` and scores the first
/// H test points. RollingOrigin forecasts from origins o = 0..test_len-H,
/// with history train + test[0, o), and averages the errors over origins per
/// horizon. Model parameters are whatever the forecaster closes over; they
/// are never re-estimated here.
template <class Forecaster>
AccuracyReport rolling_evaluate(Forecaster&& forecaster, std::span<const double> train, std::span<const double> test,
                                std::size_t horizon, std::size_t paths, std::uint64_t seed, EvaluationMode mode) {
    if (horizon < 1) throw std::invalid_argument("forecast horizon must be >= 1");
    if (train.empty()) throw std::invalid_argument("rolling_evaluate: empty training sample");
    const std::size_t needed = mode == EvaluationMode::SingleOrigin ? horizon : horizon + 1;
    if (test.size() < needed) {
        throw std::invalid_argument("insufficient test data: " + std::to_string(test.size()) + " points for horizon " +
                                    std::to_string(horizon) + " (" + to_string(mode) + " needs " + std::to_string(needed) + ")");
    }
    if (mode == EvaluationMode::SingleOrigin) {
        const ForecastResult f = forecaster(train, horizon, paths, seed);
        return evaluate_forecasts(test.first(horizon), std::span<const double>(f.means));
    }

    const std::size_t origins = rolling_origin_count(test.size(), horizon);
    std::vector<double> history(train.begin(), train.end());
    history.reserve(train.size() + test.size());
    std::vector<std::vector<double>> abs_err(horizon), sq_err(horizon), pct_err(horizon);
    std::vector<bool> pct_defined(horizon, true);
    for (std::size_t o = 0; o < origins; ++o) {
        if (o > 0) history.push_back(test[o - 1]);
        const ForecastResult f = forecaster(std::span<const double>(history), horizon, paths, derive_seed(seed, o));
        for (std::size_t h = 0; h < horizon; ++h) {
            const double a = test[o + h];
            const double e = a - f.means[h];
            abs_err[h].push_back(std::abs(e));
            sq_err[h].push_back(e * e);
            if (a == 0.0) pct_defined[h] = false;
            else pct_err[h].push_back(std::abs(e) / std::abs(a));
        }
    }
    AccuracyReport rep;
    rep.n_origins = origins;
    for (std::size_t h = 0; h < horizon; ++h) {
        rep.mafe.push_back(pairwise_mean(abs_err[h]));
        rep.msfe.push_back(pairwise_mean(sq_err[h]));
        rep.mape.push_back(pct_defined[h] ? pairwise_mean(pct_err[h]) : std::numeric_limits<double>::quiet_NaN());
    }
    return rep;
}

/// Ratios a / b per metric and horizon; RE < 1 means `a` is more accurate.
/// Cells with a zero denominator are NaN.
struct RelativeEfficiency {
    std::vector<double> mafe;
    std::vector<double> msfe;
    std::vector<double> mape;

    std::size_t horizon() const noexcept { return mafe.size(); }
};

inline RelativeEfficiency relative_efficiency(const AccuracyReport& a, const AccuracyReport& b) {
    if (a.horizon() != b.horizon()) throw std::invalid_argument("relative_efficiency: reports differ in horizon");
    if (a.n_origins != b.n_origins) throw std::invalid_argument("relative_efficiency: reports differ in origin count");
    auto ratio = [](const std::vector<double>& x, const std::vector<double>& y) {
        std::vector<double> out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            out[i] = y[i] == 0.0 ? std::numeric_limits<double>::quiet_NaN() : x[i] / y[i];
        }
        return out;
    };
    return {ratio(a.mafe, b.mafe), ratio(a.msfe, b.msfe), ratio(a.mape, b.mape)};
}

/// Element-wise mean of reports sharing horizon and origin count, e.g.
/// across simulation replications.
inline AccuracyReport average_reports(std::span<const AccuracyReport> reports) {
    if (reports.empty()) throw std::invalid_argument("average_reports: no reports");
    AccuracyReport out = reports.front();
    for (std::size_t i = 1; i < reports.size(); ++i) {
        const auto& r = reports[i];
        if (r.horizon() != out.horizon() || r.n_origins != out.n_origins) {
            throw std::invalid_argument("average_reports: incompatible reports");
        }
        for (std::size_t h = 0; h < out.horizon(); ++h) {
            out.mafe[h] += r.mafe[h];
            out.msfe[h] += r.msfe[h];
            out.mape[h] += r.mape[h];
        }
    }
    const double k = static_cast<double>(reports.size());
    for (std::size_t h = 0; h < out.horizon(); ++h) {
        out.mafe[h] /= k;
        out.msfe[h] /= k;
        out.mape[h] /= k;
    }
    return out;
}

}  // namespace sdar
