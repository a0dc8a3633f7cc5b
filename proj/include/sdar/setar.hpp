/**
 * @file setar.hpp
 * @brief Two-regime SETAR(2, d1, d2) with delay 1: conditional least squares
 *        with a threshold grid search, AIC lag selection and Monte-Carlo
 *        forecasting.
 *
 *   y_t = c1 + sum_{i<=d1} phi1_i y_{t-i} + e1_t,   y_{t-1} <= threshold
 *   y_t = c2 + sum_{i<=d2} phi2_i y_{t-i} + e2_t,   y_{t-1} >  threshold
 */

#pragma once

#include "sdar/data_ingest.hpp"
#include "sdar/forecasting.hpp"
#include "sdar/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdar {

struct SetarFit {
    double c1 = 0.0;
    std::vector<double> phi1;
    double sigma1 = 1.0;
    double c2 = 0.0;
    std::vector<double> phi2;
    double sigma2 = 1.0;
    double threshold = 0.0;
    int d1 = 1;
    int d2 = 1;
    double prop_low = 0.5;
    double aic = 0.0;
    double loglik = 0.0;
    /// Pooled sum of squared residuals at the chosen threshold.
    double ssr = 0.0;
    std::size_t n_obs = 0;
    std::size_t n_low = 0;
    std::size_t n_high = 0;
    /// Standard errors of (c, phi_1..phi_d) per regime, sigma_j^2 (X'X)^{-1}.
    std::vector<double> se1;
    std::vector<double> se2;

    int max_lag() const noexcept { return std::max(d1, d2); }
    int n_params() const noexcept { return d1 + d2 + 4; }
};

inline void validate(const SetarFit& f) {
    if (f.d1 < 1 || f.d2 < 1) throw std::invalid_argument("SETAR lag orders must be >= 1");
    if (f.phi1.size() != static_cast<std::size_t>(f.d1) || f.phi2.size() != static_cast<std::size_t>(f.d2)) {
        throw std::invalid_argument("SETAR coefficient vectors do not match lag orders");
    }
    if (!(f.sigma1 >= 0.0) || !(f.sigma2 >= 0.0)) throw std::invalid_argument("SETAR noise scales must be >= 0");
    if (!std::isfinite(f.threshold) || !std::isfinite(f.c1) || !std::isfinite(f.c2)) {
        throw std::invalid_argument("SETAR parameters must be finite");
    }
}

struct SetarOptions {
    double trim = 0.15;
    /// Number of leading observations used only as lags. Defaults to
    /// max(d1, d2); lag-order searches pass the largest order so every
    /// candidate model is scored on the same sample.
    std::optional<int> condition_on;
};

namespace detail {

struct SetarDesign {
    std::vector<double> z;       // threshold variable y_{t-1}
    Eigen::MatrixXd x1;          // [1, y_{t-1}, ..., y_{t-d1}]
    Eigen::MatrixXd x2;          // [1, y_{t-1}, ..., y_{t-d2}]
    Eigen::VectorXd target;
};

inline SetarDesign setar_design(std::span<const double> y, int d1, int d2, int skip) {
    const auto n = static_cast<Eigen::Index>(y.size()) - skip;
    SetarDesign d;
    d.z.resize(static_cast<std::size_t>(n));
    d.x1.resize(n, d1 + 1);
    d.x2.resize(n, d2 + 1);
    d.target.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto t = static_cast<std::size_t>(i + skip);
        d.z[static_cast<std::size_t>(i)] = y[t - 1];
        d.target(i) = y[t];
        d.x1(i, 0) = 1.0;
        d.x2(i, 0) = 1.0;
        for (int l = 1; l <= d1; ++l) d.x1(i, l) = y[t - static_cast<std::size_t>(l)];
        for (int l = 1; l <= d2; ++l) d.x2(i, l) = y[t - static_cast<std::size_t>(l)];
    }
    return d;
}

struct RegimeLs {
    Eigen::VectorXd coef;
    Eigen::VectorXd se;
    double ssr = 0.0;
};

inline RegimeLs regime_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < x.cols()) throw DataError("SETAR regime design matrix is rank deficient");
    RegimeLs out;
    out.coef = qr.solve(y);
    out.ssr = (y - x * out.coef).squaredNorm();
    const double s2 = out.ssr / static_cast<double>(x.rows());
    const Eigen::MatrixXd xtx_inv = (x.transpose() * x).ldlt().solve(Eigen::MatrixXd::Identity(x.cols(), x.cols()));
    out.se = (s2 * xtx_inv.diagonal()).cwiseSqrt();
    return out;
}

inline Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    return out;
}

inline Eigen::VectorXd rows_of(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& rows) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(rows[i]);
    return out;
}

inline int setar_skip(int d1, int d2, const SetarOptions& opt) {
    const int p = std::max(d1, d2);
    const int skip = opt.condition_on.value_or(p);
    if (skip < p) throw std::invalid_argument("SETAR: condition_on must be >= max(d1, d2)");
    return skip;
}

}  // namespace detail

/// Candidate thresholds: distinct values of y_{t-1} (over the estimation
/// sample) whose low-regime count lies in the [trim, 1 - trim] quantile band
/// and leaves at least max(d1, d2) + 2 observations in each regime.
/// Returned in increasing order.
inline std::vector<double> threshold_candidates(std::span<const double> y, int d1, int d2, const SetarOptions& opt = {}) {
    const int skip = detail::setar_skip(d1, d2, opt);
    if (y.size() <= static_cast<std::size_t>(skip)) return {};
    std::vector<double> z(y.begin() + skip - 1, y.end() - 1);
    std::sort(z.begin(), z.end());
    const std::size_t n = z.size();
    const auto min_regime = static_cast<std::size_t>(std::max(d1, d2) + 2);
    const auto lo_count = static_cast<std::size_t>(std::ceil(opt.trim * static_cast<double>(n)));
    const auto hi_count = static_cast<std::size_t>(std::floor((1.0 - opt.trim) * static_cast<double>(n)));
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (z[i] == z[i + 1]) continue;
        const std::size_t n_low = i + 1;
        if (n_low < lo_count || n_low > hi_count) continue;
        if (n_low < min_regime || n - n_low < min_regime) continue;
        out.push_back(z[i]);
    }
    return out;
}

/// Conditional least-squares fit for fixed lag orders. The threshold
/// minimises the pooled SSR over threshold_candidates(); ties go to the
/// lowest threshold.
inline SetarFit fit_setar(const TimeSeries& series, int d1, int d2, const SetarOptions& opt = {}) {
    if (d1 < 1 || d2 < 1) throw std::invalid_argument("SETAR lag orders must be >= 1");
    if (!(opt.trim > 0.0 && opt.trim <= 0.25)) throw std::invalid_argument("SETAR trim must lie in (0, 0.25]");
    const int p = std::max(d1, d2);
    if (series.size() < static_cast<std::size_t>(10 * (p + 1))) {
        throw DataError("SETAR: series too short (" + std::to_string(series.size()) + " < " + std::to_string(10 * (p + 1)) + ")");
    }
    const int skip = detail::setar_skip(d1, d2, opt);
    const auto design = detail::setar_design(series.view(), d1, d2, skip);
    const auto candidates = threshold_candidates(series.view(), d1, d2, opt);
    if (candidates.empty()) throw DataError("SETAR: no admissible threshold leaves both regimes populated");

    // Scan candidates in increasing order, accumulating low-regime cross
    // products; the high regime is total minus low.
    const auto n = static_cast<Eigen::Index>(design.z.size());
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return design.z[static_cast<std::size_t>(a)] < design.z[static_cast<std::size_t>(b)];
    });
    const Eigen::MatrixXd xtx2_total = design.x2.transpose() * design.x2;
    const Eigen::VectorXd xty2_total = design.x2.transpose() * design.target;
    const double yy_total = design.target.squaredNorm();
    Eigen::MatrixXd xtx1 = Eigen::MatrixXd::Zero(d1 + 1, d1 + 1);
    Eigen::VectorXd xty1 = Eigen::VectorXd::Zero(d1 + 1);
    Eigen::MatrixXd xtx2_low = Eigen::MatrixXd::Zero(d2 + 1, d2 + 1);
    Eigen::VectorXd xty2_low = Eigen::VectorXd::Zero(d2 + 1);
    double yy_low = 0.0;

    auto ssr_of = [](const Eigen::MatrixXd& xtx, const Eigen::VectorXd& xty, double yy) -> std::optional<double> {
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
        if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-13)) return std::nullopt;
        return std::max(0.0, yy - xty.dot(ldlt.solve(xty)));
    };

    double best_ssr = std::numeric_limits<double>::infinity();
    std::optional<double> best_threshold;
    std::size_t next = 0;
    for (double thr : candidates) {
        while (next < order.size() && design.z[static_cast<std::size_t>(order[next])] <= thr) {
            const Eigen::Index row = order[next++];
            const double yt = design.target(row);
            xtx1.noalias() += design.x1.row(row).transpose() * design.x1.row(row);
            xty1 += yt * design.x1.row(row).transpose();
            xtx2_low.noalias() += design.x2.row(row).transpose() * design.x2.row(row);
            xty2_low += yt * design.x2.row(row).transpose();
            yy_low += yt * yt;
        }
        const auto s1 = ssr_of(xtx1, xty1, yy_low);
        const auto s2 = ssr_of(xtx2_total - xtx2_low, xty2_total - xty2_low, yy_total - yy_low);
        if (!s1 || !s2) continue;
        if (*s1 + *s2 < best_ssr) {
            best_ssr = *s1 + *s2;
            best_threshold = thr;
        }
    }
    if (!best_threshold) throw DataError("SETAR: every candidate threshold gives a singular regime fit");

    std::vector<Eigen::Index> low, high;
    for (Eigen::Index i = 0; i < n; ++i) (design.z[static_cast<std::size_t>(i)] <= *best_threshold ? low : high).push_back(i);
    const auto r1 = detail::regime_least_squares(detail::rows_of(design.x1, low), detail::rows_of(design.target, low));
    const auto r2 = detail::regime_least_squares(detail::rows_of(design.x2, high), detail::rows_of(design.target, high));

    SetarFit f;
    f.d1 = d1;
    f.d2 = d2;
    f.threshold = *best_threshold;
    f.n_obs = static_cast<std::size_t>(n);
    f.n_low = low.size();
    f.n_high = high.size();
    f.prop_low = static_cast<double>(low.size()) / static_cast<double>(n);
    f.c1 = r1.coef(0);
    f.c2 = r2.coef(0);
    f.phi1.assign(r1.coef.data() + 1, r1.coef.data() + r1.coef.size());
    f.phi2.assign(r2.coef.data() + 1, r2.coef.data() + r2.coef.size());
    f.se1.assign(r1.se.data(), r1.se.data() + r1.se.size());
    f.se2.assign(r2.se.data(), r2.se.data() + r2.se.size());
    f.ssr = r1.ssr + r2.ssr;
    const auto n1 = static_cast<double>(f.n_low);
    const auto n2 = static_cast<double>(f.n_high);
    f.sigma1 = std::sqrt(r1.ssr / n1);
    f.sigma2 = std::sqrt(r2.ssr / n2);
    const double log2pi = std::log(2.0 * std::numbers::pi);
    f.loglik = -0.5 * n1 * (log2pi + std::log(f.sigma1 * f.sigma1) + 1.0) - 0.5 * n2 * (log2pi + std::log(f.sigma2 * f.sigma2) + 1.0);
    f.aic = 2.0 * f.n_params() - 2.0 * f.loglik;
    return f;
}

/// Minimum-AIC SETAR over d1, d2 in 1..max_lag, all scored on the sample
/// that conditions on the first max_lag observations. Ties keep the first
/// candidate in (d1, d2) lexicographic order.
inline SetarFit select_setar(const TimeSeries& series, int max_lag, double trim = 0.15) {
    if (max_lag < 1) throw std::invalid_argument("select_setar: max_lag must be >= 1");
    SetarOptions opt{trim, max_lag};
    std::optional<SetarFit> best;
    for (int d1 = 1; d1 <= max_lag; ++d1) {
        for (int d2 = 1; d2 <= max_lag; ++d2) {
            SetarFit f = fit_setar(series, d1, d2, opt);
            if (!best || f.aic < best->aic) best = std::move(f);
        }
    }
    return *best;
}

/// Monte-Carlo forecast. `history` holds at least max(d1, d2) values, most
/// recent last. The regime at each step is set by the previous (observed or
/// simulated) value, so step 1 uses the same regime on every path.
inline ForecastResult mc_forecast_setar(const SetarFit& fit, std::span<const double> history, std::size_t horizon,
                                        std::size_t paths, std::uint64_t seed,
                                        std::span<const double> probs = kDefaultQuantiles) {
    validate(fit);
    if (horizon < 1) throw std::invalid_argument("forecast horizon must be >= 1");
    if (paths < 1) throw std::invalid_argument("number of Monte-Carlo paths must be >= 1");
    const auto p = static_cast<std::size_t>(fit.max_lag());
    if (history.size() < p) throw std::invalid_argument("mc_forecast_setar: history shorter than max(d1, d2)");

    std::vector<std::vector<double>> values(horizon, std::vector<double>(paths));
    std::vector<std::size_t> low_count(horizon, 0);
    std::vector<double> window(p + horizon);
    for (std::size_t m = 0; m < paths; ++m) {
        CounterRng rng(derive_seed(seed, m));
        std::copy(history.end() - static_cast<std::ptrdiff_t>(p), history.end(), window.begin());
        for (std::size_t h = 0; h < horizon; ++h) {
            const std::size_t t = p + h;  // index of the value being generated
            const bool low = window[t - 1] <= fit.threshold;
            const auto& phi = low ? fit.phi1 : fit.phi2;
            double mean = low ? fit.c1 : fit.c2;
            for (std::size_t i = 0; i < phi.size(); ++i) mean += phi[i] * window[t - 1 - i];
            const double draw = rng.normal();
            window[t] = mean + (low ? fit.sigma1 : fit.sigma2) * draw;
            values[h][m] = window[t];
            if (low) ++low_count[h];
        }
    }
    ForecastResult out = detail::summarize_paths(values, probs, seed);
    out.low_regime_share.resize(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
        out.low_regime_share[h] = static_cast<double>(low_count[h]) / static_cast<double>(paths);
    }
    return out;
}

}  // namespace sdar
