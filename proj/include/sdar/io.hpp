/**
 * @file io.hpp
 * @brief JSON and CSV serialisation of fits, forecasts and accuracy tables.
 *
 * CSV numbers are written with "%.17g" so every double round-trips; NaN is
 * written as "nan". JSON uses insertion-ordered objects so field order is
 * stable, and NaN becomes null.
 */

#pragma once

#include "sdar/data_ingest.hpp"
#include "sdar/forecasting.hpp"
#include "sdar/model.hpp"
#include "sdar/qml.hpp"
#include "sdar/setar.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace sdar {

using Json = nlohmann::ordered_json;

inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Shortest representation that round-trips; used for column labels.
inline std::string format_short(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline Json json_number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json to_json(const PersistenceParams& p) {
    return Json{{"gamma0", p.gamma0}, {"gamma1", p.gamma1}, {"r", p.r}};
}

inline Json to_json(const SdarParams& p) {
    return Json{{"kind", std::string(to_string(p.kind))},
                {"alpha", p.alpha},
                {"gamma0", p.pf.gamma0},
                {"gamma1", p.pf.gamma1},
                {"r", p.pf.r},
                {"sigma", p.sigma}};
}

inline Json to_json(const AssumptionReport& a) {
    return Json{{"sup_bound_closed_form", json_number(a.sup_bound_closed_form)},
                {"sup_bound_numeric", json_number(a.sup_bound_numeric)},
                {"a1_satisfied", a.a1_satisfied},
                {"a2_satisfied", a.a2_satisfied},
                {"a4_a5_satisfied", a.a4_a5_satisfied},
                {"grid_max_location", json_number(a.grid_max_location)}};
}

inline Json to_json(const FitResult& f) {
    Json theta;
    Json se;
    const Vector5 v = pack(f.theta_hat);
    for (int i = 0; i < kNumParams; ++i) {
        theta[kParamNames[i]] = v(i);
        se[kParamNames[i]] = json_number(f.std_errors(i));
    }
    Json cov = Json::array();
    for (int i = 0; i < kNumParams; ++i)
        for (int j = 0; j < kNumParams; ++j) cov.push_back(f.covariance_available ? json_number(f.covariance(i, j)) : Json(nullptr));
    Json bounds = Json::array();
    for (int i = 0; i < kNumParams; ++i)
        if (f.at_bound[static_cast<std::size_t>(i)]) bounds.push_back(kParamNames[i]);

    Json starts = Json::array();
    for (const auto& s : f.starts) {
        starts.push_back(Json{{"start_loglik", json_number(s.start_loglik)},
                              {"final_loglik", json_number(s.final_loglik)},
                              {"iterations", s.iterations},
                              {"converged", s.converged}});
    }
    return Json{{"kind", std::string(to_string(f.theta_hat.kind))},
                {"theta_hat", theta},
                {"std_errors", se},
                {"covariance", cov},
                {"covariance_available", f.covariance_available},
                {"loglik", f.loglik},
                {"aic", f.aic},
                {"n_params", f.n_params},
                {"n_obs", f.n_obs},
                {"converged", f.converged},
                {"grad_norm", json_number(f.grad_norm)},
                {"n_starts", f.n_starts},
                {"condition_on_first", f.condition_on_first},
                {"at_bound", bounds},
                {"assumptions", to_json(f.assumptions)},
                {"starts", starts}};
}

inline Json to_json(const SetarFit& f) {
    auto vec = [](const std::vector<double>& v) {
        Json a = Json::array();
        for (double x : v) a.push_back(json_number(x));
        return a;
    };
    return Json{{"c1", f.c1},
                {"phi1", vec(f.phi1)},
                {"sigma1", f.sigma1},
                {"c2", f.c2},
                {"phi2", vec(f.phi2)},
                {"sigma2", f.sigma2},
                {"threshold", f.threshold},
                {"d1", f.d1},
                {"d2", f.d2},
                {"prop_low", f.prop_low},
                {"aic", f.aic},
                {"loglik", f.loglik},
                {"ssr", f.ssr},
                {"n_obs", f.n_obs},
                {"n_low", f.n_low},
                {"n_high", f.n_high},
                {"se1", vec(f.se1)},
                {"se2", vec(f.se2)}};
}

inline SdarParams sdar_params_from_json(const Json& j) {
    const Json& t = j.contains("theta_hat") ? j.at("theta_hat") : j;
    const std::string kind = j.contains("kind") ? j.at("kind").get<std::string>() : t.value("kind", std::string("M1"));
    SdarParams p{t.at("alpha").get<double>(),
                 {t.at("gamma0").get<double>(), t.at("gamma1").get<double>(), t.at("r").get<double>()},
                 t.at("sigma").get<double>(),
                 parse_kind(kind)};
    validate(p);
    return p;
}

inline SetarFit setar_from_json(const Json& j) {
    SetarFit f;
    f.c1 = j.at("c1").get<double>();
    f.phi1 = j.at("phi1").get<std::vector<double>>();
    f.sigma1 = j.at("sigma1").get<double>();
    f.c2 = j.at("c2").get<double>();
    f.phi2 = j.at("phi2").get<std::vector<double>>();
    f.sigma2 = j.at("sigma2").get<double>();
    f.threshold = j.at("threshold").get<double>();
    f.d1 = static_cast<int>(f.phi1.size());
    f.d2 = static_cast<int>(f.phi2.size());
    f.prop_low = j.value("prop_low", 0.5);
    f.aic = j.value("aic", 0.0);
    validate(f);
    return f;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Header "horizon,MAFE,MSFE,MAPE"; one row per horizon 1..H.
inline void write_metric_table(std::ostream& out, std::span<const double> mafe, std::span<const double> msfe,
                               std::span<const double> mape) {
    out << "horizon,MAFE,MSFE,MAPE\n";
    for (std::size_t h = 0; h < mafe.size(); ++h) {
        out << (h + 1) << ',' << format_double(mafe[h]) << ',' << format_double(msfe[h]) << ',' << format_double(mape[h])
            << '\n';
    }
}

inline void write_accuracy_csv(std::ostream& out, const AccuracyReport& r) { write_metric_table(out, r.mafe, r.msfe, r.mape); }

inline void write_re_csv(std::ostream& out, const RelativeEfficiency& r) { write_metric_table(out, r.mafe, r.msfe, r.mape); }

/// Header "horizon,mean,sd,q0.05,..."; quantile columns in increasing
/// probability order, plus "low_regime_share" when present.
inline void write_forecast_csv(std::ostream& out, const ForecastResult& f) {
    out << "horizon,mean,sd";
    for (const auto& [p, _] : f.quantiles) out << ",q" << format_short(p);
    const bool share = !f.low_regime_share.empty();
    if (share) out << ",low_regime_share";
    out << '\n';
    for (std::size_t h = 0; h < f.horizon; ++h) {
        out << (h + 1) << ',' << format_double(f.means[h]) << ',' << format_double(f.path_sd[h]);
        for (const auto& [p, q] : f.quantiles) out << ',' << format_double(q[h]);
        if (share) out << ',' << format_double(f.low_regime_share[h]);
        out << '\n';
    }
}

/// Two columns "label,<name>"; the label is the series label when present,
/// otherwise the 1-based index.
inline void write_series_csv(std::ostream& out, const TimeSeries& s, const std::string& name) {
    out << "label," << name << '\n';
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.labels) out << (*s.labels)[i];
        else out << (i + 1);
        out << ',' << format_double(s.values[i]) << '\n';
    }
}

/// Header "t,y_lag,psi"; t is the 1-based index of the target observation.
inline void write_persistence_csv(std::ostream& out, const SdarParams& params, const TimeSeries& series) {
    const auto psi_t = persistence_series(params, series);
    out << "t,y_lag,psi\n";
    for (std::size_t i = 0; i < psi_t.size(); ++i) {
        out << (i + 2) << ',' << format_double(series.values[i]) << ',' << format_double(psi_t[i]) << '\n';
    }
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw DataError("failed writing '" + path + "'");
}

}  // namespace sdar
