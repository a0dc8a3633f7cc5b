/**
 * @file cli_commands.hpp
 * @brief Subcommands of the sdar command-line tool.
 *
 * run_cli() is the whole program; main() only forwards to it so tests can
 * drive every command in-process.
 *
 * Exit codes: 0 ok, 1 input error, 2 numerical non-convergence,
 * 3 assumption failure (check only).
 */

#pragma once

#include "sdar/sdar.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace sdar::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kNotConverged = 2, kAssumptionFailed = 3 };

struct RunConfig {
    std::string input;
    std::string column;
    bool returns = false;
    std::size_t week_len = 5;
    std::size_t n_train = 0;
    std::string kind = "both";
    std::size_t horizon = 20;
    std::size_t mc = 10000;
    std::uint64_t seed = 0;
    std::string mode = "single-origin";
    std::string out = ".";
    int max_lag = 4;
    double trim = 0.15;
    int starts = 16;
    bool full_likelihood = false;
    std::string baseline = "setar";
    std::vector<double> lower;
    std::vector<double> upper;
    std::string params;
    std::optional<double> alpha, gamma0, gamma1, r, sigma;
    std::size_t n = 1000;
    std::string config;
};

inline Json config_to_json(const RunConfig& c) {
    Json j{{"input", c.input},
           {"column", c.column},
           {"returns", c.returns},
           {"week_len", c.week_len},
           {"n_train", c.n_train},
           {"kind", c.kind},
           {"horizon", c.horizon},
           {"mc", c.mc},
           {"seed", c.seed},
           {"mode", c.mode},
           {"out", c.out},
           {"max_lag", c.max_lag},
           {"trim", c.trim},
           {"starts", c.starts},
           {"full_likelihood", c.full_likelihood},
           {"baseline", c.baseline},
           {"lower", c.lower},
           {"upper", c.upper},
           {"params", c.params},
           {"n", c.n}};
    auto opt = [&](const char* name, const std::optional<double>& v) { j[name] = v ? Json(*v) : Json(nullptr); };
    opt("alpha", c.alpha);
    opt("gamma0", c.gamma0);
    opt("gamma1", c.gamma1);
    opt("r", c.r);
    opt("sigma", c.sigma);
    return j;
}

namespace detail {

template <class T>
void assign_from(T& field, const Json& v) {
    field = v.template get<T>();
}

template <class T>
void assign_from(std::optional<T>& field, const Json& v) {
    field = v.template get<T>();
}

/// Binds one RunConfig field to a CLI option and a config-file key; the file
/// value is applied only when the flag was not given.
class Binder {
public:
    explicit Binder(CLI::App& app) : app_(app) {}

    template <class T>
    CLI::Option* add(const std::string& flag, const std::string& key, T& field, const std::string& help) {
        CLI::Option* o = app_.add_option(flag, field, help);
        appliers_.push_back([o, key, &field](const Json& j) {
            if (o->count() == 0 && j.contains(key) && !j.at(key).is_null()) assign_from(field, j.at(key));
        });
        return o;
    }

    CLI::Option* add_flag(const std::string& flag, const std::string& key, bool& field, const std::string& help) {
        CLI::Option* o = app_.add_flag(flag, field, help);
        appliers_.push_back([o, key, &field](const Json& j) {
            if (o->count() == 0 && j.contains(key)) field = j.at(key).get<bool>();
        });
        return o;
    }

    void apply(const Json& j) const {
        for (const auto& f : appliers_) f(j);
    }

private:
    CLI::App& app_;
    std::vector<std::function<void(const Json&)>> appliers_;
};

inline std::filesystem::path out_path(const RunConfig& c, const std::string& name) {
    return std::filesystem::path(c.out) / name;
}

inline void write_file(const RunConfig& c, const std::string& name, const std::string& content,
                       std::vector<std::string>& written) {
    write_text_file(out_path(c, name).string(), content);
    written.push_back(name);
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

/// Series for modelling: the input column itself, or weekly log realized
/// volatility when the input holds daily returns.
inline TimeSeries load_model_series(const RunConfig& c) {
    if (c.input.empty()) throw DataError("--input is required");
    if (c.returns) return log_transform(realized_volatility(load_returns(c.input, c.column), c.week_len));
    return load_series(c.input, c.column);
}

inline std::vector<PersistenceKind> sdar_kinds(const std::string& kind) {
    if (kind == "both") return {PersistenceKind::M1, PersistenceKind::M2};
    return {parse_kind(kind)};
}

inline ParamBox config_box(const RunConfig& c, PersistenceKind kind) {
    ParamBox box = default_box(kind);
    if (!c.lower.empty()) {
        if (c.lower.size() != kNumParams) throw std::invalid_argument("--lower needs 5 values (alpha,gamma0,gamma1,r,sigma)");
        for (int i = 0; i < kNumParams; ++i) box.lower(i) = c.lower[static_cast<std::size_t>(i)];
    }
    if (!c.upper.empty()) {
        if (c.upper.size() != kNumParams) throw std::invalid_argument("--upper needs 5 values (alpha,gamma0,gamma1,r,sigma)");
        for (int i = 0; i < kNumParams; ++i) box.upper(i) = c.upper[static_cast<std::size_t>(i)];
    }
    validate(box, kind);
    return box;
}

inline FitOptions fit_options(const RunConfig& c) {
    FitOptions o;
    o.n_starts = c.starts;
    o.seed = c.seed;
    o.condition_on_first = !c.full_likelihood;
    return o;
}

/// Parameters from --params (a fit or parameter JSON) overlaid with any of
/// --alpha/--gamma0/--gamma1/--r/--sigma.
inline SdarParams config_params(const RunConfig& c, PersistenceKind kind) {
    SdarParams p{0.0, {0.0, 0.0, 1.0}, 1.0, kind};
    if (kind == PersistenceKind::M2) p.pf.gamma0 = 2.0;
    if (!c.params.empty()) {
        std::ifstream in(c.params);
        if (!in) throw DataError("cannot open parameter file '" + c.params + "'");
        p = sdar_params_from_json(Json::parse(in));
        p.kind = kind;
    }
    if (c.alpha) p.alpha = *c.alpha;
    if (c.gamma0) p.pf.gamma0 = *c.gamma0;
    if (c.gamma1) p.pf.gamma1 = *c.gamma1;
    if (c.r) p.pf.r = *c.r;
    if (c.sigma) p.sigma = *c.sigma;
    validate(p);
    return p;
}

struct SdarSelection {
    std::vector<FitResult> fits;
    std::size_t chosen = 0;
    const FitResult& best() const { return fits[chosen]; }
};

inline SdarSelection fit_sdar_kinds(const TimeSeries& train, const RunConfig& c) {
    SdarSelection s;
    for (PersistenceKind k : sdar_kinds(c.kind)) s.fits.push_back(fit(train, k, config_box(c, k), fit_options(c)));
    s.chosen = select_model(std::span<const FitResult>(s.fits));
    return s;
}

inline std::size_t default_n_train(const RunConfig& c, std::size_t n, EvaluationMode mode) {
    if (c.n_train != 0) return c.n_train;
    const std::size_t hold = mode == EvaluationMode::SingleOrigin ? c.horizon : 2 * c.horizon;
    if (n <= hold) throw DataError("insufficient data: series of length " + std::to_string(n) + " leaves no training sample");
    return n - hold;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Comparison pipeline, shared with the test harness.
// ---------------------------------------------------------------------------

struct ComparisonResult {
    detail::SdarSelection sdar;
    std::optional<SetarFit> setar;
    AccuracyReport sdar_report;
    AccuracyReport baseline_report;
    RelativeEfficiency re;
};

/// Fits SDAR (kinds per config, minimum AIC) and the baseline on `train`,
/// scores both on `test` and forms RE = SDAR / baseline.
inline ComparisonResult compare_models(const TimeSeries& train, const TimeSeries& test, const RunConfig& c) {
    const EvaluationMode mode = parse_mode(c.mode);
    ComparisonResult res;
    res.sdar = detail::fit_sdar_kinds(train, c);
    const SdarParams sdar_params = res.sdar.best().theta_hat;
    auto sdar_forecaster = [&](std::span<const double> hist, std::size_t H, std::size_t M, std::uint64_t s) {
        return mc_forecast_sdar(sdar_params, hist.back(), H, M, s);
    };
    res.sdar_report = rolling_evaluate(sdar_forecaster, train.view(), test.view(), c.horizon, c.mc, c.seed, mode);
    if (c.baseline == "sdar") {
        res.baseline_report = res.sdar_report;
    } else if (c.baseline == "setar") {
        res.setar = select_setar(train, c.max_lag, c.trim);
        const SetarFit& sf = *res.setar;
        auto setar_forecaster = [&](std::span<const double> hist, std::size_t H, std::size_t M, std::uint64_t s) {
            return mc_forecast_setar(sf, hist, H, M, s);
        };
        res.baseline_report = rolling_evaluate(setar_forecaster, train.view(), test.view(), c.horizon, c.mc, c.seed, mode);
    } else {
        throw std::invalid_argument("unknown baseline '" + c.baseline + "' (expected setar or sdar)");
    }
    res.re = relative_efficiency(res.sdar_report, res.baseline_report);
    return res;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace detail {

struct Outputs {
    std::vector<std::string> files;
    Json summary = Json::object();
};

inline int cmd_ingest(const RunConfig& c, Outputs& o, std::ostream& out) {
    if (c.input.empty()) throw DataError("--input is required");
    const TimeSeries vol = realized_volatility(load_returns(c.input, c.column), c.week_len);
    const TimeSeries logv = log_transform(vol);
    std::ostringstream a, b;
    write_series_csv(a, vol, "volatility");
    write_series_csv(b, logv, "log_volatility");
    write_file(c, "volatility.csv", a.str(), o.files);
    write_file(c, "log_volatility.csv", b.str(), o.files);
    o.summary["n_weeks"] = vol.size();
    out << "weekly observations: " << vol.size() << "\n";
    return kOk;
}

inline int cmd_fit_sdar(const RunConfig& c, Outputs& o, std::ostream& out) {
    TimeSeries series = load_model_series(c);
    if (c.n_train != 0) series = split(series, c.n_train).first;
    const SdarSelection sel = fit_sdar_kinds(series, c);
    bool all_converged = true;
    Json aics = Json::object();
    for (const auto& f : sel.fits) {
        const std::string k(to_string(f.theta_hat.kind));
        write_file(c, "fit_" + k + ".json", dump(to_json(f)), o.files);
        std::ostringstream ps;
        write_persistence_csv(ps, f.theta_hat, series);
        write_file(c, "persistence_" + k + ".csv", ps.str(), o.files);
        aics[k] = f.aic;
        all_converged = all_converged && f.converged;
        out << k << ": loglik " << format_double(f.loglik) << "  aic " << format_double(f.aic)
            << (f.converged ? "" : "  (not converged)") << "\n";
    }
    const std::string chosen(to_string(sel.best().theta_hat.kind));
    if (sel.fits.size() > 1) {
        write_file(c, "selection.json", dump(Json{{"selected", chosen}, {"aic", aics}}), o.files);
        out << "selected by AIC: " << chosen << "\n";
    }
    o.summary["selected"] = chosen;
    o.summary["n_obs"] = series.size();
    return all_converged ? kOk : kNotConverged;
}

inline int cmd_fit_setar(const RunConfig& c, Outputs& o, std::ostream& out) {
    TimeSeries series = load_model_series(c);
    if (c.n_train != 0) series = split(series, c.n_train).first;
    const SetarFit f = select_setar(series, c.max_lag, c.trim);
    write_file(c, "setar_fit.json", dump(to_json(f)), o.files);
    out << "SETAR(2," << f.d1 << "," << f.d2 << ") threshold " << format_double(f.threshold) << "  aic "
        << format_double(f.aic) << "\n";
    o.summary["d1"] = f.d1;
    o.summary["d2"] = f.d2;
    return kOk;
}

inline int cmd_forecast(const RunConfig& c, Outputs& o, std::ostream& out) {
    const TimeSeries series = load_model_series(c);
    const EvaluationMode mode = parse_mode(c.mode);
    TimeSeries train = series, test;
    const bool has_test = c.n_train != 0 && c.n_train < series.size();
    if (has_test) std::tie(train, test) = split(series, c.n_train);

    int code = kOk;
    ForecastResult fc;
    std::string name;
    std::function<ForecastResult(std::span<const double>, std::size_t, std::size_t, std::uint64_t)> forecaster;
    if (c.kind == "setar") {
        const SetarFit sf = select_setar(train, c.max_lag, c.trim);
        write_file(c, "setar_fit.json", dump(to_json(sf)), o.files);
        forecaster = [sf](std::span<const double> h, std::size_t H, std::size_t M, std::uint64_t s) {
            return mc_forecast_setar(sf, h, H, M, s);
        };
        name = "setar";
    } else {
        SdarParams params;
        if (!c.params.empty()) {
            params = config_params(c, parse_kind(c.kind == "both" ? "M1" : c.kind));
        } else {
            const SdarSelection sel = fit_sdar_kinds(train, c);
            write_file(c, "fit_" + std::string(to_string(sel.best().theta_hat.kind)) + ".json", dump(to_json(sel.best())),
                       o.files);
            if (!sel.best().converged) code = kNotConverged;
            params = sel.best().theta_hat;
        }
        forecaster = [params](std::span<const double> h, std::size_t H, std::size_t M, std::uint64_t s) {
            return mc_forecast_sdar(params, h.back(), H, M, s);
        };
        name = std::string(to_string(params.kind));
    }
    fc = forecaster(train.view(), c.horizon, c.mc, c.seed);
    std::ostringstream fs;
    write_forecast_csv(fs, fc);
    write_file(c, "forecast_" + name + ".csv", fs.str(), o.files);
    out << "forecast " << name << " h=1.." << c.horizon << " from origin " << train.size() << "\n";
    if (has_test) {
        const AccuracyReport rep = rolling_evaluate(forecaster, train.view(), test.view(), c.horizon, c.mc, c.seed, mode);
        std::ostringstream as;
        write_accuracy_csv(as, rep);
        write_file(c, "accuracy_" + name + ".csv", as.str(), o.files);
        o.summary["n_origins"] = rep.n_origins;
    }
    o.summary["model"] = name;
    return code;
}

inline int cmd_compare(const RunConfig& c, Outputs& o, std::ostream& out) {
    const TimeSeries series = load_model_series(c);
    const std::size_t n_train = default_n_train(c, series.size(), parse_mode(c.mode));
    const auto [train, test] = split(series, n_train);
    const ComparisonResult res = compare_models(train, test, c);
    for (const auto& f : res.sdar.fits) {
        write_file(c, "fit_" + std::string(to_string(f.theta_hat.kind)) + ".json", dump(to_json(f)), o.files);
    }
    if (res.setar) write_file(c, "setar_fit.json", dump(to_json(*res.setar)), o.files);
    std::ostringstream a, b, re;
    write_accuracy_csv(a, res.sdar_report);
    write_accuracy_csv(b, res.baseline_report);
    write_re_csv(re, res.re);
    write_file(c, "accuracy_sdar.csv", a.str(), o.files);
    write_file(c, "accuracy_" + c.baseline + ".csv", b.str(), o.files);
    write_file(c, "re_table.csv", re.str(), o.files);
    out << re.str();
    o.summary["sdar_kind"] = std::string(to_string(res.sdar.best().theta_hat.kind));
    o.summary["n_train"] = n_train;
    o.summary["n_origins"] = res.sdar_report.n_origins;
    return res.sdar.best().converged ? kOk : kNotConverged;
}

inline int cmd_check(const RunConfig& c, Outputs& o, std::ostream& out) {
    const PersistenceKind kind = parse_kind(c.kind == "both" ? "M1" : c.kind);
    const SdarParams p = config_params(c, kind);
    const AssumptionReport rep = check_assumptions(kind, p.pf);
    Json j{{"kind", std::string(to_string(kind))}, {"params", to_json(p.pf)}, {"report", to_json(rep)}};
    write_file(c, "check.json", dump(j), o.files);
    out << dump(j);
    o.summary["a1_satisfied"] = rep.a1_satisfied;
    return rep.a1_satisfied ? kOk : kAssumptionFailed;
}

inline int cmd_simulate(const RunConfig& c, Outputs& o, std::ostream& out) {
    const PersistenceKind kind = parse_kind(c.kind == "both" ? "M1" : c.kind);
    const SdarParams p = config_params(c, kind);
    const TimeSeries s = simulate(p, c.n, c.seed);
    std::ostringstream ss;
    write_series_csv(ss, s, "y");
    write_file(c, "simulated.csv", ss.str(), o.files);
    out << "simulated " << c.n << " observations\n";
    return kOk;
}

inline void add_common(Binder& b, RunConfig& cfg) {
    b.add("--input", "input", cfg.input, "Input CSV file");
    b.add("--column", "column", cfg.column, "Column name or 0-based index (default: last column)");
    b.add("--out", "out", cfg.out, "Output directory");
    b.add("--seed", "seed", cfg.seed, "Random seed");
}

inline void add_series(Binder& b, RunConfig& cfg) {
    b.add_flag("--returns", "returns", cfg.returns, "Input holds daily returns; model weekly log realized volatility");
    b.add("--week-len", "week_len", cfg.week_len, "Trading days per week")->check(CLI::PositiveNumber);
    b.add("--n-train", "n_train", cfg.n_train, "Number of leading observations used for estimation");
}

inline void add_sdar_fit(Binder& b, RunConfig& cfg) {
    b.add("--starts", "starts", cfg.starts, "Optimizer multi-start count")->check(CLI::PositiveNumber);
    b.add_flag("--full-likelihood", "full_likelihood", cfg.full_likelihood, "Include t=1 with Y_0 = 0");
    b.add("--lower", "lower", cfg.lower, "Box lower bounds alpha,gamma0,gamma1,r,sigma")->delimiter(',');
    b.add("--upper", "upper", cfg.upper, "Box upper bounds alpha,gamma0,gamma1,r,sigma")->delimiter(',');
}

inline void add_setar(Binder& b, RunConfig& cfg) {
    b.add("--max-lag", "max_lag", cfg.max_lag, "Largest SETAR lag order searched")->check(CLI::PositiveNumber);
    b.add("--trim", "trim", cfg.trim, "Threshold quantile trim");
}

inline void add_forecast(Binder& b, RunConfig& cfg) {
    b.add("--horizon", "horizon", cfg.horizon, "Forecast horizon H")->check(CLI::PositiveNumber);
    b.add("--mc", "mc", cfg.mc, "Monte-Carlo paths M")->check(CLI::PositiveNumber);
    b.add("--mode", "mode", cfg.mode, "single-origin or rolling-origin");
}

inline void add_params(Binder& b, RunConfig& cfg) {
    b.add("--params", "params", cfg.params, "Parameter or fit JSON");
    b.add("--alpha", "alpha", cfg.alpha, "alpha");
    b.add("--gamma0", "gamma0", cfg.gamma0, "gamma0");
    b.add("--gamma1", "gamma1", cfg.gamma1, "gamma1");
    b.add("--r", "r", cfg.r, "r");
    b.add("--sigma", "sigma", cfg.sigma, "sigma");
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    using namespace detail;
    CLI::App app{"State-dependent autoregression: estimation, checks, forecasting and SETAR comparison", "sdar"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    struct Command {
        std::string name;
        CLI::App* sub;
        std::unique_ptr<Binder> binder;
        std::function<int(const RunConfig&, Outputs&, std::ostream&)> run;
    };
    RunConfig cfg;
    std::vector<Command> commands;
    auto add_command = [&](const std::string& name, const std::string& help, auto run) -> Binder& {
        CLI::App* sub = app.add_subcommand(name, help);
        auto binder = std::make_unique<Binder>(*sub);
        sub->add_option("--config", cfg.config, "JSON config file; flags override it");
        add_common(*binder, cfg);
        commands.push_back({name, sub, std::move(binder), run});
        return *commands.back().binder;
    };

    add_command("ingest", "Build weekly realized volatility and its logarithm from daily returns", cmd_ingest);
    add_series(*commands.back().binder, cfg);

    {
        Binder& b = add_command("fit-sdar", "Quasi-maximum-likelihood SDAR fit (M1, M2 or both)", cmd_fit_sdar);
        add_series(b, cfg);
        b.add("--kind", "kind", cfg.kind, "M1, M2 or both");
        add_sdar_fit(b, cfg);
    }
    {
        Binder& b = add_command("fit-setar", "SETAR(2,d1,d2) fit with AIC lag selection", cmd_fit_setar);
        add_series(b, cfg);
        add_setar(b, cfg);
    }
    {
        Binder& b = add_command("forecast", "Monte-Carlo forecast from the end of the training sample", cmd_forecast);
        add_series(b, cfg);
        b.add("--kind", "kind", cfg.kind, "M1, M2, both or setar");
        add_sdar_fit(b, cfg);
        add_setar(b, cfg);
        add_forecast(b, cfg);
        b.add("--params", "params", cfg.params, "Use this parameter or fit JSON instead of fitting");
    }
    {
        Binder& b = add_command("compare", "Out-of-sample SDAR versus SETAR accuracy and relative efficiency", cmd_compare);
        add_series(b, cfg);
        b.add("--kind", "kind", cfg.kind, "SDAR kind: M1, M2 or both");
        add_sdar_fit(b, cfg);
        add_setar(b, cfg);
        add_forecast(b, cfg);
        b.add("--baseline", "baseline", cfg.baseline, "setar or sdar");
    }
    {
        Binder& b = add_command("check", "Stationarity and ergodicity conditions at a parameter point", cmd_check);
        b.add("--kind", "kind", cfg.kind, "M1 or M2");
        add_params(b, cfg);
    }
    {
        Binder& b = add_command("simulate", "Simulate an SDAR path", cmd_simulate);
        b.add("--kind", "kind", cfg.kind, "M1 or M2");
        b.add("--n", "n", cfg.n, "Number of observations")->check(CLI::PositiveNumber);
        add_params(b, cfg);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kInputError;
    }

    for (auto& cmd : commands) {
        if (!cmd.sub->parsed()) continue;
        try {
            Json file_cfg = Json::object();
            if (!cfg.config.empty()) {
                std::ifstream in(cfg.config);
                if (!in) throw DataError("cannot open config file '" + cfg.config + "'");
                file_cfg = Json::parse(in);
            }
            cmd.binder->apply(file_cfg);
            std::filesystem::create_directories(cfg.out);
            Outputs outputs;
            const int code = cmd.run(cfg, outputs, out);
            const Json manifest{{"command", cmd.name},
                                {"version", kVersion},
                                {"rng", kRngAlgorithm},
                                {"seed", cfg.seed},
                                {"config", config_to_json(cfg)},
                                {"outputs", outputs.files},
                                {"summary", outputs.summary},
                                {"exit_code", code}};
            write_text_file(out_path(cfg, "manifest_" + cmd.name + ".json").string(), dump(manifest));
            return code;
        } catch (const DataError& e) {
            err << "error: " << e.what() << "\n";
            return kInputError;
        } catch (const std::invalid_argument& e) {
            err << "error: " << e.what() << "\n";
            return kInputError;
        } catch (const Json::exception& e) {
            err << "error: " << e.what() << "\n";
            return kInputError;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << "\n";
            return kInputError;
        }
    }
    return kInputError;
}

}  // namespace sdar::cli
