#include "setar_fixture.hpp"

#include "sdar/io.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

using namespace sdar;
using K = PersistenceKind;

namespace {

std::vector<std::string> lines_of(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

const SdarParams kGen{-1.0, {0.2, 0.5, 1.0}, 0.5, K::M1};

FitResult small_fit() {
    FitOptions opt;
    opt.n_starts = 2;
    opt.seed = 3;
    return fit(simulate(kGen, 300, 11), K::M1, opt);
}

}  // namespace

TEST(FormatDouble, RoundTripsAndNan) {
    for (double x : {0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.68838982183669184}) {
        EXPECT_EQ(std::strtod(format_double(x).c_str(), nullptr), x);
    }
    EXPECT_EQ(format_double(std::nan("")), "nan");
    EXPECT_TRUE(json_number(INFINITY).is_null());
}

TEST(FitJson, FieldsAndCovarianceLayout) {
    const auto f = small_fit();
    const Json j = to_json(f);
    for (const char* key : {"kind", "theta_hat", "std_errors", "covariance", "covariance_available", "loglik", "aic",
                            "n_params", "n_obs", "converged", "grad_norm", "n_starts", "condition_on_first", "at_bound",
                            "assumptions", "starts"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
    EXPECT_EQ(j["kind"], "M1");
    EXPECT_EQ(j["covariance"].size(), 25u);
    EXPECT_EQ(j["starts"].size(), 2u);
    EXPECT_EQ(j["n_obs"], 299u);
    ASSERT_TRUE(f.covariance_available);
    EXPECT_DOUBLE_EQ(j["covariance"][1 * 5 + 2].get<double>(), f.covariance(1, 2));
    EXPECT_TRUE(j["assumptions"].contains("a1_satisfied"));

    const auto back = sdar_params_from_json(j);
    EXPECT_EQ(pack(back), pack(f.theta_hat));
    EXPECT_EQ(back.kind, K::M1);
}

TEST(FitJson, UnavailableCovarianceIsNull) {
    FitResult f;
    f.theta_hat = kGen;
    const Json j = to_json(f);
    for (const auto& c : j["covariance"]) EXPECT_TRUE(c.is_null());
    EXPECT_TRUE(j["std_errors"]["alpha"].is_null());
}

TEST(ParamsJson, PlainObjectAndValidation) {
    const Json plain = Json::parse(R"({"kind":"M2","alpha":-1,"gamma0":1.2,"gamma1":0.1,"r":0.5,"sigma":0.4})");
    const auto p = sdar_params_from_json(plain);
    EXPECT_EQ(p.kind, K::M2);
    EXPECT_EQ(p.pf.gamma0, 1.2);
    const Json bad = Json::parse(R"({"alpha":-1,"gamma0":1.2,"gamma1":0.1,"r":0.5,"sigma":-0.4})");
    EXPECT_THROW(sdar_params_from_json(bad), std::invalid_argument);
    EXPECT_THROW(sdar_params_from_json(Json::parse(R"({"alpha":1})")), Json::exception);
}

TEST(SetarJson, RoundTrip) {
    const auto gen = fixture::cac40_setar(-4.0, 0.3);
    const auto j = to_json(gen);
    const auto back = setar_from_json(j);
    EXPECT_EQ(back.phi1, gen.phi1);
    EXPECT_EQ(back.phi2, gen.phi2);
    EXPECT_EQ(back.threshold, gen.threshold);
    EXPECT_EQ(back.d1, gen.d1);
    EXPECT_EQ(back.d2, gen.d2);
}

TEST(Csv, AccuracyTable) {
    AccuracyReport r{{1.0, 2.0, 3.0}, {1.0, 4.0, 9.0}, {0.1, std::nan(""), 0.3}, 5};
    std::ostringstream out;
    write_accuracy_csv(out, r);
    const auto lines = lines_of(out.str());
    ASSERT_EQ(lines.size(), 4u);
    EXPECT_EQ(lines[0], "horizon,MAFE,MSFE,MAPE");
    EXPECT_EQ(lines[2], "2,2,4,nan");
}

TEST(Csv, ForecastTable) {
    const auto fc = mc_forecast_sdar(kGen, -2.0, 7, 500, 1);
    std::ostringstream out;
    write_forecast_csv(out, fc);
    const auto lines = lines_of(out.str());
    ASSERT_EQ(lines.size(), 8u);
    EXPECT_EQ(lines[0], "horizon,mean,sd,q0.05,q0.25,q0.5,q0.75,q0.95");

    const auto sf = mc_forecast_setar(fixture::cac40_setar(-4.0, 0.3), std::vector<double>(5, -4.0), 3, 200, 1);
    std::ostringstream s;
    write_forecast_csv(s, sf);
    EXPECT_EQ(lines_of(s.str())[0], "horizon,mean,sd,q0.05,q0.25,q0.5,q0.75,q0.95,low_regime_share");
}

TEST(Csv, SeriesAndPersistence) {
    TimeSeries labelled({1.5, 2.5}, std::vector<std::string>{"w1", "w2"});
    std::ostringstream a;
    write_series_csv(a, labelled, "vol");
    EXPECT_EQ(a.str(), "label,vol\nw1,1.5\nw2,2.5\n");

    const auto series = simulate(kGen, 50, 2);
    std::ostringstream b;
    write_persistence_csv(b, kGen, series);
    const auto lines = lines_of(b.str());
    EXPECT_EQ(lines.size(), 50u);
    EXPECT_EQ(lines[0], "t,y_lag,psi");
    EXPECT_EQ(lines[1].rfind("2,", 0), 0u);
}
