// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "fixtures.hpp"
#include "oracles.hpp"
#include "setar_fixture.hpp"

#include "cli_commands.hpp"
#include "sdar/sdar.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace sdar;
using K = PersistenceKind;

namespace {

// Tolerances and budgets.
constexpr double kGradTol = 1e-6;
constexpr double kHessTol = 1e-4;
constexpr int kDerivativeCases = 100;
constexpr std::size_t kDerivativeN = 200;

constexpr double kBoundTol = 1e-3;
constexpr int kBoundDraws = 200;
constexpr std::size_t kBoundGrid = 100001;

const SdarParams kRecoveryTruth{-1.5, {0.4, 0.07, 0.32}, 0.5, K::M1};
constexpr std::size_t kRecoveryN = 5000;
constexpr int kRecoverySeeds = 50;
constexpr double kMaxMedianZ = 2.0;
constexpr double kCoverageLo = 0.88, kCoverageHi = 0.99;

constexpr int kAr1Series = 20;
constexpr double kAr1Tol = 1e-4;

constexpr std::size_t kMcPaths = 100000;
constexpr double kMcSe = 4.0;

constexpr double kSetarThreshold = -4.0;
constexpr double kSetarSigma = 0.01;
constexpr std::size_t kSetarN = 5000;
constexpr std::uint64_t kSetarSeed0 = 101;
constexpr int kSetarSeeds = 30;
constexpr double kSetarSd = 4.0;
constexpr double kSetarRecoveryRate = 0.90, kSetarSelectRate = 0.80;

const SdarParams kCompareTruth{-1.5856, {0.3734, 0.0649, 0.3198}, 0.5134, K::M1};
constexpr std::size_t kCompareTrain = 778, kCompareTest = 100, kCompareH = 10, kCompareMc = 2000;
constexpr int kCompareSeeds = 20;

struct Outcome {
    bool pass;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

bool report(int id, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = Clock::now();
    Outcome o = body();
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool in_time = secs < budget_s;
    const bool ok = o.pass && in_time;
    std::printf("criterion %d: %s  %s  [%.1f s, budget %.0f s%s]\n", id, ok ? "PASS" : "FAIL", o.detail.c_str(), secs,
                budget_s, in_time ? "" : ", over budget");
    std::fflush(stdout);
    return ok;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Outcome derivatives() {
    CounterRng rng(2024);
    double worst_g = 0, worst_h = 0;
    for (K kind : {K::M1, K::M2}) {
        for (int i = 0; i < kDerivativeCases; ++i) {
            const auto c = fixture::random_case(rng, kind, kDerivativeN);
            const auto x = fixture::to_vec(pack(c.theta));
            auto f = [&](const std::vector<double>& v) { return loglik(fixture::from_vec(v, kind), c.series); };
            const auto g = loglik_grad(c.theta, c.series);
            const auto fd = oracle::gradient(f, x);
            const double gscale = g.cwiseAbs().maxCoeff();
            for (int k = 0; k < kNumParams; ++k)
                worst_g = std::max(worst_g, fixture::rel_err(g(k), fd[static_cast<std::size_t>(k)], gscale));
            const auto h = loglik_hess(c.theta, c.series);
            const auto fdh = oracle::hessian(f, x);
            const double hscale = h.cwiseAbs().maxCoeff();
            for (int a = 0; a < kNumParams; ++a)
                for (int b = 0; b < kNumParams; ++b)
                    worst_h = std::max(worst_h, fixture::rel_err(h(a, b), fdh[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)], hscale));
        }
    }
    return {worst_g < kGradTol && worst_h < kHessTol,
            fmt("max rel err gradient %.2e (tol %.0e), hessian %.2e (tol %.0e) over %d cases per kind", worst_g, kGradTol,
                worst_h, kHessTol, kDerivativeCases)};
}

Outcome bounds() {
    CounterRng rng(7);
    double worst = 0;
    int boundary_cases = 0;
    for (K kind : {K::M1, K::M2}) {
        for (int i = 0; i < kBoundDraws; ++i) {
            PersistenceParams p;
            p.gamma0 = kind == K::M1 ? -1.0 + 3.0 * rng.uniform() : 1.05 + 2.0 * rng.uniform();
            p.gamma1 = 0.01 + 2.0 * rng.uniform();
            p.r = 0.1 + 1.4 * rng.uniform();
            if (p.r <= 0.5) ++boundary_cases;
            const double closed = a1_bound_closed_form(kind, p);
            const double numeric = a1_bound_numeric(kind, p, default_grid_extent(kind, p), kBoundGrid);
            worst = std::max(worst, std::abs(closed - numeric) / closed);
        }
    }
    const PersistenceParams m1[] = {{0.3734, 0.0649, 0.3198}, {0.4453, 0.0736, 0.4036}, {0.3701, 0.0945, 0.3315}};
    const PersistenceParams m2[] = {{1.1808, 0.0785, 0.5596}, {1.1346, 0.0973, 0.5628}, {1.1705, 0.0884, 0.4555}};
    double largest = 0;
    for (const auto& p : m1) largest = std::max({largest, a1_bound_closed_form(K::M1, p), check_assumptions(K::M1, p).sup_bound_numeric});
    for (const auto& p : m2) largest = std::max({largest, a1_bound_closed_form(K::M2, p), check_assumptions(K::M2, p).sup_bound_numeric});
    return {worst < kBoundTol && largest < 1.0,
            fmt("max rel err %.2e (tol %.0e) over %d draws per kind, %d with r <= 1/2; largest estimated-set bound %.4f",
                worst, kBoundTol, kBoundDraws, boundary_cases, largest)};
}

Outcome recovery() {
    const Vector5 truth = pack(kRecoveryTruth);
    std::vector<double> z;
    int covered = 0, total = 0, no_cov = 0;
    for (int s = 0; s < kRecoverySeeds; ++s) {
        const auto y = simulate(kRecoveryTruth, kRecoveryN, 70000 + static_cast<std::uint64_t>(s));
        FitOptions opt;
        opt.n_starts = 8;
        opt.seed = static_cast<std::uint64_t>(s);
        const auto f = fit(y, K::M1, opt);
        if (!f.covariance_available) ++no_cov;
        const Vector5 est = pack(f.theta_hat);
        for (int k = 0; k < kNumParams; ++k) {
            const double se = f.std_errors(k);
            const double zk = std::isfinite(se) && se > 0 ? std::abs(est(k) - truth(k)) / se : INFINITY;
            z.push_back(zk);
            covered += zk <= 1.96;
            ++total;
        }
    }
    std::nth_element(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(z.size() / 2), z.end());
    const double hi = z[z.size() / 2];
    std::nth_element(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(z.size() / 2 - 1), z.end());
    const double median = 0.5 * (hi + z[z.size() / 2 - 1]);
    const double coverage = static_cast<double>(covered) / total;
    return {median <= kMaxMedianZ && coverage >= kCoverageLo && coverage <= kCoverageHi,
            fmt("median |z| %.3f (<= %.1f), 95%% coverage %.3f (in [%.2f, %.2f]), %d/%d fits without covariance", median,
                kMaxMedianZ, coverage, kCoverageLo, kCoverageHi, no_cov, kRecoverySeeds)};
}

Outcome ar1_reduction() {
    ParamBox box = default_box(K::M1);
    box.lower(kGamma1) = box.upper(kGamma1) = 0.0;
    CounterRng rng(99);
    double worst = 0;
    for (int i = 0; i < kAr1Series; ++i) {
        const double alpha = -2.0 + 3.0 * rng.uniform(), phi = 0.1 + 0.8 * rng.uniform(), sigma = 0.2 + rng.uniform();
        const auto y = simulate(SdarParams{alpha, {-std::log(phi), 0.0, 1.0}, sigma, K::M1}, 500, rng.next_u64());
        FitOptions opt;
        opt.n_starts = 4;
        opt.seed = static_cast<std::uint64_t>(i);
        const auto f = fit(y, K::M1, box, opt);
        const auto mle = oracle::ar1_mle(y.values);
        worst = std::max({worst, std::abs(f.theta_hat.alpha - mle.alpha), std::abs(std::exp(-f.theta_hat.pf.gamma0) - mle.phi),
                          std::abs(f.theta_hat.pf.gamma0 + std::log(mle.phi)), std::abs(f.theta_hat.sigma - mle.sigma)});
    }
    return {worst < kAr1Tol, fmt("max abs diff from closed-form AR(1) MLE %.2e (tol %.0e) over %d series", worst, kAr1Tol, kAr1Series)};
}

Outcome mc_convergence() {
    const double alpha = -0.6, phi = 0.8, sigma = 0.5, y0 = 1.0;
    const SdarParams p{alpha, {-std::log(phi), 0.0, 1.0}, sigma, K::M1};
    const auto fc = mc_forecast_sdar(p, y0, 5, kMcPaths, 17);
    double worst = 0;
    for (int h = 1; h <= 5; ++h) {
        const auto i = static_cast<std::size_t>(h - 1);
        const double se = fc.path_sd[i] / std::sqrt(static_cast<double>(kMcPaths));
        worst = std::max(worst, std::abs(fc.means[i] - oracle::ar1_mean(alpha, phi, y0, h)) / se);
    }
    return {worst <= kMcSe, fmt("max |mean - closed form| = %.2f MC standard errors (limit %.0f) at M=%zu", worst, kMcSe, kMcPaths)};
}

Outcome setar_recovery() {
    const SetarFit truth = fixture::cac40_setar(kSetarThreshold, kSetarSigma);
    int recovered = 0, selected = 0;
    for (int s = 0; s < kSetarSeeds; ++s) {
        const auto y = fixture::simulate_setar(truth, kSetarN, kSetarSeed0 + static_cast<std::uint64_t>(s));
        const auto f = fit_setar(y, 3, 3);
        bool ok = std::abs(f.c1 - truth.c1) <= kSetarSd * f.se1[0] && std::abs(f.c2 - truth.c2) <= kSetarSd * f.se2[0];
        for (std::size_t i = 0; i < 3; ++i) {
            ok = ok && std::abs(f.phi1[i] - truth.phi1[i]) <= kSetarSd * f.se1[i + 1];
            ok = ok && std::abs(f.phi2[i] - truth.phi2[i]) <= kSetarSd * f.se2[i + 1];
        }
        const auto cands = threshold_candidates(y.view(), 3, 3);
        ok = ok && std::labs(fixture::candidate_index(cands, f.threshold) - fixture::candidate_index(cands, truth.threshold)) <= 1;
        recovered += ok;
        const auto sel = select_setar(y, 4);
        selected += sel.d1 == 3 && sel.d2 == 3;
    }
    const double rec = static_cast<double>(recovered) / kSetarSeeds, sel = static_cast<double>(selected) / kSetarSeeds;
    return {rec >= kSetarRecoveryRate && sel >= kSetarSelectRate,
            fmt("recovery %d/%d = %.2f (>= %.2f), (3,3) selected %d/%d = %.2f (>= %.2f)", recovered, kSetarSeeds, rec,
                kSetarRecoveryRate, selected, kSetarSeeds, sel, kSetarSelectRate)};
}

Outcome comparison() {
    cli::RunConfig cfg;
    cfg.kind = "both";
    cfg.starts = 8;
    cfg.horizon = kCompareH;
    cfg.mc = kCompareMc;
    cfg.max_lag = 4;
    cfg.mode = "rolling";
    std::vector<AccuracyReport> sdar_reports, setar_reports;
    for (int s = 0; s < kCompareSeeds; ++s) {
        cfg.seed = static_cast<std::uint64_t>(s + 1);
        const auto y = simulate(kCompareTruth, kCompareTrain + kCompareTest, 40000 + cfg.seed);
        const auto [train, test] = split(y, kCompareTrain);
        const auto res = cli::compare_models(train, test, cfg);
        sdar_reports.push_back(res.sdar_report);
        setar_reports.push_back(res.baseline_report);
    }
    const auto re = relative_efficiency(average_reports(sdar_reports), average_reports(setar_reports));
    int wins[3] = {0, 0, 0};
    for (std::size_t h = 1; h < kCompareH; ++h) {
        wins[0] += re.mafe[h] < 1.0;
        wins[1] += re.msfe[h] < 1.0;
        wins[2] += re.mape[h] < 1.0;
    }
    const int horizons = static_cast<int>(kCompareH) - 1;
    const bool ok = 2 * wins[0] > horizons && 2 * wins[1] > horizons && 2 * wins[2] > horizons;
    return {ok, fmt("horizons 2..%zu with RE < 1: MAFE %d/%d, MSFE %d/%d, MAPE %d/%d (RE at h=2: %.4f %.4f %.4f; h=10: %.4f %.4f %.4f)",
                    kCompareH, wins[0], horizons, wins[1], horizons, wins[2], horizons, re.mafe[1], re.msfe[1], re.mape[1],
                    re.mafe[9], re.msfe[9], re.mape[9])};
}

Outcome anchors() {
    CounterRng rng(3);
    ReturnSeries ret;
    for (int i = 0; i < 3890; ++i) ret.values.push_back(0.01 * rng.normal());
    const std::size_t weeks = realized_volatility(ret, 5).size();

    const std::vector<double> cac{1124.54, 1134.30}, dax{1148.82, 1157.05}, ftse{1151.36, 1135.19};
    const std::size_t picks[] = {select_model(cac), select_model(dax), select_model(ftse)};

    const SetarFit f = fixture::cac40_setar(kSetarThreshold, 0.3);
    bool certain = true;
    for (double last : {-5.0, -4.0, -3.99, -3.0}) {
        std::vector<double> hist(5, -4.0);
        hist.back() = last;
        const auto fc = mc_forecast_setar(f, hist, 3, 5000, 11);
        const double share = fc.low_regime_share[0];
        certain = certain && (share == 0.0 || share == 1.0) && (share == 1.0) == (last <= kSetarThreshold);
    }
    const bool ok = weeks == 778 && picks[0] == 0 && picks[1] == 0 && picks[2] == 1 && certain;
    return {ok, fmt("weeks from 3890 returns %zu (want 778); AIC picks %zu/%zu/%zu (want 0/0/1); h=1 regime certain %s", weeks,
                    picks[0], picks[1], picks[2], certain ? "yes" : "no")};
}

}  // namespace

int main() {
    bool all = true;
    all &= report(1, 30, derivatives);
    all &= report(2, 60, bounds);
    all &= report(3, 600, recovery);
    all &= report(4, 60, ar1_reduction);
    all &= report(5, 60, mc_convergence);
    all &= report(6, 600, setar_recovery);
    all &= report(7, 900, comparison);
    all &= report(8, 60, anchors);
    std::printf("%s\n", all ? "ALL PASS" : "SOME CRITERIA FAILED");
    return all ? 0 : 1;
}
