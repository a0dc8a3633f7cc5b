// Simulate an M1 path, fit both persistence functions, pick one by AIC and
// forecast ten steps ahead.
#include "sdar/sdar.hpp"

#include <cstdio>

int main() {
    using namespace sdar;
    const SdarParams truth{-1.5, {0.4, 0.3, 1.0}, 0.5, PersistenceKind::M1};
    const TimeSeries y = simulate(truth, 1000, 7);

    FitOptions opt;
    opt.n_starts = 8;
    opt.seed = 1;
    const FitResult fits[] = {fit(y, PersistenceKind::M1, opt), fit(y, PersistenceKind::M2, opt)};
    const FitResult& best = fits[select_model(std::span<const FitResult>(fits))];

    std::printf("selected %s  loglik %.4f  aic %.4f\n", std::string(to_string(best.theta_hat.kind)).c_str(), best.loglik,
                best.aic);
    const Vector5 theta = pack(best.theta_hat);
    for (int i = 0; i < kNumParams; ++i) {
        std::printf("  %-6s %9.4f  (se %.4f)\n", kParamNames[i], theta(i), best.std_errors(i));
    }
    std::printf("a1 bound %.4f  satisfied: %s\n", best.assumptions.sup_bound_closed_form,
                best.assumptions.a1_satisfied ? "yes" : "no");

    const ForecastResult fc = mc_forecast_sdar(best, y.values.back(), 10, 20000, 11);
    for (std::size_t h = 0; h < fc.horizon; ++h) {
        std::printf("h=%2zu  mean %.4f  90%% band [%.4f, %.4f]\n", h + 1, fc.means[h], fc.quantiles.at(0.05)[h],
                    fc.quantiles.at(0.95)[h]);
    }
}
