/**
 * @file optimizer.hpp
 * @brief Projected BFGS for smooth minimisation over a box.
 *
 * Variables sitting on a bound with the gradient pushing outward are frozen
 * for the iteration; the quasi-Newton direction is computed on the remaining
 * free block and the trial points are projected back into the box
 * (Armijo backtracking along the projected path). Components with
 * lower == upper are held fixed throughout.
 */

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace sdar {

struct BoxMinimizerOptions {
    int max_iterations = 500;
    int max_backtracks = 60;
    double armijo = 1e-4;
};

struct BoxMinimizerResult {
    Eigen::VectorXd x;
    double value = std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd gradient;
    int iterations = 0;
    bool stopped_by_criterion = false;
};

inline Eigen::VectorXd project_to_box(const Eigen::VectorXd& x, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
    return x.cwiseMax(lower).cwiseMin(upper);
}

/// Minimises `fg` (signature `double(const VectorXd& x, VectorXd& grad)`)
/// over [lower, upper]. `done(x, f, grad)` is consulted before every
/// iteration and ends the run when it returns true.
template <class ValueAndGradient, class StopCriterion>
BoxMinimizerResult minimize_in_box(ValueAndGradient&& fg, const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                                   const Eigen::VectorXd& upper, StopCriterion&& done,
                                   const BoxMinimizerOptions& opt = {}) {
    const Eigen::Index n = x0.size();
    BoxMinimizerResult res;
    res.x = project_to_box(x0, lower, upper);
    res.gradient.resize(n);
    res.value = fg(res.x, res.gradient);

    Eigen::MatrixXd inv_hess = Eigen::MatrixXd::Identity(n, n);
    bool scaled = false;
    Eigen::VectorXd grad_new(n);

    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
        if (!std::isfinite(res.value)) break;
        if (done(res.x, res.value, res.gradient)) {
            res.stopped_by_criterion = true;
            break;
        }
        const Eigen::VectorXd& g = res.gradient;
        Eigen::Array<bool, Eigen::Dynamic, 1> free(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool pinned = lower(i) == upper(i);
            const bool blocked_low = res.x(i) <= lower(i) && g(i) > 0.0;
            const bool blocked_high = res.x(i) >= upper(i) && g(i) < 0.0;
            free(i) = !(pinned || blocked_low || blocked_high);
        }
        if (!free.any()) {
            res.stopped_by_criterion = true;
            break;
        }

        bool accepted = false;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            Eigen::VectorXd dir = Eigen::VectorXd::Zero(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!free(i)) continue;
                double acc = 0.0;
                for (Eigen::Index j = 0; j < n; ++j)
                    if (free(j)) acc -= inv_hess(i, j) * g(j);
                dir(i) = acc;
            }
            if (!(g.dot(dir) < 0.0)) {
                inv_hess.setIdentity();
                scaled = false;
                for (Eigen::Index i = 0; i < n; ++i) dir(i) = free(i) ? -g(i) : 0.0;
            }
            if (!scaled) {
                const double step_cap = dir.cwiseAbs().maxCoeff();
                if (step_cap > 1.0) dir /= step_cap;
            }

            double t = 1.0;
            for (int b = 0; b < opt.max_backtracks; ++b, t *= 0.5) {
                const Eigen::VectorXd trial = project_to_box(res.x + t * dir, lower, upper);
                const Eigen::VectorXd step = trial - res.x;
                if (step.cwiseAbs().maxCoeff() == 0.0) break;
                const double f_trial = fg(trial, grad_new);
                if (std::isfinite(f_trial) && f_trial <= res.value + opt.armijo * g.dot(step)) {
                    const Eigen::VectorXd y = grad_new - g;
                    const double sy = step.dot(y);
                    if (sy > 1e-12 * step.norm() * y.norm()) {
                        if (!scaled) {
                            inv_hess = Eigen::MatrixXd::Identity(n, n) * (sy / y.squaredNorm());
                            scaled = true;
                        }
                        const double rho = 1.0 / sy;
                        const Eigen::MatrixXd left = Eigen::MatrixXd::Identity(n, n) - rho * step * y.transpose();
                        inv_hess = left * inv_hess * left.transpose() + rho * step * step.transpose();
                    }
                    res.x = trial;
                    res.value = f_trial;
                    res.gradient = grad_new;
                    accepted = true;
                    break;
                }
            }
            if (!accepted) {
                // Quasi-Newton direction failed; retry once along steepest descent.
                if (!scaled) break;
                inv_hess.setIdentity();
                scaled = false;
            }
        }
        if (!accepted) break;
    }
    return res;
}

}  // namespace sdar
