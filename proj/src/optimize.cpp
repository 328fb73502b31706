#include "geomkit/optimize.hpp"

#include <cmath>
#include <deque>

#include "geomkit/jet.hpp"

namespace geomkit {

namespace {

bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

OptimizeResult minimize(const LossGrad& f, Vec x0, const OptimizeConfig& cfg) {
    const int n = static_cast<int>(x0.size());
    OptimizeResult res;
    res.x = std::move(x0);
    res.grad.assign(n, 0.0);
    res.loss = f(res.x, &res.grad);
    if (!std::isfinite(res.loss) || !all_finite(res.grad))
        throw NumericalError("minimize: non-finite loss or gradient at the start point");

    std::deque<Vec> s_hist, y_hist;
    std::deque<double> rho_hist;

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        res.iterations = iter;
        if (res.loss <= cfg.loss_target) {
            res.converged = true;
            res.message = "loss target reached";
            return res;
        }
        if (norm2(res.grad) <= cfg.grad_tol) {
            res.converged = true;
            res.message = "gradient tolerance reached";
            return res;
        }

        // Two-loop recursion for the quasi-Newton direction.
        Vec q = res.grad;
        std::vector<double> alpha(s_hist.size());
        for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
            alpha[i] = rho_hist[i] * dot(s_hist[i], q);
            q = axpy(-alpha[i], y_hist[i], q);
        }
        if (!s_hist.empty()) {
            const auto& s = s_hist.back();
            const auto& y = y_hist.back();
            const double gamma = dot(s, y) / dot(y, y);
            q = scale(gamma, std::move(q));
        }
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            const double beta = rho_hist[i] * dot(y_hist[i], q);
            q = axpy(alpha[i] - beta, s_hist[i], q);
        }
        Vec dir = scale(-1.0, std::move(q));

        double slope = dot(res.grad, dir);
        if (slope >= 0.0) {
            // Bad curvature information; restart along steepest descent.
            dir = scale(-1.0, res.grad);
            slope = dot(res.grad, dir);
            s_hist.clear(); y_hist.clear(); rho_hist.clear();
        }

        // Armijo backtracking with an optional quadratic-interpolation probe.
        double step = 1.0;
        double f_trial = 0.0;
        Vec x_trial;
        bool accepted = false;
        for (int h = 0; h <= cfg.max_halvings; ++h) {
            x_trial = axpy(step, dir, res.x);
            f_trial = f(x_trial, nullptr);
            const bool armijo = std::isfinite(f_trial) &&
                                f_trial <= res.loss + cfg.armijo_c * step * slope;
            if (armijo && cfg.quadratic_probe) {
                const double denom = f_trial - res.loss - slope * step;
                if (denom > 0.0) {
                    // Minimizer of the quadratic through f(0), f'(0), f(step);
                    // exact on quadratic objectives, and also how the search
                    // extends when the unit step lands short of the valley.
                    const double step_q = -slope * step * step / (2.0 * denom);
                    if (step_q > 0.0 && std::isfinite(step_q) && step_q < 1e4 * step) {
                        const Vec x_q = axpy(step_q, dir, res.x);
                        const double f_q = f(x_q, nullptr);
                        if (std::isfinite(f_q) && f_q < f_trial &&
                            f_q <= res.loss + cfg.armijo_c * step_q * slope) {
                            x_trial = x_q;
                            f_trial = f_q;
                        }
                    }
                } else if (h == 0) {
                    // Decrease at or beyond the full linear prediction with no
                    // backtracking: the direction is too short (typical after
                    // one steep curvature pair poisons the scaling).  Double
                    // greedily while the loss keeps dropping.
                    double grown = step;
                    for (int e = 0; e < 40; ++e) {
                        grown *= 2.0;
                        const Vec x_g = axpy(grown, dir, res.x);
                        const double f_g = f(x_g, nullptr);
                        if (std::isfinite(f_g) && f_g < f_trial &&
                            f_g <= res.loss + cfg.armijo_c * grown * slope) {
                            x_trial = x_g;
                            f_trial = f_g;
                        } else {
                            break;
                        }
                    }
                }
            }
            if (armijo) { accepted = true; break; }
            step *= 0.5;
        }
        if (!accepted) {
            res.message = "line search failed after " + std::to_string(cfg.max_halvings) +
                          " halvings";
            return res;
        }

        Vec grad_new(n, 0.0);
        const double f_new = f(x_trial, &grad_new);
        if (!std::isfinite(f_new) || !all_finite(grad_new)) {
            res.message = "non-finite loss or gradient after step";
            return res;
        }

        const Vec s = vsub(x_trial, res.x);
        const Vec y = vsub(grad_new, res.grad);
        const double sy = dot(s, y);
        if (sy > 1e-16 * norm2(s) * norm2(y)) {
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > cfg.memory) {
                s_hist.pop_front(); y_hist.pop_front(); rho_hist.pop_front();
            }
        }
        res.x = std::move(x_trial);
        res.loss = f_new;
        res.grad = std::move(grad_new);
    }
    res.iterations = cfg.max_iters;
    res.converged = norm2(res.grad) <= cfg.grad_tol || res.loss <= cfg.loss_target;
    res.message = res.converged ? "tolerance reached" : "iteration limit reached";
    return res;
}

}  // namespace geomkit
