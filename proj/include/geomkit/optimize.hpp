#pragma once
// Limited-memory quasi-Newton minimizer (L-BFGS two-loop recursion) with a
// backtracking Armijo line search.  Shared by geodesic shooting, landmark
// matching, the mean estimator and the bundle path optimizer, so the knobs
// live in one config struct.

#include <functional>
#include <limits>
#include <string>

#include "geomkit/linalg.hpp"

namespace geomkit {

// Objective callback.  When grad_out is null only the loss is needed; when it
// is non-null the callback must fill it with the gradient at x.  Keeping one
// callback lets callers skip derivative propagation on line-search probes.
using LossGrad = std::function<double(const Vec& x, Vec* grad_out)>;

struct OptimizeConfig {
    int max_iters = 500;
    double grad_tol = 1e-8;
    int memory = 10;
    int max_halvings = 50;
    double armijo_c = 1e-4;
    // Try the quadratic-interpolation step along the search direction as well
    // as the unit step; exact on quadratic objectives.
    bool quadratic_probe = true;
    // Stop early once the loss itself is good enough (useful when the loss is
    // a squared residual with a known target of zero).  Off by default.
    double loss_target = -std::numeric_limits<double>::infinity();
};

struct OptimizeResult {
    Vec x;
    double loss = 0.0;
    Vec grad;
    int iterations = 0;
    bool converged = false;
    std::string message;
};

OptimizeResult minimize(const LossGrad& f, Vec x0, const OptimizeConfig& cfg = {});

}  // namespace geomkit
