#include "geomkit/integrate.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace geomkit {

namespace {

void check_finite(const State& s, int step) {
    for (double x : s.a)
        if (!std::isfinite(x))
            throw NumericalError("non-finite state at step " + std::to_string(step));
}

State zeros_like(const State& s) { return State(s.ncomp, s.ncoeff); }

}  // namespace

void state_axpy(double h, const State& k, State& out) {
    if (k.ncomp != out.ncomp || k.ncoeff != out.ncoeff)
        throw std::invalid_argument("state_axpy: shape mismatch");
    for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] += h * k.a[i];
}

namespace {

// Shared stepping loop; the observer sees every state (index 0 .. n_steps)
// and decides what to keep.
template <class Observer>
void run_ode(const OdeField& f, State cur, int n_steps, double T, OdeScheme scheme,
             Observer&& observe) {
    if (n_steps <= 0) throw std::invalid_argument("integrate_ode: n_steps must be positive");
    const double h = T / n_steps;
    check_finite(cur, 0);
    observe(0, cur);

    State k1, k2, k3, k4, tmp, sum;
    for (int step = 0; step < n_steps; ++step) {
        const double t = step * h;
        State next = cur;
        if (scheme == OdeScheme::Euler) {
            k1 = zeros_like(cur);
            f(t, cur, k1);
            state_axpy(h, k1, next);
        } else {
            k1 = zeros_like(cur); k2 = zeros_like(cur); k3 = zeros_like(cur); k4 = zeros_like(cur);
            f(t, cur, k1);
            tmp = cur; state_axpy(0.5 * h, k1, tmp);
            f(t + 0.5 * h, tmp, k2);
            tmp = cur; state_axpy(0.5 * h, k2, tmp);
            f(t + 0.5 * h, tmp, k3);
            tmp = cur; state_axpy(h, k3, tmp);
            f(t + h, tmp, k4);
            sum = k1;
            state_axpy(2.0, k2, sum);
            state_axpy(2.0, k3, sum);
            state_axpy(1.0, k4, sum);
            state_axpy(h / 6.0, sum, next);
        }
        check_finite(next, step + 1);
        cur = std::move(next);
        observe(step + 1, cur);
    }
}

}  // namespace

std::vector<State> integrate_ode_states(const OdeField& f, State x0, int n_steps,
                                        double T, OdeScheme scheme) {
    std::vector<State> path;
    path.reserve(n_steps + 1);
    run_ode(f, std::move(x0), n_steps, T, scheme,
            [&](int, const State& s) { path.push_back(s); });
    return path;
}

State integrate_ode_final(const OdeField& f, State x0, int n_steps, double T,
                          OdeScheme scheme) {
    State last;
    run_ode(f, std::move(x0), n_steps, T, scheme,
            [&](int, const State& s) { last = s; });
    return last;
}

Trajectory integrate_ode(const OdeField& f, const Vec& x0, int n_steps, double T,
                         OdeScheme scheme) {
    auto path = integrate_ode_states(f, State::plain(x0), n_steps, T, scheme);
    return trajectory_of(path, T / n_steps);
}

std::vector<State> integrate_sde_states(const SdeField& f, State x0, const Matrix& dW,
                                        double dt, SdeScheme scheme) {
    const int n_steps = dW.rows;
    if (n_steps <= 0) throw std::invalid_argument("integrate_sde: empty increment matrix");
    if (dt <= 0.0) throw std::invalid_argument("integrate_sde: dt must be positive");
    std::vector<State> path;
    path.reserve(n_steps + 1);
    check_finite(x0, 0);
    path.push_back(std::move(x0));

    State drift, diff, drift2, diff2, pred;
    for (int step = 0; step < n_steps; ++step) {
        const double t = step * dt;
        const State& s = path.back();
        const double* dw = dW.a.data() + static_cast<std::size_t>(step) * dW.cols;
        State next = s;
        drift = zeros_like(s); diff = zeros_like(s);
        f(dw, t, s, drift, diff);
        if (scheme == SdeScheme::ItoEuler) {
            state_axpy(dt, drift, next);
            state_axpy(1.0, diff, next);
        } else {
            // Heun: predictor moves by the diffusion alone, the corrector
            // averages the diffusion at both ends; drift stays explicit.
            pred = s;
            state_axpy(1.0, diff, pred);
            drift2 = zeros_like(s); diff2 = zeros_like(s);
            f(dw, t, pred, drift2, diff2);
            state_axpy(dt, drift, next);
            state_axpy(0.5, diff, next);
            state_axpy(0.5, diff2, next);
        }
        check_finite(next, step + 1);
        path.push_back(std::move(next));
    }
    return path;
}

Trajectory integrate_sde(const SdeField& f, const Vec& x0, const Matrix& dW, double dt,
                         SdeScheme scheme) {
    auto path = integrate_sde_states(f, State::plain(x0), dW, dt, scheme);
    return trajectory_of(path, dt);
}

Trajectory trajectory_of(const std::vector<State>& path, double dt) {
    Trajectory tr;
    tr.times.resize(path.size());
    if (path.empty()) return tr;
    tr.states = Matrix(static_cast<int>(path.size()), path[0].ncomp);
    for (std::size_t i = 0; i < path.size(); ++i) {
        tr.times[i] = static_cast<double>(i) * dt;
        for (int c = 0; c < path[i].ncomp; ++c) tr.states(static_cast<int>(i), c) = path[i].value(c);
    }
    return tr;
}

}  // namespace geomkit
