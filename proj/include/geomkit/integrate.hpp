#pragma once
// Fixed-step ODE and SDE integrators.
//
// States are flat coefficient blocks: each of the ncomp components carries
// ncoeff doubles, where entry 0 is the value and entries 1..m are first-order
// sensitivity coefficients with respect to m external parameters.  The
// schemes only ever form linear combinations of states, so the same stepping
// code serves plain runs (ncoeff == 1) and derivative-carrying runs, and the
// value column of a sensitivity run is bitwise identical to the plain run.
// Fields interpret the coefficient rows themselves (usually through jets).

#include <functional>

#include "geomkit/linalg.hpp"
#include "geomkit/trajectory.hpp"

namespace geomkit {

struct State {
    int ncomp = 0;
    int ncoeff = 1;
    std::vector<double> a;

    State() = default;
    State(int nc, int m) : ncomp(nc), ncoeff(m), a(static_cast<std::size_t>(nc) * m, 0.0) {}
    static State plain(const Vec& x) {
        State s(static_cast<int>(x.size()), 1);
        s.a = x;
        return s;
    }

    double value(int comp) const { return a[static_cast<std::size_t>(comp) * ncoeff]; }
    double* row(int comp) { return a.data() + static_cast<std::size_t>(comp) * ncoeff; }
    const double* row(int comp) const { return a.data() + static_cast<std::size_t>(comp) * ncoeff; }
    Vec values() const {
        Vec v(ncomp);
        for (int i = 0; i < ncomp; ++i) v[i] = value(i);
        return v;
    }
};

// out = out + h * k, shapes must match.
void state_axpy(double h, const State& k, State& out);

// dx/dt = field(t, x).  `out` arrives zeroed with the same shape as `s`.
using OdeField = std::function<void(double t, const State& s, State& out)>;

// One SDE evaluation: drift(s) and the diffusion applied to this step's
// increment dw (noise_dim entries).  Both outputs arrive zeroed.
using SdeField = std::function<void(const double* dw, double t, const State& s,
                                    State& drift, State& diffusion)>;

enum class OdeScheme { Euler, RK4 };
enum class SdeScheme { ItoEuler, StratonovichHeun };

// Full state path including sensitivity coefficients: n_steps+1 entries,
// times k*(T/n_steps).  Throws NumericalError (with the step index) when a
// state stops being finite.
std::vector<State> integrate_ode_states(const OdeField& f, State x0, int n_steps,
                                        double T, OdeScheme scheme);
// Same stepping, but only the endpoint is kept; what shooting loops want.
State integrate_ode_final(const OdeField& f, State x0, int n_steps, double T,
                          OdeScheme scheme);
Trajectory integrate_ode(const OdeField& f, const Vec& x0, int n_steps, double T,
                         OdeScheme scheme);

// dW has one row per step; dt is the time step used for the drift term.
std::vector<State> integrate_sde_states(const SdeField& f, State x0, const Matrix& dW,
                                        double dt, SdeScheme scheme);
Trajectory integrate_sde(const SdeField& f, const Vec& x0, const Matrix& dW, double dt,
                         SdeScheme scheme);

// Value-column view of a state path.
Trajectory trajectory_of(const std::vector<State>& path, double dt);

}  // namespace geomkit
