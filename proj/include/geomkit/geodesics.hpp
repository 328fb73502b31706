#pragma once
// Geodesics in two equivalent forms, with the maps built on top of them.
//
//   geodesic_field:    second-order equation on (x, w) states,
//                      dw^k = -Gamma^k_ij w^i w^j.
//   hamiltonian_field: first-order flow of H(x, p) = p' g*(x) p / 2 on
//                      (x, p) states.
//
// Both fields run on coefficient-carrying states, so shooting losses can be
// differentiated by seeding the initial state instead of bumping it.

#include "geomkit/integrate.hpp"
#include "geomkit/manifold.hpp"
#include "geomkit/optimize.hpp"

namespace geomkit {

struct FlowConfig {
    int n_steps = 100;
    double T = 1.0;
    OdeScheme scheme = OdeScheme::RK4;
};

OdeField geodesic_field(const Manifold& M);
// Uses the manifold's specialized field when one is installed.
OdeField hamiltonian_field(const Manifold& M);
// Always the jet-assembled field; exists so specialized fields can be
// checked against it.
OdeField generic_hamiltonian_field(const Manifold& M);

struct FlowResult {
    Trajectory points;   // chart positions per step
    Matrix companion;    // velocity w (geodesic) or momentum p (Hamiltonian)
    Vec invariant;       // g(w, w) or H(x, p) per step, for conservation checks
};

FlowResult geodesic(const Manifold& M, const Vec& x, const Vec& v,
                    const FlowConfig& cfg = {});
// Endpoint of the unit-time geodesic with initial velocity v.
Vec exp_map(const Manifold& M, const Vec& x, const Vec& v, const FlowConfig& cfg = {});
FlowResult hamiltonian_flow(const Manifold& M, const Vec& x, const Vec& p,
                            const FlowConfig& cfg = {});

struct LogResult {
    Vec v;
    double loss = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Inverse of exp_map by shooting: minimizes |exp(x1, v) - x2|^2 / dim with
// the gradient propagated through the integrator.  v0 defaults to zero.
LogResult log_map(const Manifold& M, const Vec& x1, const Vec& x2,
                  const FlowConfig& cfg = {}, const OptimizeConfig& opt = {},
                  const Vec* v0 = nullptr);
double distance(const Manifold& M, const Vec& x1, const Vec& x2,
                const FlowConfig& cfg = {}, const OptimizeConfig& opt = {});

// Parallel transport of v0 along a sampled curve: dv^k = -Gamma^k_ij xdot^i v^j.
// xs and xdots hold the curve and its velocity on the (uniform) time grid;
// midpoint values for the RK4 stages come from cubic Hermite interpolation.
// Returns the transported vector at every node.
Matrix parallel_transport(const Manifold& M, const Vec& times, const Matrix& xs,
                          const Matrix& xdots, const Vec& v0);

}  // namespace geomkit
