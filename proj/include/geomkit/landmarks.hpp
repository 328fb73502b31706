#pragma once
// Landmark configurations in the plane under a Gaussian-kernel cometric.
//
// A configuration of n points x_1..x_n is one chart point with interleaved
// coordinates (x_1^1, x_1^2, x_2^1, ...).  The cometric is block structured,
// g*^{(i u)(j v)} = K(x_i, x_j) delta_{uv} with
// K(a, b) = alpha * exp(-|a - b|^2 / (2 sigma^2)), which makes geodesic
// matching of point sets a Hamiltonian shooting problem.  The manifold
// carries a hand-assembled Hamiltonian field (the kernel gradient is closed
// form), kept consistent with the generic jet route by tests.

#include "geomkit/geodesics.hpp"
#include "geomkit/manifold.hpp"
#include "geomkit/optimize.hpp"

namespace geomkit {

double landmark_kernel(double alpha, double sigma, const double* a, const double* b);

Manifold make_landmarks(int n, double sigma, double alpha);

// The specialized (x, p) field, exposed for the consistency tests.
OdeField landmark_hamiltonian_field(int n, double sigma, double alpha);

struct LandmarkMatchConfig {
    int n_steps = 100;
    // First optimize on a coarser time grid, then refine; 0 disables the
    // coarse stage.
    int coarse_steps = 20;
    double loss_tol = 1e-6;
    // Coupled shapes converge through a long shallow valley, so the matching
    // default allows far more iterations than the general-purpose one.
    OptimizeConfig opt = {.max_iters = 2000};
};

struct LandmarkMatchResult {
    Vec p0;             // matched initial momentum
    double loss = 0.0;  // |endpoint - target|^2 / chart dim
    int iterations = 0; // total over both stages
    bool converged = false;
    FlowResult flow;    // matched trajectory on the fine grid
};

// Shoot a Hamiltonian geodesic from configuration x1 so that time 1 lands on
// x2; seeded with p0 = (x2 - x1) / alpha.  On manifolds built by
// make_landmarks the loss gradient comes from an adjoint sweep of the stored
// integration stages, which costs a few plain shots per iteration; any other
// cometric manifold falls back to forward sensitivity seeds.
LandmarkMatchResult match_landmarks(const Manifold& M, const Vec& x1, const Vec& x2,
                                    const LandmarkMatchConfig& cfg = {});

// Sampled outlines used by the matching demos: "T" (block letter polygon)
// and "O" (ellipse), traversed counterclockwise from the bottom, n points at
// equal arc length, interleaved chart layout.
Vec shape_outline(const std::string& which, int n);

}  // namespace geomkit
