#pragma once
// Statistics on manifolds: intrinsic means, Brownian-motion sampling through
// stochastic development, and kernel density estimates of the resulting
// endpoint clouds on the sphere.

#include <cstdint>

#include "geomkit/frame_bundle.hpp"
#include "geomkit/geodesics.hpp"
#include "geomkit/manifold.hpp"

namespace geomkit {

struct FrechetConfig {
    OptimizeConfig outer;      // descent on the mean candidate
    OptimizeConfig inner;      // the per-sample shooting solves
    FlowConfig flow;
    // Replace the closed-form descent direction -2/n sum g Log with central
    // differences of the objective (slower; kept as a cross-check).
    bool fd_gradient = false;
    double fd_step = 1e-5;
};

struct FrechetResult {
    Vec mean;
    double value = 0.0;        // mean squared distance at the optimum
    double grad_norm = 0.0;    // gradient of the objective at the optimum
    int iterations = 0;
    bool converged = false;
};

// Minimizes F(x) = (1/n) sum_i d(x, y_i)^2 over the chart, with the distance
// realized by shooting; per-sample initial velocities are warm-started
// between outer iterations.
FrechetResult frechet_mean(const Manifold& M, const Matrix& samples, const Vec& x0,
                           const FrechetConfig& cfg = {});

enum class FrameMode {
    SigmaSqrt,     // frame = symmetric square root of the covariance
    SigmaColumns,  // frame columns = covariance columns, as given
};

// Endpoints of n_paths independent Brownian motions started at x0 with
// generator covariance Sigma, realized by stochastic development of
// Euclidean Brownian paths; one RNG stream per path index.
Matrix sample_brownian_endpoints(const Manifold& M, const Vec& x0, const Matrix& Sigma,
                                 int n_paths, int n_steps, double T, std::uint64_t seed,
                                 FrameMode mode = FrameMode::SigmaSqrt);

struct DensityGrid {
    Vec theta;       // colatitude cell centers, measured from the chart center
    Vec phi;         // longitude cell centers, [0, 2 pi)
    Matrix density;  // theta x phi, scaled to integrate to 1 over the grid
    double integral = 0.0;  // raw kernel mass the grid captured before scaling
};

// Gaussian kernel density estimate of chart-coordinate samples, evaluated on
// a latitude/longitude grid pushed through the chart (radius tan(theta/2))
// and embedded.  Surfaces in R^3 only; the kernel acts on ambient distances
// with per-kernel normalization 1 / (2 pi h^2), and the returned grid is
// rescaled so its surface-measure quadrature equals one.
DensityGrid density_grid(const Manifold& M, const Matrix& samples_chart, int n_theta,
                         int n_phi, double bandwidth);

}  // namespace geomkit
