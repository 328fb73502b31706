#pragma once
// The bundle of linear frames over a manifold: horizontal lifts, the induced
// sub-Riemannian structure on bundle momenta, curvature read through a
// frame, rolling (development) of Euclidean curves, and probable-path
// estimation for anisotropic diffusions started at a frame.
//
// A bundle point is (x, nu): chart position plus a frame whose r columns are
// tangent vectors.  Flattened layout: x first, then nu column by column, so
// component d + alpha*d + k is row k of frame column alpha.  Curves that
// stay horizontal keep each frame column parallel, which is what ties the
// bundle flows to parallel transport and makes development invertible.

#include "geomkit/geodesics.hpp"
#include "geomkit/manifold.hpp"
#include "geomkit/optimize.hpp"

namespace geomkit {

struct FramePoint {
    Vec x;
    Matrix nu;  // dim x r
};

Vec flatten_frame(const FramePoint& u);
FramePoint unflatten_frame(int d, int r, const Vec& flat);
// Throws when the frame columns are linearly dependent.
void check_frame(const Manifold& M, const FramePoint& u);

// Columns are the r horizontal basis fields at u, as flattened bundle
// tangents (D = d + d*r rows).
Matrix horizontal_basis(const Manifold& M, const FramePoint& u);

// The bundle cometric sum_i H_i H_i', written in closed block form.
Matrix sub_riemannian_cometric(const Manifold& M, const FramePoint& u);

// Hamiltonian field of H(u, p) = p' (sub-Riemannian cometric) p / 2 on
// flattened (u, p) states.  Plain states only: the bundle field consumes
// three derivatives of the defining map, so there is no headroom to carry
// sensitivity coefficients through it.
OdeField frame_hamiltonian_field(const Manifold& M, int r);

struct FrameFlowResult {
    Trajectory path;     // flattened (x, nu) per step
    Matrix momenta;      // p per step
    Vec hamiltonian;     // conserved along the flow
};

FrameFlowResult frame_hamiltonian_flow(const Manifold& M, const FramePoint& u0,
                                       const Vec& p0, const FlowConfig& cfg = {});

// Curvature of the connection read through a full frame (r = dim):
// entry (i, j, m, k) is component m of nu^-1 R(d_i, d_j) nu e_k.
Tensor curvature_form(const Manifold& M, const FramePoint& u);

// Rolls a Euclidean curve given by its increments (one row per step, r
// columns) onto the manifold; Euler-Heun stepping on the horizontal fields.
// Times are k/n on [0, 1].
Trajectory develop(const Manifold& M, const FramePoint& u0, const Matrix& increments);

// Stochastic development: dU = H(U)(drift dt + dW) in the Stratonovich
// sense.  drift defaults to zero; dW has one row per step.
Trajectory stochastic_develop(const Manifold& M, const FramePoint& u0, const Matrix& dW,
                              double dt, const Vec& drift = {});

struct MppConfig {
    FlowConfig flow;
    OptimizeConfig opt;
    double fd_step = 1e-6;  // central-difference step for the shooting gradient
    // Mean squared endpoint miss; 1e-9 keeps the chart-distance miss below
    // 1e-4 for any desk-scale dimension.
    double loss_tol = 1e-9;
};

struct MppResult {
    Vec v;        // driving (frame) coordinates of the initial momentum
    double loss = 0.0;
    int iterations = 0;
    bool converged = false;
    FrameFlowResult flow;
};

// Most probable endpoint path of the frame-driven diffusion: shoots the
// bundle Hamiltonian flow from (u0, p0(v)) with p_x = (nu nu')^-1 nu v and
// p_nu = 0, minimizing the endpoint miss to y.  Needs a full frame.
MppResult most_probable_path(const Manifold& M, const FramePoint& u0, const Vec& y,
                             const MppConfig& cfg = {});

// Path-density integrand -|v|^2_g/2 + scalar curvature/12 at every node of a
// sampled curve, and its trapezoid integral in time.
Vec om_integrand(const Manifold& M, const Trajectory& xs, const Matrix& vel);
double om_functional(const Manifold& M, const Trajectory& xs, const Matrix& vel);

}  // namespace geomkit
