#pragma once
// The rotation group and its algebra: hat/vee isomorphism, brackets,
// adjoint and coadjoint actions, rigid-body (Euler-Poincare) dynamics with
// reconstruction, and Brownian motion on the group.
//
// Group elements are 3x3 matrices; algebra elements travel either as
// antisymmetric matrices or as R^3 vectors through hat/vee.  Structure
// constants are computed from the bracket rather than hardcoded, and the
// coadjoint is derived from them through the duality pairing, so the
// momentum dynamics follow from the bracket alone.

#include <cstdint>
#include <vector>

#include "geomkit/integrate.hpp"
#include "geomkit/linalg.hpp"

namespace geomkit {

Matrix so3_hat(const Vec& v);
Vec so3_vee(const Matrix& m);
Matrix lie_bracket(const Matrix& a, const Matrix& b);  // ab - ba

// C(i, j, k) = component i of vee([hat e_j, hat e_k]).
Tensor so3_structure_constants();

// Group translations and the differential of left translation.  dL(g, .)
// carries tangent matrices at e to tangent matrices at g (and, with g^-1,
// back again), which is how algebra-level data moves around the group.
Matrix translate_left(const Matrix& a, const Matrix& g);   // a g
Matrix translate_right(const Matrix& a, const Matrix& g);  // g a
Matrix dL(const Matrix& g, const Matrix& v);               // g v

// Left-invariant metric generated by A: pulls both tangents back to the
// identity by dL(g^-1), reads them as vectors through vee, and pairs them
// as v' A w.  Invariance under left translation is then automatic.
double invariant_metric(const Matrix& g, const Matrix& v, const Matrix& w,
                        const Matrix& A);

Vec so3_ad(const Vec& xi, const Vec& eta);      // vee([hat xi, hat eta])
Vec so3_Ad(const Matrix& g, const Vec& xi);     // vee(g hat(xi) g^-1)
// Coadjoint action on momenta, defined by <coad(xi, mu), eta> = <mu, ad(xi, eta)>.
Vec so3_coad(const Vec& xi, const Vec& mu);

Matrix so3_exp(const Vec& v);                   // Rodrigues formula
// Nearest rotation in the polar sense: g (g' g)^(-1/2).
Matrix polar_project(const Matrix& g);

// Rigid-body momentum dynamics d mu = coad(inertia^-1 mu, mu) with the
// body velocity xi = inertia^-1 mu recorded alongside.
struct EulerPoincareResult {
    Trajectory momentum;   // mu at every node
    Matrix velocity;       // xi at every node
    Vec momentum_norm;     // |mu|, conserved
    Vec energy;            // <mu, xi> / 2, conserved
};

EulerPoincareResult euler_poincare(const Matrix& inertia, const Vec& mu0, int n_steps,
                                   double T, OdeScheme scheme = OdeScheme::RK4);

// Reconstructs the group path from a body velocity curve: dg = g hat(xi(t)),
// xi sampled on the uniform grid (midpoints by linear interpolation).
std::vector<Matrix> reconstruct_rotation(const Matrix& g0, const Matrix& xi_path,
                                         double T);

// Brownian motion on the group via the Euler-Heun scheme on the flattened
// matrix: dg = g hat(drift) dt + g hat(dW), with the drift assembled from
// the structure constants (identically zero here, but computed, not assumed).
// reproject snaps each step back to the rotation manifold; off by default so
// the raw scheme's orthogonality drift stays observable.  The first form
// takes the driving increments directly (one row per step, 3 columns); the
// seeded form draws them from a single RNG stream.
std::vector<Matrix> so3_brownian(const Matrix& g0, const Matrix& dW, double dt,
                                 bool reproject = false);
std::vector<Matrix> so3_brownian(const Matrix& g0, std::uint64_t seed, int n_steps,
                                 double dt, bool reproject = false);

}  // namespace geomkit
