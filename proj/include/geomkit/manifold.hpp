#pragma once
// Manifolds in a single chart, specified by one smooth map.
//
// Three specification modes:
//   Embedding: a map F from chart coordinates into R^m; the metric is the
//              pullback dF^T dF of the ambient Euclidean metric.
//   Metric:    the metric entries g_ij(x) directly.
//   Cometric:  the inverse-metric entries g*^ij(x) directly (the natural form
//              for kernel-induced geometries such as landmark spaces).
// Every derived quantity (Christoffel symbols, curvature tensors, geodesic
// and Hamiltonian fields) is obtained by evaluating the defining map on
// seeded jets and assembling the standard index formulas; nothing is
// differentiated by hand or by finite differences.

#include <functional>
#include <string>

#include "geomkit/autodiff.hpp"
#include "geomkit/integrate.hpp"
#include "geomkit/linalg.hpp"

namespace geomkit {

enum class ManifoldMode { Embedding, Metric, Cometric };

struct Manifold {
    int dim = 0;
    int ambient_dim = 0;  // meaningful in Embedding mode
    ManifoldMode mode = ManifoldMode::Embedding;
    SmoothMap map;
    // Optional chart-validity predicate; flows report the step at which it
    // first fails.  Null means the chart covers all of R^dim.
    std::function<bool(const Vec&)> chart_valid;
    // Optional specialized geodesic Hamiltonian field on (x, p) states.  Set
    // for kernel manifolds where the generic jet assembly would be slow; must
    // agree with the generic field (tested).
    OdeField hamiltonian_field;
    std::string name;
};

// Built-in charts.  make_manifold parses the command-line identifiers
// "euclidean:<d>", "sphere-stereographic", "ellipsoid:<a>,<b>,<c>" and
// "landmarks:<n>,<sigma>,<alpha>".
Manifold make_euclidean(int d);
Manifold make_sphere_stereographic();
Manifold make_ellipsoid(double a, double b, double c);
Manifold make_manifold(const std::string& id);

Manifold make_embedded_manifold(int dim, int ambient_dim, SmoothMap F, std::string name);
Manifold make_metric_manifold(int dim, SmoothMap g_entries, std::string name);
Manifold make_cometric_manifold(int dim, SmoothMap cog_entries, std::string name);

// --- pointwise geometry ---------------------------------------------------

Vec embed(const Manifold& M, const Vec& x);           // Embedding mode only
Matrix embedding_jacobian(const Manifold& M, const Vec& x);
Matrix metric(const Manifold& M, const Vec& x);
Matrix cometric(const Manifold& M, const Vec& x);
// Gamma^k_ij with layout (k, i, j); symmetric in (i, j).
Tensor christoffel(const Manifold& M, const Vec& x);
// R_{ijk}^m with layout (i, j, k, m):
//   R = Gamma^l_jk Gamma^m_il - Gamma^l_ik Gamma^m_jl
//       + d_i Gamma^m_jk - d_j Gamma^m_ik.
Tensor riemann(const Manifold& M, const Vec& x);
Matrix ricci(const Manifold& M, const Vec& x);        // R_ij = R_{kij}^k
double scalar_curvature(const Manifold& M, const Vec& x);
// kappa(e1,e2) = <R(e1,e2)e2, e1> / (|e1|^2 |e2|^2 - <e1,e2>^2).
double sectional_curvature(const Manifold& M, const Vec& x, const Vec& e1, const Vec& e2);
Vec flat(const Manifold& M, const Vec& x, const Vec& v);   // v -> g v
Vec sharp(const Manifold& M, const Vec& x, const Vec& p);  // p -> g* p
double metric_norm(const Manifold& M, const Vec& x, const Vec& v);
double hamiltonian_value(const Manifold& M, const Vec& x, const Vec& p);  // p' g* p / 2
bool chart_ok(const Manifold& M, const Vec& x);

// --- jet-level geometry ---------------------------------------------------
// These run in whatever algebra the seeds live in.  Convention: the caller's
// algebra has m "outer" variables first (sensitivities carried by a state)
// and the chart-partial seeds delta_i at positions delta0 .. delta0+dim-1.
// Validity of the returned coefficients follows from the algebra order: the
// metric consumes one derivative of the defining map, the Christoffel
// symbols two.

std::vector<Jet> metric_entry_jets(const Manifold& M, const std::vector<Jet>& xseeds,
                                   int delta0);
std::vector<Jet> cometric_entry_jets(const Manifold& M, const std::vector<Jet>& xseeds,
                                     int delta0);
// Layout (k, i, j) flattened row-major, as in christoffel().
std::vector<Jet> christoffel_jets(const Manifold& M, const std::vector<Jet>& xseeds,
                                  int delta0);

// Chart seeds built from a state slice: components comp0 .. comp0+d-1 of s
// supply values and m = s.ncoeff-1 outer coefficients; fresh partial seeds
// occupy the last d variables of an (m + d)-variable algebra of the given
// order.
std::vector<Jet> chart_seeds_from_state(const State& s, int comp0, int d, int order);

// Reads one coefficient pattern of a combined-algebra jet back into a state
// row: row[0] = coefficient at delta_pattern, row[1+e] = coefficient at
// delta_pattern * eps_e.  delta_pattern holds absolute variable ids.
void extract_state_row(const Jet& j, std::span<const std::uint16_t> delta_pattern,
                       int m, double* row);

// Same extraction, but packaged as a jet of the m-variable outer algebra
// (order min(1, m)); plain runs give constants.
Jet extract_outer_jet(const JetSpacePtr& outer_sp, const Jet& j,
                      std::span<const std::uint16_t> delta_pattern, int m);

// The outer algebra for a state: JetSpace(m, 1) when sensitivities are
// carried, the trivial algebra otherwise.
JetSpacePtr outer_space_for(const State& s);
Jet outer_jet_from_row(const JetSpacePtr& outer_sp, const double* row);
void write_outer_jet(const Jet& j, double* row);

}  // namespace geomkit
