#pragma once
// Differentiation of user-supplied maps.
//
// A SmoothMap is a pure function from jet vectors to jet vectors built from
// the elementary operations in jet.hpp.  Because it runs inside whatever
// algebra the caller seeds, one definition serves values, Jacobians, Hessians
// and third derivatives, and can be re-evaluated at jet-valued points when a
// surrounding computation is itself being differentiated.

#include <functional>
#include <vector>

#include "geomkit/jet.hpp"
#include "geomkit/linalg.hpp"

namespace geomkit {

struct SmoothMap {
    int domain_dim = 0;
    int codomain_dim = 0;
    std::function<std::vector<Jet>(const std::vector<Jet>&)> eval;
};

// Seed helpers: x as order-`order` variables, or as constants, of one algebra.
std::vector<Jet> seed_variables(const JetSpacePtr& sp, const Vec& x);
std::vector<Jet> seed_constants(const JetSpacePtr& sp, const Vec& x);

// Plain evaluation (order-0 jets under the hood).
Vec evaluate(const SmoothMap& f, const Vec& x);

// J(i,j) = d f_i / d x_j.
Matrix jacobian(const SmoothMap& f, const Vec& x);

// Full symmetric derivative tensor of the given order (1, 2 or 3); index
// layout (component, x_1.. x_order).  Entries are mixed partials, not Taylor
// coefficients.
Tensor higher_derivative(const SmoothMap& f, const Vec& x, int order);

// Gradient of a scalar jet program.  Anything expressible on jets works,
// including losses wrapped around the fixed-step integrators.
Vec gradient(const std::function<Jet(const std::vector<Jet>&)>& f, const Vec& x);

}  // namespace geomkit
