#include "geomkit/autodiff.hpp"

#include <stdexcept>

namespace geomkit {

std::vector<Jet> seed_variables(const JetSpacePtr& sp, const Vec& x) {
    if (sp->n_vars() != static_cast<int>(x.size()))
        throw std::invalid_argument("seed_variables: algebra has wrong variable count");
    std::vector<Jet> out;
    out.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out.push_back(Jet::variable(sp, static_cast<int>(i), x[i]));
    return out;
}

std::vector<Jet> seed_constants(const JetSpacePtr& sp, const Vec& x) {
    std::vector<Jet> out;
    out.reserve(x.size());
    for (double v : x) out.push_back(Jet::constant(sp, v));
    return out;
}

static void check_arity(const SmoothMap& f, const Vec& x) {
    if (static_cast<int>(x.size()) != f.domain_dim)
        throw std::invalid_argument("SmoothMap: input dimension mismatch");
}

Vec evaluate(const SmoothMap& f, const Vec& x) {
    check_arity(f, x);
    auto sp = JetSpace::get(0, 0);
    auto out = f.eval(seed_constants(sp, x));
    if (static_cast<int>(out.size()) != f.codomain_dim)
        throw std::invalid_argument("SmoothMap: output dimension mismatch");
    Vec r(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) r[i] = out[i].value();
    return r;
}

Matrix jacobian(const SmoothMap& f, const Vec& x) {
    check_arity(f, x);
    auto sp = JetSpace::get(f.domain_dim, 1);
    auto out = f.eval(seed_variables(sp, x));
    Matrix J(f.codomain_dim, f.domain_dim);
    for (int i = 0; i < f.codomain_dim; ++i)
        for (int j = 0; j < f.domain_dim; ++j) J(i, j) = out[i].coeff(1 + j);
    return J;
}

Tensor higher_derivative(const SmoothMap& f, const Vec& x, int order) {
    if (order < 1 || order > 3)
        throw std::invalid_argument("higher_derivative: order must be 1, 2 or 3");
    check_arity(f, x);
    const int d = f.domain_dim;
    auto sp = JetSpace::get(d, order);
    auto out = f.eval(seed_variables(sp, x));

    std::vector<int> shape(static_cast<std::size_t>(order) + 1, d);
    shape[0] = f.codomain_dim;
    Tensor T(shape);

    std::vector<int> idx(order, 0);
    std::vector<std::uint16_t> mono(order);
    std::vector<int> full(order + 1, 0);
    while (true) {
        for (int k = 0; k < order; ++k) mono[k] = static_cast<std::uint16_t>(idx[k]);
        std::sort(mono.begin(), mono.end());
        // Taylor coefficient -> mixed partial: multiply by the factorial of
        // each variable's multiplicity.
        double fact = 1.0;
        int run = 1;
        for (int k = 1; k < order; ++k) {
            run = (mono[k] == mono[k - 1]) ? run + 1 : 1;
            fact *= run;
        }
        const int cidx = sp->rank_of(mono);
        for (int c = 0; c < f.codomain_dim; ++c) {
            full[0] = c;
            for (int k = 0; k < order; ++k) full[k + 1] = idx[k];
            T.a[T.offset(full)] = out[c].coeff(cidx) * fact;
        }
        int k = order - 1;
        while (k >= 0 && ++idx[k] == d) idx[k--] = 0;
        if (k < 0) break;
    }
    return T;
}

Vec gradient(const std::function<Jet(const std::vector<Jet>&)>& f, const Vec& x) {
    auto sp = JetSpace::get(static_cast<int>(x.size()), 1);
    Jet out = f(seed_variables(sp, x));
    Vec g(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) g[j] = out.coeff(1 + static_cast<int>(j));
    return g;
}

}  // namespace geomkit
