#include "geomkit/manifold.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "geomkit/landmarks.hpp"

namespace geomkit {

Manifold make_embedded_manifold(int dim, int ambient_dim, SmoothMap F, std::string name) {
    Manifold M;
    M.dim = dim;
    M.ambient_dim = ambient_dim;
    M.mode = ManifoldMode::Embedding;
    M.map = std::move(F);
    M.name = std::move(name);
    return M;
}

Manifold make_metric_manifold(int dim, SmoothMap g_entries, std::string name) {
    Manifold M;
    M.dim = dim;
    M.mode = ManifoldMode::Metric;
    M.map = std::move(g_entries);
    M.name = std::move(name);
    return M;
}

Manifold make_cometric_manifold(int dim, SmoothMap cog_entries, std::string name) {
    Manifold M;
    M.dim = dim;
    M.mode = ManifoldMode::Cometric;
    M.map = std::move(cog_entries);
    M.name = std::move(name);
    return M;
}

Manifold make_euclidean(int d) {
    SmoothMap F;
    F.domain_dim = d;
    F.codomain_dim = d;
    F.eval = [](const std::vector<Jet>& x) { return x; };
    return make_embedded_manifold(d, d, std::move(F), "euclidean:" + std::to_string(d));
}

namespace {

// Stereographic-type chart of the unit sphere, scaled per axis for
// ellipsoids: (x, y) -> (a 2x, b 2y, c (x^2 + y^2 - 1)) / (1 + x^2 + y^2).
std::vector<Jet> scaled_sphere_chart(const std::vector<Jet>& x, double a, double b, double c) {
    const Jet r2 = x[0] * x[0] + x[1] * x[1];
    const Jet denom = 1.0 + r2;
    std::vector<Jet> out;
    out.reserve(3);
    out.push_back(a * 2.0 * x[0] / denom);
    out.push_back(b * 2.0 * x[1] / denom);
    out.push_back(c * (r2 - 1.0) / denom);
    return out;
}

}  // namespace

Manifold make_sphere_stereographic() {
    SmoothMap F;
    F.domain_dim = 2;
    F.codomain_dim = 3;
    F.eval = [](const std::vector<Jet>& x) { return scaled_sphere_chart(x, 1.0, 1.0, 1.0); };
    return make_embedded_manifold(2, 3, std::move(F), "sphere-stereographic");
}

Manifold make_ellipsoid(double a, double b, double c) {
    if (a <= 0 || b <= 0 || c <= 0)
        throw std::invalid_argument("make_ellipsoid: semi-axes must be positive");
    SmoothMap F;
    F.domain_dim = 2;
    F.codomain_dim = 3;
    F.eval = [a, b, c](const std::vector<Jet>& x) { return scaled_sphere_chart(x, a, b, c); };
    std::ostringstream name;
    name << "ellipsoid:" << a << "," << b << "," << c;
    return make_embedded_manifold(2, 3, std::move(F), name.str());
}

Manifold make_manifold(const std::string& id) {
    const auto colon = id.find(':');
    const std::string head = id.substr(0, colon);
    std::vector<double> args;
    if (colon != std::string::npos) {
        std::stringstream ss(id.substr(colon + 1));
        std::string tok;
        while (std::getline(ss, tok, ','))
            args.push_back(std::stod(tok));
    }
    if (head == "sphere-stereographic") {
        if (!args.empty()) throw std::invalid_argument("sphere-stereographic takes no parameters");
        return make_sphere_stereographic();
    }
    if (head == "euclidean") {
        if (args.size() != 1) throw std::invalid_argument("expected euclidean:<dim>");
        return make_euclidean(static_cast<int>(args[0]));
    }
    if (head == "ellipsoid") {
        if (args.size() != 3) throw std::invalid_argument("expected ellipsoid:<a>,<b>,<c>");
        return make_ellipsoid(args[0], args[1], args[2]);
    }
    if (head == "landmarks") {
        if (args.size() != 3) throw std::invalid_argument("expected landmarks:<n>,<sigma>,<alpha>");
        return make_landmarks(static_cast<int>(args[0]), args[1], args[2]);
    }
    throw std::invalid_argument("unknown manifold id: " + id);
}

bool chart_ok(const Manifold& M, const Vec& x) {
    return !M.chart_valid || M.chart_valid(x);
}

// --- jet-level engine -----------------------------------------------------

std::vector<Jet> metric_entry_jets(const Manifold& M, const std::vector<Jet>& xseeds,
                                   int delta0) {
    const int d = M.dim;
    if (static_cast<int>(xseeds.size()) != d)
        throw std::invalid_argument("metric_entry_jets: wrong seed count");
    switch (M.mode) {
        case ManifoldMode::Embedding: {
            const auto F = M.map.eval(xseeds);
            // dF columns as formal partials with respect to the seed block.
            std::vector<Jet> dF;
            dF.reserve(static_cast<std::size_t>(M.ambient_dim) * d);
            for (int a = 0; a < M.ambient_dim; ++a)
                for (int i = 0; i < d; ++i)
                    dF.push_back(formal_derivative(F[a], delta0 + i));
            std::vector<Jet> g;
            g.reserve(static_cast<std::size_t>(d) * d);
            const auto sp = xseeds[0].space();
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    Jet acc = Jet::constant(sp, 0.0);
                    for (int a = 0; a < M.ambient_dim; ++a)
                        acc += dF[static_cast<std::size_t>(a) * d + i] *
                               dF[static_cast<std::size_t>(a) * d + j];
                    g.push_back(std::move(acc));
                }
            return g;
        }
        case ManifoldMode::Metric:
            return M.map.eval(xseeds);
        case ManifoldMode::Cometric: {
            auto cog = M.map.eval(xseeds);
            return lu_invert_ring<Jet>(d, std::move(cog),
                                       Jet::constant(xseeds[0].space(), 1.0));
        }
    }
    throw std::logic_error("metric_entry_jets: bad mode");
}

std::vector<Jet> cometric_entry_jets(const Manifold& M, const std::vector<Jet>& xseeds,
                                     int delta0) {
    if (M.mode == ManifoldMode::Cometric) return M.map.eval(xseeds);
    auto g = metric_entry_jets(M, xseeds, delta0);
    return lu_invert_ring<Jet>(M.dim, std::move(g),
                               Jet::constant(xseeds[0].space(), 1.0));
}

std::vector<Jet> christoffel_jets(const Manifold& M, const std::vector<Jet>& xseeds,
                                  int delta0) {
    const int d = M.dim;
    auto g = metric_entry_jets(M, xseeds, delta0);
    auto ginv = lu_invert_ring<Jet>(d, g, Jet::constant(xseeds[0].space(), 1.0));

    // dg[l][i][j] = d_l g_ij
    std::vector<Jet> dg;
    dg.reserve(static_cast<std::size_t>(d) * d * d);
    for (int l = 0; l < d; ++l)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                dg.push_back(formal_derivative(g[static_cast<std::size_t>(i) * d + j],
                                               delta0 + l));
    auto DG = [&](int l, int i, int j) -> const Jet& {
        return dg[(static_cast<std::size_t>(l) * d + i) * d + j];
    };

    // Gamma^k_ij = g*^kl (d_i g_jl + d_j g_il - d_l g_ij) / 2
    std::vector<Jet> gamma;
    gamma.reserve(static_cast<std::size_t>(d) * d * d);
    const auto sp = xseeds[0].space();
    for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                Jet acc = Jet::constant(sp, 0.0);
                for (int l = 0; l < d; ++l)
                    acc += ginv[static_cast<std::size_t>(k) * d + l] *
                           (DG(i, j, l) + DG(j, i, l) - DG(l, i, j));
                acc *= 0.5;
                gamma.push_back(std::move(acc));
            }
    return gamma;
}

std::vector<Jet> chart_seeds_from_state(const State& s, int comp0, int d, int order) {
    const int m = s.ncoeff - 1;
    const auto sp = JetSpace::get(m + d, order);
    std::vector<Jet> seeds;
    seeds.reserve(d);
    for (int i = 0; i < d; ++i) {
        const double* row = s.row(comp0 + i);
        Jet j(sp, row[0]);
        for (int e = 0; e < m; ++e) j.coeff(1 + e) = row[1 + e];
        j.coeff(1 + m + i) += 1.0;
        seeds.push_back(std::move(j));
    }
    return seeds;
}

void extract_state_row(const Jet& j, std::span<const std::uint16_t> delta_pattern,
                       int m, double* row) {
    const auto& sp = *j.space();
    const int base = sp.rank_of(delta_pattern);
    if (base < 0) throw std::invalid_argument("extract_state_row: pattern not in algebra");
    row[0] = j.coeff(base);
    std::vector<std::uint16_t> idx(delta_pattern.size() + 1);
    for (int e = 0; e < m; ++e) {
        idx.assign(delta_pattern.begin(), delta_pattern.end());
        idx.push_back(static_cast<std::uint16_t>(e));
        std::sort(idx.begin(), idx.end());
        const int r = sp.rank_of(idx);
        if (r < 0) throw std::invalid_argument("extract_state_row: algebra order too low");
        row[1 + e] = j.coeff(r);
    }
}

JetSpacePtr outer_space_for(const State& s) {
    const int m = s.ncoeff - 1;
    return JetSpace::get(m, m > 0 ? 1 : 0);
}

Jet extract_outer_jet(const JetSpacePtr& outer_sp, const Jet& j,
                      std::span<const std::uint16_t> delta_pattern, int m) {
    Jet out(outer_sp, 0.0);
    std::vector<double> row(static_cast<std::size_t>(m) + 1);
    extract_state_row(j, delta_pattern, m, row.data());
    for (int k = 0; k <= m; ++k) out.coeff(k) = row[k];
    return out;
}

Jet outer_jet_from_row(const JetSpacePtr& outer_sp, const double* row) {
    Jet j(outer_sp, row[0]);
    for (int k = 1; k < outer_sp->size(); ++k) j.coeff(k) = row[k];
    return j;
}

void write_outer_jet(const Jet& j, double* row) {
    for (int k = 0; k < j.size(); ++k) row[k] = j.coeff(k);
}

// --- pointwise quantities -------------------------------------------------

Vec embed(const Manifold& M, const Vec& x) {
    if (M.mode != ManifoldMode::Embedding)
        throw std::invalid_argument("embed: manifold has no embedding");
    return evaluate(M.map, x);
}

Matrix embedding_jacobian(const Manifold& M, const Vec& x) {
    if (M.mode != ManifoldMode::Embedding)
        throw std::invalid_argument("embedding_jacobian: manifold has no embedding");
    return jacobian(M.map, x);
}

namespace {

Matrix entries_to_matrix(const std::vector<Jet>& jets, int d) {
    Matrix m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = jets[static_cast<std::size_t>(i) * d + j].value();
    return m;
}

}  // namespace

Matrix metric(const Manifold& M, const Vec& x) {
    const auto sp = JetSpace::get(M.dim, 1);
    return entries_to_matrix(metric_entry_jets(M, seed_variables(sp, x), 0), M.dim);
}

Matrix cometric(const Manifold& M, const Vec& x) {
    const auto sp = JetSpace::get(M.dim, 1);
    return entries_to_matrix(cometric_entry_jets(M, seed_variables(sp, x), 0), M.dim);
}

Tensor christoffel(const Manifold& M, const Vec& x) {
    const int d = M.dim;
    const auto sp = JetSpace::get(d, 2);
    const auto jets = christoffel_jets(M, seed_variables(sp, x), 0);
    Tensor T({d, d, d});
    for (std::size_t n = 0; n < jets.size(); ++n) T.a[n] = jets[n].value();
    return T;
}

Tensor riemann(const Manifold& M, const Vec& x) {
    const int d = M.dim;
    const auto sp = JetSpace::get(d, 3);
    const auto gj = christoffel_jets(M, seed_variables(sp, x), 0);
    auto G = [&](int k, int i, int j) { return gj[(static_cast<std::size_t>(k) * d + i) * d + j].value(); };
    // dG(l, k, i, j) = d_l Gamma^k_ij
    auto dG = [&](int l, int k, int i, int j) {
        std::uint16_t v = static_cast<std::uint16_t>(l);
        return gj[(static_cast<std::size_t>(k) * d + i) * d + j].coeff(
            sp->rank_of(std::span<const std::uint16_t>(&v, 1)));
    };
    Tensor R({d, d, d, d});
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k)
                for (int m = 0; m < d; ++m) {
                    double acc = dG(i, m, j, k) - dG(j, m, i, k);
                    for (int l = 0; l < d; ++l)
                        acc += G(l, j, k) * G(m, i, l) - G(l, i, k) * G(m, j, l);
                    R.at({i, j, k, m}) = acc;
                }
    return R;
}

Matrix ricci(const Manifold& M, const Vec& x) {
    const auto R = riemann(M, x);
    const int d = M.dim;
    Matrix r(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k) acc += R.at({k, i, j, k});
            r(i, j) = acc;
        }
    return r;
}

double scalar_curvature(const Manifold& M, const Vec& x) {
    const auto r = ricci(M, x);
    const auto gi = cometric(M, x);
    double acc = 0.0;
    for (int i = 0; i < M.dim; ++i)
        for (int j = 0; j < M.dim; ++j) acc += gi(i, j) * r(i, j);
    return acc;
}

double sectional_curvature(const Manifold& M, const Vec& x, const Vec& e1, const Vec& e2) {
    const auto R = riemann(M, x);
    const auto g = metric(M, x);
    const int d = M.dim;
    // <R(e1,e2)e2, e1> with the last index lowered through g.
    double num = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k)
                for (int m = 0; m < d; ++m)
                    for (int l = 0; l < d; ++l)
                        num += R.at({i, j, k, m}) * e1[i] * e2[j] * e2[k] * g(m, l) * e1[l];
    const auto gv1 = matvec(g, e1);
    const auto gv2 = matvec(g, e2);
    const double n11 = dot(e1, gv1), n22 = dot(e2, gv2), n12 = dot(e1, gv2);
    const double denom = n11 * n22 - n12 * n12;
    if (denom <= 0.0)
        throw NumericalError("sectional_curvature: degenerate plane spanned by e1, e2");
    return num / denom;
}

Vec flat(const Manifold& M, const Vec& x, const Vec& v) { return matvec(metric(M, x), v); }
Vec sharp(const Manifold& M, const Vec& x, const Vec& p) { return matvec(cometric(M, x), p); }

double metric_norm(const Manifold& M, const Vec& x, const Vec& v) {
    return std::sqrt(dot(v, matvec(metric(M, x), v)));
}

double hamiltonian_value(const Manifold& M, const Vec& x, const Vec& p) {
    return 0.5 * dot(p, matvec(cometric(M, x), p));
}

}  // namespace geomkit
