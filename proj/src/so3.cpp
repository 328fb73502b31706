#include "geomkit/so3.hpp"

#include <cmath>

#include "geomkit/random.hpp"

namespace geomkit {

Matrix so3_hat(const Vec& v) {
    if (v.size() != 3) throw std::invalid_argument("so3_hat: need a 3-vector");
    Matrix m(3, 3);
    m(0, 1) = -v[2]; m(0, 2) = v[1];
    m(1, 0) = v[2];  m(1, 2) = -v[0];
    m(2, 0) = -v[1]; m(2, 1) = v[0];
    return m;
}

Vec so3_vee(const Matrix& m) {
    if (m.rows != 3 || m.cols != 3) throw std::invalid_argument("so3_vee: need 3x3");
    return {m(2, 1), m(0, 2), m(1, 0)};
}

Matrix lie_bracket(const Matrix& a, const Matrix& b) {
    return matmul(a, b) - matmul(b, a);
}

Tensor so3_structure_constants() {
    Tensor c(std::vector<int>{3, 3, 3});
    for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
            Vec ej(3, 0.0), ek(3, 0.0);
            ej[j] = 1.0;
            ek[k] = 1.0;
            Vec br = so3_vee(lie_bracket(so3_hat(ej), so3_hat(ek)));
            for (int i = 0; i < 3; ++i) c.at({i, j, k}) = br[i];
        }
    return c;
}

Matrix translate_left(const Matrix& a, const Matrix& g) { return matmul(a, g); }

Matrix translate_right(const Matrix& a, const Matrix& g) { return matmul(g, a); }

Matrix dL(const Matrix& g, const Matrix& v) { return matmul(g, v); }

double invariant_metric(const Matrix& g, const Matrix& v, const Matrix& w,
                        const Matrix& A) {
    const Matrix ginv = invert(g);
    Vec vb = so3_vee(dL(ginv, v));
    Vec wb = so3_vee(dL(ginv, w));
    return dot(vb, matvec(A, wb));
}

Vec so3_ad(const Vec& xi, const Vec& eta) {
    return so3_vee(lie_bracket(so3_hat(xi), so3_hat(eta)));
}

Vec so3_Ad(const Matrix& g, const Vec& xi) {
    return so3_vee(matmul(matmul(g, so3_hat(xi)), invert(g)));
}

Vec so3_coad(const Vec& xi, const Vec& mu) {
    // <coad(xi, mu), eta> = <mu, ad(xi, eta)> = mu_i C(i, j, k) xi_j eta_k,
    // so coad(xi, mu)_k contracts the structure tensor with mu and xi.
    static const Tensor c = so3_structure_constants();
    Tensor mu_t(std::vector<int>{3}), xi_t(std::vector<int>{3});
    mu_t.a = mu;
    xi_t.a = xi;
    Tensor r = contract(contract(mu_t, c, {{0, 0}}), xi_t, {{0, 0}});
    return r.a;
}

Matrix so3_exp(const Vec& v) {
    const double th = std::sqrt(dot(v, v));
    const Matrix k = so3_hat(v);
    const Matrix k2 = matmul(k, k);
    // sin(th)/th and (1-cos th)/th^2 with series fallbacks near zero
    double a, b;
    if (th < 1e-8) {
        a = 1.0 - th * th / 6.0;
        b = 0.5 - th * th / 24.0;
    } else {
        a = std::sin(th) / th;
        b = (1.0 - std::cos(th)) / (th * th);
    }
    Matrix r = Matrix::identity(3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) += a * k(i, j) + b * k2(i, j);
    return r;
}

Matrix polar_project(const Matrix& g) {
    // g (g' g)^(-1/2), the orthogonal factor of the polar decomposition
    Matrix gtg = matmul(transpose(g), g);
    Matrix root = sym_sqrt(gtg);
    return matmul(g, invert(root));
}

EulerPoincareResult euler_poincare(const Matrix& inertia, const Vec& mu0, int n_steps,
                                   double T, OdeScheme scheme) {
    if (inertia.rows != 3 || inertia.cols != 3)
        throw std::invalid_argument("euler_poincare: inertia must be 3x3");

    OdeField f = [&inertia](double, const State& s, State& out) {
        Vec mu = s.values();
        Vec xi = solve(inertia, mu);
        Vec dmu = so3_coad(xi, mu);
        for (int c = 0; c < 3; ++c) out.row(c)[0] = dmu[c];
    };
    Trajectory mu_path = integrate_ode(f, mu0, n_steps, T, scheme);

    EulerPoincareResult res;
    res.momentum = mu_path;
    res.velocity = Matrix(mu_path.n_states(), 3);
    res.momentum_norm.resize(mu_path.n_states());
    res.energy.resize(mu_path.n_states());
    for (int k = 0; k < mu_path.n_states(); ++k) {
        Vec mu = mu_path.state(k);
        Vec xi = solve(inertia, mu);
        for (int c = 0; c < 3; ++c) res.velocity(k, c) = xi[c];
        res.momentum_norm[k] = std::sqrt(dot(mu, mu));
        res.energy[k] = 0.5 * dot(mu, xi);
    }
    return res;
}

std::vector<Matrix> reconstruct_rotation(const Matrix& g0, const Matrix& xi_path,
                                         double T) {
    if (g0.rows != 3 || g0.cols != 3 || xi_path.cols != 3)
        throw std::invalid_argument("reconstruct_rotation: bad shapes");
    const int n = xi_path.rows - 1;
    if (n < 1) throw std::invalid_argument("reconstruct_rotation: need at least one step");
    const double h = T / n;

    auto rhs = [](const Matrix& g, const Vec& xi) { return matmul(g, so3_hat(xi)); };
    auto blend = [&](int k, double w) {
        Vec xi(3);
        for (int c = 0; c < 3; ++c)
            xi[c] = (1.0 - w) * xi_path(k, c) + w * xi_path(k + 1, c);
        return xi;
    };

    std::vector<Matrix> out;
    out.reserve(n + 1);
    out.push_back(g0);
    Matrix g = g0;
    for (int k = 0; k < n; ++k) {
        Vec xi0 = blend(k, 0.0), xim = blend(k, 0.5), xi1 = blend(k, 1.0);
        Matrix k1 = rhs(g, xi0);
        Matrix k2 = rhs(g + 0.5 * h * k1, xim);
        Matrix k3 = rhs(g + 0.5 * h * k2, xim);
        Matrix k4 = rhs(g + h * k3, xi1);
        g = g + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + 1.0 * k4);
        out.push_back(g);
    }
    return out;
}

std::vector<Matrix> so3_brownian(const Matrix& g0, const Matrix& dW, double dt,
                                 bool reproject) {
    if (g0.rows != 3 || g0.cols != 3)
        throw std::invalid_argument("so3_brownian: start must be 3x3");
    if (dW.cols != 3) throw std::invalid_argument("so3_brownian: increments need 3 columns");
    const int n_steps = dW.rows;

    // Drift from the structure constants: -1/2 sum_j C^j_{ij} in basis
    // direction i.  Zero for this algebra, but derived, not assumed.
    static const Tensor c = so3_structure_constants();
    Vec drift_alg(3, 0.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) drift_alg[i] -= 0.5 * c.at({j, i, j});

    SdeField f = [&drift_alg](const double* dw, double, const State& s, State& drift,
                              State& diff) {
        Matrix g(3, 3);
        for (int k = 0; k < 9; ++k) g.a[k] = s.value(k);
        Matrix dg_drift = matmul(g, so3_hat(drift_alg));
        Matrix dg_diff = matmul(g, so3_hat({dw[0], dw[1], dw[2]}));
        for (int k = 0; k < 9; ++k) {
            drift.row(k)[0] = dg_drift.a[k];
            diff.row(k)[0] = dg_diff.a[k];
        }
    };

    std::vector<Matrix> out;
    out.reserve(n_steps + 1);
    out.push_back(g0);
    State s = State::plain(g0.a);
    for (int step = 0; step < n_steps; ++step) {
        Matrix row(1, 3);
        for (int j = 0; j < 3; ++j) row(0, j) = dW(step, j);
        s = integrate_sde_states(f, std::move(s), row, dt, SdeScheme::StratonovichHeun).back();
        Matrix g(3, 3);
        g.a = s.values();
        if (reproject) {
            g = polar_project(g);
            s = State::plain(g.a);
        }
        out.push_back(g);
    }
    return out;
}

std::vector<Matrix> so3_brownian(const Matrix& g0, std::uint64_t seed, int n_steps,
                                 double dt, bool reproject) {
    return so3_brownian(g0, gaussian_increments(seed, n_steps, 3, dt), dt, reproject);
}

}  // namespace geomkit
