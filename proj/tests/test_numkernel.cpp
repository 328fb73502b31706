#include "doctest.h"
#include "oracles.hpp"

#include "geomkit/autodiff.hpp"
#include "geomkit/linalg.hpp"
#include "geomkit/optimize.hpp"
#include "geomkit/random.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <random>

using namespace geomkit;

namespace {

Matrix random_matrix(int r, int c, std::mt19937& gen) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix m(r, c);
    for (double& x : m.a) x = u(gen);
    return m;
}

Matrix well_conditioned(int n, std::mt19937& gen) {
    Matrix m = random_matrix(n, n, gen);
    for (int i = 0; i < n; ++i) m(i, i) += 3.0;
    return m;
}

}  // namespace

TEST_CASE("matmul, transpose and matvec against hand loops") {
    std::mt19937 gen(1);
    Matrix a = random_matrix(3, 4, gen);
    Matrix b = random_matrix(4, 2, gen);
    Matrix c = matmul(a, b);
    REQUIRE(c.rows == 3);
    REQUIRE(c.cols == 2);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) {
            double want = 0.0;
            for (int k = 0; k < 4; ++k) want += a(i, k) * b(k, j);
            CHECK(c(i, j) == doctest::Approx(want).epsilon(1e-14));
        }

    Matrix at = transpose(a);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) CHECK(at(j, i) == a(i, j));

    Vec v = {1.0, -2.0, 0.5, 3.0};
    Vec mv = matvec(a, v);
    for (int i = 0; i < 3; ++i) {
        double want = 0.0;
        for (int k = 0; k < 4; ++k) want += a(i, k) * v[k];
        CHECK(mv[i] == doctest::Approx(want).epsilon(1e-14));
    }
}

TEST_CASE("inversion and solve on well-conditioned systems") {
    std::mt19937 gen(2);
    for (int n : {1, 2, 5, 9}) {
        Matrix m = well_conditioned(n, gen);
        Matrix mi = invert(m);
        CHECK(max_abs_diff(matmul(m, mi), Matrix::identity(n)) < 1e-10);

        Vec rhs(n);
        for (int i = 0; i < n; ++i) rhs[i] = std::sin(i + 1.0);
        Vec x = solve(m, rhs);
        Vec back = matvec(m, x);
        for (int i = 0; i < n; ++i) CHECK(back[i] == doctest::Approx(rhs[i]).epsilon(1e-10));
    }

    Matrix sing(2, 2);
    sing(0, 0) = 1.0; sing(0, 1) = 2.0;
    sing(1, 0) = 2.0; sing(1, 1) = 4.0;
    CHECK_THROWS_AS(invert(sing), NumericalError);
}

TEST_CASE("LU inversion over the jet ring differentiates the inverse") {
    // M(t) = [[1 + t, t], [t, 2]]; compare d(M^-1)/dt against central
    // differences of plain double inversions.
    auto sp = JetSpace::get(1, 2);
    Jet t = Jet::variable(sp, 0, 0.3);
    Jet one = Jet::constant(sp, 1.0);
    std::vector<Jet> m = {one + t, t, t, Jet::constant(sp, 2.0)};
    std::vector<Jet> mi = lu_invert_ring<Jet>(2, m, one);

    // identity in the jet ring: all coefficients of M * M^-1 match I
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            Jet s = m[i * 2 + 0] * mi[0 * 2 + j] + m[i * 2 + 1] * mi[1 * 2 + j];
            CHECK(s.value() == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-13));
            for (int k = 1; k < sp->size(); ++k)
                CHECK(s.coeff(k) == doctest::Approx(0.0).epsilon(1e-12));
        }

    auto inv_at = [](double tv) {
        Matrix mm(2, 2);
        mm(0, 0) = 1.0 + tv; mm(0, 1) = tv;
        mm(1, 0) = tv;       mm(1, 1) = 2.0;
        return invert(mm);
    };
    const double h = 1e-6;
    Matrix ip = inv_at(0.3 + h), im = inv_at(0.3 - h);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            double want = (ip(i, j) - im(i, j)) / (2.0 * h);
            CHECK(mi[i * 2 + j].partial({0}) == doctest::Approx(want).epsilon(1e-7));
        }

    // zero-value pivot with derivative content must still be rejected when
    // the whole matrix is singular at the value level
    std::vector<Jet> bad = {t - 0.3, t - 0.3, t - 0.3, t - 0.3};
    CHECK_THROWS_AS(lu_invert_ring<Jet>(2, bad, one), NumericalError);
}

TEST_CASE("tensor contraction covers matmul, inner products and rank-3 cases") {
    std::mt19937 gen(3);
    Matrix a = random_matrix(3, 4, gen);
    Matrix b = random_matrix(4, 2, gen);
    Tensor ta = Tensor::from_matrix(a), tb = Tensor::from_matrix(b);
    Tensor tc = contract(ta, tb, {{1, 0}});
    Matrix c = matmul(a, b);
    REQUIRE(tc.shape == std::vector<int>{3, 2});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(tc.at({i, j}) == doctest::Approx(c(i, j)).epsilon(1e-14));

    // full contraction to a scalar
    Tensor v(std::vector<int>{4});
    for (int i = 0; i < 4; ++i) v.a[i] = i + 0.5;
    Tensor s = contract(v, v, {{0, 0}});
    REQUIRE(s.shape.empty());
    CHECK(s.a[0] == doctest::Approx(0.25 + 2.25 + 6.25 + 12.25));

    // rank-3 against explicit loops: T(i,j,k) * M(j, l) summed over j
    Tensor t3(std::vector<int>{2, 3, 2});
    for (std::size_t i = 0; i < t3.a.size(); ++i) t3.a[i] = 0.1 * static_cast<double>(i) - 0.4;
    Matrix m = random_matrix(3, 2, gen);
    Tensor r = contract(t3, Tensor::from_matrix(m), {{1, 0}});
    REQUIRE(r.shape == std::vector<int>{2, 2, 2});  // free axes of x then of y
    for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l) {
                double want = 0.0;
                for (int j = 0; j < 3; ++j) want += t3.at({i, j, k}) * m(j, l);
                CHECK(r.at({i, k, l}) == doctest::Approx(want).epsilon(1e-13));
            }
}

TEST_CASE("symmetric eigensolver, matrix square root, SPD check") {
    std::mt19937 gen(4);
    Matrix r = random_matrix(4, 4, gen);
    Matrix s = matmul(transpose(r), r);  // SPD up to rank issues
    for (int i = 0; i < 4; ++i) s(i, i) += 1.0;

    Vec ev;
    Matrix v;
    sym_eigen(s, ev, v);
    for (std::size_t i = 1; i < ev.size(); ++i) CHECK(ev[i] >= ev[i - 1]);
    CHECK(max_abs_diff(matmul(transpose(v), v), Matrix::identity(4)) < 1e-10);
    // S V = V diag(ev)
    Matrix sv = matmul(s, v);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(sv(i, j) == doctest::Approx(v(i, j) * ev[j]).epsilon(1e-9));

    Matrix root = sym_sqrt(s);
    CHECK(max_abs_diff(matmul(root, root), s) < 1e-9);
    CHECK(max_abs_diff(root, transpose(root)) < 1e-10);

    CHECK(is_spd(s));
    Matrix indef = Matrix::identity(3);
    indef(2, 2) = -0.5;
    CHECK_FALSE(is_spd(indef));
}

TEST_CASE("jacobian and higher derivatives match finite differences") {
    SmoothMap f;
    f.domain_dim = 3;
    f.codomain_dim = 2;
    f.eval = [](const std::vector<Jet>& x) {
        std::vector<Jet> y;
        y.push_back(x[0] * x[1] * x[1] + sin(x[2]));
        y.push_back(exp(x[0] * 0.5) / (x[2] + 2.0));
        return y;
    };
    auto f_plain = [&](const std::vector<double>& x) {
        return std::vector<double>{x[0] * x[1] * x[1] + std::sin(x[2]),
                                   std::exp(x[0] * 0.5) / (x[2] + 2.0)};
    };
    Vec x0 = {0.3, -1.1, 0.8};

    Vec val = evaluate(f, x0);
    auto want_val = f_plain(x0);
    CHECK(val[0] == doctest::Approx(want_val[0]).epsilon(1e-14));
    CHECK(val[1] == doctest::Approx(want_val[1]).epsilon(1e-14));

    Matrix J = jacobian(f, x0);
    auto Jref = oracles::fd_jacobian(f_plain, x0);
    for (int c = 0; c < 2; ++c)
        for (int j = 0; j < 3; ++j)
            CHECK(J(c, j) == doctest::Approx(Jref[c][j]).epsilon(1e-7));

    Tensor H = higher_derivative(f, x0, 2);
    REQUIRE(H.shape == std::vector<int>{2, 3, 3});
    for (int c = 0; c < 2; ++c) {
        auto comp = [&, c](const std::vector<double>& x) { return f_plain(x)[c]; };
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double want = oracles::fd_mixed_partial(comp, x0, {i, j},
                                                        oracles::fd_step_for_order(2));
                CHECK(H.at({c, i, j}) == doctest::Approx(want).epsilon(2e-5));
                CHECK(H.at({c, i, j}) == doctest::Approx(H.at({c, j, i})).epsilon(1e-13));
            }
    }

    // third derivatives on a polynomial are exact
    oracles::Poly p{2, {{1.0, {3, 0}}, {-2.0, {1, 2}}, {0.7, {2, 1}}}};
    SmoothMap g;
    g.domain_dim = 2;
    g.codomain_dim = 1;
    g.eval = [&p](const std::vector<Jet>& x) {
        Jet s = Jet::constant(x[0].space(), 0.0);
        for (const auto& t : p.terms) {
            Jet m = Jet::constant(x[0].space(), t.c);
            for (int v = 0; v < 2; ++v)
                for (int k = 0; k < t.e[v]; ++k) m = m * x[v];
            s += m;
        }
        return std::vector<Jet>{s};
    };
    Vec y0 = {0.4, -0.6};
    Tensor T3 = higher_derivative(g, y0, 3);
    REQUIRE(T3.shape == std::vector<int>{1, 2, 2, 2});
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) {
                // full partial = taylor coeff * multiplicity factorial; the
                // poly oracle already returns the taylor coefficient
                std::vector<int> vars = {i, j, k};
                std::map<int, int> mult;
                for (int vv : vars) mult[vv] += 1;
                double fact = 1.0;
                for (auto& [vv, mm] : mult)
                    for (int q = 2; q <= mm; ++q) fact *= q;
                double want = p.taylor_coeff(y0, vars) * fact;
                CHECK(T3.at({0, i, j, k}) == doctest::Approx(want).epsilon(1e-12));
            }
}

TEST_CASE("scalar gradient helper") {
    auto f = [](const std::vector<Jet>& x) { return x[0] * x[0] * x[1] + cos(x[1]); };
    auto f_plain = [](const std::vector<double>& x) {
        return x[0] * x[0] * x[1] + std::cos(x[1]);
    };
    Vec x0 = {1.2, 0.3};
    Vec g = gradient(f, x0);
    Vec gref = oracles::fd_gradient(f_plain, x0);
    CHECK(g[0] == doctest::Approx(gref[0]).epsilon(1e-7));
    CHECK(g[1] == doctest::Approx(gref[1]).epsilon(1e-7));
}

TEST_CASE("random streams are deterministic and independent") {
    Rng a(123), b(123), c(124);
    for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());
    bool differs = false;
    Rng a2(123);
    for (int i = 0; i < 16; ++i) differs |= (a2.next_u64() != c.next_u64());
    CHECK(differs);

    Rng s0 = Rng::stream(7, 0), s1 = Rng::stream(7, 1), s0b = Rng::stream(7, 0);
    bool stream_differs = false;
    for (int i = 0; i < 16; ++i) {
        std::uint64_t x = s0.next_u64();
        CHECK(x == s0b.next_u64());
        stream_differs |= (x != s1.next_u64());
    }
    CHECK(stream_differs);

    Rng u(99);
    for (int i = 0; i < 1000; ++i) {
        double x = u.uniform01();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("normal deviates have the right moments") {
    Rng g(2024);
    const int n = 100000;
    std::vector<double> xs(n);
    for (double& x : xs) x = g.normal();
    auto m = oracles::sample_moments(xs);
    CHECK(std::abs(m.mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(m.var == doctest::Approx(1.0).epsilon(0.05));
    CHECK(std::abs(m.skew) < 0.08);
    CHECK(m.kurt == doctest::Approx(3.0).epsilon(0.07));
}

TEST_CASE("gaussian increment matrices") {
    const double dt = 0.01;
    const int n = 50000, dim = 2;
    Matrix dw = gaussian_increments(31337, n, dim, dt);
    REQUIRE(dw.rows == n);
    REQUIRE(dw.cols == dim);
    for (int j = 0; j < dim; ++j) {
        std::vector<double> col(n);
        for (int i = 0; i < n; ++i) col[i] = dw(i, j);
        auto m = oracles::sample_moments(col);
        CHECK(std::abs(m.mean) < 4.0 * std::sqrt(dt / n));
        CHECK(m.var == doctest::Approx(dt).epsilon(0.05));
    }
    CHECK_THROWS_AS(gaussian_increments(1, 10, 1, 0.0), std::invalid_argument);

    // reproducible for a fixed seed
    Matrix again = gaussian_increments(31337, n, dim, dt);
    CHECK(max_abs_diff(dw, again) == 0.0);
}

TEST_CASE("minimizer is exact-ish on quadratics within dim + 5 iterations") {
    std::mt19937 gen(5);
    const int dim = 6;
    Matrix r = random_matrix(dim, dim, gen);
    Matrix A = matmul(transpose(r), r);
    for (int i = 0; i < dim; ++i) A(i, i) += 1.0;
    Vec b(dim);
    for (int i = 0; i < dim; ++i) b[i] = std::cos(i + 1.0);

    LossGrad f = [&](const Vec& x, Vec* grad) {
        Vec d = vsub(x, b);
        Vec Ad = matvec(A, d);
        if (grad) *grad = Ad;
        return 0.5 * dot(d, Ad);
    };
    OptimizeConfig cfg;
    cfg.grad_tol = 1e-10;
    OptimizeResult res = minimize(f, Vec(dim, 0.0), cfg);
    CHECK(res.converged);
    CHECK(res.iterations <= dim + 5);
    for (int i = 0; i < dim; ++i) CHECK(res.x[i] == doctest::Approx(b[i]).epsilon(1e-7));
}

TEST_CASE("minimizer solves Rosenbrock from the standard start") {
    LossGrad f = [](const Vec& x, Vec* grad) {
        double a = 1.0 - x[0];
        double b = x[1] - x[0] * x[0];
        if (grad) {
            (*grad)[0] = -2.0 * a - 400.0 * x[0] * b;
            (*grad)[1] = 200.0 * b;
        }
        return a * a + 100.0 * b * b;
    };
    OptimizeResult res = minimize(f, {-1.2, 1.0});
    CHECK(res.converged);
    CHECK(std::abs(res.x[0] - 1.0) < 1e-5);
    CHECK(std::abs(res.x[1] - 1.0) < 1e-5);
}

TEST_CASE("minimizer failure modes are reported, not hidden") {
    LossGrad bad = [](const Vec& x, Vec* grad) {
        if (grad) (*grad)[0] = 0.0;
        return std::numeric_limits<double>::quiet_NaN();
        (void)x;
    };
    CHECK_THROWS_AS(minimize(bad, {1.0}), NumericalError);

    // unbounded descent: must stop at max_iters without claiming convergence
    LossGrad slide = [](const Vec& x, Vec* grad) {
        if (grad) (*grad)[0] = -1.0;
        return -x[0];
    };
    OptimizeConfig cfg;
    cfg.max_iters = 25;
    OptimizeResult res = minimize(slide, {0.0}, cfg);
    CHECK_FALSE(res.converged);
    CHECK(res.iterations == 25);
}
