#include "doctest.h"
#include "oracles.hpp"

#include "geomkit/geodesics.hpp"
#include "geomkit/landmarks.hpp"
#include "geomkit/manifold.hpp"

#include <cmath>
#include <random>

using namespace geomkit;

namespace {

// Interleaved configuration of n points drawn from [-1, 1]^2, spread out by
// rejection so the kernel matrix stays comfortably away from singular.
Vec random_config(std::mt19937_64& rng, int n, double min_gap) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Vec x(2 * n);
    for (int i = 0; i < n; ++i) {
        for (int tries = 0; tries < 1000; ++tries) {
            double px = U(rng), py = U(rng);
            bool ok = true;
            for (int j = 0; j < i; ++j) {
                double dx = px - x[2 * j], dy = py - x[2 * j + 1];
                if (dx * dx + dy * dy < min_gap * min_gap) ok = false;
            }
            if (ok) {
                x[2 * i] = px;
                x[2 * i + 1] = py;
                break;
            }
        }
    }
    return x;
}

Vec random_momentum(std::mt19937_64& rng, int d, double scale) {
    std::normal_distribution<double> N(0.0, scale);
    Vec p(d);
    for (double& v : p) v = N(rng);
    return p;
}

// Sum of p over the landmarks, one entry per planar component.  The kernel
// only sees coordinate differences, so this pair is conserved by the flow.
Vec total_momentum(const Vec& p) {
    Vec tot(2, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) tot[i % 2] += p[i];
    return tot;
}

double point_segment_distance(double px, double py, double ax, double ay, double bx,
                              double by) {
    double ux = bx - ax, uy = by - ay;
    double t = ((px - ax) * ux + (py - ay) * uy) / (ux * ux + uy * uy);
    t = std::max(0.0, std::min(1.0, t));
    double dx = px - (ax + t * ux), dy = py - (ay + t * uy);
    return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

TEST_CASE("gaussian kernel hits its closed-form values") {
    const double alpha = 1.7, sigma = 0.4;
    double a[2] = {0.3, -0.2}, b[2] = {0.3, -0.2};

    CHECK(landmark_kernel(alpha, sigma, a, b) == alpha);

    // one kernel width apart, along an arbitrary direction
    double c[2] = {a[0] + sigma * std::cos(0.7), a[1] + sigma * std::sin(0.7)};
    CHECK(landmark_kernel(alpha, sigma, a, c) ==
          doctest::Approx(alpha * std::exp(-0.5)).epsilon(1e-12));
    CHECK(landmark_kernel(alpha, sigma, c, a) == landmark_kernel(alpha, sigma, a, c));

    // monotone decay with separation
    double prev = alpha;
    for (int k = 1; k <= 8; ++k) {
        double ck[2] = {a[0] + 0.25 * k, a[1]};
        double val = landmark_kernel(alpha, sigma, a, ck);
        CHECK(val < prev);
        prev = val;
    }
}

TEST_CASE("single-landmark cometric is a constant conformal factor") {
    const double alpha = 2.5;
    Manifold M = make_landmarks(1, 0.3, alpha);
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> U(-2.0, 2.0);

    for (int t = 0; t < 5; ++t) {
        Vec x = {U(rng), U(rng)};
        Matrix W = cometric(M, x);
        Matrix g = metric(M, x);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                CHECK(W(i, j) == doctest::Approx(i == j ? alpha : 0.0).epsilon(1e-14));
                CHECK(g(i, j) == doctest::Approx(i == j ? 1.0 / alpha : 0.0).epsilon(1e-12));
            }
    }
}

TEST_CASE("cometric blocks couple by kernel value and decouple far apart") {
    const double sigma = 0.1, alpha = 1.0;
    Manifold M = make_landmarks(2, sigma, alpha);

    // landmarks 20 kernel widths apart: the cross blocks are dead
    Vec far = {0.0, 0.0, 20.0 * sigma, 0.0};
    Matrix Wf = cometric(M, far);
    for (int i = 0; i < 2; ++i)
        for (int j = 2; j < 4; ++j) {
            CHECK(std::abs(Wf(i, j)) < 1e-12);
            CHECK(std::abs(Wf(j, i)) < 1e-12);
        }
    for (int i = 0; i < 4; ++i) CHECK(Wf(i, i) == doctest::Approx(alpha).epsilon(1e-14));

    // at one kernel width the cross block is K = alpha e^{-1/2} delta_uv
    Vec near = {0.0, 0.0, sigma, 0.0};
    Matrix Wn = cometric(M, near);
    const double k = alpha * std::exp(-0.5);
    CHECK(Wn(0, 2) == doctest::Approx(k).epsilon(1e-12));
    CHECK(Wn(1, 3) == doctest::Approx(k).epsilon(1e-12));
    CHECK(std::abs(Wn(0, 3)) < 1e-14);
    CHECK(std::abs(Wn(1, 2)) < 1e-14);
}

TEST_CASE("kernel cometric is symmetric positive definite in bulk") {
    Manifold M = make_landmarks(4, 0.5, 1.3);
    std::mt19937_64 rng(2026);

    for (int t = 0; t < 20; ++t) {
        Vec x = random_config(rng, 4, 0.25);
        Matrix W = cometric(M, x);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < i; ++j)
                CHECK(W(i, j) == doctest::Approx(W(j, i)).epsilon(1e-13));
        CHECK(is_spd(W));
    }
}

TEST_CASE("hand-assembled landmark field matches the jet-assembled one") {
    const int n = 3, d = 2 * n;
    Manifold M = make_landmarks(n, 0.6, 1.4);
    OdeField fast = hamiltonian_field(M);
    OdeField slow = generic_hamiltonian_field(M);
    std::mt19937_64 rng(7);

    for (int t = 0; t < 4; ++t) {
        Vec x = random_config(rng, n, 0.2);
        Vec p = random_momentum(rng, d, 0.8);

        // plain value states
        State s(2 * d, 1);
        for (int c = 0; c < d; ++c) {
            s.row(c)[0] = x[c];
            s.row(d + c)[0] = p[c];
        }
        State of(2 * d, 1), os(2 * d, 1);
        fast(0.0, s, of);
        slow(0.0, s, os);
        for (int c = 0; c < 2 * d; ++c)
            CHECK(of.row(c)[0] == doctest::Approx(os.row(c)[0]).epsilon(1e-10));

        // identity-seeded sensitivity states: the coefficient rows must agree
        // too, since the matcher differentiates through this field
        State ss(2 * d, 1 + 2 * d);
        for (int c = 0; c < d; ++c) {
            ss.row(c)[0] = x[c];
            ss.row(d + c)[0] = p[c];
        }
        for (int c = 0; c < 2 * d; ++c) ss.row(c)[1 + c] = 1.0;
        State ofs(2 * d, 1 + 2 * d), oss(2 * d, 1 + 2 * d);
        fast(0.0, ss, ofs);
        slow(0.0, ss, oss);
        for (int c = 0; c < 2 * d; ++c)
            for (int k = 0; k < 1 + 2 * d; ++k)
                CHECK(ofs.row(c)[k] == doctest::Approx(oss.row(c)[k]).epsilon(1e-9));
    }
}

TEST_CASE("landmark flow conserves energy and total momentum") {
    const int n = 3, d = 2 * n;
    Manifold M = make_landmarks(n, 0.8, 1.0);
    std::mt19937_64 rng(11);
    Vec x = random_config(rng, n, 0.3);
    Vec p = random_momentum(rng, d, 0.7);

    FlowResult r = hamiltonian_flow(M, x, p, {.n_steps = 200});

    double h0 = r.invariant[0];
    for (double h : r.invariant) CHECK(std::abs(h - h0) < 1e-5 * std::abs(h0));

    // the field only reads coordinate differences, so the summed momentum is
    // a linear invariant and Runge-Kutta keeps it to rounding
    Vec tot0 = total_momentum(p);
    for (int k = 0; k <= 200; ++k) {
        Vec pk(d);
        for (int c = 0; c < d; ++c) pk[c] = r.companion(k, c);
        Vec tot = total_momentum(pk);
        CHECK(std::abs(tot[0] - tot0[0]) < 1e-9);
        CHECK(std::abs(tot[1] - tot0[1]) < 1e-9);
    }
}

TEST_CASE("matching a configuration onto itself stays put") {
    Manifold M = make_landmarks(2, 0.5, 1.0);
    Vec x = {0.1, -0.3, 0.6, 0.4};
    LandmarkMatchResult res = match_landmarks(M, x, x);
    REQUIRE(res.converged);
    CHECK(res.loss < 1e-12);
    for (double v : res.p0) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("a single landmark travels straight and the seed momentum is exact") {
    const double alpha = 1.6;
    Manifold M = make_landmarks(1, 0.3, alpha);
    Vec x1 = {-0.4, 0.2}, x2 = {0.5, -0.1};

    LandmarkMatchResult res = match_landmarks(M, x1, x2);
    REQUIRE(res.converged);
    // constant cometric alpha*I: xdot = alpha p, pdot = 0, so p0 = (x2-x1)/alpha
    for (int c = 0; c < 2; ++c)
        CHECK(res.p0[c] == doctest::Approx((x2[c] - x1[c]) / alpha).epsilon(1e-9));

    const auto& path = res.flow.points;
    int last = path.n_states() - 1;
    for (int c = 0; c < 2; ++c)
        CHECK(path.states(last, c) == doctest::Approx(x2[c]).epsilon(1e-9));
    // straight line in between
    for (int k = 0; k <= last; ++k) {
        double t = path.times[k];
        for (int c = 0; c < 2; ++c)
            CHECK(path.states(k, c) ==
                  doctest::Approx(x1[c] + t * (x2[c] - x1[c])).epsilon(1e-9));
    }
}

TEST_CASE("well separated landmarks match as independent points") {
    const double sigma = 0.05, alpha = 1.2;
    Manifold M = make_landmarks(2, sigma, alpha);
    // two pairs a hundred kernel widths apart, each making a short hop
    Vec x1 = {0.0, 0.0, 5.0, 0.0};
    Vec x2 = {0.2, 0.1, 5.1, -0.15};

    LandmarkMatchResult res = match_landmarks(M, x1, x2);
    REQUIRE(res.converged);
    for (int c = 0; c < 4; ++c)
        CHECK(res.p0[c] == doctest::Approx((x2[c] - x1[c]) / alpha).epsilon(1e-6));
}

TEST_CASE("matching commutes with translating both configurations") {
    Manifold M = make_landmarks(2, 0.4, 1.0);
    Vec x1 = {0.0, 0.0, 0.5, 0.1};
    Vec x2 = {0.15, 0.2, 0.45, 0.5};
    Vec shift = {1.3, -0.7};

    LandmarkMatchResult a = match_landmarks(M, x1, x2);
    Vec y1 = x1, y2 = x2;
    for (int i = 0; i < 2; ++i) {
        y1[2 * i] += shift[0];
        y1[2 * i + 1] += shift[1];
        y2[2 * i] += shift[0];
        y2[2 * i + 1] += shift[1];
    }
    LandmarkMatchResult b = match_landmarks(M, y1, y2);

    REQUIRE(a.converged);
    REQUIRE(b.converged);
    for (int c = 0; c < 4; ++c)
        CHECK(a.p0[c] == doctest::Approx(b.p0[c]).scale(1.0).epsilon(1e-8));
}

TEST_CASE("sensitivity fallback reproduces the adjoint matching") {
    Manifold M = make_landmarks(2, 0.5, 1.0);
    // same geometry, but a name the matcher cannot parse, which routes it to
    // the forward-sensitivity gradient instead of the adjoint sweep
    Manifold M2 = M;
    M2.name = "point-cloud";

    Vec x1 = {0.0, 0.0, 0.6, 0.0};
    Vec x2 = {0.1, 0.25, 0.5, 0.3};
    LandmarkMatchConfig cfg;
    cfg.n_steps = 40;
    cfg.coarse_steps = 10;

    LandmarkMatchResult a = match_landmarks(M, x1, x2, cfg);
    LandmarkMatchResult b = match_landmarks(M2, x1, x2, cfg);
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    CHECK(a.loss < cfg.loss_tol);
    CHECK(b.loss < cfg.loss_tol);
    // both drive the endpoint onto x2, so the momenta solve the same shooting
    // problem; compare through the shared endpoint rather than bitwise
    int last = a.flow.points.n_states() - 1;
    for (int c = 0; c < 4; ++c) {
        CHECK(a.flow.points.states(last, c) == doctest::Approx(x2[c]).epsilon(1e-3));
        CHECK(a.p0[c] == doctest::Approx(b.p0[c]).scale(1.0).epsilon(1e-4));
    }
}

TEST_CASE("shape outlines sample the advertised curves") {
    CHECK_THROWS_AS(shape_outline("Q", 10), std::invalid_argument);
    CHECK_THROWS_AS(shape_outline("T", 0), std::invalid_argument);

    const int n = 24;
    Vec T = shape_outline("T", n);
    REQUIRE(static_cast<int>(T.size()) == 2 * n);
    // starts at the bottom-left stem corner, every sample on the polygon
    CHECK(T[0] == doctest::Approx(-0.15).epsilon(1e-12));
    CHECK(std::abs(T[1]) < 1e-12);
    std::vector<std::pair<double, double>> verts = {
        {-0.15, 0.0}, {0.15, 0.0}, {0.15, 0.7}, {0.5, 0.7},
        {0.5, 1.0},   {-0.5, 1.0}, {-0.5, 0.7}, {-0.15, 0.7},
    };
    for (int i = 0; i < n; ++i) {
        double best = 1e300;
        for (std::size_t e = 0; e < verts.size(); ++e) {
            auto [ax, ay] = verts[e];
            auto [bx, by] = verts[(e + 1) % verts.size()];
            best = std::min(best,
                            point_segment_distance(T[2 * i], T[2 * i + 1], ax, ay, bx, by));
        }
        CHECK(best < 1e-9);
    }

    Vec O = shape_outline("O", n);
    REQUIRE(static_cast<int>(O.size()) == 2 * n);
    // starts at the bottom of the ellipse centred on (0, 0.5)
    CHECK(std::abs(O[0]) < 1e-6);
    CHECK(std::abs(O[1]) < 1e-6);
    for (int i = 0; i < n; ++i) {
        double u = O[2 * i] / 0.4, v = (O[2 * i + 1] - 0.5) / 0.5;
        CHECK(u * u + v * v == doctest::Approx(1.0).epsilon(1e-4));
    }
}
