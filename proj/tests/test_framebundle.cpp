#include "doctest.h"
#include "oracles.hpp"

#include "geomkit/frame_bundle.hpp"
#include "geomkit/geodesics.hpp"
#include "geomkit/manifold.hpp"

#include <cmath>
#include <random>

using namespace geomkit;

namespace {

FramePoint euclid_identity(int d) {
    FramePoint u;
    u.x = Vec(d, 0.0);
    u.nu = Matrix::identity(d);
    return u;
}

// A g-orthonormal frame on the conformally flat sphere chart: the metric is
// a scalar there, so scaling the coordinate frame by 1/sqrt(lambda) works.
FramePoint sphere_orthonormal(const Manifold& S, const Vec& x) {
    double lambda = metric(S, x)(0, 0);
    FramePoint u;
    u.x = x;
    u.nu = (1.0 / std::sqrt(lambda)) * Matrix::identity(2);
    return u;
}

FramePoint random_frame_point(const Manifold& M, std::mt19937& gen) {
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    FramePoint fp;
    fp.x = {u(gen), u(gen)};
    fp.nu = Matrix(2, 2);
    do {
        for (double& e : fp.nu.a) e = u(gen);
    } while (std::abs(fp.nu(0, 0) * fp.nu(1, 1) - fp.nu(0, 1) * fp.nu(1, 0)) < 0.1);
    return fp;
}

// Frame Gram matrix in the metric at the current base point.
Matrix frame_gram(const Manifold& M, const FramePoint& u) {
    return matmul(transpose(u.nu), matmul(metric(M, u.x), u.nu));
}

FramePoint frame_at(const Manifold& M, const Trajectory& path, int k) {
    const int d = M.dim;
    Vec flat = path.state(k);
    return unflatten_frame(d, (static_cast<int>(flat.size()) - d) / d, flat);
}

}  // namespace

TEST_CASE("horizontal basis on flat space lifts the coordinate directions") {
    Manifold E = make_euclidean(3);
    Matrix H = horizontal_basis(E, euclid_identity(3));
    REQUIRE(H.rows == 12);
    REQUIRE(H.cols == 3);
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 3; ++j) CHECK(H(i, j) == (i == j ? 1.0 : 0.0));
}

TEST_CASE("horizontal basis matches the index-loop formula on the sphere") {
    Manifold S = make_sphere_stereographic();
    std::mt19937 gen(97);
    for (int rep = 0; rep < 3; ++rep) {
        FramePoint u = random_frame_point(S, gen);
        Matrix H = horizontal_basis(S, u);
        Tensor gam = christoffel(S, u.x);
        const int d = 2;
        for (int i = 0; i < d; ++i) {
            // top block carries the frame column itself
            for (int j = 0; j < d; ++j) CHECK(H(j, i) == doctest::Approx(u.nu(j, i)).epsilon(1e-13));
            // vertical block: -nu^j_i nu^l_m Gamma^k_jl on the (m, k) frame entry
            for (int m = 0; m < d; ++m)
                for (int k = 0; k < d; ++k) {
                    double want = 0.0;
                    for (int j = 0; j < d; ++j)
                        for (int l = 0; l < d; ++l)
                            want -= u.nu(j, i) * u.nu(l, m) * gam.at({k, j, l});
                    CHECK(H(d + m * d + k, i) == doctest::Approx(want).epsilon(1e-10));
                }
        }
    }

    // at the chart center the symbols vanish, so the lift has no vertical part
    FramePoint u0 = sphere_orthonormal(S, {0.0, 0.0});
    Matrix H0 = horizontal_basis(S, u0);
    for (int i = 2; i < 6; ++i)
        for (int j = 0; j < 2; ++j) CHECK(std::abs(H0(i, j)) < 1e-12);
}

TEST_CASE("bundle cometric is the horizontal outer product with full rank d") {
    Manifold E = make_euclidean(2);
    Matrix flat_cog = sub_riemannian_cometric(E, euclid_identity(2));
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            CHECK(flat_cog(i, j) == ((i == j && i < 2) ? 1.0 : 0.0));

    Manifold S = make_sphere_stereographic();
    std::mt19937 gen(101);
    for (int rep = 0; rep < 3; ++rep) {
        FramePoint u = random_frame_point(S, gen);
        Matrix G = sub_riemannian_cometric(S, u);
        CHECK(max_abs_diff(G, transpose(G)) < 1e-12);

        Matrix H = horizontal_basis(S, u);
        Matrix HHt = matmul(H, transpose(H));
        CHECK(max_abs_diff(G, HHt) < 1e-9);

        // two horizontal directions only: rank d out of d + d*r
        Vec ev;
        Matrix V;
        sym_eigen(G, ev, V);
        int rank = 0;
        for (double l : ev)
            if (std::abs(l) > 1e-9) ++rank;
        CHECK(rank == 2);
    }
}

TEST_CASE("bundle geodesics hold still at zero momentum and go straight on flat space") {
    Manifold E = make_euclidean(2);
    FramePoint u0 = euclid_identity(2);

    FrameFlowResult rest = frame_hamiltonian_flow(E, u0, Vec(6, 0.0));
    for (int k = 0; k < rest.path.n_states(); ++k)
        for (int c = 0; c < 6; ++c)
            CHECK(rest.path.states(k, c) == rest.path.states(0, c));

    Vec p0(6, 0.0);
    p0[0] = 1.0;
    FrameFlowResult run = frame_hamiltonian_flow(E, u0, p0);
    Vec endu = run.path.back();
    CHECK(endu[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(endu[1]) < 1e-12);
    for (int c = 0; c < 4; ++c) CHECK(endu[2 + c] == doctest::Approx(u0.nu.a[c]).epsilon(1e-12));
}

TEST_CASE("bundle geodesics keep the frame orthonormal and conserve the hamiltonian") {
    Manifold S = make_sphere_stereographic();
    FramePoint u0 = sphere_orthonormal(S, {0.0, 0.0});
    Vec p0(6, 0.0);
    p0[0] = 1.0;
    p0[1] = -0.6;
    FrameFlowResult r = frame_hamiltonian_flow(S, u0, p0);

    double h0 = r.hamiltonian[0], drift = 0.0, gram_drift = 0.0;
    for (int k = 0; k < r.path.n_states(); ++k) {
        drift = std::max(drift, std::abs(r.hamiltonian[k] - h0) / std::abs(h0));
        FramePoint uk = frame_at(S, r.path, k);
        gram_drift = std::max(gram_drift,
                              max_abs_diff(frame_gram(S, uk), Matrix::identity(2)));
    }
    CHECK(drift < 1e-5);
    CHECK(gram_drift < 1e-4);
}

TEST_CASE("curvature form vanishes on flat space and is antisymmetric so(2) on the sphere") {
    Manifold E = make_euclidean(2);
    Tensor flat_omega = curvature_form(E, euclid_identity(2));
    for (double c : flat_omega.a) CHECK(std::abs(c) < 1e-12);

    Manifold S = make_sphere_stereographic();
    std::mt19937 gen(103);
    Vec x = {0.3, -0.1};
    FramePoint u = sphere_orthonormal(S, x);
    Tensor omega = curvature_form(S, u);
    Tensor R = riemann(S, x);
    Matrix nu_inv = invert(u.nu);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            // direct contraction of the riemann tensor through the frame
            for (int m = 0; m < 2; ++m)
                for (int k = 0; k < 2; ++k) {
                    double want = 0.0;
                    for (int s = 0; s < 2; ++s)
                        for (int t = 0; t < 2; ++t)
                            want += nu_inv(m, s) * R.at({i, j, t, s}) * u.nu(t, k);
                    CHECK(omega.at({i, j, m, k}) == doctest::Approx(want).epsilon(1e-9));
                }
            // orthonormal frame: each 2x2 block sits in the orthogonal algebra
            CHECK(std::abs(omega.at({i, j, 0, 0})) < 1e-9);
            CHECK(std::abs(omega.at({i, j, 1, 1})) < 1e-9);
            CHECK(std::abs(omega.at({i, j, 0, 1}) + omega.at({i, j, 1, 0})) < 1e-9);
        }

    // changing the frame by a conjugates every block by a^-1, a
    std::uniform_real_distribution<double> ur(-1.0, 1.0);
    Matrix a(2, 2);
    do {
        for (double& e : a.a) e = ur(gen);
    } while (std::abs(a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)) < 0.3);
    FramePoint ua;
    ua.x = x;
    ua.nu = matmul(u.nu, a);
    Tensor omega_a = curvature_form(S, ua);
    Matrix a_inv = invert(a);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            Matrix block(2, 2), block_a(2, 2);
            for (int m = 0; m < 2; ++m)
                for (int k = 0; k < 2; ++k) {
                    block(m, k) = omega.at({i, j, m, k});
                    block_a(m, k) = omega_a.at({i, j, m, k});
                }
            Matrix conj = matmul(a_inv, matmul(block, a));
            CHECK(max_abs_diff(block_a, conj) < 1e-9);
        }
}

TEST_CASE("development on flat space is the running sum of its increments") {
    Manifold E = make_euclidean(2);
    FramePoint u0 = euclid_identity(2);
    std::mt19937 gen(107);
    std::uniform_real_distribution<double> ur(-0.1, 0.1);
    Matrix inc(30, 2);
    for (double& e : inc.a) e = ur(gen);

    Trajectory path = develop(E, u0, inc);
    REQUIRE(path.n_states() == 31);
    double sx = 0.0, sy = 0.0;
    for (int k = 0; k < 30; ++k) {
        sx += inc(k, 0);
        sy += inc(k, 1);
        // the Heun corrector applies each increment as two half steps, so
        // agreement is to rounding rather than bitwise
        CHECK(path.states(k + 1, 0) == doctest::Approx(sx).epsilon(1e-14));
        CHECK(path.states(k + 1, 1) == doctest::Approx(sy).epsilon(1e-14));
        for (int c = 0; c < 4; ++c) CHECK(path.states(k + 1, 2 + c) == u0.nu.a[c]);
    }
}

TEST_CASE("developing a plane curve onto the sphere preserves the frame and the surface") {
    Manifold S = make_sphere_stereographic();
    FramePoint u0 = sphere_orthonormal(S, {0.0, 0.0});
    // Three full wraps around the sphere.  The amplitudes keep the rolled
    // path away from the chart's far pole, where coordinate velocities grow
    // like the squared chart radius and fixed-step rolling cannot follow.
    const int n = 2000;
    const double T = 10.0;
    Matrix inc(n, 2);
    auto gamma = [](double t) { return Vec{2.0 * std::sin(t), 0.1 * (t * t + 2.0 * t)}; };
    for (int k = 0; k < n; ++k) {
        Vec a = gamma(T * k / n), b = gamma(T * (k + 1) / n);
        inc(k, 0) = b[0] - a[0];
        inc(k, 1) = b[1] - a[1];
    }

    Trajectory path = develop(S, u0, inc);
    double norm_drift = 0.0, gram_drift = 0.0;
    for (int k = 0; k <= n; ++k) {
        FramePoint uk = frame_at(S, path, k);
        Vec F = embed(S, uk.x);
        norm_drift = std::max(norm_drift, std::abs(std::sqrt(dot(F, F)) - 1.0));
        gram_drift = std::max(gram_drift,
                              max_abs_diff(frame_gram(S, uk), Matrix::identity(2)));
    }
    CHECK(norm_drift < 1e-4);
    CHECK(gram_drift < 1e-3);
}

TEST_CASE("developed frames follow parallel transport of the base curve") {
    Manifold S = make_sphere_stereographic();
    FramePoint u0 = sphere_orthonormal(S, {0.1, -0.2});
    const int n = 400;
    const double T = 1.0;
    auto gamma = [](double t) { return Vec{2.0 * std::sin(t), t * t}; };
    auto dgamma = [](double t) { return Vec{2.0 * std::cos(t), 2.0 * t}; };
    Matrix inc(n, 2);
    for (int k = 0; k < n; ++k) {
        Vec a = gamma(T * k / n), b = gamma(T * (k + 1) / n);
        inc(k, 0) = b[0] - a[0];
        inc(k, 1) = b[1] - a[1];
    }
    Trajectory path = develop(S, u0, inc);

    // rebuild the base curve's grid data, then transport the first frame
    // column independently with the transport integrator
    Vec times(n + 1);
    Matrix xs(n + 1, 2), xd(n + 1, 2);
    for (int k = 0; k <= n; ++k) {
        times[k] = T * k / n;
        FramePoint uk = frame_at(S, path, k);
        xs(k, 0) = uk.x[0];
        xs(k, 1) = uk.x[1];
        // rolling maps the plane velocity through the current frame
        Vec g = dgamma(times[k]);
        Vec v = matvec(uk.nu, g);
        xd(k, 0) = v[0];
        xd(k, 1) = v[1];
    }
    Vec col0 = {u0.nu(0, 0), u0.nu(1, 0)};
    Matrix moved = parallel_transport(S, times, xs, xd, col0);
    double worst = 0.0;
    for (int k = 0; k <= n; ++k) {
        FramePoint uk = frame_at(S, path, k);
        worst = std::max({worst, std::abs(moved(k, 0) - uk.nu(0, 0)),
                          std::abs(moved(k, 1) - uk.nu(1, 0))});
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("stochastic development is constant without noise and follows pure drift") {
    Manifold S = make_sphere_stereographic();
    FramePoint u0 = sphere_orthonormal(S, {0.2, 0.1});
    const int n = 50;
    const double dt = 0.01;
    Matrix zero(n, 2);

    Trajectory frozen = stochastic_develop(S, u0, zero, dt);
    for (int k = 0; k <= n; ++k)
        for (int c = 0; c < 6; ++c) CHECK(frozen.states(k, c) == frozen.states(0, c));

    // drift-only stochastic development follows the deterministic rolling of
    // the straight line t -> drift * t.  The drift term steps explicitly
    // while increments get the Heun corrector, so the two integrations agree
    // to first order, not bitwise.
    Vec drift = {0.8, -0.5};
    Trajectory drifted = stochastic_develop(S, u0, zero, dt, drift);
    Matrix inc(n, 2);
    for (int k = 0; k < n; ++k) {
        inc(k, 0) = drift[0] * dt;
        inc(k, 1) = drift[1] * dt;
    }
    Trajectory rolled = develop(S, u0, inc);
    for (int k = 0; k <= n; ++k)
        for (int c = 0; c < 6; ++c)
            CHECK(std::abs(drifted.states(k, c) - rolled.states(k, c)) < 2e-3);

    // on flat space the horizontal fields are constant, so explicit drift
    // stepping is exact
    Manifold E = make_euclidean(2);
    FramePoint e0;
    e0.x = {0.0, 0.0};
    e0.nu = Matrix::identity(2);
    Trajectory line = stochastic_develop(E, e0, zero, dt, drift);
    CHECK(line.states(n, 0) == doctest::Approx(drift[0] * n * dt).epsilon(1e-14));
    CHECK(line.states(n, 1) == doctest::Approx(drift[1] * n * dt).epsilon(1e-14));
}

TEST_CASE("development only relabels driving coordinates under frame permutation") {
    Manifold S = make_sphere_stereographic();
    std::mt19937 gen(109);
    FramePoint u = random_frame_point(S, gen);
    FramePoint uswap;
    uswap.x = u.x;
    uswap.nu = Matrix(2, 2);
    for (int r = 0; r < 2; ++r) {
        uswap.nu(r, 0) = u.nu(r, 1);
        uswap.nu(r, 1) = u.nu(r, 0);
    }
    std::uniform_real_distribution<double> ur(-0.05, 0.05);
    const int n = 60;
    Matrix inc(n, 2), incswap(n, 2);
    for (int k = 0; k < n; ++k) {
        inc(k, 0) = ur(gen);
        inc(k, 1) = ur(gen);
        incswap(k, 0) = inc(k, 1);
        incswap(k, 1) = inc(k, 0);
    }
    Trajectory a = develop(S, u, inc);
    Trajectory b = develop(S, uswap, incswap);
    for (int k = 0; k <= n; ++k) {
        CHECK(a.states(k, 0) == doctest::Approx(b.states(k, 0)).epsilon(1e-12));
        CHECK(a.states(k, 1) == doctest::Approx(b.states(k, 1)).epsilon(1e-12));
    }
}

TEST_CASE("most probable paths hit their targets and reduce to straight lines when flat") {
    Manifold E = make_euclidean(2);
    FramePoint u0 = euclid_identity(2);

    MppResult still = most_probable_path(E, u0, {0.0, 0.0});
    CHECK(still.converged);
    CHECK(std::sqrt(dot(still.v, still.v)) < 1e-6);

    Vec y = {0.7, -0.4};
    MppResult line = most_probable_path(E, u0, y);
    REQUIRE(line.converged);
    CHECK(line.v[0] == doctest::Approx(y[0]).epsilon(1e-6));
    CHECK(line.v[1] == doctest::Approx(y[1]).epsilon(1e-6));
}

TEST_CASE("an isotropic frame's most probable path is the riemannian geodesic") {
    Manifold S = make_sphere_stereographic();
    Vec x0 = {0.0, 0.0};
    FramePoint u0 = sphere_orthonormal(S, x0);
    Vec v_geo = {0.3, -0.1};
    Vec y = exp_map(S, x0, v_geo);

    MppResult r = most_probable_path(S, u0, y);
    REQUIRE(r.converged);
    Vec endu = r.flow.path.back();
    CHECK(std::abs(endu[0] - y[0]) < 1e-4);
    CHECK(std::abs(endu[1] - y[1]) < 1e-4);

    FlowResult geo = geodesic(S, x0, v_geo);
    REQUIRE(geo.points.n_states() == r.flow.path.n_states());
    double worst = 0.0;
    for (int k = 0; k < geo.points.n_states(); ++k)
        worst = std::max({worst, std::abs(geo.points.states(k, 0) - r.flow.path.states(k, 0)),
                          std::abs(geo.points.states(k, 1) - r.flow.path.states(k, 1))});
    CHECK(worst < 1e-2);
}

TEST_CASE("path density integrand is minus kinetic energy plus a curvature bonus") {
    Manifold E = make_euclidean(2);
    Trajectory xs;
    xs.times = {0.0, 0.5, 1.0};
    xs.states = Matrix(3, 2);
    Matrix vel(3, 2);
    vel(0, 0) = 1.0;
    vel(1, 0) = 2.0;
    vel(2, 1) = -1.0;
    Vec vals = om_integrand(E, xs, vel);
    CHECK(vals[0] == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(vals[1] == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(vals[2] == doctest::Approx(-0.5).epsilon(1e-12));
    // trapezoid in time over [0, 1]
    CHECK(om_functional(E, xs, vel) ==
          doctest::Approx(0.25 * (-0.5) + 0.5 * (-2.0) + 0.25 * (-0.5)).epsilon(1e-12));

    Manifold S = make_sphere_stereographic();
    Trajectory rest;
    rest.times = {0.0, 1.0};
    rest.states = Matrix(2, 2);
    rest.states(1, 0) = 0.4;
    Matrix vzero(2, 2);
    Vec at_rest = om_integrand(S, rest, vzero);
    CHECK(at_rest[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-9));
    CHECK(at_rest[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-9));
    CHECK(om_functional(S, rest, vzero) == doctest::Approx(1.0 / 6.0).epsilon(1e-9));

    // constant-speed geodesic of squared speed s2 on [0,1]: -s2/2 + 1/6
    FlowResult geo = geodesic(S, {0.1, -0.2}, {0.6, 0.3});
    double want = -0.5 * geo.invariant[0] + 1.0 / 6.0;
    CHECK(om_functional(S, geo.points, geo.companion) == doctest::Approx(want).epsilon(1e-4));
}

TEST_CASE("frame points flatten and validate") {
    FramePoint u;
    u.x = {0.1, 0.2};
    u.nu = Matrix(2, 2);
    u.nu(0, 0) = 1.0;
    u.nu(1, 0) = 2.0;
    u.nu(0, 1) = 3.0;
    u.nu(1, 1) = 4.0;
    Vec flat = flatten_frame(u);
    REQUIRE(flat.size() == 6);
    // column-major frame block after the base point
    CHECK(flat[2] == 1.0);
    CHECK(flat[3] == 2.0);
    CHECK(flat[4] == 3.0);
    CHECK(flat[5] == 4.0);
    FramePoint back = unflatten_frame(2, 2, flat);
    CHECK(back.x[0] == u.x[0]);
    CHECK(max_abs_diff(back.nu, u.nu) == 0.0);

    Manifold E = make_euclidean(2);
    FramePoint bad;
    bad.x = {0.0, 0.0};
    bad.nu = Matrix(2, 2);
    bad.nu(0, 0) = 1.0;
    bad.nu(0, 1) = 2.0;  // second column is a multiple of the first
    bad.nu(1, 0) = 0.5;
    bad.nu(1, 1) = 1.0;
    CHECK_THROWS(check_frame(E, bad));
    CHECK_NOTHROW(check_frame(E, euclid_identity(2)));
}
