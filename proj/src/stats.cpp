#include "geomkit/stats.hpp"

#include <cmath>
#include <limits>

#include "geomkit/random.hpp"

namespace geomkit {

FrechetResult frechet_mean(const Manifold& M, const Matrix& samples, const Vec& x0,
                           const FrechetConfig& cfg) {
    const int d = M.dim;
    const int n = samples.rows;
    if (samples.cols != d) throw std::invalid_argument("frechet_mean: sample dim mismatch");
    if (n < 1) throw std::invalid_argument("frechet_mean: need samples");

    // Per-sample shooting velocities, warm-started across outer iterations.
    // The warm start is only trusted near the point it was solved at: seeding
    // a far-away probe with the old tangents can capture the shooting on a
    // wrap-around geodesic branch (same endpoint, much longer velocity),
    // which silently corrupts the objective.  Distant probes re-seed from
    // the chart difference instead.
    std::vector<Vec> vs(n, Vec(d, 0.0));
    bool have_warm = false;
    Vec warm_at;

    // An unreachable sample at a line-search probe is not fatal (the search
    // backs off from non-finite losses), so report infinity and remember the
    // culprit; only the start point turns it into a hard error below.
    int bad_sample = -1;
    auto objective = [&](const Vec& x) {
        bool warm = have_warm;
        if (warm)
            for (int e = 0; e < d; ++e)
                if (std::abs(warm_at[e] - x[e]) > 0.25) warm = false;
        double val = 0.0;
        for (int i = 0; i < n; ++i) {
            Vec seed(d);
            if (warm) seed = vs[i];
            else
                for (int e = 0; e < d; ++e) seed[e] = samples(i, e) - x[e];
            try {
                LogResult lr = log_map(M, x, samples.row(i), cfg.flow, cfg.inner, &seed);
                if (!lr.converged) {
                    bad_sample = i;
                    return std::numeric_limits<double>::infinity();
                }
                vs[i] = lr.v;
            } catch (const NumericalError&) {
                bad_sample = i;
                return std::numeric_limits<double>::infinity();
            }
            const double dist = metric_norm(M, x, vs[i]);
            val += dist * dist;
        }
        have_warm = true;
        warm_at = x;
        return val / n;
    };
    if (!std::isfinite(objective(x0)))
        throw NumericalError("frechet_mean: shooting to sample " + std::to_string(bad_sample) +
                             " failed from the start point");

    LossGrad f = [&](const Vec& x, Vec* grad_out) {
        const double val = objective(x);
        if (grad_out && std::isfinite(val)) {
            if (cfg.fd_gradient) {
                grad_out->assign(d, 0.0);
                std::vector<Vec> keep = vs;  // probes must not steal the warm start
                for (int e = 0; e < d; ++e) {
                    Vec xp = x, xm = x;
                    xp[e] += cfg.fd_step;
                    xm[e] -= cfg.fd_step;
                    vs = keep;
                    const double fp = objective(xp);
                    vs = keep;
                    const double fm = objective(xm);
                    (*grad_out)[e] = (fp - fm) / (2.0 * cfg.fd_step);
                }
                vs = keep;
            } else {
                // descent direction of the squared-distance mean:
                // grad = -(2/n) sum_i g(x) Log_x(y_i)
                Matrix g = metric(M, x);
                grad_out->assign(d, 0.0);
                for (int i = 0; i < n; ++i) {
                    Vec gv = matvec(g, vs[i]);
                    for (int e = 0; e < d; ++e) (*grad_out)[e] -= 2.0 / n * gv[e];
                }
            }
        }
        return val;
    };

    OptimizeResult r = minimize(f, x0, cfg.outer);
    FrechetResult res;
    res.mean = std::move(r.x);
    res.value = r.loss;
    double g2 = 0.0;
    for (double ge : r.grad) g2 += ge * ge;
    res.grad_norm = std::sqrt(g2);
    res.iterations = r.iterations;
    res.converged = r.converged;
    return res;
}

Matrix sample_brownian_endpoints(const Manifold& M, const Vec& x0, const Matrix& Sigma,
                                 int n_paths, int n_steps, double T, std::uint64_t seed,
                                 FrameMode mode) {
    const int d = M.dim;
    if (Sigma.rows != d || Sigma.cols != d)
        throw std::invalid_argument("sample_brownian_endpoints: covariance must be dim x dim");

    FramePoint u0;
    u0.x = x0;
    u0.nu = (mode == FrameMode::SigmaSqrt) ? sym_sqrt(Sigma) : Sigma;

    Matrix endpoints(n_paths, d);
    const double dt = T / n_steps;
    for (int pth = 0; pth < n_paths; ++pth) {
        // One stream per path: reproducible regardless of scheduling order.
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(pth));
        Matrix dW(n_steps, d);
        for (int i = 0; i < n_steps; ++i)
            for (int j = 0; j < d; ++j) dW(i, j) = std::sqrt(dt) * rng.normal();
        Trajectory path = stochastic_develop(M, u0, dW, dt);
        for (int j = 0; j < d; ++j) endpoints(pth, j) = path.back()[j];
    }
    return endpoints;
}

DensityGrid density_grid(const Manifold& M, const Matrix& samples_chart, int n_theta,
                         int n_phi, double bandwidth) {
    if (M.mode != ManifoldMode::Embedding || M.ambient_dim != 3 || M.dim != 2)
        throw std::invalid_argument("density_grid: needs a surface embedded in R^3");
    if (bandwidth <= 0.0) throw std::invalid_argument("density_grid: bandwidth must be positive");
    const int n = samples_chart.rows;
    if (n < 1) throw std::invalid_argument("density_grid: need samples");

    std::vector<Vec> pts(n);
    for (int i = 0; i < n; ++i) pts[i] = embed(M, samples_chart.row(i));

    DensityGrid out;
    out.theta.resize(n_theta);
    out.phi.resize(n_phi);
    out.density = Matrix(n_theta, n_phi);
    const double norm = 1.0 / (n * 2.0 * M_PI * bandwidth * bandwidth);
    const double dth = M_PI / n_theta;
    const double dph = 2.0 * M_PI / n_phi;
    double mass = 0.0;
    for (int it = 0; it < n_theta; ++it) {
        const double th = dth * (it + 0.5);  // colatitude from the chart center
        out.theta[it] = th;
        // chart radius of the latitude circle; r -> inf approaches the point
        // antipodal to the chart center, which the cell centers avoid
        const double r = std::tan(0.5 * th);
        const double drdth = 0.5 * (1.0 + r * r);
        for (int ip = 0; ip < n_phi; ++ip) {
            const double ph = dph * (ip + 0.5);
            if (it == 0) out.phi[ip] = ph;
            const Vec c = {r * std::cos(ph), r * std::sin(ph)};
            const Vec P = embed(M, c);
            const Matrix J = embedding_jacobian(M, c);
            // surface element |P_theta x P_phi| of the (theta, phi)
            // parametrization, pushed through the chart; sin(theta) on the
            // round sphere
            Vec Tth(3), Tph(3);
            for (int a = 0; a < 3; ++a) {
                Tth[a] = J(a, 0) * drdth * std::cos(ph) + J(a, 1) * drdth * std::sin(ph);
                Tph[a] = -J(a, 0) * r * std::sin(ph) + J(a, 1) * r * std::cos(ph);
            }
            const double cx = Tth[1] * Tph[2] - Tth[2] * Tph[1];
            const double cy = Tth[2] * Tph[0] - Tth[0] * Tph[2];
            const double cz = Tth[0] * Tph[1] - Tth[1] * Tph[0];
            const double cell_area = std::sqrt(cx * cx + cy * cy + cz * cz);
            double dens = 0.0;
            for (int i = 0; i < n; ++i) {
                const double dx = P[0] - pts[i][0];
                const double dy = P[1] - pts[i][1];
                const double dz = P[2] - pts[i][2];
                dens += std::exp(-(dx * dx + dy * dy + dz * dz) /
                                 (2.0 * bandwidth * bandwidth));
            }
            out.density(it, ip) = norm * dens;
            mass += norm * dens * cell_area * dth * dph;
        }
    }
    if (!(mass > 0.0)) throw NumericalError("density_grid: zero mass on the grid");
    // report the raw captured mass, return a grid that integrates to one
    out.integral = mass;
    for (double& v : out.density.a) v /= mass;
    return out;
}

}  // namespace geomkit
