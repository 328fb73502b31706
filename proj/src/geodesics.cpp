#include "geomkit/geodesics.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace geomkit {

namespace {

// Outer-algebra view of the chart seeds' companion block (velocity or
// momentum components live directly in state rows).
std::vector<Jet> companion_jets(const JetSpacePtr& outer_sp, const State& s, int comp0,
                                int d) {
    std::vector<Jet> out;
    out.reserve(d);
    for (int c = 0; c < d; ++c) out.push_back(outer_jet_from_row(outer_sp, s.row(comp0 + c)));
    return out;
}

}  // namespace

OdeField geodesic_field(const Manifold& M) {
    const int d = M.dim;
    return [M, d](double, const State& s, State& out) {
        const int m = s.ncoeff - 1;
        const int order = m > 0 ? 3 : 2;
        auto xseeds = chart_seeds_from_state(s, 0, d, order);
        auto gam = christoffel_jets(M, xseeds, m);

        auto outer_sp = outer_space_for(s);
        auto w = companion_jets(outer_sp, s, d, d);

        // dx = w, including every sensitivity coefficient
        for (int c = 0; c < d; ++c)
            for (int k = 0; k < s.ncoeff; ++k) out.row(c)[k] = s.row(d + c)[k];

        const std::span<const std::uint16_t> none;
        for (int k = 0; k < d; ++k) {
            Jet acc = Jet::constant(outer_sp, 0.0);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    Jet g_kij = extract_outer_jet(outer_sp, gam[(k * d + i) * d + j], none, m);
                    acc -= g_kij * w[i] * w[j];
                }
            write_outer_jet(acc, out.row(d + k));
        }
    };
}

OdeField generic_hamiltonian_field(const Manifold& M) {
    const int d = M.dim;
    return [M, d](double, const State& s, State& out) {
        const int m = s.ncoeff - 1;
        const int order = m > 0 ? 3 : 2;
        auto xseeds = chart_seeds_from_state(s, 0, d, order);
        auto gstar = cometric_entry_jets(M, xseeds, m);

        auto outer_sp = outer_space_for(s);
        auto p = companion_jets(outer_sp, s, d, d);

        const std::span<const std::uint16_t> none;
        std::vector<Jet> dx(d, Jet::constant(outer_sp, 0.0));
        std::vector<Jet> dp(d, Jet::constant(outer_sp, 0.0));
        std::vector<std::uint16_t> pattern(1);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                const Jet& entry = gstar[i * d + j];
                Jet val = extract_outer_jet(outer_sp, entry, none, m);
                dx[i] += val * p[j];
                Jet pipj = p[i] * p[j];
                for (int k = 0; k < d; ++k) {
                    pattern[0] = static_cast<std::uint16_t>(m + k);
                    Jet der = extract_outer_jet(outer_sp, entry, pattern, m);
                    dp[k] -= 0.5 * der * pipj;
                }
            }
        for (int c = 0; c < d; ++c) {
            write_outer_jet(dx[c], out.row(c));
            write_outer_jet(dp[c], out.row(d + c));
        }
    };
}

OdeField hamiltonian_field(const Manifold& M) {
    if (M.hamiltonian_field) return M.hamiltonian_field;
    return generic_hamiltonian_field(M);
}

namespace {

FlowResult run_flow(const Manifold& M, const OdeField& f, const Vec& x, const Vec& v,
                    const FlowConfig& cfg, bool hamiltonian) {
    const int d = M.dim;
    Vec s0 = x;
    s0.insert(s0.end(), v.begin(), v.end());
    Trajectory full = integrate_ode(f, s0, cfg.n_steps, cfg.T, cfg.scheme);

    FlowResult res;
    res.points.times = full.times;
    res.points.states = Matrix(full.n_states(), d);
    res.companion = Matrix(full.n_states(), d);
    res.invariant.resize(full.n_states());
    for (int k = 0; k < full.n_states(); ++k) {
        Vec xs(d), cs(d);
        for (int c = 0; c < d; ++c) {
            xs[c] = full.states(k, c);
            cs[c] = full.states(k, d + c);
            res.points.states(k, c) = xs[c];
            res.companion(k, c) = cs[c];
        }
        if (!chart_ok(M, xs))
            throw NumericalError("flow left the chart at step " + std::to_string(k) + " of " +
                                 std::to_string(cfg.n_steps));
        res.invariant[k] = hamiltonian ? hamiltonian_value(M, xs, cs)
                                       : metric_norm(M, xs, cs) * metric_norm(M, xs, cs);
    }
    return res;
}

}  // namespace

FlowResult geodesic(const Manifold& M, const Vec& x, const Vec& v, const FlowConfig& cfg) {
    return run_flow(M, geodesic_field(M), x, v, cfg, false);
}

Vec exp_map(const Manifold& M, const Vec& x, const Vec& v, const FlowConfig& cfg) {
    return geodesic(M, x, v, cfg).points.back();
}

FlowResult hamiltonian_flow(const Manifold& M, const Vec& x, const Vec& p,
                            const FlowConfig& cfg) {
    return run_flow(M, hamiltonian_field(M), x, p, cfg, true);
}

LogResult log_map(const Manifold& M, const Vec& x1, const Vec& x2, const FlowConfig& cfg,
                  const OptimizeConfig& opt, const Vec* v0) {
    const int d = M.dim;
    OdeField f = geodesic_field(M);

    LossGrad loss = [&](const Vec& v, Vec* grad_out) {
        const int m = grad_out ? d : 0;
        State s0(2 * d, 1 + m);
        for (int c = 0; c < d; ++c) {
            s0.row(c)[0] = x1[c];
            s0.row(d + c)[0] = v[c];
            if (m > 0) s0.row(d + c)[1 + c] = 1.0;  // d/dv_c
        }
        State end;
        try {
            end = integrate_ode_final(f, std::move(s0), cfg.n_steps, cfg.T, cfg.scheme);
        } catch (const NumericalError&) {
            // A wild trial velocity can leave the chart mid-flight; score it
            // as unusable and let the line search back off.
            if (grad_out) grad_out->assign(d, 0.0);
            return std::numeric_limits<double>::infinity();
        }
        double l = 0.0;
        for (int c = 0; c < d; ++c) {
            const double r = end.value(c) - x2[c];
            l += r * r;
        }
        l /= d;
        if (grad_out) {
            grad_out->assign(d, 0.0);
            for (int c = 0; c < d; ++c) {
                const double r = end.value(c) - x2[c];
                for (int e = 0; e < d; ++e)
                    (*grad_out)[e] += 2.0 / d * r * end.row(c)[1 + e];
            }
        }
        return l;
    };

    Vec start = v0 ? *v0 : Vec(d, 0.0);
    OptimizeResult r = minimize(loss, std::move(start), opt);

    LogResult out;
    out.v = std::move(r.x);
    out.loss = r.loss;
    out.iterations = r.iterations;
    out.converged = r.converged || r.loss < 1e-12;
    return out;
}

double distance(const Manifold& M, const Vec& x1, const Vec& x2, const FlowConfig& cfg,
                const OptimizeConfig& opt) {
    LogResult lr = log_map(M, x1, x2, cfg, opt);
    if (!lr.converged)
        throw NumericalError("distance: shooting failed to reach the target point");
    return metric_norm(M, x1, lr.v);
}

Matrix parallel_transport(const Manifold& M, const Vec& times, const Matrix& xs,
                          const Matrix& xdots, const Vec& v0) {
    const int d = M.dim;
    const int n = xs.rows - 1;
    if (static_cast<int>(times.size()) != n + 1 || xdots.rows != n + 1)
        throw std::invalid_argument("parallel_transport: grid size mismatch");

    auto rhs = [&](const Vec& x, const Vec& xdot, const Vec& v) {
        Tensor gam = christoffel(M, x);
        Vec dv(d, 0.0);
        for (int k = 0; k < d; ++k)
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) dv[k] -= gam.at({k, i, j}) * xdot[i] * v[j];
        return dv;
    };

    Matrix out(n + 1, d);
    Vec v = v0;
    for (int c = 0; c < d; ++c) out(0, c) = v[c];
    for (int k = 0; k < n; ++k) {
        const double h = times[k + 1] - times[k];
        Vec x0 = xs.row(k), x1 = xs.row(k + 1);
        Vec w0 = xdots.row(k), w1 = xdots.row(k + 1);
        // cubic Hermite midpoint of position and velocity
        Vec xm(d), wm(d);
        for (int c = 0; c < d; ++c) {
            xm[c] = 0.5 * (x0[c] + x1[c]) + h * (w0[c] - w1[c]) / 8.0;
            wm[c] = 1.5 * (x1[c] - x0[c]) / h - 0.25 * (w0[c] + w1[c]);
        }
        Vec k1 = rhs(x0, w0, v);
        Vec k2 = rhs(xm, wm, axpy(0.5 * h, k1, v));
        Vec k3 = rhs(xm, wm, axpy(0.5 * h, k2, v));
        Vec k4 = rhs(x1, w1, axpy(h, k3, v));
        for (int c = 0; c < d; ++c)
            v[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        for (int c = 0; c < d; ++c) out(k + 1, c) = v[c];
    }
    return out;
}

}  // namespace geomkit
