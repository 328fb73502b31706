#include "geomkit/frame_bundle.hpp"

#include <cmath>

namespace geomkit {

Vec flatten_frame(const FramePoint& u) {
    const int d = static_cast<int>(u.x.size());
    const int r = u.nu.cols;
    Vec flat = u.x;
    flat.reserve(static_cast<std::size_t>(d) * (1 + r));
    for (int a = 0; a < r; ++a)
        for (int k = 0; k < d; ++k) flat.push_back(u.nu(k, a));
    return flat;
}

FramePoint unflatten_frame(int d, int r, const Vec& flat) {
    if (static_cast<int>(flat.size()) != d + d * r)
        throw std::invalid_argument("unflatten_frame: wrong length");
    FramePoint u;
    u.x.assign(flat.begin(), flat.begin() + d);
    u.nu = Matrix(d, r);
    for (int a = 0; a < r; ++a)
        for (int k = 0; k < d; ++k) u.nu(k, a) = flat[d + a * d + k];
    return u;
}

void check_frame(const Manifold& M, const FramePoint& u) {
    const int d = M.dim;
    if (static_cast<int>(u.x.size()) != d || u.nu.rows != d)
        throw std::invalid_argument("frame point does not match the manifold dimension");
    if (u.nu.cols < 1 || u.nu.cols > d)
        throw std::invalid_argument("frame must have between 1 and dim columns");
    // Gram determinant of the columns in the chart inner product
    Matrix gram = matmul(transpose(u.nu), u.nu);
    Vec ev;
    Matrix v;
    sym_eigen(gram, ev, v);
    if (ev.front() <= 1e-12 * std::max(1.0, ev.back()))
        throw std::invalid_argument("frame columns are linearly dependent");
}

Matrix horizontal_basis(const Manifold& M, const FramePoint& u) {
    check_frame(M, u);
    const int d = M.dim, r = u.nu.cols, D = d + d * r;
    Tensor gam = christoffel(M, u.x);

    Matrix H(D, r);
    for (int i = 0; i < r; ++i) {
        for (int k = 0; k < d; ++k) H(k, i) = u.nu(k, i);
        for (int a = 0; a < r; ++a)
            for (int k = 0; k < d; ++k) {
                double s = 0.0;
                for (int j = 0; j < d; ++j)
                    for (int l = 0; l < d; ++l)
                        s -= gam.at({k, j, l}) * u.nu(j, a) * u.nu(l, i);
                H(d + a * d + k, i) = s;
            }
    }
    return H;
}

Matrix sub_riemannian_cometric(const Manifold& M, const FramePoint& u) {
    check_frame(M, u);
    const int d = M.dim, r = u.nu.cols, D = d + d * r;
    Tensor gam = christoffel(M, u.x);

    // W^-1 = nu nu', and the frame-contracted symbols
    Matrix winv = matmul(u.nu, transpose(u.nu));
    Matrix gbold(d * r, d);  // row (k, a) = a*d + k, column i
    for (int a = 0; a < r; ++a)
        for (int k = 0; k < d; ++k)
            for (int i = 0; i < d; ++i) {
                double s = 0.0;
                for (int j = 0; j < d; ++j) s += gam.at({k, i, j}) * u.nu(j, a);
                gbold(a * d + k, i) = s;
            }

    Matrix G(D, D);
    Matrix top_right = matmul(winv, transpose(gbold));       // d x dr
    Matrix bottom = matmul(gbold, matmul(winv, transpose(gbold)));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) G(i, j) = winv(i, j);
    for (int i = 0; i < d; ++i)
        for (int q = 0; q < d * r; ++q) {
            G(i, d + q) = -top_right(i, q);
            G(d + q, i) = -top_right(i, q);
        }
    for (int q = 0; q < d * r; ++q)
        for (int q2 = 0; q2 < d * r; ++q2) G(d + q, d + q2) = bottom(q, q2);
    return G;
}

OdeField frame_hamiltonian_field(const Manifold& M, int r) {
    const int d = M.dim;
    const int D = d + d * r;
    return [M, d, r, D](double, const State& s, State& out) {
        if (s.ncoeff != 1)
            throw NumericalError(
                "frame bundle field cannot carry sensitivity coefficients "
                "(needs a fourth derivative of the chart map)");
        if (s.ncomp != 2 * D)
            throw std::invalid_argument("frame bundle field: state must hold (u, p)");

        // One algebra holds every seed: x as variables 0..d-1 (these double
        // as the chart partials), frame entries as variables d..D-1.
        auto sp = JetSpace::get(D, 3);
        std::vector<Jet> xseeds;
        xseeds.reserve(d);
        for (int i = 0; i < d; ++i) xseeds.push_back(Jet::variable(sp, i, s.value(i)));
        auto gam = christoffel_jets(M, xseeds, 0);

        std::vector<Jet> nu;  // frame entries as seeded variables
        nu.reserve(static_cast<std::size_t>(d) * r);
        for (int q = 0; q < d * r; ++q) nu.push_back(Jet::variable(sp, d + q, s.value(d + q)));
        auto nu_at = [&](int k, int a) -> const Jet& { return nu[a * d + k]; };

        // momenta are plain numbers in this field
        Vec px(d), pn(d * r);
        for (int i = 0; i < d; ++i) px[i] = s.value(D + i);
        for (int q = 0; q < d * r; ++q) pn[q] = s.value(D + d + q);

        // winv_ij = sum_a nu_ia nu_ja
        std::vector<Jet> winv(static_cast<std::size_t>(d) * d, Jet::constant(sp, 0.0));
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                Jet acc = Jet::constant(sp, 0.0);
                for (int a = 0; a < r; ++a) acc += nu_at(i, a) * nu_at(j, a);
                winv[static_cast<std::size_t>(i) * d + j] = acc;
            }
        // gbold_(k a), i = Gamma^k_ij nu_ja
        std::vector<Jet> gbold(static_cast<std::size_t>(d) * r * d, Jet::constant(sp, 0.0));
        for (int a = 0; a < r; ++a)
            for (int k = 0; k < d; ++k)
                for (int i = 0; i < d; ++i) {
                    Jet acc = Jet::constant(sp, 0.0);
                    for (int j = 0; j < d; ++j)
                        acc += gam[(k * d + i) * d + j] * nu_at(j, a);
                    gbold[static_cast<std::size_t>(a * d + k) * d + i] = acc;
                }

        // q_i = (p_x - gbold' p_nu)_i collects both momentum blocks; then
        // H = q' W^-1 q / 2 because the cometric factors through it.
        std::vector<Jet> q(d, Jet::constant(sp, 0.0));
        for (int i = 0; i < d; ++i) {
            Jet acc = Jet::constant(sp, px[i]);
            for (int qrow = 0; qrow < d * r; ++qrow)
                acc -= gbold[static_cast<std::size_t>(qrow) * d + i] * pn[qrow];
            q[i] = acc;
        }
        Jet H = Jet::constant(sp, 0.0);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                H += 0.5 * q[i] * winv[static_cast<std::size_t>(i) * d + j] * q[j];

        // Hamilton's equations from the one jet: du = dH/dp needs the
        // momentum gradient, recovered by differentiating the quadratic form
        // analytically in p (q is affine in p); dp = -dH/du reads off the
        // first-order coefficients.
        // du_x,i = (W^-1 q)_i, du_nu,(k a) = -(gbold W^-1 q)_(k a)
        std::vector<Jet> wq(d, Jet::constant(sp, 0.0));
        for (int i = 0; i < d; ++i) {
            Jet acc = Jet::constant(sp, 0.0);
            for (int j = 0; j < d; ++j)
                acc += winv[static_cast<std::size_t>(i) * d + j] * q[j];
            wq[i] = acc;
        }
        for (int i = 0; i < d; ++i) out.row(i)[0] = wq[i].value();
        for (int qrow = 0; qrow < d * r; ++qrow) {
            Jet acc = Jet::constant(sp, 0.0);
            for (int i = 0; i < d; ++i)
                acc += gbold[static_cast<std::size_t>(qrow) * d + i] * wq[i];
            out.row(d + qrow)[0] = -acc.value();
        }
        for (int c = 0; c < D; ++c) out.row(D + c)[0] = -H.coeff(1 + c);
    };
}

FrameFlowResult frame_hamiltonian_flow(const Manifold& M, const FramePoint& u0,
                                       const Vec& p0, const FlowConfig& cfg) {
    check_frame(M, u0);
    const int d = M.dim, r = u0.nu.cols, D = d + d * r;
    if (static_cast<int>(p0.size()) != D)
        throw std::invalid_argument("frame_hamiltonian_flow: momentum must have d + d*r entries");

    Vec s0 = flatten_frame(u0);
    s0.insert(s0.end(), p0.begin(), p0.end());
    Trajectory full = integrate_ode(frame_hamiltonian_field(M, r), s0, cfg.n_steps, cfg.T,
                                    cfg.scheme);

    FrameFlowResult res;
    res.path.times = full.times;
    res.path.states = Matrix(full.n_states(), D);
    res.momenta = Matrix(full.n_states(), D);
    res.hamiltonian.resize(full.n_states());
    for (int k = 0; k < full.n_states(); ++k) {
        Vec u(D), p(D);
        for (int c = 0; c < D; ++c) {
            u[c] = full.states(k, c);
            p[c] = full.states(k, D + c);
            res.path.states(k, c) = u[c];
            res.momenta(k, c) = p[c];
        }
        FramePoint up = unflatten_frame(d, r, u);
        Matrix G = sub_riemannian_cometric(M, up);
        Vec gp = matvec(G, p);
        res.hamiltonian[k] = 0.5 * dot(p, gp);
    }
    return res;
}

Tensor curvature_form(const Manifold& M, const FramePoint& u) {
    check_frame(M, u);
    const int d = M.dim;
    if (u.nu.cols != d)
        throw std::invalid_argument("curvature_form: needs a full frame");
    Tensor R = riemann(M, u.x);
    Matrix nu_inv = invert(u.nu);

    Tensor out(std::vector<int>{d, d, d, d});  // (i, j, m, k)
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int m = 0; m < d; ++m)
                for (int k = 0; k < d; ++k) {
                    double s = 0.0;
                    for (int a = 0; a < d; ++a)
                        for (int b = 0; b < d; ++b)
                            s += nu_inv(m, a) * R.at({i, j, b, a}) * u.nu(b, k);
                    out.at({i, j, m, k}) = s;
                }
    return out;
}

namespace {

// Shared development stepper: Stratonovich-Heun driven by given increments
// plus an optional constant drift in driving coordinates.
Trajectory develop_impl(const Manifold& M, const FramePoint& u0, const Matrix& incr,
                        double dt, const Vec& drift) {
    check_frame(M, u0);
    const int d = M.dim, r = u0.nu.cols;
    if (incr.cols != r)
        throw std::invalid_argument("development: increment columns must match the frame");
    Vec drift_v = drift.empty() ? Vec(r, 0.0) : drift;
    if (static_cast<int>(drift_v.size()) != r)
        throw std::invalid_argument("development: drift must live in driving coordinates");

    SdeField f = [&M, d, r, &drift_v](const double* dw, double, const State& s,
                                      State& drift_out, State& diff_out) {
        FramePoint u = unflatten_frame(d, r, s.values());
        Matrix H = horizontal_basis(M, u);
        for (int c = 0; c < H.rows; ++c) {
            double ddrift = 0.0, ddiff = 0.0;
            for (int i = 0; i < r; ++i) {
                ddrift += H(c, i) * drift_v[i];
                ddiff += H(c, i) * dw[i];
            }
            drift_out.row(c)[0] = ddrift;
            diff_out.row(c)[0] = ddiff;
        }
    };
    return integrate_sde(f, flatten_frame(u0), incr, dt, SdeScheme::StratonovichHeun);
}

}  // namespace

Trajectory develop(const Manifold& M, const FramePoint& u0, const Matrix& increments) {
    return develop_impl(M, u0, increments, 1.0 / increments.rows, {});
}

Trajectory stochastic_develop(const Manifold& M, const FramePoint& u0, const Matrix& dW,
                              double dt, const Vec& drift) {
    return develop_impl(M, u0, dW, dt, drift);
}

MppResult most_probable_path(const Manifold& M, const FramePoint& u0, const Vec& y,
                             const MppConfig& cfg) {
    check_frame(M, u0);
    const int d = M.dim, r = u0.nu.cols, D = d + d * r;
    if (r != d)
        throw std::invalid_argument("most_probable_path: needs a full frame");
    if (static_cast<int>(y.size()) != d)
        throw std::invalid_argument("most_probable_path: target must be a chart point");

    OdeField field = frame_hamiltonian_field(M, r);
    Matrix winv = matmul(u0.nu, transpose(u0.nu));
    Vec u_flat = flatten_frame(u0);

    auto shoot = [&](const Vec& v) {
        Vec p0(D, 0.0);
        Vec pv = solve(winv, matvec(u0.nu, v));
        for (int i = 0; i < d; ++i) p0[i] = pv[i];
        Vec s0 = u_flat;
        s0.insert(s0.end(), p0.begin(), p0.end());
        State end = integrate_ode_final(field, State::plain(s0), cfg.flow.n_steps,
                                        cfg.flow.T, cfg.flow.scheme);
        double l = 0.0;
        for (int c = 0; c < d; ++c) {
            const double res = end.value(c) - y[c];
            l += res * res;
        }
        return l / d;
    };

    LossGrad loss = [&](const Vec& v, Vec* grad_out) {
        const double l = shoot(v);
        if (grad_out) {
            grad_out->assign(d, 0.0);
            for (int e = 0; e < d; ++e) {
                const double h = cfg.fd_step * std::max(1.0, std::abs(v[e]));
                Vec vp = v, vm = v;
                vp[e] += h;
                vm[e] -= h;
                (*grad_out)[e] = (shoot(vp) - shoot(vm)) / (2.0 * h);
            }
        }
        return l;
    };

    Vec v0 = solve(u0.nu, vsub(y, u0.x));
    OptimizeConfig opt = cfg.opt;
    opt.loss_target = cfg.loss_tol;
    OptimizeResult res = minimize(loss, std::move(v0), opt);

    MppResult out;
    out.v = res.x;
    out.loss = res.loss;
    out.iterations = res.iterations;
    out.converged = res.loss <= cfg.loss_tol || res.converged;

    Vec p0(D, 0.0);
    Vec pv = solve(winv, matvec(u0.nu, out.v));
    for (int i = 0; i < d; ++i) p0[i] = pv[i];
    out.flow = frame_hamiltonian_flow(M, u0, p0, cfg.flow);
    return out;
}

Vec om_integrand(const Manifold& M, const Trajectory& xs, const Matrix& vel) {
    if (vel.rows != xs.n_states() || vel.cols != xs.state_dim())
        throw std::invalid_argument("om_integrand: velocity grid mismatch");
    Vec out(xs.n_states());
    for (int k = 0; k < xs.n_states(); ++k) {
        Vec x = xs.state(k);
        Vec v = vel.row(k);
        const double nv = metric_norm(M, x, v);
        out[k] = -0.5 * nv * nv + scalar_curvature(M, x) / 12.0;
    }
    return out;
}

double om_functional(const Manifold& M, const Trajectory& xs, const Matrix& vel) {
    Vec f = om_integrand(M, xs, vel);
    double s = 0.0;
    for (int k = 0; k + 1 < xs.n_states(); ++k)
        s += 0.5 * (f[k] + f[k + 1]) * (xs.times[k + 1] - xs.times[k]);
    return s;
}

}  // namespace geomkit
