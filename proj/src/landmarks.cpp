#include "geomkit/landmarks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <utility>

namespace geomkit {

double landmark_kernel(double alpha, double sigma, const double* a, const double* b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1];
    return alpha * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
}

Manifold make_landmarks(int n, double sigma, double alpha) {
    if (n < 1) throw std::invalid_argument("landmarks: need at least one point");
    if (sigma <= 0.0 || alpha <= 0.0)
        throw std::invalid_argument("landmarks: sigma and alpha must be positive");
    const int d = 2 * n;

    SmoothMap cog;
    cog.domain_dim = d;
    cog.codomain_dim = d * d;
    cog.eval = [n, d, sigma, alpha](const std::vector<Jet>& x) {
        const auto& sp = x[0].space();
        std::vector<Jet> out(static_cast<std::size_t>(d) * d, Jet::constant(sp, 0.0));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Jet dx = x[2 * i] - x[2 * j];
                Jet dy = x[2 * i + 1] - x[2 * j + 1];
                Jet k = alpha * exp((dx * dx + dy * dy) / (-2.0 * sigma * sigma));
                out[static_cast<std::size_t>(2 * i) * d + 2 * j] = k;
                out[static_cast<std::size_t>(2 * i + 1) * d + 2 * j + 1] = k;
            }
        return out;
    };

    Manifold M = make_cometric_manifold(d, std::move(cog),
                                        "landmarks:" + std::to_string(n) + "," +
                                            std::to_string(sigma) + "," +
                                            std::to_string(alpha));
    M.hamiltonian_field = landmark_hamiltonian_field(n, sigma, alpha);
    return M;
}

namespace {

// First-order coefficient-row arithmetic, the same semantics as one-variable
// jets laid flat: entry 0 is the value, entries 1..nc-1 ride along linearly.
inline void row_mul(const double* u, const double* v, double* t, int nc) {
    t[0] = u[0] * v[0];
    for (int k = 1; k < nc; ++k) t[k] = u[0] * v[k] + u[k] * v[0];
}

inline void row_axpy(double a, const double* u, double* t, int nc) {
    for (int k = 0; k < nc; ++k) t[k] += a * u[k];
}

}  // namespace

OdeField landmark_hamiltonian_field(int n, double sigma, double alpha) {
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    return [n, sigma, alpha, inv2s2](double, const State& s, State& out) {
        const int nc = s.ncoeff;
        if (s.ncomp != 4 * n)
            throw std::invalid_argument("landmark field: state must hold (x, p)");
        // scratch rows: dx, dy, r2, kern, pp, w
        std::vector<double> buf(static_cast<std::size_t>(6) * nc);
        double* dx = buf.data();
        double* dy = dx + nc;
        double* r2 = dy + nc;
        double* kern = r2 + nc;
        double* pp = kern + nc;
        double* w = pp + nc;

        auto X = [&](int i, int u) { return s.row(2 * i + u); };
        auto P = [&](int i, int u) { return s.row(2 * n + 2 * i + u); };
        auto dX = [&](int i, int u) { return out.row(2 * i + u); };
        auto dP = [&](int i, int u) { return out.row(2 * n + 2 * i + u); };

        // diagonal: K(x_i, x_i) = alpha exactly, no momentum force
        for (int i = 0; i < n; ++i)
            for (int u = 0; u < 2; ++u) row_axpy(alpha, P(i, u), dX(i, u), nc);

        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                for (int k = 0; k < nc; ++k) {
                    dx[k] = X(i, 0)[k] - X(j, 0)[k];
                    dy[k] = X(i, 1)[k] - X(j, 1)[k];
                }
                row_mul(dx, dx, r2, nc);
                row_mul(dy, dy, w, nc);
                for (int k = 0; k < nc; ++k) r2[k] += w[k];

                const double kv = alpha * std::exp(-r2[0] * inv2s2);
                kern[0] = kv;
                for (int k = 1; k < nc; ++k) kern[k] = -kv * inv2s2 * r2[k];

                // dot product of the two momenta
                row_mul(P(i, 0), P(j, 0), pp, nc);
                row_mul(P(i, 1), P(j, 1), w, nc);
                for (int k = 0; k < nc; ++k) pp[k] += w[k];

                // positions: dx_i += K p_j (both components), and symmetrically
                for (int u = 0; u < 2; ++u) {
                    row_mul(kern, P(j, u), w, nc);
                    row_axpy(1.0, w, dX(i, u), nc);
                    row_mul(kern, P(i, u), w, nc);
                    row_axpy(1.0, w, dX(j, u), nc);
                }

                // momenta: dp_i += (p_i . p_j) K (x_i - x_j) / sigma^2,
                // opposite sign on dp_j
                row_mul(kern, pp, w, nc);
                const double* kpp = w;
                double* f = r2;  // r2 no longer needed this pair
                row_mul(kpp, dx, f, nc);
                row_axpy(2.0 * inv2s2, f, dP(i, 0), nc);
                row_axpy(-2.0 * inv2s2, f, dP(j, 0), nc);
                row_mul(kpp, dy, f, nc);
                row_axpy(2.0 * inv2s2, f, dP(i, 1), nc);
                row_axpy(-2.0 * inv2s2, f, dP(j, 1), nc);
            }
    };
}

namespace {

// --- fast matching path ---------------------------------------------------
// Matching iterates thousands of shots, and a forward sensitivity pass costs
// about chart-dim times a plain one.  The packed helpers below integrate the
// same kernel dynamics on a flat (x, p) array and obtain the loss gradient
// by sweeping the recorded integration stages backwards with
// transpose-Jacobian products of the field, so a full gradient costs a few
// plain shots regardless of the landmark count.

struct PackedKernelFlow {
    int n;
    double alpha;
    double inv2s2;
};

// y = (x_1^1, x_1^2, ..., x_n^2, p_1^1, ..., p_n^2), value-only dynamics of
// landmark_hamiltonian_field.
void packed_field(const PackedKernelFlow& pr, const double* y, double* out) {
    const int n = pr.n;
    const double* X = y;
    const double* P = y + 2 * n;
    double* dX = out;
    double* dP = out + 2 * n;
    for (int i = 0; i < 4 * n; ++i) out[i] = 0.0;
    for (int i = 0; i < n; ++i) {
        dX[2 * i] += pr.alpha * P[2 * i];
        dX[2 * i + 1] += pr.alpha * P[2 * i + 1];
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double dx = X[2 * i] - X[2 * j];
            const double dy = X[2 * i + 1] - X[2 * j + 1];
            const double kv = pr.alpha * std::exp(-(dx * dx + dy * dy) * pr.inv2s2);
            const double pp = P[2 * i] * P[2 * j] + P[2 * i + 1] * P[2 * j + 1];
            dX[2 * i] += kv * P[2 * j];
            dX[2 * i + 1] += kv * P[2 * j + 1];
            dX[2 * j] += kv * P[2 * i];
            dX[2 * j + 1] += kv * P[2 * i + 1];
            const double w = 2.0 * pr.inv2s2 * kv * pp;
            dP[2 * i] += w * dx;
            dP[2 * i + 1] += w * dy;
            dP[2 * j] -= w * dx;
            dP[2 * j + 1] -= w * dy;
        }
}

// g += J(y)^T a with J the state Jacobian of packed_field.  Each pair's
// contribution is transposed by hand: the kernel value feels (x_i - x_j)
// through its exponent, the momentum force feels it again as a direct
// factor, and the momenta enter both linearly and through p_i . p_j.
void packed_field_jtvp(const PackedKernelFlow& pr, const double* y, const double* a,
                       double* g) {
    const int n = pr.n;
    const double* X = y;
    const double* P = y + 2 * n;
    const double* AX = a;
    const double* AP = a + 2 * n;
    double* GX = g;
    double* GP = g + 2 * n;
    for (int i = 0; i < n; ++i) {
        GP[2 * i] += pr.alpha * AX[2 * i];
        GP[2 * i + 1] += pr.alpha * AX[2 * i + 1];
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double dx = X[2 * i] - X[2 * j];
            const double dy = X[2 * i + 1] - X[2 * j + 1];
            const double kv = pr.alpha * std::exp(-(dx * dx + dy * dy) * pr.inv2s2);
            const double pp = P[2 * i] * P[2 * j] + P[2 * i + 1] * P[2 * j + 1];
            const double w = 2.0 * pr.inv2s2 * kv * pp;
            const double s_kv = AX[2 * i] * P[2 * j] + AX[2 * i + 1] * P[2 * j + 1] +
                                AX[2 * j] * P[2 * i] + AX[2 * j + 1] * P[2 * i + 1];
            const double cd0 = AP[2 * i] - AP[2 * j];
            const double cd1 = AP[2 * i + 1] - AP[2 * j + 1];
            const double s_w = cd0 * dx + cd1 * dy;
            const double cx = -2.0 * pr.inv2s2 * kv * (s_kv + 2.0 * pr.inv2s2 * pp * s_w);
            GX[2 * i] += cx * dx + w * cd0;
            GX[2 * i + 1] += cx * dy + w * cd1;
            GX[2 * j] -= cx * dx + w * cd0;
            GX[2 * j + 1] -= cx * dy + w * cd1;
            const double cpp = 2.0 * pr.inv2s2 * kv * s_w;
            GP[2 * i] += cpp * P[2 * j] + kv * AX[2 * j];
            GP[2 * i + 1] += cpp * P[2 * j + 1] + kv * AX[2 * j + 1];
            GP[2 * j] += cpp * P[2 * i] + kv * AX[2 * i];
            GP[2 * j + 1] += cpp * P[2 * i + 1] + kv * AX[2 * i + 1];
        }
}

// Classic RK4 on the packed state; false on a non-finite step.  When
// `stages` is non-null it records, per step, the base state and the three
// interior stage states, the evaluation points the adjoint sweep revisits.
bool packed_rk4(const PackedKernelFlow& pr, std::vector<double>& y, int n_steps, double T,
                std::vector<double>* stages) {
    const int N = 4 * pr.n;
    const double h = T / n_steps;
    std::vector<double> k1(N), k2(N), k3(N), k4(N), tmp(N);
    if (stages) stages->assign(static_cast<std::size_t>(n_steps) * 4 * N, 0.0);
    for (int s = 0; s < n_steps; ++s) {
        double* rec = stages ? stages->data() + static_cast<std::size_t>(s) * 4 * N : nullptr;
        if (rec)
            for (int i = 0; i < N; ++i) rec[i] = y[i];
        packed_field(pr, y.data(), k1.data());
        for (int i = 0; i < N; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        if (rec)
            for (int i = 0; i < N; ++i) rec[N + i] = tmp[i];
        packed_field(pr, tmp.data(), k2.data());
        for (int i = 0; i < N; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        if (rec)
            for (int i = 0; i < N; ++i) rec[2 * N + i] = tmp[i];
        packed_field(pr, tmp.data(), k3.data());
        for (int i = 0; i < N; ++i) tmp[i] = y[i] + h * k3[i];
        if (rec)
            for (int i = 0; i < N; ++i) rec[3 * N + i] = tmp[i];
        packed_field(pr, tmp.data(), k4.data());
        for (int i = 0; i < N; ++i)
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        for (int i = 0; i < N; ++i)
            if (!std::isfinite(y[i])) return false;
    }
    return true;
}

// Exact reverse of the recorded RK4 steps: w arrives as dL/d(y_end) and
// leaves as dL/d(y_0).  Stage adjoints chain through y_stage = y + c h k.
void packed_adjoint(const PackedKernelFlow& pr, const std::vector<double>& stages,
                    int n_steps, double T, std::vector<double>& w) {
    const int N = 4 * pr.n;
    const double h = T / n_steps;
    std::vector<double> a1(N), a2(N), a3(N), a4(N), acc(N);
    for (int s = n_steps - 1; s >= 0; --s) {
        const double* rec = stages.data() + static_cast<std::size_t>(s) * 4 * N;
        const double* y0 = rec;
        const double* y1 = rec + N;
        const double* y2 = rec + 2 * N;
        const double* y3 = rec + 3 * N;
        for (int i = 0; i < N; ++i) a4[i] = h / 6.0 * w[i];
        std::fill(acc.begin(), acc.end(), 0.0);
        packed_field_jtvp(pr, y3, a4.data(), acc.data());
        for (int i = 0; i < N; ++i) a3[i] = h / 3.0 * w[i] + h * acc[i];
        std::fill(acc.begin(), acc.end(), 0.0);
        packed_field_jtvp(pr, y2, a3.data(), acc.data());
        for (int i = 0; i < N; ++i) a2[i] = h / 3.0 * w[i] + 0.5 * h * acc[i];
        std::fill(acc.begin(), acc.end(), 0.0);
        packed_field_jtvp(pr, y1, a2.data(), acc.data());
        for (int i = 0; i < N; ++i) a1[i] = h / 6.0 * w[i] + 0.5 * h * acc[i];
        std::fill(acc.begin(), acc.end(), 0.0);
        packed_field_jtvp(pr, y0, a1.data(), acc.data());
        packed_field_jtvp(pr, y1, a2.data(), acc.data());
        packed_field_jtvp(pr, y2, a3.data(), acc.data());
        packed_field_jtvp(pr, y3, a4.data(), acc.data());
        for (int i = 0; i < N; ++i) w[i] += acc[i];
    }
}

bool parse_landmark_id(const std::string& id, int& n, double& sigma, double& alpha) {
    return std::sscanf(id.c_str(), "landmarks:%d,%lf,%lf", &n, &sigma, &alpha) == 3 &&
           n >= 1 && sigma > 0.0 && alpha > 0.0;
}

}  // namespace

LandmarkMatchResult match_landmarks(const Manifold& M, const Vec& x1, const Vec& x2,
                                    const LandmarkMatchConfig& cfg) {
    const int d = M.dim;
    if (static_cast<int>(x1.size()) != d || static_cast<int>(x2.size()) != d)
        throw std::invalid_argument("match_landmarks: configuration size mismatch");

    int kn = 0;
    double ksigma = 0.0, kalpha = 0.0;
    const bool packed = parse_landmark_id(M.name, kn, ksigma, kalpha) && 2 * kn == d;

    // Loss |endpoint - x2|^2 / d of the time-1 shot, gradient with respect
    // to p0 either by the adjoint sweep (manifolds from make_landmarks) or
    // by identity sensitivity seeds on the momentum rows (anything else).
    std::function<LossGrad(int)> make_loss;
    if (packed) {
        const PackedKernelFlow pr{kn, kalpha, 1.0 / (2.0 * ksigma * ksigma)};
        make_loss = [&x1, &x2, d, pr](int n_steps) -> LossGrad {
            return [&x1, &x2, d, pr, n_steps](const Vec& p, Vec* grad_out) {
                std::vector<double> y(2 * static_cast<std::size_t>(d)), stages;
                for (int c = 0; c < d; ++c) y[c] = x1[c];
                for (int c = 0; c < d; ++c) y[d + c] = p[c];
                if (!packed_rk4(pr, y, n_steps, 1.0, grad_out ? &stages : nullptr)) {
                    if (grad_out) grad_out->assign(d, 0.0);
                    return std::numeric_limits<double>::infinity();
                }
                double l = 0.0;
                for (int c = 0; c < d; ++c) l += (y[c] - x2[c]) * (y[c] - x2[c]);
                l /= d;
                if (grad_out) {
                    std::vector<double> w(2 * static_cast<std::size_t>(d), 0.0);
                    for (int c = 0; c < d; ++c) w[c] = 2.0 / d * (y[c] - x2[c]);
                    packed_adjoint(pr, stages, n_steps, 1.0, w);
                    for (int e = 0; e < d; ++e) (*grad_out)[e] = w[d + e];
                }
                return l;
            };
        };
    } else {
        OdeField f = hamiltonian_field(M);
        make_loss = [&x1, &x2, d, f](int n_steps) -> LossGrad {
            return [&x1, &x2, d, f, n_steps](const Vec& p, Vec* grad_out) {
                const int m = grad_out ? d : 0;
                State s0(2 * d, 1 + m);
                for (int c = 0; c < d; ++c) {
                    s0.row(c)[0] = x1[c];
                    s0.row(d + c)[0] = p[c];
                    if (m > 0) s0.row(d + c)[1 + c] = 1.0;
                }
                State end(0, 0);
                try {
                    end = integrate_ode_final(f, std::move(s0), n_steps, 1.0, OdeScheme::RK4);
                } catch (const NumericalError&) {
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
        };
    }

    // K(x_i, x_i) = alpha, so dividing the chart difference by alpha is the
    // exact momentum for well-separated landmarks and a sound first guess for
    // coupled ones.
    const double alpha = cometric(M, x1)(0, 0);
    Vec p0(d);
    for (int c = 0; c < d; ++c) p0[c] = (x2[c] - x1[c]) / alpha;

    OptimizeConfig opt = cfg.opt;
    opt.loss_target = cfg.loss_tol;

    LandmarkMatchResult res;
    res.iterations = 0;
    if (cfg.coarse_steps > 0 && cfg.coarse_steps < cfg.n_steps) {
        // Polish on the coarse grid too: near the match the grids agree to
        // well below the loss tolerance, so the refinement stage usually
        // accepts the coarse solution after a handful of steps.
        OptimizeResult coarse = minimize(make_loss(cfg.coarse_steps), std::move(p0), opt);
        p0 = std::move(coarse.x);
        res.iterations += coarse.iterations;
    }
    OptimizeResult fine = minimize(make_loss(cfg.n_steps), std::move(p0), opt);
    res.iterations += fine.iterations;
    res.p0 = std::move(fine.x);
    res.loss = fine.loss;
    res.converged = fine.loss <= cfg.loss_tol;
    res.flow = hamiltonian_flow(M, x1, res.p0, FlowConfig{cfg.n_steps, 1.0, OdeScheme::RK4});
    return res;
}

namespace {

// Closed polyline sampler: n points at equal arc length, starting at the
// first vertex.
Vec sample_closed_polyline(const std::vector<std::pair<double, double>>& verts, int n) {
    const int m = static_cast<int>(verts.size());
    std::vector<double> seglen(m);
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
        const auto& a = verts[i];
        const auto& b = verts[(i + 1) % m];
        seglen[i] = std::hypot(b.first - a.first, b.second - a.second);
        total += seglen[i];
    }
    Vec out(2 * static_cast<std::size_t>(n));
    int seg = 0;
    double seg_start = 0.0;
    for (int k = 0; k < n; ++k) {
        const double target = total * k / n;
        while (seg_start + seglen[seg] < target && seg < m - 1) {
            seg_start += seglen[seg];
            ++seg;
        }
        const double t = seglen[seg] > 0.0 ? (target - seg_start) / seglen[seg] : 0.0;
        const auto& a = verts[seg];
        const auto& b = verts[(seg + 1) % m];
        out[2 * k] = a.first + t * (b.first - a.first);
        out[2 * k + 1] = a.second + t * (b.second - a.second);
    }
    return out;
}

}  // namespace

Vec shape_outline(const std::string& which, int n) {
    if (n < 1) throw std::invalid_argument("shape_outline: need at least one point");
    if (which == "T" || which == "t") {
        // block letter, counterclockwise from the bottom-left of the stem
        std::vector<std::pair<double, double>> verts = {
            {-0.15, 0.0}, {0.15, 0.0},  {0.15, 0.7},  {0.5, 0.7},
            {0.5, 1.0},   {-0.5, 1.0},  {-0.5, 0.7},  {-0.15, 0.7},
        };
        return sample_closed_polyline(verts, n);
    }
    if (which == "O" || which == "o") {
        // ellipse around (0, 0.5), started at the bottom, counterclockwise;
        // arc length handled by sampling a fine polygon
        std::vector<std::pair<double, double>> verts;
        const int fine = 4096;
        for (int i = 0; i < fine; ++i) {
            const double th = -M_PI / 2.0 + 2.0 * M_PI * i / fine;
            verts.emplace_back(0.4 * std::cos(th), 0.5 + 0.5 * std::sin(th));
        }
        return sample_closed_polyline(verts, n);
    }
    throw std::invalid_argument("shape_outline: unknown shape '" + which + "'");
}

}  // namespace geomkit
