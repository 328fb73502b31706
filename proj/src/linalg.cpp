#include "geomkit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace geomkit {

Matrix Matrix::from_rows(const std::vector<Vec>& rows_in) {
    if (rows_in.empty()) return Matrix();
    Matrix m(static_cast<int>(rows_in.size()), static_cast<int>(rows_in[0].size()));
    for (int i = 0; i < m.rows; ++i) {
        if (static_cast<int>(rows_in[i].size()) != m.cols)
            throw std::invalid_argument("Matrix::from_rows: ragged rows");
        std::copy(rows_in[i].begin(), rows_in[i].end(), m.a.begin() + static_cast<std::size_t>(i) * m.cols);
    }
    return m;
}

Matrix operator+(const Matrix& x, const Matrix& y) {
    if (x.rows != y.rows || x.cols != y.cols)
        throw std::invalid_argument("matrix addition: shape mismatch");
    Matrix r = x;
    for (std::size_t i = 0; i < r.a.size(); ++i) r.a[i] += y.a[i];
    return r;
}

Matrix operator-(const Matrix& x, const Matrix& y) {
    if (x.rows != y.rows || x.cols != y.cols)
        throw std::invalid_argument("matrix subtraction: shape mismatch");
    Matrix r = x;
    for (std::size_t i = 0; i < r.a.size(); ++i) r.a[i] -= y.a[i];
    return r;
}

Matrix operator*(double s, Matrix m) {
    for (double& x : m.a) x *= s;
    return m;
}

Matrix matmul(const Matrix& x, const Matrix& y) {
    if (x.cols != y.rows) throw std::invalid_argument("matmul: inner dimension mismatch");
    Matrix r(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            const double xv = x(i, k);
            if (xv == 0.0) continue;
            for (int j = 0; j < y.cols; ++j) r(i, j) += xv * y(k, j);
        }
    return r;
}

Matrix transpose(const Matrix& m) {
    Matrix r(m.cols, m.rows);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) r(j, i) = m(i, j);
    return r;
}

Vec matvec(const Matrix& m, const Vec& v) {
    if (m.cols != static_cast<int>(v.size()))
        throw std::invalid_argument("matvec: dimension mismatch");
    Vec r(m.rows, 0.0);
    for (int i = 0; i < m.rows; ++i) {
        double acc = 0.0;
        for (int j = 0; j < m.cols; ++j) acc += m(i, j) * v[j];
        r[i] = acc;
    }
    return r;
}

double dot(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw std::invalid_argument("dot: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

double norm2(const Vec& x) { return std::sqrt(dot(x, x)); }

Vec axpy(double a, const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw std::invalid_argument("axpy: dimension mismatch");
    Vec r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = a * x[i] + y[i];
    return r;
}

Vec scale(double a, Vec x) {
    for (double& v : x) v *= a;
    return x;
}

Vec vsub(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw std::invalid_argument("vsub: dimension mismatch");
    Vec r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] - y[i];
    return r;
}

Vec vadd(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw std::invalid_argument("vadd: dimension mismatch");
    Vec r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] + y[i];
    return r;
}

double frobenius_norm(const Matrix& m) {
    double acc = 0.0;
    for (double x : m.a) acc += x * x;
    return std::sqrt(acc);
}

double max_abs(const Matrix& m) {
    double r = 0.0;
    for (double x : m.a) r = std::max(r, std::abs(x));
    return r;
}

double max_abs_diff(const Matrix& x, const Matrix& y) {
    if (x.rows != y.rows || x.cols != y.cols)
        throw std::invalid_argument("max_abs_diff: shape mismatch");
    double r = 0.0;
    for (std::size_t i = 0; i < x.a.size(); ++i) r = std::max(r, std::abs(x.a[i] - y.a[i]));
    return r;
}

Matrix invert(const Matrix& m) {
    if (m.rows != m.cols) throw std::invalid_argument("invert: matrix not square");
    auto inv = lu_invert_ring<double>(m.rows, m.a, 1.0);
    Matrix r(m.rows, m.cols);
    r.a = std::move(inv);
    return r;
}

Vec solve(const Matrix& m, const Vec& rhs) { return matvec(invert(m), rhs); }

void sym_eigen(const Matrix& m, Vec& eigenvalues, Matrix& V) {
    if (m.rows != m.cols) throw std::invalid_argument("sym_eigen: matrix not square");
    const int n = m.rows;
    Matrix A = m;
    V = Matrix::identity(n);
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(A(p, q)) < 1e-300) continue;
                const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = V(k, p), vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
    }
    eigenvalues.assign(n, 0.0);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Vec diag(n);
    for (int i = 0; i < n; ++i) diag[i] = A(i, i);
    std::sort(order.begin(), order.end(), [&](int i, int j) { return diag[i] < diag[j]; });
    Matrix Vs(n, n);
    for (int j = 0; j < n; ++j) {
        eigenvalues[j] = diag[order[j]];
        for (int i = 0; i < n; ++i) Vs(i, j) = V(i, order[j]);
    }
    V = Vs;
}

Matrix sym_sqrt(const Matrix& m) {
    Vec ev;
    Matrix V;
    sym_eigen(m, ev, V);
    const int n = m.rows;
    for (double l : ev)
        if (l <= 0.0) throw NumericalError("sym_sqrt of a non positive definite matrix");
    Matrix D(n, n);
    for (int i = 0; i < n; ++i) D(i, i) = std::sqrt(ev[i]);
    return matmul(matmul(V, D), transpose(V));
}

bool is_spd(const Matrix& m, double tol) {
    if (m.rows != m.cols) return false;
    const int n = m.rows;
    Matrix L(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = m(i, j);
            for (int k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
            if (i == j) {
                if (s <= tol) return false;
                L(i, i) = std::sqrt(s);
            } else {
                L(i, j) = s / L(j, j);
            }
        }
    }
    return true;
}

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw std::invalid_argument("Tensor: negative extent");
        n *= static_cast<std::size_t>(d);
    }
    a.assign(n, 0.0);
}

std::size_t Tensor::offset(std::span<const int> idx) const {
    if (idx.size() != shape.size()) throw std::invalid_argument("Tensor: rank mismatch");
    std::size_t off = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] < 0 || idx[k] >= shape[k]) throw std::out_of_range("Tensor: index out of range");
        off = off * static_cast<std::size_t>(shape[k]) + static_cast<std::size_t>(idx[k]);
    }
    return off;
}

double& Tensor::at(std::initializer_list<int> idx) {
    std::vector<int> v(idx);
    return a[offset(v)];
}

double Tensor::at(std::initializer_list<int> idx) const {
    std::vector<int> v(idx);
    return a[offset(v)];
}

Tensor Tensor::from_matrix(const Matrix& m) {
    Tensor t({m.rows, m.cols});
    t.a = m.a;
    return t;
}

Matrix Tensor::as_matrix() const {
    if (rank() != 2) throw std::invalid_argument("Tensor::as_matrix: rank != 2");
    Matrix m(shape[0], shape[1]);
    m.a = a;
    return m;
}

Tensor contract(const Tensor& x, const Tensor& y,
                const std::vector<std::pair<int, int>>& axes) {
    std::vector<bool> xc(x.rank(), false), yc(y.rank(), false);
    std::vector<int> cdims;
    for (auto [ax, ay] : axes) {
        if (ax < 0 || ax >= x.rank() || ay < 0 || ay >= y.rank())
            throw std::invalid_argument("contract: axis out of range");
        if (x.shape[ax] != y.shape[ay])
            throw std::invalid_argument("contract: contracted extents differ");
        if (xc[ax] || yc[ay]) throw std::invalid_argument("contract: repeated axis");
        xc[ax] = yc[ay] = true;
        cdims.push_back(x.shape[ax]);
    }
    std::vector<int> xfree, yfree, out_shape;
    for (int i = 0; i < x.rank(); ++i)
        if (!xc[i]) { xfree.push_back(i); out_shape.push_back(x.shape[i]); }
    for (int i = 0; i < y.rank(); ++i)
        if (!yc[i]) { yfree.push_back(i); out_shape.push_back(y.shape[i]); }

    Tensor r(out_shape);
    std::vector<int> xi(x.rank(), 0), yi(y.rank(), 0);
    std::vector<int> fx(xfree.size(), 0), fy(yfree.size(), 0), ci(axes.size(), 0);

    auto advance = [](std::vector<int>& idx, const std::vector<int>& dims) {
        for (int k = static_cast<int>(idx.size()) - 1; k >= 0; --k) {
            if (++idx[k] < dims[k]) return true;
            idx[k] = 0;
        }
        return false;
    };

    std::vector<int> xfree_dims, yfree_dims;
    for (int i : xfree) xfree_dims.push_back(x.shape[i]);
    for (int i : yfree) yfree_dims.push_back(y.shape[i]);

    std::size_t out_off = 0;
    do {
        do {
            double acc = 0.0;
            std::fill(ci.begin(), ci.end(), 0);
            bool more = true;
            while (more) {
                for (std::size_t k = 0; k < xfree.size(); ++k) xi[xfree[k]] = fx[k];
                for (std::size_t k = 0; k < yfree.size(); ++k) yi[yfree[k]] = fy[k];
                for (std::size_t k = 0; k < axes.size(); ++k) {
                    xi[axes[k].first] = ci[k];
                    yi[axes[k].second] = ci[k];
                }
                acc += x.a[x.offset(xi)] * y.a[y.offset(yi)];
                more = !ci.empty() && advance(ci, cdims);
                if (ci.empty()) break;
            }
            r.a[out_off++] = acc;
        } while (advance(fy, yfree_dims));
    } while (advance(fx, xfree_dims));
    return r;
}

}  // namespace geomkit
