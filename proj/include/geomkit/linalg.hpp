#pragma once
// Small dense matrix/tensor kernel.  Sizes in this library are desk scale
// (dimension <= a few hundred), so everything is plain row-major storage and
// O(n^3) loops; no external BLAS.  The LU routines are templated on the
// scalar so the same factorization runs on doubles and on jets (the metric
// inverse under differentiation is an LU solve in the jet ring).

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "geomkit/jet.hpp"

namespace geomkit {

using Vec = std::vector<double>;

struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, fill) {}

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
    static Matrix from_rows(const std::vector<Vec>& rows_in);

    Vec row(int i) const { return Vec(a.begin() + static_cast<std::size_t>(i) * cols,
                                      a.begin() + static_cast<std::size_t>(i + 1) * cols); }
};

Matrix operator+(const Matrix& x, const Matrix& y);
Matrix operator-(const Matrix& x, const Matrix& y);
Matrix operator*(double s, Matrix m);
Matrix matmul(const Matrix& x, const Matrix& y);
Matrix transpose(const Matrix& m);
Vec matvec(const Matrix& m, const Vec& v);

double dot(const Vec& x, const Vec& y);
double norm2(const Vec& x);
Vec axpy(double a, const Vec& x, const Vec& y);  // a*x + y
Vec scale(double a, Vec x);
Vec vsub(const Vec& x, const Vec& y);
Vec vadd(const Vec& x, const Vec& y);

double frobenius_norm(const Matrix& m);
double max_abs(const Matrix& m);
double max_abs_diff(const Matrix& x, const Matrix& y);

// LU inversion with partial pivoting.  Throws NumericalError when the best
// available pivot falls below 1e-13 times the max-abs of the input.
Matrix invert(const Matrix& m);
Vec solve(const Matrix& m, const Vec& rhs);

// Symmetric eigendecomposition by cyclic Jacobi rotations (small matrices).
// Returns eigenvalues ascending; V columns are the eigenvectors.
void sym_eigen(const Matrix& m, Vec& eigenvalues, Matrix& V);
// Symmetric positive definite square root via sym_eigen.
Matrix sym_sqrt(const Matrix& m);
// True when a Cholesky factorization succeeds with positive pivots.
bool is_spd(const Matrix& m, double tol = 0.0);

// Dense tensor of arbitrary rank with row-major (last index fastest) layout.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> a;

    Tensor() = default;
    explicit Tensor(std::vector<int> s);

    int rank() const { return static_cast<int>(shape.size()); }
    std::size_t size() const { return a.size(); }
    std::size_t offset(std::span<const int> idx) const;
    double& at(std::initializer_list<int> idx);
    double at(std::initializer_list<int> idx) const;

    static Tensor from_matrix(const Matrix& m);
    Matrix as_matrix() const;  // rank-2 only
};

// General tensordot: contracts the listed axis pairs (axis of x, axis of y).
// The result carries x's free axes followed by y's free axes, matching the
// usual numeric-library convention.
Tensor contract(const Tensor& x, const Tensor& y,
                const std::vector<std::pair<int, int>>& axes);

// --- scalar-ring LU -------------------------------------------------------
// Generic square-system routines used with S = double and S = Jet.  Pivoting
// compares the value part; `value_of` extracts it.

inline double value_of(double x) { return x; }
inline double value_of(const Jet& x) { return x.value(); }

template <class S>
std::vector<S> lu_invert_ring(int n, std::vector<S> m, const S& one) {
    double scale = 0.0;
    for (const S& x : m) scale = std::max(scale, std::abs(value_of(x)));
    const double tol = 1e-13 * scale;

    std::vector<S> inv;
    inv.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            inv.push_back(i == j ? one : (one - one));

    auto M = [&](std::vector<S>& s, int i, int j) -> S& {
        return s[static_cast<std::size_t>(i) * n + j];
    };
    // Gauss-Jordan with partial pivoting, applied to [m | I].
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(value_of(M(m, r, col))) > std::abs(value_of(M(m, piv, col)))) piv = r;
        if (std::abs(value_of(M(m, piv, col))) <= tol || value_of(M(m, piv, col)) == 0.0)
            throw NumericalError("singular matrix in LU inversion (pivot " +
                                 std::to_string(std::abs(value_of(M(m, piv, col)))) +
                                 " at column " + std::to_string(col) + ")");
        if (piv != col)
            for (int j = 0; j < n; ++j) {
                std::swap(M(m, col, j), M(m, piv, j));
                std::swap(M(inv, col, j), M(inv, piv, j));
            }
        const S d = M(m, col, col);
        for (int j = 0; j < n; ++j) {
            M(m, col, j) = M(m, col, j) / d;
            M(inv, col, j) = M(inv, col, j) / d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const S f = M(m, r, col);
            if (value_of(f) == 0.0) {
                bool zero = true;
                // Jets can carry derivative parts on a zero value; only skip
                // the update when the factor is identically zero.
                if constexpr (!std::is_same_v<S, double>) {
                    for (int k = 0; k < f.size(); ++k)
                        if (f.coeff(k) != 0.0) { zero = false; break; }
                }
                if (zero) continue;
            }
            for (int j = 0; j < n; ++j) {
                M(m, r, j) = M(m, r, j) - f * M(m, col, j);
                M(inv, r, j) = M(inv, r, j) - f * M(inv, col, j);
            }
        }
    }
    return inv;
}

}  // namespace geomkit
