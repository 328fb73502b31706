#pragma once
// Truncated multivariate Taylor arithmetic ("jets").
//
// A Jet holds the Taylor coefficients of a scalar quantity with respect to
// n seed variables, truncated at a fixed total degree (1, 2 or 3).  The
// coefficient of a monomial x^a is the mixed partial divided by a!, so
// products need no multinomial bookkeeping.  Evaluating an ordinary-looking
// numeric program on seeded jets yields the program's value together with
// all of its partial derivatives up to the truncation order, with no step
// size and no cancellation error.
//
// Monomials are enumerated graded-lexicographically, so coefficient index 0
// is the value and indices 1..n are the first partials.  All arithmetic
// accumulates contributions to each output coefficient in a fixed canonical
// order.  That makes results bitwise independent of the truncation order
// for coefficients shared between algebras, a property the integrator tests
// rely on.

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace geomkit {

// Raised for numerical failures: singular pivots, domain errors in jet
// arithmetic, non-finite states mid-integration.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

class JetSpace;
using JetSpacePtr = std::shared_ptr<const JetSpace>;

// Immutable description of one truncated polynomial algebra: the monomial
// basis and the factorization table driving multiplication.  Instances are
// cached, so fields evaluated repeatedly do not rebuild tables.
class JetSpace {
public:
    static JetSpacePtr get(int n_vars, int order);

    int n_vars() const { return n_vars_; }
    int order() const { return order_; }
    int size() const { return n_coeff_; }

    int degree(int idx) const { return mono_off_[idx + 1] - mono_off_[idx]; }
    // Sorted variable list (with repetition) of monomial idx.
    std::span<const std::uint16_t> mono(int idx) const {
        return {mono_vars_.data() + mono_off_[idx],
                static_cast<std::size_t>(degree(idx))};
    }
    // Index of the monomial with the given sorted variable list; -1 when the
    // monomial is not representable (degree too high or bad variables).
    int rank_of(std::span<const std::uint16_t> vars) const;

    // Multiplication table: target t gathers sum over u[a]*v[b].
    std::span<const std::pair<std::int32_t, std::int32_t>> factorizations(int t) const {
        return {prod_pairs_.data() + prod_off_[t],
                static_cast<std::size_t>(prod_off_[t + 1] - prod_off_[t])};
    }

private:
    JetSpace(int n_vars, int order);

    int n_vars_ = 0;
    int order_ = 0;
    int n_coeff_ = 0;
    std::vector<std::uint16_t> mono_vars_;
    std::vector<std::int32_t> mono_off_;
    std::vector<std::int32_t> prod_off_;
    std::vector<std::pair<std::int32_t, std::int32_t>> prod_pairs_;
    // Encoded monomial -> index, for rank_of and table construction.
    std::vector<std::pair<std::uint64_t, std::int32_t>> rank_table_;  // sorted by key
};

class Jet {
public:
    // Default: the constant 0 in the trivial algebra (no variables).
    Jet() : Jet(JetSpace::get(0, 0), 0.0) {}
    Jet(JetSpacePtr sp, double value) : sp_(std::move(sp)), c_(sp_->size(), 0.0) {
        c_[0] = value;
    }

    static Jet constant(const JetSpacePtr& sp, double value) { return Jet(sp, value); }
    // Seed variable i: value + one unit of the i-th first-order coefficient.
    static Jet variable(const JetSpacePtr& sp, int i, double value);

    const JetSpacePtr& space() const { return sp_; }
    double value() const { return c_[0]; }
    double coeff(int idx) const { return c_[idx]; }
    double& coeff(int idx) { return c_[idx]; }
    int size() const { return static_cast<int>(c_.size()); }

    // Mixed partial derivative for the given variable list (repetition for
    // higher powers), i.e. the Taylor coefficient times the factorial of the
    // multiplicities.  partial({}) is the value.
    double partial(std::span<const int> vars) const;
    double partial(std::initializer_list<int> vars) const {
        return partial(std::span<const int>(vars.begin(), vars.size()));
    }

    Jet& operator+=(const Jet& o);
    Jet& operator-=(const Jet& o);
    Jet& operator+=(double d) { c_[0] += d; return *this; }
    Jet& operator-=(double d) { c_[0] -= d; return *this; }
    Jet& operator*=(double d);

    friend Jet operator+(Jet a, const Jet& b) { a += b; return a; }
    friend Jet operator-(Jet a, const Jet& b) { a -= b; return a; }
    friend Jet operator+(Jet a, double b) { a += b; return a; }
    friend Jet operator+(double a, Jet b) { b += a; return b; }
    friend Jet operator-(Jet a, double b) { a -= b; return a; }
    friend Jet operator-(double a, const Jet& b);
    friend Jet operator-(const Jet& a);
    friend Jet operator*(const Jet& a, const Jet& b);
    friend Jet operator*(Jet a, double b) { a *= b; return a; }
    friend Jet operator*(double a, Jet b) { b *= a; return b; }
    friend Jet operator/(const Jet& a, const Jet& b);
    friend Jet operator/(double a, const Jet& b);
    friend Jet operator/(Jet a, double b);

    friend Jet exp(const Jet& u);
    friend Jet log(const Jet& u);
    friend Jet sin(const Jet& u);
    friend Jet cos(const Jet& u);
    friend Jet sqrt(const Jet& u);
    friend Jet pow(const Jet& u, double p);

    // Formal derivative with respect to one variable.  Coefficients of the
    // result are valid one degree below the truncation order (the top-degree
    // information of the derivative is not representable and reads as 0).
    friend Jet formal_derivative(const Jet& u, int var);

private:
    // f(u) for an analytic f given by Taylor coefficients cs[0..order] of f
    // about u.value(); evaluated by Horner in (u - value).
    static Jet compose_series(const Jet& u, const double* cs);

    JetSpacePtr sp_;
    std::vector<double> c_;
};

// Throws when two jets do not share an algebra; mixed-space arithmetic is
// always a bug at a call site.
void require_same_space(const Jet& a, const Jet& b);

}  // namespace geomkit
