#include "geomkit/jet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <set>

namespace geomkit {

namespace {

// Monomials are encoded as (degree << 48) | var0 << 32 | var1 << 16 | var2,
// variables sorted ascending and packed from the high end.  Degree <= 3 and
// var ids < 65536, which covers every algebra this library builds.
std::uint64_t encode(std::span<const std::uint16_t> vars) {
    std::uint64_t key = static_cast<std::uint64_t>(vars.size()) << 48;
    int shift = 32;
    for (std::uint16_t v : vars) {
        key |= static_cast<std::uint64_t>(v) << shift;
        shift -= 16;
    }
    return key;
}

}  // namespace

JetSpace::JetSpace(int n_vars, int order) : n_vars_(n_vars), order_(order) {
    if (n_vars < 0 || order < 0 || order > 3)
        throw std::invalid_argument("JetSpace: order must be in {0,1,2,3}");
    const auto n = static_cast<std::uint16_t>(n_vars);

    mono_off_.push_back(0);
    auto push = [&](std::initializer_list<std::uint16_t> vars) {
        mono_vars_.insert(mono_vars_.end(), vars.begin(), vars.end());
        mono_off_.push_back(static_cast<std::int32_t>(mono_vars_.size()));
    };
    push({});
    if (order >= 1)
        for (std::uint16_t i = 0; i < n; ++i) push({i});
    if (order >= 2)
        for (std::uint16_t i = 0; i < n; ++i)
            for (std::uint16_t j = i; j < n; ++j) push({i, j});
    if (order >= 3)
        for (std::uint16_t i = 0; i < n; ++i)
            for (std::uint16_t j = i; j < n; ++j)
                for (std::uint16_t k = j; k < n; ++k) push({i, j, k});
    n_coeff_ = static_cast<int>(mono_off_.size()) - 1;

    rank_table_.reserve(n_coeff_);
    for (int idx = 0; idx < n_coeff_; ++idx)
        rank_table_.emplace_back(encode(mono(idx)), idx);
    std::sort(rank_table_.begin(), rank_table_.end());

    // Factorization table: for each monomial, the ordered sub-monomial pairs
    // (a,b) with a*b = target.  Ordered by rank of a; identical in every
    // algebra that contains the target, which is what keeps low-order
    // coefficients bitwise stable across truncation orders.
    prod_off_.push_back(0);
    std::vector<std::uint16_t> sub, rest;
    for (int idx = 0; idx < n_coeff_; ++idx) {
        auto vars = mono(idx);
        const int g = static_cast<int>(vars.size());
        std::set<std::pair<std::int32_t, std::int32_t>> seen;
        for (int mask = 0; mask < (1 << g); ++mask) {
            sub.clear();
            rest.clear();
            for (int b = 0; b < g; ++b)
                (mask >> b & 1 ? sub : rest).push_back(vars[b]);
            const int ra = rank_of(sub);
            const int rb = rank_of(rest);
            seen.insert({ra, rb});
        }
        for (auto& pr : seen) prod_pairs_.push_back(pr);
        prod_off_.push_back(static_cast<std::int32_t>(prod_pairs_.size()));
    }
}

int JetSpace::rank_of(std::span<const std::uint16_t> vars) const {
    if (static_cast<int>(vars.size()) > order_) return -1;
    const std::uint64_t key = encode(vars);
    auto it = std::lower_bound(rank_table_.begin(), rank_table_.end(),
                               std::make_pair(key, std::int32_t{-1}));
    if (it == rank_table_.end() || it->first != key) return -1;
    return it->second;
}

JetSpacePtr JetSpace::get(int n_vars, int order) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, JetSpacePtr> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{n_vars, order}];
    if (!slot) slot = JetSpacePtr(new JetSpace(n_vars, order));
    return slot;
}

Jet Jet::variable(const JetSpacePtr& sp, int i, double value) {
    if (sp->order() < 1)
        throw std::invalid_argument("Jet::variable needs order >= 1");
    if (i < 0 || i >= sp->n_vars())
        throw std::invalid_argument("Jet::variable: index out of range");
    Jet j(sp, value);
    j.c_[1 + i] = 1.0;
    return j;
}

double Jet::partial(std::span<const int> vars) const {
    std::vector<std::uint16_t> v;
    v.reserve(vars.size());
    for (int x : vars) v.push_back(static_cast<std::uint16_t>(x));
    std::sort(v.begin(), v.end());
    const int idx = sp_->rank_of(v);
    if (idx < 0) throw std::invalid_argument("Jet::partial: monomial not in algebra");
    // Taylor coefficient times multiplicity factorial.
    double fact = 1.0;
    int run = 1;
    for (std::size_t k = 1; k < v.size(); ++k) {
        run = (v[k] == v[k - 1]) ? run + 1 : 1;
        fact *= run;
    }
    return c_[idx] * fact;
}

void require_same_space(const Jet& a, const Jet& b) {
    if (a.space() != b.space())
        throw std::invalid_argument("jet arithmetic across different algebras");
}

Jet& Jet::operator+=(const Jet& o) {
    require_same_space(*this, o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
}

Jet& Jet::operator-=(const Jet& o) {
    require_same_space(*this, o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
}

Jet& Jet::operator*=(double d) {
    for (double& x : c_) x *= d;
    return *this;
}

Jet operator-(const Jet& a) {
    Jet r(a.sp_, 0.0);
    for (std::size_t i = 0; i < a.c_.size(); ++i) r.c_[i] = -a.c_[i];
    return r;
}

Jet operator-(double a, const Jet& b) {
    Jet r = -b;
    r.c_[0] += a;
    return r;
}

Jet operator*(const Jet& a, const Jet& b) {
    require_same_space(a, b);
    const JetSpace& sp = *a.sp_;
    Jet r(a.sp_, 0.0);
    if (sp.order() <= 1) {
        // Hot path; same gather order as the table below.
        const double a0 = a.c_[0], b0 = b.c_[0];
        r.c_[0] = a0 * b0;
        for (int i = 1; i < sp.size(); ++i) r.c_[i] = a0 * b.c_[i] + a.c_[i] * b0;
        return r;
    }
    for (int t = 0; t < sp.size(); ++t) {
        double acc = 0.0;
        for (auto [ia, ib] : sp.factorizations(t)) acc += a.c_[ia] * b.c_[ib];
        r.c_[t] = acc;
    }
    return r;
}

Jet Jet::compose_series(const Jet& u, const double* cs) {
    const int order = u.sp_->order();
    if (order == 0) return Jet(u.sp_, cs[0]);
    Jet du = u;
    du.c_[0] = 0.0;
    Jet r(u.sp_, cs[order]);
    for (int k = order - 1; k >= 0; --k) {
        r = du * r;
        r.c_[0] += cs[k];
    }
    return r;
}

Jet operator/(const Jet& a, const Jet& b) {
    require_same_space(a, b);
    const double b0 = b.c_[0];
    if (b0 == 0.0) throw NumericalError("jet division by zero value");
    const double inv = 1.0 / b0;
    const double cs[4] = {inv, -inv * inv, inv * inv * inv, -inv * inv * inv * inv};
    return a * Jet::compose_series(b, cs);
}

Jet operator/(double a, const Jet& b) {
    const double b0 = b.c_[0];
    if (b0 == 0.0) throw NumericalError("jet division by zero value");
    const double inv = 1.0 / b0;
    const double cs[4] = {inv, -inv * inv, inv * inv * inv, -inv * inv * inv * inv};
    Jet r = Jet::compose_series(b, cs);
    r *= a;
    return r;
}

Jet operator/(Jet a, double b) {
    if (b == 0.0) throw NumericalError("jet division by zero scalar");
    a *= 1.0 / b;
    return a;
}

Jet exp(const Jet& u) {
    const double e = std::exp(u.value());
    const double cs[4] = {e, e, e / 2.0, e / 6.0};
    return Jet::compose_series(u, cs);
}

Jet log(const Jet& u) {
    const double v = u.value();
    if (v <= 0.0) throw NumericalError("jet log of non-positive value");
    const double iv = 1.0 / v;
    const double cs[4] = {std::log(v), iv, -iv * iv / 2.0, iv * iv * iv / 3.0};
    return Jet::compose_series(u, cs);
}

Jet sin(const Jet& u) {
    const double s = std::sin(u.value()), c = std::cos(u.value());
    const double cs[4] = {s, c, -s / 2.0, -c / 6.0};
    return Jet::compose_series(u, cs);
}

Jet cos(const Jet& u) {
    const double s = std::sin(u.value()), c = std::cos(u.value());
    const double cs[4] = {c, -s, -c / 2.0, s / 6.0};
    return Jet::compose_series(u, cs);
}

Jet sqrt(const Jet& u) {
    const double v = u.value();
    if (v < 0.0 || (v == 0.0 && u.space()->order() >= 1))
        throw NumericalError("jet sqrt at a singular point");
    const double s = std::sqrt(v);
    const double cs[4] = {s, 0.5 / s, -1.0 / (8.0 * s * v), 1.0 / (16.0 * s * v * v)};
    return Jet::compose_series(u, cs);
}

Jet pow(const Jet& u, double p) {
    const double v = u.value();
    const double ip = std::floor(p);
    if (ip == p && std::abs(p) <= 16.0) {
        // Integer exponents by repeated multiplication: exact domain (any
        // base for p >= 0), deterministic operation order.
        const int n = static_cast<int>(std::abs(ip));
        Jet r = Jet::constant(u.space(), 1.0);
        for (int k = 0; k < n; ++k) r = r * u;
        if (p < 0) return 1.0 / r;
        return r;
    }
    if (v <= 0.0) throw NumericalError("jet pow of non-positive base with real exponent");
    const double f = std::pow(v, p);
    const double cs[4] = {f, p * f / v, p * (p - 1.0) * f / (v * v) / 2.0,
                          p * (p - 1.0) * (p - 2.0) * f / (v * v * v) / 6.0};
    return Jet::compose_series(u, cs);
}

Jet formal_derivative(const Jet& u, int var) {
    const JetSpace& sp = *u.sp_;
    Jet r(u.sp_, 0.0);
    std::vector<std::uint16_t> reduced;
    for (int idx = 1; idx < sp.size(); ++idx) {
        auto vars = sp.mono(idx);
        int mult = 0;
        for (auto v : vars) mult += (v == var);
        if (mult == 0) continue;
        reduced.clear();
        bool removed = false;
        for (auto v : vars) {
            if (!removed && v == var) { removed = true; continue; }
            reduced.push_back(v);
        }
        const int tgt = sp.rank_of(reduced);
        r.c_[tgt] += static_cast<double>(mult) * u.c_[idx];
    }
    return r;
}

}  // namespace geomkit
