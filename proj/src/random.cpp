#include "geomkit/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace geomkit {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& s : s_) s = splitmix64(sm);
}

Rng Rng::stream(std::uint64_t seed, std::uint64_t stream_index) {
    // Remix the pair through splitmix64 so neighbouring stream indices give
    // unrelated states.
    std::uint64_t sm = seed;
    const std::uint64_t a = splitmix64(sm);
    sm = stream_index ^ 0xD1B54A32D192ED03ULL;
    const std::uint64_t b = splitmix64(sm);
    return Rng(a ^ rotl(b, 17));
}

std::uint64_t Rng::next_u64() {
    // xoshiro256++
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (have_cached_) {
        have_cached_ = false;
        return cached_;
    }
    double u1 = uniform01();
    if (u1 == 0.0) u1 = 0x1.0p-53;  // keep log finite
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
}

Matrix gaussian_increments(std::uint64_t seed, int n_steps, int dim, double dt) {
    if (n_steps < 0 || dim < 0) throw std::invalid_argument("gaussian_increments: negative size");
    if (dt <= 0.0) throw std::invalid_argument("gaussian_increments: dt must be positive");
    Rng rng(seed);
    const double s = std::sqrt(dt);
    Matrix m(n_steps, dim);
    for (int i = 0; i < n_steps; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = s * rng.normal();
    return m;
}

}  // namespace geomkit
