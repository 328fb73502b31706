#pragma once
// Deterministic random numbers.
//
// Generator: xoshiro256++ (Blackman & Vigna), state expanded from the user
// seed with splitmix64.  Gaussians come from the Box-Muller transform on
// 53-bit uniforms.  Everything here is integer arithmetic plus exactly
// specified double operations, so streams are bit-identical across platforms
// and standard libraries; std::normal_distribution is deliberately not used
// because the standard leaves its algorithm unspecified.

#include <cstdint>

#include "geomkit/linalg.hpp"

namespace geomkit {

class Rng {
public:
    explicit Rng(std::uint64_t seed);
    // Independent stream for Monte Carlo work: one generator per
    // (seed, stream index) pair, e.g. per sample path.
    static Rng stream(std::uint64_t seed, std::uint64_t stream_index);

    std::uint64_t next_u64();
    // Uniform on [0,1) with 53 random mantissa bits.
    double uniform01();
    // Standard normal deviate (Box-Muller; generates pairs, caches one).
    double normal();

private:
    std::uint64_t s_[4];
    double cached_ = 0.0;
    bool have_cached_ = false;
};

// n_steps x dim matrix of independent N(0, dt) increments, suitable for
// driving the stochastic integrators.  Row i is the increment over step i.
Matrix gaussian_increments(std::uint64_t seed, int n_steps, int dim, double dt);

}  // namespace geomkit
