#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "te/linalg.hpp"

namespace te {

std::uint64_t splitmix64(std::uint64_t x);

/// Sub-seed for a named component ("sketch", "samplers", "chd", ...). Each
/// component gets an independent stream from one global seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

/// Sub-seed for the index-th item of a batch; lets parallel loops draw
/// per-item streams that do not depend on scheduling.
std::uint64_t item_seed(std::uint64_t seed, std::uint64_t index);

/// mt19937_64 with explicit variate transforms, so draws are identical across
/// standard library implementations (std:: distributions are not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t bits() { return engine_(); }
    /// Uniform on [0, 1), 53 random bits.
    double uniform();
    /// Uniform on (0, 1].
    double uniform_open_zero() { return 1.0 - uniform(); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::uint64_t index(std::uint64_t n);
    double rademacher() { return (bits() >> 63) ? 1.0 : -1.0; }
    double normal();
    double exponential() { return -std::log(uniform_open_zero()); }
    /// Uniformly random direction on the unit sphere in R^d.
    Vector unit_vector(std::size_t d);

private:
    std::mt19937_64 engine_;
};

}  // namespace te
