#pragma once

#include <cstdint>
#include <random>

namespace spinrot {

/// Counting-noise generator: std::mt19937_64 (output sequence fixed by the
/// standard) feeding a self-contained Poisson sampler, so a seed gives the
/// same counts on every platform with IEEE doubles.
class CountingRng {
public:
    explicit CountingRng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) from the top 53 bits.
    double uniform();

    /// Inversion for mean < 10, Hormann's PTRS transformed rejection otherwise.
    std::int64_t poisson(double mean);

private:
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

}  // namespace spinrot
