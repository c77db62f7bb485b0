// Seeded random stream with platform-independent draws.
//
// std::mt19937_64 output is fixed by the standard, but the std distributions
// are not, so golden files would differ between standard libraries. Draws
// here are derived from the raw engine output only.
#pragma once

#include <cstdint>
#include <random>

namespace sparsesense {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t index(std::uint64_t n);
    /// Standard normal (Box-Muller, one draw per call).
    double normal();

  private:
    std::mt19937_64 engine_;
};

/// Mixes a base seed with a stream index (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace sparsesense
