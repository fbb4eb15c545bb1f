#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace portfolio {

/// Portable seeded generator.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The standard distributions are not, so uniform doubles and
/// bounded integers are derived here directly from the raw 64-bit stream:
///   uniform()  = (x >> 11) * 2^-53, a double in [0, 1)
///   below(n)   = rejection-sampled x mod n, exact and unbiased
/// Same seed means the same numbers on every platform and compiler.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t below(std::uint64_t n);

    /// Fisher-Yates permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::mt19937_64 engine_;
};

/// Derives an independent per-stage seed from a run seed and a stage name
/// (FNV-1a hash of the name, mixed with the seed through splitmix64).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage);

}  // namespace portfolio
