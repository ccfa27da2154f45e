#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace rmab {

/// Seeded random stream. Only the raw 64-bit engine output is used, so draws
/// are identical across standard libraries (distribution objects are not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform double in [0, 1) built from the top 53 bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n) by rejection sampling. n must be positive.
    std::size_t below(std::size_t n);

private:
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer; maps (base, stream) to a well-mixed child seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Uniform random m-subset of {0..n-1}, returned in ascending order.
std::vector<std::size_t> uniform_subset(std::size_t n, std::size_t m, Rng& rng);

/// Indices of the m largest scores, ascending. Equal scores are ordered by a
/// uniform random permutation, so ties at the cut are broken uniformly.
std::vector<std::size_t> top_m(std::span<const double> scores, std::size_t m, Rng& rng);

}  // namespace rmab
