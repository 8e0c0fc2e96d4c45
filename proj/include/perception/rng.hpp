#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace perception {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

inline constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = kFnvOffset) {
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= kFnvPrime;
    }
    return h;
}

/// Named sub-stream of a master seed. Every stochastic step in the toolkit
/// draws from derive_seed(master, "<stream>", counter), so a run can be
/// replayed stream by stream.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                                           std::uint64_t index = 0) {
    return splitmix64(splitmix64(master ^ fnv1a64(stream)) + index);
}

/// Thin wrapper over mt19937_64. Distributions are implemented here rather
/// than through <random> distributions so the draw sequence is fixed by
/// this header alone.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in [-bound, bound).
    double symmetric(double bound) { return (2.0 * uniform() - 1.0) * bound; }

    /// Uniform integer in [0, n), rejection sampled. n must be positive.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t limit = max - (max % n);
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

  private:
    std::mt19937_64 engine_;
};

} // namespace perception
