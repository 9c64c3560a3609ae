#ifndef ATRL_UTIL_RNG_HPP_
#define ATRL_UTIL_RNG_HPP_

#include <cstdint>
#include <random>

namespace atrl {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Named, indexed sub-streams so that results do not depend on the order in
// which workers happen to run.
enum class Stream : std::uint64_t {
  kScenario = 1,
  kEpisode = 2,
  kShuffle = 3,
  kInit = 4,
  kBaseline = 5,
  kSampledReward = 6,
};

inline std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                                 std::uint64_t index) noexcept {
  return mix64(mix64(master ^ mix64(static_cast<std::uint64_t>(stream))) + index);
}

inline Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t index) {
  return Rng(derive_seed(master, stream, index));
}

// Uniform double in [0, 1) built from the top 53 bits; unlike
// std::uniform_real_distribution this is identical across standard libraries.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform double in the open interval (lo, hi).
inline double uniform_open(Rng& rng, double lo, double hi) {
  for (;;) {
    double x = lo + (hi - lo) * uniform01(rng);
    if (x > lo && x < hi) return x;
  }
}

// Uniform integer in [0, n) by rejection; n must be > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  for (;;) {
    std::uint64_t x = rng();
    if (x < limit) return x % n;
  }
}

}  // namespace atrl

#endif  // ATRL_UTIL_RNG_HPP_
