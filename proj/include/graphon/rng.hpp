#pragma once

// Counter-based random streams. Every consumer derives its own stream from a
// base seed and a tuple of integer tags, so draws never depend on scheduling
// order or thread count.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace graphon {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

// splitmix64 sequence seeded by a hash chain over the stream tags.
class RngStream {
 public:
  explicit RngStream(std::uint64_t state) : state_(state) {}

  std::uint64_t next_u64() {
    state_ += detail::kGolden;
    return detail::mix64(state_);
  }

  // uniform on (0, 1); never returns 0 so logs stay finite
  double uniform01() {
    const std::uint64_t bits = next_u64() >> 11;  // 53 bits
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  // uniform integer in [0, n)
  int uniform_int(int n) {
    const int v = static_cast<int>(uniform01() * static_cast<double>(n));
    return v >= n ? n - 1 : v;
  }

  // Box-Muller, cosine branch only; two uniforms per variate
  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

// Base seed plus tag-tuple stream derivation.
struct RngSpec {
  std::uint64_t seed = 0;

  template <typename... Tags>
  RngStream stream(Tags... tags) const {
    std::uint64_t h = detail::mix64(seed ^ detail::kGolden);
    ((h = detail::mix64(h ^ (static_cast<std::uint64_t>(tags) + detail::kGolden))), ...);
    return RngStream(h);
  }

  template <typename... Tags>
  RngSpec derive(Tags... tags) const {
    std::uint64_t h = detail::mix64(seed ^ detail::kGolden);
    ((h = detail::mix64(h ^ (static_cast<std::uint64_t>(tags) + detail::kGolden))), ...);
    return RngSpec{h};
  }
};

// Fixed tags keeping unrelated consumers on disjoint streams.
namespace rng_tag {
inline constexpr std::uint64_t kNoise = 101;      // Gaussian coordinate noise
inline constexpr std::uint64_t kXi = 102;         // stochastic-gradient index draws
inline constexpr std::uint64_t kSample = 103;     // kernel sampling
inline constexpr std::uint64_t kRestart = 104;    // heuristic restarts
inline constexpr std::uint64_t kReplicate = 105;  // experiment replicates
inline constexpr std::uint64_t kCell = 106;       // per-cell Monte Carlo paths
inline constexpr std::uint64_t kBrownian = 107;   // shared Brownian grids
}  // namespace rng_tag

}  // namespace graphon
