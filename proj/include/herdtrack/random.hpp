#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace herdtrack {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Small counter-based generator. Cheap to construct, so every (frame, tile,
/// purpose) tuple can own an independent stream and the order in which
/// streams are consumed never changes the draws.
class Rng {
public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : state_(mix64(seed)) {}

  /// Stream derived from a root seed and any number of key components.
  static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = mix64(seed);
    for (auto k : keys) h = mix64(h ^ mix64(k));
    return Rng(h);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

private:
  std::uint64_t state_;
};

inline std::uint64_t key_of(double v) { return std::bit_cast<std::uint64_t>(v); }

enum class NoisePurpose : std::uint64_t {
  Detection = 1,
  FalsePositive = 2,
  FlowPoint = 3,
};

}  // namespace herdtrack
