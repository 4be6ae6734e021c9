#pragma once

#include <cstdint>
#include <limits>

namespace polydyn {

/// Counter-based generator: the n-th draw is a SplitMix64 finalizer applied to
/// seed + n * gamma, so streams are reproducible and cheap to split.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : seed_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(seed_ + (++counter_) * kGamma); }

  // Independent child stream, a pure function of (seed, stream).
  Rng split(std::uint64_t stream) const {
    return Rng(mix(seed_ ^ mix(stream * kGamma + 0x632BE59BD9B4E019ULL)));
  }

  double uniform();  // [0, 1)
  double normal();   // standard normal

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace polydyn
