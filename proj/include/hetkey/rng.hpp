#pragma once

#include <bit>
#include <cstdint>

namespace hetkey {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Deterministic pseudo-random stream identified by (seed, stream index).
///
/// xoshiro256** core. Every transform below is defined here in terms of
/// integer operations only, so a given (seed, index) pair produces the same
/// draw sequence on every platform and under any thread schedule.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t index) : seed_(seed), index_(index) {
    std::uint64_t sm = seed;
    const std::uint64_t a = detail::splitmix64(sm);
    sm = index ^ 0xD1B54A32D192ED03ULL;
    const std::uint64_t b = detail::splitmix64(sm);
    std::uint64_t mix = a ^ std::rotl(b, 17);
    for (auto& word : s_) word = detail::splitmix64(mix);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). Lemire's multiply-and-reject; bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>((*this)()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Success with probability p. p <= 0 never succeeds, p >= 1 always does.
  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t index() const { return index_; }

 private:
  std::uint64_t seed_;
  std::uint64_t index_;
  std::uint64_t s_[4];
};

}  // namespace hetkey
