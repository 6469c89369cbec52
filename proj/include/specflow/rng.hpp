#pragma once

// Counter-based deterministic randomness. Every draw is a pure function of
// (seed, counter): splitmix64 finalizer applied to seed + (counter+1)*GOLDEN,
// mapped to [0,1) through the top 53 bits. Any implementation language
// reproduces the same stream from the same seed.

#include <cstdint>

namespace specflow {

inline constexpr std::uint64_t kSplitmixGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = seed + (counter + 1) * kSplitmixGolden;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline double uniform53_at(std::uint64_t seed, std::uint64_t counter) {
  return double(splitmix64_at(seed, counter) >> 11) * 0x1.0p-53;
}

// canonical counter for an integer wavenumber pair (two's-complement 32-bit)
inline std::uint64_t mode_counter(int k1, int k2) {
  return (std::uint64_t(std::uint32_t(k1)) << 32) | std::uint64_t(std::uint32_t(k2));
}

// sequential stream view for corpus generation and probes
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t start = 0)
      : seed_(seed), counter_(start) {}
  double uniform() { return uniform53_at(seed_, counter_++); }
  std::uint64_t next_u64() { return splitmix64_at(seed_, counter_++); }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace specflow
