#pragma once

#include <cstdint>

namespace psychbench {

// SplitMix64 (Steele, Lea & Flood 2014). Chosen for portability and cheap
// stream splitting: substream k of a master seed starts from
// mix(seed + (k + 1) * GAMMA), so per-taker streams do not depend on the
// order takers are visited.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

  std::uint64_t next() {
    std::uint64_t z = (state_ += kGamma);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  // Uniform double strictly inside (0, 1); safe for quantile transforms.
  double next_double_open() {
    return (static_cast<double>(next() >> 12) + 0.5) * 0x1.0p-52;
  }

  // Independent substream for index k.
  SplitMix64 split(std::uint64_t k) const {
    SplitMix64 sub(mix(state_ + (k + 1) * kGamma));
    return sub;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace psychbench
