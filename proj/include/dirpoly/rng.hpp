#pragma once

#include <cstdint>
#include <span>

namespace dirpoly {

// SplitMix64 finalizer (Vigna / Stafford Mix13).  This is the one fixed
// mix function behind every random quantity in the project; outputs are
// reproducible across builds and platforms by construction.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Word absorption: injective multiply-xor per word, avalanche deferred to
// the final mix64.
inline std::uint64_t hash_absorb(std::uint64_t h, std::uint64_t w) {
  return (h ^ w) * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull;
}

inline std::uint64_t hash2(std::uint64_t a, std::uint64_t b) {
  return mix64(hash_absorb(a, b));
}

inline std::uint64_t hash3(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix64(hash_absorb(hash_absorb(a, b), c));
}

// 64-bit word -> uniform on the open interval (0,1); both endpoints are
// unreachable, so inverse-CDF maps stay finite.
inline double uniform_open(std::uint64_t h) {
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

// Inverse of the standard normal CDF, Wichura's algorithm AS241 (PPND16),
// accurate to ~1e-16 relative over (0,1).
double inverse_normal_cdf(double u);

// Standard normal CDF via erfc; used by test oracles and KS statistics.
double normal_cdf(double x);

// Cheap keyed counter stream for sampling decisions (path draws, Monte
// Carlo walks).  Pure function of (key, counter): replayable anywhere.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() { return hash2(key_, counter_++); }
  double next_uniform() { return uniform_open(next_u64()); }

  // Unbiased-enough bounded draw (Lemire multiply-shift; bias < 2^-53 for
  // the bounds used here).
  std::uint32_t next_below(std::uint32_t bound) {
    return static_cast<std::uint32_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace dirpoly
