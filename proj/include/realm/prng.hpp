#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace realm {

// SplitMix64 (Steele, Lea, Flood 2014). Every random draw in the project goes
// through this generator so that streams can be reproduced bit-for-bit by an
// independent implementation:
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
// Derived quantities:
//   uniform()      = (next() >> 11) * 2^-53                      in [0, 1)
//   below(n)       = high 64 bits of (unsigned 128) next() * n    in [0, n)
//   gaussian()     = Box-Muller, cos branch only, u1 = 1 - uniform()
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  std::uint64_t below(std::uint64_t n) {
    __extension__ using u128 = unsigned __int128;
    return static_cast<std::uint64_t>((static_cast<u128>(next()) * n) >> 64);
  }

  double gaussian() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t state_;
};

// Derives an independent sub-seed from a master seed and a stream tag.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  SplitMix64 g(seed ^ (tag * 0xD1B54A32D192ED03ULL));
  g.next();
  return g.next();
}

namespace seed_tag {
inline constexpr std::uint64_t kSource = 1;
inline constexpr std::uint64_t kTarget = 2;
inline constexpr std::uint64_t kHeldout = 3;
inline constexpr std::uint64_t kModelInit = 4;
inline constexpr std::uint64_t kPretrain = 5;
inline constexpr std::uint64_t kCorrupt = 6;
inline constexpr std::uint64_t kCorruptHeldout = 7;
inline constexpr std::uint64_t kShuffle = 8;
}  // namespace seed_tag

}  // namespace realm
