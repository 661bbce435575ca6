#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace sepp {

// All randomness in the library flows through these streams. Streams are
// derived from a master seed with fixed labels, so results are reproducible
// bit-for-bit regardless of thread count or evaluation order.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derives a child stream seed from (seed, label). Chain calls for nested
// streams, e.g. derive(derive(master, kStreamOffspring), event_index).
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t label) {
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ull + (label << 1));
  std::uint64_t a = splitmix64(s);
  std::uint64_t b = splitmix64(s);
  return a ^ (b >> 1);
}

// Fixed stream labels.
inline constexpr std::uint64_t kStreamBackground = 1;
inline constexpr std::uint64_t kStreamOffspring = 2;
inline constexpr std::uint64_t kStreamOgata = 3;
inline constexpr std::uint64_t kStreamThinning = 4;
inline constexpr std::uint64_t kStreamBootstrap = 5;
inline constexpr std::uint64_t kStreamEnvelope = 6;
inline constexpr std::uint64_t kStreamSuperpose = 7;
inline constexpr std::uint64_t kStreamMarks = 8;

// xoshiro256++ with splitmix64 seeding. Hand-rolled so that draws are
// identical across platforms and standard-library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on the open interval (0, 1); never exactly 0 or 1.
  double u01() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log(u01()) / rate; }

  // Box-Muller; consumes two uniforms per variate.
  double normal() {
    const double u1 = u01();
    const double u2 = u01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  std::uint64_t uniform_index(std::uint64_t n) {
    // Rejection-free scaled multiply; bias is negligible for n << 2^64.
    return static_cast<std::uint64_t>(u01() * static_cast<double>(n)) % n;
  }

  // Exact Poisson by chunked Knuth multiplication; O(mean) uniforms.
  long poisson(double mean) {
    long total = 0;
    while (mean > 12.0) {
      total += poisson_knuth(12.0);
      mean -= 12.0;
    }
    if (mean > 0.0) total += poisson_knuth(mean);
    return total;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  long poisson_knuth(double mean) {
    const double limit = std::exp(-mean);
    long k = 0;
    double prod = u01();
    while (prod > limit) {
      ++k;
      prod *= u01();
    }
    return k;
  }

  std::array<std::uint64_t, 4> state_;
};

}  // namespace sepp
