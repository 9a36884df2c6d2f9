#pragma once

// Counter-based random numbers: draw k of stream `seed` is a pure function of (seed, k), so
// results never depend on evaluation order or platform library details.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace bivcov {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(splitmix64(seed ^ 0x6a09e667f3bcc908ULL)) {}

  std::uint64_t bits(std::uint64_t k) const { return splitmix64(key_ + splitmix64(k)); }

  /// Uniform on the open interval (0, 1).
  double uniform(std::uint64_t k) const { return (static_cast<double>(bits(k) >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal, Box-Muller on draws (2k, 2k+1).
  double normal(std::uint64_t k) const {
    const double u1 = uniform(2 * k), u2 = uniform(2 * k + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t key_;
};

}  // namespace bivcov
