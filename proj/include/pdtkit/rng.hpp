#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace pdtkit {

// Deterministic random stream. The engine (std::mt19937_64) is fully
// specified by the C++ standard, and all value mappings below are written
// out explicitly instead of going through std::uniform_*_distribution,
// whose output is implementation-defined. Same seed, same sequence, on
// every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform on [0, 1) with 53 random bits, the full mantissa of a double.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

  // Uniform index in [0, n). Lemire multiply-shift; bias is at most
  // n / 2^64, irrelevant for the pool and batch sizes used here.
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Fisher-Yates, spelled out so the permutation sequence is portable.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace pdtkit
