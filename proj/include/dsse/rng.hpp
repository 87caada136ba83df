#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace dsse {

/// Deterministic random source. Distribution transforms are done by hand so
/// that a given seed yields the same stream on every platform and standard
/// library (std::normal_distribution sequences are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller. Two uniforms per draw, no cached spare.
  double gaussian() {
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    int k = static_cast<int>(uniform01() * static_cast<double>(n));
    return std::min(k, n - 1);
  }

  /// k distinct values from [0, n), partial Fisher-Yates, returned sorted.
  std::vector<int> sample_without_replacement(int n, int k) {
    std::vector<int> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < k; ++i) {
      int j = i + uniform_int(n - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

 private:
  std::mt19937_64 gen_;
};

/// Seed for an independent substream of a master seed (splitmix64 mixing).
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream_id) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (stream_id + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace dsse
