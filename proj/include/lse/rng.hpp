#pragma once

#include <cstdint>
#include <cmath>
#include <numbers>
#include <vector>

namespace lse {

// SplitMix64 (Steele, Lea, Flood 2014). The state advances by the
// golden-ratio increment and the output is a finalizer over the counter,
// which makes independent streams cheap to derive by hashing a seed with
// a stream label. All draws are exact integer/IEEE-754 arithmetic, so
// sequences are identical across platforms.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // uniform on [0,1), 53-bit resolution
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // uniform on (0,1], safe as a log() argument
  double uniform01_open_low() {
    return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // standard normal via Box-Muller (one value per pair of uniforms;
  // the second value is discarded to keep the draw count predictable)
  double normal() {
    double u = uniform01_open_low();
    double v = uniform01();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
  }

  // chi-square with one degree of freedom: square of a standard normal
  double chi2_1() {
    double z = normal();
    return z * z;
  }

  // k distinct values from {0,...,pool-1} via a partial Fisher-Yates
  // shuffle; the result order is the draw order.
  std::vector<int> sample_without_replacement(int pool, int k) {
    std::vector<int> idx(pool);
    for (int i = 0; i < pool; ++i) idx[i] = i;
    for (int i = 0; i < k; ++i) {
      int j = i + static_cast<int>(next() % static_cast<std::uint64_t>(pool - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

private:
  std::uint64_t state_;
};

// Derives a per-(trial, method) stream from a master seed by running the
// labels through the SplitMix64 finalizer chain.
inline std::uint64_t derive_stream(std::uint64_t master, std::uint64_t trial,
                                   std::uint64_t method) {
  SplitMix64 g(master);
  std::uint64_t a = g.next();
  SplitMix64 h(a ^ (trial * 0xD1342543DE82EF95ULL + 1));
  std::uint64_t b = h.next();
  SplitMix64 m(b ^ (method * 0xDB4F0B9175AE2165ULL + 1));
  return m.next();
}

}  // namespace lse
