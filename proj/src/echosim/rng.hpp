#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace echosim {

// Purpose tags for child streams. Values are part of the reproducibility
// contract: changing them changes every seeded run.
enum class StreamPurpose : std::uint64_t {
  kInit = 1,
  kSample = 2,
  kOrder = 3,
  kUpdate = 4,
  kNames = 5,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Derives a child seed by folding each key through SplitMix64. Streams keyed
// on (trial, turn, agent, purpose) are independent of execution order.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t trial, std::uint64_t turn,
                                    std::uint64_t agent, StreamPurpose purpose) noexcept {
  std::uint64_t h = splitmix64(root);
  h = splitmix64(h ^ trial);
  h = splitmix64(h ^ (turn + 0x100000000ULL));
  h = splitmix64(h ^ (agent + 0x200000000ULL));
  h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  return h;
}

// mt19937_64 with hand-written distributions. std::*_distribution output is
// implementation-defined, which would break byte-identical logs across
// toolchains.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng stream(std::uint64_t root, std::uint64_t trial, std::uint64_t turn,
                    std::uint64_t agent, StreamPurpose purpose) {
    return Rng(derive_seed(root, trial, turn, agent, purpose));
  }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer on [0, n). Rejection sampling avoids modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = max() - (max() % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Box-Muller; the spare deviate is cached.
  double normal(double mean, double sigma) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + sigma * spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return mean + sigma * r * std::cos(theta);
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = below(i);
      std::iter_swap(first + (i - 1), first + j);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace echosim
