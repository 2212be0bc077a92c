#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mfg {

// splitmix64: cheap, well-mixed stream derivation. Used to turn a master
// seed plus counters into independent engine seeds so Monte Carlo fan-out
// is reproducible regardless of thread scheduling.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(master ^ splitmix64(a + 1)) ^ splitmix64(b + 0x632BE59BD9B4E019ULL));
}

/// Seeded uniform/exponential sampler on top of mt19937_64. Exponential
/// sampling is hand-rolled so the draw sequence is implementation-stable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return unit_(engine_); }

  // Exp(rate) waiting time.
  double exp_time(double rate) { return -std::log1p(-unit_(engine_)) / rate; }

  // Index sampled from unnormalized nonnegative weights (fixed scan order).
  template <typename Vec>
  int categorical(const Vec& w, double total) {
    double u = unit_(engine_) * total;
    double acc = 0.0;
    const int n = static_cast<int>(w.size());
    for (int i = 0; i < n; ++i) {
      acc += w[i];
      if (u < acc) return i;
    }
    return n - 1;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace mfg
