#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace deephazard {

// Deterministic random stream. All distribution logic is written out explicitly
// (std:: distributions are not bit-stable across standard library versions, and
// fitted models / simulated datasets must reproduce byte-identically from a seed).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : base_(mix(seed)), engine_(base_) {}

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1): rejects exact zero so -log(u) stays finite.
  double uniform_open() {
    double u = uniform();
    while (u == 0.0) u = uniform();
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the spare value is cached so consecutive
  // calls consume the underlying stream in a fixed, reproducible order.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Independent child stream; stream k is the same no matter how many draws the
  // parent has made, so per-subject work is order-independent.
  Rng substream(std::uint64_t k) const {
    return Rng(base_ + 0x9E3779B97F4A7C15ull * (k + 1));
  }

  std::uint64_t raw() { return engine_(); }

private:
  // SplitMix64 finalizer: decorrelates nearby seeds.
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  std::uint64_t base_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace deephazard
