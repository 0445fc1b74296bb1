#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace flowsentry {

// Deterministic random source. All draw transforms are written out explicitly
// instead of using std::*_distribution, whose output is implementation-defined;
// the generated streams must be reproducible byte for byte from a seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1).
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(gen_() % span);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Weibull(shape k, scale lambda) by inverse CDF.
  double weibull(double shape, double scale) {
    const double u = uniform01();
    return scale * std::pow(-std::log1p(-u), 1.0 / shape);
  }

  double exponential(double mean) { return -mean * std::log1p(-uniform01()); }

  /// Standard normal via Box-Muller; draws two uniforms per call, no caching.
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Independent child stream; stream_id keeps siblings decorrelated.
  Rng derive(std::uint64_t stream_id) const {
    std::uint64_t z = seed_ ^ (stream_id + 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return Rng(z ^ (z >> 31));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace flowsentry
