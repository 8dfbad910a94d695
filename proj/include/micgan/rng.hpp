#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <string>

#include "micgan/error.hpp"

namespace micgan {

// Seeded random source. All draws are derived from the raw 64-bit engine
// output with no cached state, so serializing the engine is enough to
// resume a stream bit-exactly.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [0, n).
  std::size_t index(std::size_t n) {
    if (n == 0) throw ArgumentError("Rng::index: empty range");
    // Lemire's multiply-shift with rejection.
    const std::uint64_t range = n;
    std::uint64_t x = engine_();
    __uint128_t m = static_cast<__uint128_t>(x) * range;
    auto low = static_cast<std::uint64_t>(m);
    if (low < range) {
      const std::uint64_t threshold = (0 - range) % range;
      while (low < threshold) {
        x = engine_();
        m = static_cast<__uint128_t>(x) * range;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::size_t>(m >> 64);
  }

  // Standard normal via Box-Muller, one variate per call.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Gamma(shape, 1) by Marsaglia-Tsang.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw ArgumentError("Rng::gamma: shape must be positive");
    if (shape < 1.0) return gamma(shape + 1.0) * std::pow(uniform_open(), 1.0 / shape);
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

  // Index k drawn with probability weights[k] / sum(weights).
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w))
        throw ArgumentError("Rng::categorical: weights must be finite and nonnegative");
      total += w;
    }
    if (!(total > 0.0)) throw ArgumentError("Rng::categorical: all weights are zero");
    const double target = uniform() * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (weights[k] <= 0.0) continue;
      acc += weights[k];
      last_positive = k;
      if (target < acc) return k;
    }
    return last_positive;
  }

  std::string state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void set_state(const std::string& s) {
    std::istringstream is(s);
    is >> engine_;
    if (is.fail()) throw FormatError("Rng::set_state: malformed engine state");
  }

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

private:
  double uniform_open() {
    double u;
    do u = uniform();
    while (u == 0.0);
    return u;
  }

  std::mt19937_64 engine_;
};

}  // namespace micgan
