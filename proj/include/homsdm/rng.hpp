#pragma once

#include <cmath>
#include <cstdint>

namespace homsdm {

/// Counter-based stream keyed by (seed, index). Each scan point owns an
/// independent stream, so draws do not depend on evaluation order or the
/// number of worker threads.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t index) {
    state_ = mix(seed ^ 0x6a09e667f3bcc909ull) + index * 0x9e3779b97f4a7c15ull;
    state_ = mix(state_);
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  /// Uniform on (0, 1], safe under log().
  double next_unit() { return double((next_u64() >> 11) + 1) * 0x1.0p-53; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  std::uint64_t state_ = 0;
};

/// Poisson sample. Product-of-uniforms inversion for small means, Hormann's
/// PTRS transformed rejection above mu = 10.
inline std::uint64_t poisson_draw(CounterRng& rng, double mu) {
  if (!(mu > 0.0)) return 0;
  if (mu < 10.0) {
    const double limit = std::exp(-mu);
    double prod = 1.0;
    std::uint64_t k = 0;
    while (true) {
      prod *= rng.next_unit();
      if (prod <= limit) return k;
      ++k;
    }
  }
  const double b = 0.931 + 2.53 * std::sqrt(mu);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  const double log_mu = std::log(mu);
  while (true) {
    const double u = rng.next_unit() - 0.5;
    const double v = rng.next_unit();
    const double us = 0.5 - std::abs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + mu + 0.43);
    if (us >= 0.07 && v <= v_r) return std::uint64_t(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        kf * log_mu - mu - std::lgamma(kf + 1.0))
      return std::uint64_t(kf);
  }
}

}  // namespace homsdm
