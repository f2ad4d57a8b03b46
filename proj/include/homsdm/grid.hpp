#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>

#include "homsdm/errors.hpp"

namespace homsdm {

/// Units used throughout: time fs, angular frequency rad/fs, wavelength nm.
inline constexpr double kSpeedOfLight = 299.792458;  // nm/fs
inline constexpr double kTwoPi = 6.283185307179586476925286766559;

inline double omega_from_lambda_nm(double lambda_nm) { return kTwoPi * kSpeedOfLight / lambda_nm; }
inline double lambda_nm_from_omega(double omega) { return kTwoPi * kSpeedOfLight / omega; }

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// Uniform angular-frequency grid, samples omega_k = center + (k - K/2) * step.
struct FrequencyGrid {
  double center = 0.0;  // rad/fs
  double step = 0.0;    // rad/fs
  int count = 0;        // K, power of two, >= 8

  FrequencyGrid() = default;
  FrequencyGrid(double center_, double step_, int count_)
      : center(center_), step(step_), count(count_) {
    validate();
  }

  void validate() const {
    if (!(step > 0.0)) throw GridError("frequency grid step must be > 0");
    if (count < 8 || !is_pow2(count))
      throw GridError("frequency grid count must be a power of two >= 8");
    if (!(omega(0) > 0.0))
      throw GridError("frequency grid must stay at positive frequencies (wavelength map)");
  }

  double omega(int k) const { return center + (k - count / 2) * step; }
  double wavelength_nm(int k) const { return lambda_nm_from_omega(omega(k)); }
  double half_span() const { return count * step / 2.0; }

  Eigen::ArrayXd omegas() const {
    Eigen::ArrayXd w(count);
    for (int k = 0; k < count; ++k) w[k] = omega(k);
    return w;
  }

  bool operator==(const FrequencyGrid& o) const {
    return center == o.center && step == o.step && count == o.count;
  }
  bool operator!=(const FrequencyGrid& o) const { return !(*this == o); }
};

/// Delay scan in rotated coordinates: tau = t2 - t1 (fine, carries the
/// carrier fringes), T = (t1 + t2)/2 (coarse, along the fringes).
struct ScanGrid {
  double tau_step = 0.0;  // fs
  int tau_count = 0;
  double t_step = 0.0;  // fs, step of T
  int t_count = 0;
  double tau_offset = 0.0;  // fs
  double t_offset = 0.0;    // fs

  ScanGrid() = default;
  ScanGrid(double tau_step_, int tau_count_, double t_step_, int t_count_, double tau_offset_ = 0.0,
           double t_offset_ = 0.0)
      : tau_step(tau_step_),
        tau_count(tau_count_),
        t_step(t_step_),
        t_count(t_count_),
        tau_offset(tau_offset_),
        t_offset(t_offset_) {
    validate();
  }

  void validate() const {
    if (!(tau_step > 0.0) || !(t_step > 0.0)) throw GridError("scan steps must be > 0");
    if (tau_count < 2 || t_count < 2) throw GridError("scan needs at least 2x2 points");
  }

  double tau(int c) const { return tau_offset + (c - tau_count / 2) * tau_step; }
  double tbar(int r) const { return t_offset + (r - t_count / 2) * t_step; }
  double t1(int r, int c) const { return tbar(r) - tau(c) / 2.0; }
  double t2(int r, int c) const { return tbar(r) + tau(c) / 2.0; }

  std::int64_t points() const { return std::int64_t(tau_count) * t_count; }

  /// Highest carrier resolvable along tau.
  double tau_nyquist() const { return kTwoPi / 2.0 / tau_step; }

  /// Carrier fringes of the associated frequency grid must be resolved.
  bool resolves(const FrequencyGrid& g) const {
    return tau_step < kTwoPi / 2.0 / (std::abs(g.center) + g.half_span());
  }

  bool operator==(const ScanGrid& o) const {
    return tau_step == o.tau_step && tau_count == o.tau_count && t_step == o.t_step &&
           t_count == o.t_count && tau_offset == o.tau_offset && t_offset == o.t_offset;
  }
};

}  // namespace homsdm
