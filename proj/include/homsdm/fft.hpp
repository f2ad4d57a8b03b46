#pragma once

#include <Eigen/Core>
#include <complex>

namespace homsdm::fft {

/// Unnormalized in-place DFT, X_k = sum_n x_n exp(sign * 2*pi*i*n*k/N).
/// sign = -1 is the forward convention, +1 the inverse (caller divides by N).
/// Radix-2 for power-of-two sizes, Bluestein chirp-z otherwise.
void transform(Eigen::VectorXcd& data, int sign);

/// Reusable plan; precomputes the Bluestein chirps for non power-of-two N.
class Plan {
 public:
  explicit Plan(int n);
  int size() const { return n_; }
  void transform(Eigen::VectorXcd& data, int sign) const;

 private:
  int n_ = 0;
  int m_ = 0;  // padded power-of-two size, 0 when radix-2 applies directly
  Eigen::VectorXcd chirp_;     // exp(-i*pi*k^2/n)
  Eigen::VectorXcd kernel_f_;  // FFT of wrapped conj chirp, forward sign
  Eigen::VectorXcd kernel_b_;  // same for inverse sign
};

}  // namespace homsdm::fft
