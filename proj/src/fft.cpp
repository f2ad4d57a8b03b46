#include "homsdm/fft.hpp"

#include <cmath>
#include <stdexcept>

#include "homsdm/grid.hpp"

namespace homsdm::fft {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

void radix2(Eigen::VectorXcd& a, int sign) {
  const int n = int(a.size());
  // bit-reversal permutation
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * kPi / len;
    for (int i = 0; i < n; i += len) {
      for (int j = 0; j < len / 2; ++j) {
        const std::complex<double> w = std::polar(1.0, ang * j);
        std::complex<double> u = a[i + j];
        std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
      }
    }
  }
}

int next_pow2(int n) {
  int m = 1;
  while (m < n) m <<= 1;
  return m;
}

// exp(sign*i*pi*k^2/n) with the argument reduced exactly: k^2 mod 2n keeps
// the angle in [0, 2*pi) without precision loss for large k.
std::complex<double> chirp_at(std::int64_t k, int n, int sign) {
  const std::int64_t q = (k * k) % (2 * std::int64_t(n));
  return std::polar(1.0, sign * kPi * double(q) / double(n));
}

}  // namespace

Plan::Plan(int n) : n_(n) {
  if (n <= 0) throw std::invalid_argument("fft plan size must be positive");
  if (is_pow2(n)) return;
  m_ = next_pow2(2 * n - 1);
  chirp_.resize(n);
  for (int k = 0; k < n; ++k) chirp_[k] = chirp_at(k, n, -1);
  // kernel b_m = conj(chirp_m) wrapped onto [0, M)
  for (int s : {-1, +1}) {
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(m_);
    for (int k = 0; k < n; ++k) {
      const std::complex<double> v = chirp_at(k, n, -s);
      b[k] = v;
      if (k > 0) b[m_ - k] = v;
    }
    radix2(b, -1);
    (s < 0 ? kernel_f_ : kernel_b_) = b;
  }
}

void Plan::transform(Eigen::VectorXcd& data, int sign) const {
  if (int(data.size()) != n_) throw std::invalid_argument("fft plan size mismatch");
  if (m_ == 0) {
    radix2(data, sign);
    return;
  }
  // Bluestein: X_k = c_k^s * sum_j (c_j^s x_j) b_{k-j},  c_m = exp(s*i*pi*m^2/n)
  Eigen::VectorXcd a = Eigen::VectorXcd::Zero(m_);
  for (int k = 0; k < n_; ++k)
    a[k] = data[k] * (sign < 0 ? chirp_[k] : std::conj(chirp_[k]));
  radix2(a, -1);
  const Eigen::VectorXcd& kern = sign < 0 ? kernel_f_ : kernel_b_;
  a.array() *= kern.array();
  radix2(a, +1);
  const double inv_m = 1.0 / double(m_);
  for (int k = 0; k < n_; ++k) {
    const std::complex<double> c = sign < 0 ? chirp_[k] : std::conj(chirp_[k]);
    data[k] = a[k] * c * inv_m;
  }
}

void transform(Eigen::VectorXcd& data, int sign) {
  const int n = int(data.size());
  if (is_pow2(n)) {
    radix2(data, sign);
    return;
  }
  Plan plan(n);
  plan.transform(data, sign);
}

}  // namespace homsdm::fft
