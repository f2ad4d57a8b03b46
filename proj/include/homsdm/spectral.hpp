#pragma once

#include <Eigen/Core>
#include <complex>

#include "homsdm/grid.hpp"

namespace homsdm {

using Complex = std::complex<double>;

/// Complex field amplitude sampled on a FrequencyGrid. All L2 norms carry
/// the grid step as measure weight, so values are resolution independent.
struct SpectralAmplitude {
  FrequencyGrid grid;
  Eigen::VectorXcd values;

  double norm() const { return std::sqrt(values.squaredNorm() * grid.step); }
  bool is_normalized(double tol = 1e-9) const { return std::abs(norm() - 1.0) <= tol; }
  SpectralAmplitude& normalize();
};

/// Single-photon spectral density matrix rho(omega_i, omega_j). Hermitian,
/// PSD and unit trace (trace carries the grid step); support_mask marks the
/// frequencies where a reconstruction is trustworthy.
struct SpectralDensityMatrix {
  FrequencyGrid grid;
  Eigen::MatrixXcd values;
  Eigen::Array<bool, Eigen::Dynamic, 1> support_mask;

  double trace() const { return values.real().diagonal().sum() * grid.step; }
  bool is_normalized(double tol = 1e-9) const { return std::abs(trace() - 1.0) <= tol; }
  double hermiticity_defect() const {
    return (values - values.adjoint()).cwiseAbs().maxCoeff();
  }
  Eigen::Index masked_count() const;
};

/// F(omega_m) = sum_n f(t_n) exp(-i omega_m t_n) * step, on centered grids
/// t_n = (n - K/2) step, omega_m = (m - K/2) * 2*pi/(K*step). This is the
/// sign convention the inversion pipeline assumes everywhere.
Eigen::VectorXcd dft_time_to_freq(const Eigen::VectorXcd& samples, double step);

/// Inverse of dft_time_to_freq: f(t_n) = (1/2pi) sum_m F_m exp(+i omega_m t_n) dw.
Eigen::VectorXcd dft_freq_to_time(const Eigen::VectorXcd& spectrum, double step);

/// (M + M^dagger)/2. Idempotent.
SpectralDensityMatrix hermitize(const SpectralDensityMatrix& m);

/// Eigen-decompose, clip negative eigenvalues, renormalize trace to one.
SpectralDensityMatrix project_psd(const SpectralDensityMatrix& m);

/// Smallest eigenvalue in continuum normalization (eigenvalue * step).
double min_eigenvalue(const SpectralDensityMatrix& m);

/// tr(rho^2) * step^2. In (0, 1] for normalized states.
double purity(const SpectralDensityMatrix& rho);

/// tr(rho_a rho_b) step^2 / sqrt(purity(a) purity(b)); 1 iff proportional.
double overlap_fidelity(const SpectralDensityMatrix& a, const SpectralDensityMatrix& b);

/// Zero all rows/columns outside the mask and renormalize the trace.
SpectralDensityMatrix restrict_to_support(const SpectralDensityMatrix& rho,
                                          const Eigen::Array<bool, Eigen::Dynamic, 1>& mask);

/// Pure projector |psi><psi| from an amplitude (normalizes first).
SpectralDensityMatrix pure_state(const SpectralAmplitude& psi);

/// Gaussian pulse amplitude: transform-limited intensity FWHM in fs plus an
/// optional spectral quadratic phase 0.5 * chirp_fs2 * (w - w0)^2.
SpectralAmplitude gaussian_amplitude(const FrequencyGrid& grid, double fwhm_fs,
                                     double chirp_fs2 = 0.0, double center_offset = 0.0,
                                     double delay_fs = 0.0);

/// Intensity rms width (rad/fs) of the transform-limited Gaussian of the
/// given intensity FWHM duration.
inline double gaussian_sigma_omega(double fwhm_fs) {
  return 2.0 * std::sqrt(2.0 * std::log(2.0)) / (2.0 * fwhm_fs);
}

/// Time-domain profile f(t) = (1/2pi) sum_k A_k exp(i w_k t) dw at the given
/// times (direct evaluation, carrier kept explicit).
Eigen::VectorXcd time_profile(const SpectralAmplitude& a, const Eigen::ArrayXd& times);

}  // namespace homsdm
