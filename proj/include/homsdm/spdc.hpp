#pragma once

#include <Eigen/Core>

#include "homsdm/spectral.hpp"

namespace homsdm {

/// One-dimensional type-I downconversion source. Crystal dispersion enters
/// through the two group-delay-mismatch coefficients; spatial collection is
/// folded into a Gaussian collection bandwidth on the idler.
struct CrystalConfig {
  double length_mm = 1.0;
  // Group-index mismatch pump->signal/idler, derived from the standard BBO
  // Sellmeier equations at 387 nm (e-ray, 29.7 deg) vs 774 nm (o-ray).
  double gvm_pump_signal_fs_mm = kBboGvmDefault;
  double gvm_pump_idler_fs_mm = kBboGvmDefault;
  double filter_center_nm = 774.5;
  double filter_fwhm_nm = 10.0;      // interference filter on the signal
  double collection_fwhm_nm = 30.0;  // effective idler collection bandwidth

  static constexpr double kBboGvmDefault = 208.88;  // fs/mm

  void validate() const;
};

/// Pair state f(w_s, w_i) before the idler trace-out; unit L2 norm with both
/// grid steps as measure weights.
struct JointSpectralAmplitude {
  FrequencyGrid signal_grid;
  FrequencyGrid idler_grid;
  Eigen::MatrixXcd values;  // rows signal, cols idler

  double norm() const {
    return std::sqrt(values.squaredNorm() * signal_grid.step * idler_grid.step);
  }
};

/// Second-harmonic pulse in the perturbative limit: the self-convolution of
/// the master amplitude, renormalized, on a grid centered at 2 w0 with the
/// same step and twice the count.
SpectralAmplitude second_harmonic(const SpectralAmplitude& master);

/// f(w_s, w_i) = A2(w_s + w_i) sinc(L (g_s nu_s + g_i nu_i)/2) F(w_s) G(w_i),
/// detunings nu measured from degeneracy (half the pump center). Signal and
/// idler grids derive from the pump grid (half center, half count).
JointSpectralAmplitude build_jsa(const SpectralAmplitude& pump, const CrystalConfig& crystal);

/// rho(w, w') = int f(w, wi) f*(w', wi) dwi, renormalized. Hermitian PSD by
/// construction.
SpectralDensityMatrix trace_out_idler(const JointSpectralAmplitude& jsa);

}  // namespace homsdm
