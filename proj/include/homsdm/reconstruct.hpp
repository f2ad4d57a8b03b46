#pragma once

#include <Eigen/Core>

#include "homsdm/forward.hpp"
#include "homsdm/spectral.hpp"

namespace homsdm {

struct ReconstructionConfig {
  double carrier = 0.0;             // rad/fs; 0 = take the master grid center
  double sideband_halfwidth = 0.0;  // rad/fs; 0 = carrier/4, clamped to the band
  double far_fraction = 0.15;       // extreme-T rows used for the S estimate
  double amp_floor = 0.1;           // relative |A| threshold for the division
  bool psd_project = true;
  double far_residual_tol = 0.25;  // far rows must agree to this relative rms

  void validate() const;
  ReconstructionConfig resolved(const FrequencyGrid& master_grid) const;
};

struct ReconstructionReport {
  double n_estimate = 0.0;  // N of the count-level identity N*C = 2S - 2Re rho~ - D - D
  double background_estimate = 0.0;  // accidental coincidence probability per pulse
  double residual_rms = 0.0;         // far-row spread relative to the fringe amplitude
  double masked_fraction = 0.0;
  double min_eigenvalue_pre = 0.0;  // before PSD projection, unit-trace scale
};

/// Per T-row bandpass around +carrier: transform along tau with the
/// exp(+i nu tau) kernel, keep |nu - carrier| <= halfwidth, transform back.
/// The result is the analytic-signal content of the fringes; the baseband
/// cross from D(t1) + D(t2) and any constant background are rejected.
Eigen::MatrixXcd demodulate(const Interferogram& ifg, const ReconstructionConfig& cfg);

/// Average the demodulated far rows (where the photon coherence has died
/// out) into the T-independent S-fringe profile, and calibrate N and the
/// background from the far-region count level.
struct FringeCalibration {
  Eigen::VectorXcd s_profile;  // counts-scale fringe analytic signal over tau
  ReconstructionReport report;
};
FringeCalibration estimate_s_and_n(const Eigen::MatrixXcd& demodulated, const Interferogram& ifg,
                                   const ReconstructionConfig& cfg);

/// rho~(t1,t2) on the rotated grid: N * (s_profile - demodulated).
Eigen::MatrixXcd extract_rho_time(const Eigen::MatrixXcd& demodulated,
                                  const Eigen::VectorXcd& s_profile,
                                  const ReconstructionReport& report);

/// Rotated-coordinate double transform
///   F(w1,w2) = (1/4pi^2) iint dt1 dt2 exp(-i w1 t1 + i w2 t2) rho~(t1,t2)
/// evaluated exactly on the target grid (no interpolation); equals
/// A*(w1) rho(w1,w2) A(w2). The scan must sample densely enough to cover the
/// occupied band: pass the master support half-width when it is narrower
/// than the grid (0 = use the grid half-span).
Eigen::MatrixXcd to_frequency(const Eigen::MatrixXcd& rho_time, const ScanGrid& scan,
                              const FrequencyGrid& grid, double support_halfwidth = 0.0);

/// Divide by A*(w1) A(w2) where |A| clears the floor, zero and unmask the
/// rest, then hermitize, optionally project to PSD, and renormalize over the
/// masked support.
SpectralDensityMatrix deconvolve_amplitude(const Eigen::MatrixXcd& freq_matrix,
                                           const SpectralAmplitude& master,
                                           const ReconstructionConfig& cfg,
                                           ReconstructionReport& report);

struct ReconstructionResult {
  SpectralDensityMatrix rho;
  ReconstructionReport report;
};

/// Full inversion: demodulate -> estimate_s_and_n -> extract_rho_time ->
/// to_frequency -> deconvolve_amplitude. Stage errors carry the stage name.
ReconstructionResult reconstruct(const Interferogram& ifg, const SpectralAmplitude& master,
                                 const ReconstructionConfig& cfg = {});

}  // namespace homsdm
