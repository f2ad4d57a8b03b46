#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>

#include "homsdm/spectral.hpp"

namespace homsdm {

/// Per-pulse probabilities and counting setup of the experiment.
struct ExperimentParams {
  double source_photon_prob = 0.05;  // f
  double lo_photon_prob = 0.1;       // l
  double detector_efficiency = 0.5;  // eta
  double rep_rate_hz = 3.0e5;
  double background_prob = 0.0;  // accidental coincidences per pulse

  void validate() const;
};

/// Coincidence counts over a rotated (tau, T) scan. Seedless simulations
/// store the real-valued expectations; seeded ones hold integer counts.
struct Interferogram {
  ScanGrid scan;
  Eigen::ArrayXXd counts;  // t_count rows x tau_count cols
  double exposure_s = 0.0;
  ExperimentParams params;
  std::optional<std::uint64_t> seed;

  double pulses_per_point() const { return params.rep_rate_hz * exposure_s; }
};

/// Double pulse prepared by the Michelson modulator.
struct LocalOscillator {
  SpectralAmplitude master;
  double t1 = 0.0;
  double t2 = 0.0;
  SpectralAmplitude amplitude;  // phi_LO
  double norm_factor = 0.0;     // S(t2 - t1), in [0, 2]
};

/// Michelson norm factor S(dt) = 1 + Re int |A|^2 exp(i w dt) dw. Even in dt,
/// S(0) = 2, S(inf) = 1; this is the unique convention that keeps the double
/// pulse unit-norm.
double michelson_norm(const SpectralAmplitude& master, double dt);

/// phi_LO(w) = A(w) (exp(-i w t1) + exp(-i w t2)) / sqrt(2 S). Throws
/// DarkPortError when S falls below eps_s (fully destructive output).
LocalOscillator make_local_oscillator(const SpectralAmplitude& master, double t1, double t2,
                                      double eps_s = 1e-6);

/// Two-time coherence restricted to the master spectrum:
/// rho~(t1,t2) = iint dw1 dw2 exp(i w1 t1 - i w2 t2) A*(w1) rho(w1,w2) A(w2).
Complex two_time_coherence(const SpectralAmplitude& master, const SpectralDensityMatrix& rho,
                           double t1, double t2);

/// HOM dip profile D(t) = rho~(t, t).
double hom_dip(const SpectralAmplitude& master, const SpectralDensityMatrix& rho, double t);

/// Mode overlap Q = iint phi* rho phi, in [0, 1].
double mode_overlap(const LocalOscillator& lo, const SpectralDensityMatrix& rho);

/// p_c = f l S (eta^2/2) (1 - Q) + background.
double coincidence_probability(const LocalOscillator& lo, const SpectralDensityMatrix& rho,
                               const ExperimentParams& params);

/// Batched evaluation of the scan ingredients on the rotated grid; shared by
/// the simulator and the reconstruction oracles.
struct ScanFields {
  Eigen::ArrayXd s_tau;         // S(tau_c)
  Eigen::ArrayXXd dip_t1;       // D(t1(r,c))
  Eigen::ArrayXXd dip_t2;       // D(t2(r,c))
  Eigen::MatrixXcd coherence;   // rho~(t1(r,c), t2(r,c)), t_count x tau_count
};
ScanFields evaluate_scan_fields(const SpectralAmplitude& master, const SpectralDensityMatrix& rho,
                                const ScanGrid& scan);

/// Expected counts per point are p_c * rep_rate * exposure. With a seed,
/// counts are Poisson draws from per-point counter streams (bit-identical
/// for any thread count); without, expectations are stored as reals.
Interferogram simulate_scan(const SpectralAmplitude& master, const SpectralDensityMatrix& rho,
                            const ScanGrid& scan, const ExperimentParams& params,
                            double exposure_s, std::optional<std::uint64_t> seed = std::nullopt,
                            int threads = 0);

/// Full-scale measurement preset: 4000 x 25 points, 0.233 fs x 66 fs mesh.
ScanGrid paper_scan();
/// Smaller default for desk-scale runs.
ScanGrid desk_scan();

}  // namespace homsdm
