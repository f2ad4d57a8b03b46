#include "homsdm/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "homsdm/errors.hpp"
#include "homsdm/fft.hpp"

namespace homsdm {

void ReconstructionConfig::validate() const {
  if (!(far_fraction > 0.0 && far_fraction < 0.5))
    throw ConfigError("config.far_fraction: must be in (0, 0.5)");
  if (!(amp_floor > 0.0 && amp_floor < 1.0))
    throw ConfigError("config.amp_floor: must be in (0, 1)");
  if (carrier < 0.0) throw ConfigError("config.carrier: must be >= 0");
  if (sideband_halfwidth < 0.0) throw ConfigError("config.sideband_halfwidth: must be >= 0");
  if (!(far_residual_tol > 0.0)) throw ConfigError("config.far_residual_tol: must be > 0");
}

ReconstructionConfig ReconstructionConfig::resolved(const FrequencyGrid& master_grid) const {
  ReconstructionConfig out = *this;
  if (out.carrier == 0.0) out.carrier = master_grid.center;
  // the fringe and coherence sidebands live within the master grid span; a
  // window much wider than that only admits counting noise
  if (out.sideband_halfwidth == 0.0)
    out.sideband_halfwidth = std::min(out.carrier / 4.0, 2.5 * master_grid.half_span());
  return out;
}

Eigen::MatrixXcd demodulate(const Interferogram& ifg, const ReconstructionConfig& cfg) {
  cfg.validate();
  const ScanGrid& scan = ifg.scan;
  const double carrier = cfg.carrier;
  if (!(carrier > 0.0)) throw ConfigError("config.carrier: must be set for demodulation");
  // default window: a quarter of the carrier, clamped into the sampled band
  const double hw = cfg.sideband_halfwidth > 0.0
                        ? cfg.sideband_halfwidth
                        : std::min(carrier / 4.0, 0.8 * (scan.tau_nyquist() - carrier));
  if (!(hw > 0.0)) throw ConfigError("config.carrier: at or beyond the tau Nyquist band");
  if (carrier + hw >= scan.tau_nyquist())
    throw ConfigError("config.sideband_halfwidth: window exceeds the tau Nyquist band");
  if (carrier - hw <= 0.0)
    throw ConfigError("config.sideband_halfwidth: window reaches the baseband cross");

  const int n = scan.tau_count;
  const double dnu = kTwoPi / (n * scan.tau_step);
  // Window mask over signed bin frequencies of the exp(+i nu tau) transform.
  std::vector<bool> keep(n, false);
  int kept = 0;
  for (int m = 0; m < n; ++m) {
    const int signed_m = m <= n / 2 ? m : m - n;
    const double nu = signed_m * dnu;
    if (std::abs(nu - carrier) <= hw) {
      keep[m] = true;
      ++kept;
    }
  }
  if (kept == 0) throw ConfigError("config.sideband_halfwidth: window is empty");

  fft::Plan plan(n);
  Eigen::MatrixXcd out(scan.t_count, n);
  Eigen::VectorXcd row(n);
  for (int r = 0; r < scan.t_count; ++r) {
    for (int c = 0; c < n; ++c) row[c] = Complex(ifg.counts(r, c), 0.0);
    plan.transform(row, +1);
    for (int m = 0; m < n; ++m)
      if (!keep[m]) row[m] = 0.0;
    plan.transform(row, -1);
    out.row(r) = row.transpose() / double(n);
  }
  return out;
}

namespace {

std::vector<int> far_row_indices(const ScanGrid& scan, double far_fraction) {
  std::vector<int> idx(scan.t_count);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return std::abs(scan.tbar(a)) > std::abs(scan.tbar(b));
  });
  int n_far = std::max(2, int(std::lround(far_fraction * scan.t_count)));
  n_far = std::min(n_far, scan.t_count - 1);
  idx.resize(n_far);
  return idx;
}

}  // namespace

FringeCalibration estimate_s_and_n(const Eigen::MatrixXcd& demodulated, const Interferogram& ifg,
                                   const ReconstructionConfig& cfg) {
  cfg.validate();
  if (demodulated.rows() != ifg.scan.t_count || demodulated.cols() != ifg.scan.tau_count)
    throw SizeError("demodulated array does not match the scan");

  const std::vector<int> far = far_row_indices(ifg.scan, cfg.far_fraction);
  const int n_far = int(far.size());
  const int ntau = ifg.scan.tau_count;

  FringeCalibration cal;
  cal.s_profile = Eigen::VectorXcd::Zero(ntau);
  for (int r : far) cal.s_profile += demodulated.row(r).transpose();
  cal.s_profile /= double(n_far);

  // count levels over the central tau half only: at the parallelogram
  // corners |t1| or |t2| shrinks and the dip cross re-enters the far rows
  const int mid_lo = ntau / 4, mid_hi = ntau - ntau / 4;
  double resid2 = 0.0;
  double mean_counts = 0.0;
  for (int r : far) {
    resid2 += (demodulated.row(r).transpose() - cal.s_profile).squaredNorm();
    mean_counts += ifg.counts.row(r).segment(mid_lo, mid_hi - mid_lo).sum();
  }
  resid2 /= double(n_far) * ntau;
  mean_counts /= double(n_far) * (mid_hi - mid_lo);

  // Fringe amplitude a = max |s_profile|, debiased by the noise variance the
  // row spread implies; max |s*| = 1 for a unit-norm master, so N = 1/a.
  const double sigma2 = n_far > 1 ? resid2 / (n_far - 1) : 0.0;
  const double peak2 = cal.s_profile.cwiseAbs2().maxCoeff();
  const double amp2 = peak2 - sigma2;
  if (!(amp2 > 0.0))
    throw ScanTooShortError("no coherent fringe amplitude in the far region");
  const double amp = std::sqrt(amp2);

  cal.report.residual_rms = std::sqrt(resid2) / amp;
  if (cal.report.residual_rms > cfg.far_residual_tol)
    throw ScanTooShortError("far rows disagree; scan does not reach the asymptotic region");

  cal.report.n_estimate = 1.0 / amp;
  const double fringe_mid =
      cal.s_profile.segment(mid_lo, mid_hi - mid_lo).real().mean();
  const double bg_counts = mean_counts - 2.0 * amp - 2.0 * fringe_mid;
  cal.report.background_estimate = bg_counts / ifg.pulses_per_point();
  return cal;
}

Eigen::MatrixXcd extract_rho_time(const Eigen::MatrixXcd& demodulated,
                                  const Eigen::VectorXcd& s_profile,
                                  const ReconstructionReport& report) {
  if (s_profile.size() != demodulated.cols())
    throw SizeError("fringe profile length does not match the scan");
  Eigen::MatrixXcd out = -demodulated;
  out.rowwise() += s_profile.transpose();
  return out * report.n_estimate;
}

Eigen::MatrixXcd to_frequency(const Eigen::MatrixXcd& rho_time, const ScanGrid& scan,
                              const FrequencyGrid& grid, double support_halfwidth) {
  if (rho_time.rows() != scan.t_count || rho_time.cols() != scan.tau_count)
    throw SizeError("rotated-grid array does not match the scan");
  const double support =
      support_halfwidth > 0.0 ? std::min(support_halfwidth, grid.half_span()) : grid.half_span();
  if (kTwoPi / 2.0 / scan.tau_step <= grid.center + support)
    throw ResolutionError("tau sampling cannot reach the carrier of the target grid");
  // frequency differences reach twice the occupied support
  if (kTwoPi / 2.0 / scan.t_step < 2.0 * support * (1.0 - 1e-12))
    throw ResolutionError("T sampling cannot cover the frequency-difference band");
  // the coherence must have decayed before the tau window ends, otherwise the
  // transform rings through the whole output band
  const double peak = rho_time.cwiseAbs().maxCoeff();
  if (peak > 0.0) {
    Eigen::Index rp, cp;
    rho_time.cwiseAbs().maxCoeff(&rp, &cp);
    const int margin = std::max(1, scan.tau_count / 100);
    const double edge =
        0.5 * (rho_time.row(rp).head(margin).cwiseAbs().mean() +
               rho_time.row(rp).tail(margin).cwiseAbs().mean());
    if (edge > 0.25 * peak)
      throw ResolutionError("tau window truncates the photon coherence");
  }

  const int k = grid.count;
  const int nl = 2 * k - 1;
  const double dw = grid.step;
  const double w0 = grid.center;

  // exp(i (w1+w2) tau / 2) with w1+w2 = 2 w0 + (s - K) dw, weighted by dtau
  Eigen::MatrixXcd etau(nl, scan.tau_count);
  for (int s = 0; s < nl; ++s)
    for (int c = 0; c < scan.tau_count; ++c)
      etau(s, c) = std::polar(scan.tau_step, (w0 + (s - k) * dw / 2.0) * scan.tau(c));
  // exp(i (w2-w1) T) with w2-w1 = (d - (K-1)) dw, weighted by dT
  Eigen::MatrixXcd et(scan.t_count, nl);
  for (int r = 0; r < scan.t_count; ++r)
    for (int d = 0; d < nl; ++d)
      et(r, d) = std::polar(scan.t_step, (d - (k - 1)) * dw * scan.tbar(r));

  const Eigen::MatrixXcd lattice = etau * (rho_time.transpose() * et).eval();  // (s, d)

  Eigen::MatrixXcd out(k, k);
  const double scale = 1.0 / (kTwoPi * kTwoPi);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) out(i, j) = lattice(i + j, j - i + k - 1) * scale;
  return out;
}

SpectralDensityMatrix deconvolve_amplitude(const Eigen::MatrixXcd& freq_matrix,
                                           const SpectralAmplitude& master,
                                           const ReconstructionConfig& cfg,
                                           ReconstructionReport& report) {
  cfg.validate();
  if (!master.is_normalized(1e-6)) throw NormalizationError("master amplitude is not unit norm");
  if (freq_matrix.rows() != master.grid.count || freq_matrix.cols() != master.grid.count)
    throw GridError("frequency matrix does not match the master grid");

  const int k = master.grid.count;
  const double floor = cfg.amp_floor * master.values.cwiseAbs().maxCoeff();
  Eigen::Array<bool, Eigen::Dynamic, 1> mask(k);
  for (int i = 0; i < k; ++i) mask[i] = std::abs(master.values[i]) >= floor;
  report.masked_fraction = 1.0 - double(mask.count()) / k;
  if (report.masked_fraction > 0.9)
    throw InsufficientBandwidthError(
        "master amplitude covers less than 10% of the grid; photon bandwidth exceeds it");

  SpectralDensityMatrix rho;
  rho.grid = master.grid;
  rho.support_mask = mask;
  rho.values = Eigen::MatrixXcd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    if (!mask[i]) continue;
    for (int j = 0; j < k; ++j) {
      if (!mask[j]) continue;
      rho.values(i, j) = freq_matrix(i, j) / (std::conj(master.values[i]) * master.values[j]);
    }
  }
  rho = hermitize(rho);
  const double tr = rho.trace();
  if (!(tr > 0.0)) throw DegenerateStateError("reconstructed matrix has no positive trace");
  rho.values /= tr;
  report.min_eigenvalue_pre = min_eigenvalue(rho);
  if (cfg.psd_project) {
    auto mask_keep = rho.support_mask;
    rho = project_psd(rho);
    rho.support_mask = mask_keep;
  }
  return rho;
}

ReconstructionResult reconstruct(const Interferogram& ifg, const SpectralAmplitude& master,
                                 const ReconstructionConfig& cfg) {
  const ReconstructionConfig rc = cfg.resolved(master.grid);
  auto staged = [](const char* stage, auto&& fn) -> decltype(fn()) {
    try {
      return fn();
    } catch (Error& e) {
      e.prepend_stage(stage);
      throw;
    }
  };

  const Eigen::MatrixXcd demod =
      staged("demodulate", [&] { return demodulate(ifg, rc); });
  FringeCalibration cal =
      staged("estimate_s_and_n", [&] { return estimate_s_and_n(demod, ifg, rc); });
  const Eigen::MatrixXcd rho_time = staged(
      "extract_rho_time", [&] { return extract_rho_time(demod, cal.s_profile, cal.report); });
  // everything the division can keep lives within the master's floor support
  const double floor = rc.amp_floor * master.values.cwiseAbs().maxCoeff();
  double support = 0.0;
  for (int k = 0; k < master.grid.count; ++k)
    if (std::abs(master.values[k]) >= floor)
      support = std::max(support, std::abs(master.grid.omega(k) - master.grid.center));
  const Eigen::MatrixXcd freq = staged(
      "to_frequency", [&] { return to_frequency(rho_time, ifg.scan, master.grid, support); });
  ReconstructionResult result;
  result.report = cal.report;
  result.rho = staged("deconvolve_amplitude",
                      [&] { return deconvolve_amplitude(freq, master, rc, result.report); });
  return result;
}

}  // namespace homsdm
