#include "homsdm/spdc.hpp"

#include <cmath>

#include "homsdm/errors.hpp"

namespace homsdm {

namespace {

double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

// Amplitude transmission of a Gaussian filter given its intensity FWHM.
double gaussian_filter_amp(double omega, double center, double fwhm_omega) {
  const double nu = omega - center;
  return std::exp(-2.0 * std::log(2.0) * nu * nu / (fwhm_omega * fwhm_omega));
}

double fwhm_omega_from_nm(double center_nm, double fwhm_nm) {
  return kTwoPi * kSpeedOfLight * fwhm_nm / (center_nm * center_nm);
}

}  // namespace

void CrystalConfig::validate() const {
  if (!(length_mm > 0.0)) throw ConfigError("crystal.length_mm: must be > 0");
  if (!(filter_center_nm > 0.0)) throw ConfigError("crystal.filter_center_nm: must be > 0");
  if (!(filter_fwhm_nm > 0.0)) throw ConfigError("crystal.filter_fwhm_nm: must be > 0");
  if (!(collection_fwhm_nm > 0.0)) throw ConfigError("crystal.collection_fwhm_nm: must be > 0");
}

SpectralAmplitude second_harmonic(const SpectralAmplitude& master) {
  if (!master.is_normalized(1e-6)) throw NormalizationError("master amplitude is not unit norm");
  const FrequencyGrid& g = master.grid;
  SpectralAmplitude sh;
  sh.grid = FrequencyGrid(2.0 * g.center, g.step, 2 * g.count);
  sh.values = Eigen::VectorXcd::Zero(sh.grid.count);
  // A2(W_m) = dw * sum_k A_k A_{m-k}; the sum lattice W_m = 2 w0 + (m - K) dw
  // is exactly the doubled grid.
  for (int m = 0; m < sh.grid.count; ++m) {
    Complex acc = 0.0;
    const int lo = std::max(0, m - g.count + 1);
    const int hi = std::min(g.count - 1, m);
    for (int k = lo; k <= hi; ++k) acc += master.values[k] * master.values[m - k];
    sh.values[m] = acc * g.step;
  }
  return sh.normalize();
}

JointSpectralAmplitude build_jsa(const SpectralAmplitude& pump, const CrystalConfig& crystal) {
  crystal.validate();
  const FrequencyGrid& pg = pump.grid;
  if (pg.count % 2 != 0 || pg.count / 2 < 8 || !is_pow2(pg.count / 2))
    throw GridError("pump grid count must be twice a power of two >= 8");

  JointSpectralAmplitude jsa;
  jsa.signal_grid = FrequencyGrid(pg.center / 2.0, pg.step, pg.count / 2);
  jsa.idler_grid = jsa.signal_grid;
  const int k = jsa.signal_grid.count;
  const double degeneracy = pg.center / 2.0;

  const double filter_center = omega_from_lambda_nm(crystal.filter_center_nm);
  const double filter_fwhm = fwhm_omega_from_nm(crystal.filter_center_nm, crystal.filter_fwhm_nm);
  const double collect_fwhm =
      fwhm_omega_from_nm(lambda_nm_from_omega(degeneracy), crystal.collection_fwhm_nm);

  jsa.values.resize(k, k);
  for (int i = 0; i < k; ++i) {
    const double ws = jsa.signal_grid.omega(i);
    const double fs = gaussian_filter_amp(ws, filter_center, filter_fwhm);
    for (int j = 0; j < k; ++j) {
      const double wi = jsa.idler_grid.omega(j);
      // w_s + w_i lands on pump grid index i + j by construction
      const Complex a2 = pump.values[i + j];
      const double mismatch = crystal.gvm_pump_signal_fs_mm * (ws - degeneracy) +
                              crystal.gvm_pump_idler_fs_mm * (wi - degeneracy);
      const double pm = sinc(0.5 * crystal.length_mm * mismatch);
      const double gi = gaussian_filter_amp(wi, degeneracy, collect_fwhm);
      jsa.values(i, j) = a2 * pm * fs * gi;
    }
  }
  const double n = jsa.norm();
  if (!(n > 0.0)) throw DegenerateStateError("joint spectral amplitude vanished");
  jsa.values /= n;
  return jsa;
}

SpectralDensityMatrix trace_out_idler(const JointSpectralAmplitude& jsa) {
  if (std::abs(jsa.norm() - 1.0) > 1e-6)
    throw NormalizationError("joint spectral amplitude is not unit norm");
  SpectralDensityMatrix rho;
  rho.grid = jsa.signal_grid;
  rho.values = jsa.values * jsa.values.adjoint() * jsa.idler_grid.step;
  rho.values = 0.5 * (rho.values + rho.values.adjoint().eval());
  const double tr = rho.trace();
  if (!(tr > 0.0)) throw DegenerateStateError("traced-out state has no weight");
  rho.values /= tr;
  rho.support_mask = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(rho.grid.count, true);
  return rho;
}

}  // namespace homsdm
