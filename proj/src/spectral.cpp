#include "homsdm/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "homsdm/errors.hpp"
#include "homsdm/fft.hpp"

namespace homsdm {

SpectralAmplitude& SpectralAmplitude::normalize() {
  const double n = norm();
  if (!(n > 0.0)) throw DegenerateStateError("cannot normalize a zero amplitude");
  values /= n;
  return *this;
}

Eigen::Index SpectralDensityMatrix::masked_count() const {
  if (support_mask.size() == 0) return 0;
  return support_mask.size() - support_mask.count();
}

namespace {

void require_pow2(Eigen::Index n) {
  if (n < 8 || !is_pow2(int(n)))
    throw SizeError("transform length must be a power of two >= 8");
}

void require_same_grid(const FrequencyGrid& a, const FrequencyGrid& b) {
  if (a != b) throw GridError("frequency grids differ");
}

void require_normalized(const SpectralDensityMatrix& rho) {
  if (!rho.is_normalized(1e-6))
    throw NormalizationError("density matrix trace is not 1 within 1e-6");
}

Eigen::Array<bool, Eigen::Dynamic, 1> full_mask(Eigen::Index n) {
  return Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, true);
}

}  // namespace

Eigen::VectorXcd dft_time_to_freq(const Eigen::VectorXcd& samples, double step) {
  const Eigen::Index k = samples.size();
  require_pow2(k);
  // Centered grids fold into (-1)^n pre/post phases; K % 4 == 0 makes the
  // leftover constant phase exp(-i*pi*K/2) equal to one.
  Eigen::VectorXcd work(k);
  for (Eigen::Index n = 0; n < k; ++n) work[n] = (n & 1) ? -samples[n] : samples[n];
  fft::transform(work, -1);
  for (Eigen::Index m = 0; m < k; ++m) work[m] *= (m & 1) ? -step : step;
  return work;
}

Eigen::VectorXcd dft_freq_to_time(const Eigen::VectorXcd& spectrum, double step) {
  const Eigen::Index k = spectrum.size();
  require_pow2(k);
  Eigen::VectorXcd work(k);
  for (Eigen::Index m = 0; m < k; ++m) work[m] = (m & 1) ? -spectrum[m] : spectrum[m];
  fft::transform(work, +1);
  const double scale = 1.0 / (double(k) * step);
  for (Eigen::Index n = 0; n < k; ++n) work[n] *= (n & 1) ? -scale : scale;
  return work;
}

SpectralDensityMatrix hermitize(const SpectralDensityMatrix& m) {
  if (m.values.rows() != m.values.cols()) throw SizeError("hermitize needs a square matrix");
  SpectralDensityMatrix out = m;
  out.values = 0.5 * (m.values + m.values.adjoint().eval());
  return out;
}

SpectralDensityMatrix project_psd(const SpectralDensityMatrix& m) {
  SpectralDensityMatrix out = hermitize(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(out.values);
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  const double tr = lam.sum() * m.grid.step;
  if (!(tr > 0.0)) throw DegenerateStateError("no positive weight left after PSD clipping");
  lam /= tr;
  out.values = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
  out.values = 0.5 * (out.values + out.values.adjoint().eval());
  return out;
}

double min_eigenvalue(const SpectralDensityMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m.values, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() * m.grid.step;
}

double purity(const SpectralDensityMatrix& rho) {
  require_normalized(rho);
  return rho.values.squaredNorm() * rho.grid.step * rho.grid.step;
}

double overlap_fidelity(const SpectralDensityMatrix& a, const SpectralDensityMatrix& b) {
  require_same_grid(a.grid, b.grid);
  const double step2 = a.grid.step * a.grid.step;
  const double cross = a.values.cwiseProduct(b.values.conjugate()).sum().real() * step2;
  return cross / std::sqrt(purity(a) * purity(b));
}

SpectralDensityMatrix restrict_to_support(const SpectralDensityMatrix& rho,
                                          const Eigen::Array<bool, Eigen::Dynamic, 1>& mask) {
  if (mask.size() != rho.values.rows()) throw SizeError("mask length mismatch");
  SpectralDensityMatrix out = rho;
  out.support_mask = mask;
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    if (!mask[i]) {
      out.values.row(i).setZero();
      out.values.col(i).setZero();
    }
  }
  const double tr = out.trace();
  if (!(tr > 0.0)) throw DegenerateStateError("support mask removed all weight");
  out.values /= tr;
  return out;
}

SpectralDensityMatrix pure_state(const SpectralAmplitude& psi) {
  SpectralAmplitude n = psi;
  n.normalize();
  SpectralDensityMatrix rho;
  rho.grid = n.grid;
  rho.values = n.values * n.values.adjoint();
  rho.support_mask = full_mask(n.values.size());
  return rho;
}

SpectralAmplitude gaussian_amplitude(const FrequencyGrid& grid, double fwhm_fs, double chirp_fs2,
                                     double center_offset, double delay_fs) {
  if (!(fwhm_fs > 0.0)) throw ConfigError("gaussian pulse fwhm_fs must be > 0");
  const double sigma = gaussian_sigma_omega(fwhm_fs);
  SpectralAmplitude a;
  a.grid = grid;
  a.values.resize(grid.count);
  for (int k = 0; k < grid.count; ++k) {
    const double nu = grid.omega(k) - grid.center - center_offset;
    const double mag = std::exp(-nu * nu / (4.0 * sigma * sigma));
    const double phase = 0.5 * chirp_fs2 * nu * nu - grid.omega(k) * delay_fs;
    a.values[k] = std::polar(mag, phase);
  }
  return a.normalize();
}

Eigen::VectorXcd time_profile(const SpectralAmplitude& a, const Eigen::ArrayXd& times) {
  const double scale = a.grid.step / kTwoPi;
  Eigen::VectorXcd out(times.size());
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    Complex acc = 0.0;
    for (int k = 0; k < a.grid.count; ++k)
      acc += a.values[k] * std::polar(1.0, a.grid.omega(k) * times[i]);
    out[i] = acc * scale;
  }
  return out;
}

}  // namespace homsdm
