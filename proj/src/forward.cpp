#include "homsdm/forward.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>
#include <vector>

#include "homsdm/errors.hpp"
#include "homsdm/rng.hpp"

namespace homsdm {

namespace {

void require_same_grid(const FrequencyGrid& a, const FrequencyGrid& b) {
  if (a != b) throw GridError("master and state live on different grids");
}

void require_normalized_master(const SpectralAmplitude& master) {
  if (!master.is_normalized(1e-6)) throw NormalizationError("master amplitude is not unit norm");
}

// Q is a probability; clamp the rounding fuzz at the boundaries so exact
// statements like Q = 1 => p_c = 0 survive floating point.
double clamp_overlap(double q) {
  if (std::abs(q - 1.0) < 1e-12) return 1.0;
  return std::clamp(q, 0.0, 1.0);
}

void parallel_for_rows(int rows, int threads, const std::function<void(int)>& body) {
  if (threads <= 0) threads = int(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, rows));
  if (threads == 1) {
    for (int r = 0; r < rows; ++r) body(r);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (int r = w; r < rows; r += threads) body(r);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

void ExperimentParams::validate() const {
  auto in01 = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!in01(source_photon_prob)) throw ConfigError("params.f: must be in [0,1]");
  if (!in01(lo_photon_prob)) throw ConfigError("params.l: must be in [0,1]");
  if (!in01(detector_efficiency)) throw ConfigError("params.eta: must be in [0,1]");
  if (!in01(background_prob)) throw ConfigError("params.background: must be in [0,1]");
  if (!(rep_rate_hz > 0.0)) throw ConfigError("params.rep_rate_hz: must be > 0");
}

double michelson_norm(const SpectralAmplitude& master, double dt) {
  require_normalized_master(master);
  double acc = 0.0;
  for (int k = 0; k < master.grid.count; ++k)
    acc += std::norm(master.values[k]) * std::cos(master.grid.omega(k) * dt);
  return 1.0 + acc * master.grid.step;
}

LocalOscillator make_local_oscillator(const SpectralAmplitude& master, double t1, double t2,
                                      double eps_s) {
  require_normalized_master(master);
  const double s = michelson_norm(master, t2 - t1);
  if (s < eps_s)
    throw DarkPortError("Michelson output is dark at this delay (S below threshold)");
  LocalOscillator lo;
  lo.master = master;
  lo.t1 = t1;
  lo.t2 = t2;
  lo.norm_factor = s;
  lo.amplitude.grid = master.grid;
  lo.amplitude.values.resize(master.grid.count);
  const double inv = 1.0 / std::sqrt(2.0 * s);
  for (int k = 0; k < master.grid.count; ++k) {
    const double w = master.grid.omega(k);
    lo.amplitude.values[k] =
        master.values[k] * (std::polar(1.0, -w * t1) + std::polar(1.0, -w * t2)) * inv;
  }
  return lo;
}

Complex two_time_coherence(const SpectralAmplitude& master, const SpectralDensityMatrix& rho,
                           double t1, double t2) {
  require_same_grid(master.grid, rho.grid);
  const int k = master.grid.count;
  Eigen::VectorXcd u1(k), u2(k);
  for (int i = 0; i < k; ++i) {
    const double w = master.grid.omega(i);
    u1[i] = master.values[i] * std::polar(1.0, -w * t1);
    u2[i] = master.values[i] * std::polar(1.0, -w * t2);
  }
  const double step2 = master.grid.step * master.grid.step;
  return (u1.adjoint() * rho.values * u2)(0, 0) * step2;
}

double hom_dip(const SpectralAmplitude& master, const SpectralDensityMatrix& rho, double t) {
  return two_time_coherence(master, rho, t, t).real();
}

double mode_overlap(const LocalOscillator& lo, const SpectralDensityMatrix& rho) {
  require_same_grid(lo.amplitude.grid, rho.grid);
  const double step2 = rho.grid.step * rho.grid.step;
  const Eigen::VectorXcd& phi = lo.amplitude.values;
  const double q = ((phi.adjoint() * rho.values * phi)(0, 0) * step2).real();
  return clamp_overlap(q);
}

double coincidence_probability(const LocalOscillator& lo, const SpectralDensityMatrix& rho,
                               const ExperimentParams& params) {
  params.validate();
  const double q = mode_overlap(lo, rho);
  return params.source_photon_prob * params.lo_photon_prob * lo.norm_factor *
             params.detector_efficiency * params.detector_efficiency / 2.0 * (1.0 - q) +
         params.background_prob;
}

ScanFields evaluate_scan_fields(const SpectralAmplitude& master, const SpectralDensityMatrix& rho,
                                const ScanGrid& scan) {
  require_same_grid(master.grid, rho.grid);
  require_normalized_master(master);
  const int k = master.grid.count;
  const int nt = scan.t_count, ntau = scan.tau_count;
  const double dw = master.grid.step;
  const double w0 = master.grid.center;

  // B_ij = A*_i rho_ij A_j dw^2, binned by sum s = i+j and difference d = i-j:
  // rho~(tau, T) = sum_{s,d} H[s,d] exp(i d dw T) exp(-i (2 w0 + (s-K) dw) tau/2)
  Eigen::MatrixXcd b = rho.values;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      b(i, j) *= std::conj(master.values[i]) * master.values[j] * dw * dw;

  const int nl = 2 * k - 1;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(nl, nl);  // (s, d + K - 1)
  Eigen::VectorXcd hd = Eigen::VectorXcd::Zero(nl);     // sum over s at fixed d
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      h(i + j, i - j + k - 1) += b(i, j);
      hd[i - j + k - 1] += b(i, j);
    }
  }

  // Phase tables over the scan axes.
  Eigen::MatrixXcd et(nl, nt);  // exp(i d dw T_r)
  for (int d = 0; d < nl; ++d)
    for (int r = 0; r < nt; ++r) et(d, r) = std::polar(1.0, (d - (k - 1)) * dw * scan.tbar(r));
  Eigen::MatrixXcd etau(ntau, nl);  // exp(-i (w0 + (s-K) dw/2) tau_c)
  for (int c = 0; c < ntau; ++c)
    for (int s = 0; s < nl; ++s)
      etau(c, s) = std::polar(1.0, -(w0 + (s - k) * dw / 2.0) * scan.tau(c));
  Eigen::MatrixXcd ptau(ntau, nl);  // exp(-i d dw tau_c / 2)
  for (int c = 0; c < ntau; ++c)
    for (int d = 0; d < nl; ++d)
      ptau(c, d) = std::polar(1.0, -(d - (k - 1)) * dw * scan.tau(c) / 2.0);

  ScanFields out;
  out.coherence = (etau * (h * et)).transpose();  // nt x ntau

  out.dip_t1.resize(nt, ntau);
  out.dip_t2.resize(nt, ntau);
  for (int r = 0; r < nt; ++r) {
    Eigen::VectorXcd hr = hd.cwiseProduct(et.col(r));  // h_d exp(i d dw T_r)
    out.dip_t1.row(r) = (ptau * hr).real().transpose();
    out.dip_t2.row(r) = (ptau.conjugate() * hr).real().transpose();
  }

  Eigen::VectorXd weights(k);
  for (int i = 0; i < k; ++i) weights[i] = std::norm(master.values[i]) * dw;
  out.s_tau.resize(ntau);
  for (int c = 0; c < ntau; ++c) {
    double acc = 0.0;
    for (int i = 0; i < k; ++i) acc += weights[i] * std::cos(master.grid.omega(i) * scan.tau(c));
    out.s_tau[c] = 1.0 + acc;
  }
  return out;
}

Interferogram simulate_scan(const SpectralAmplitude& master, const SpectralDensityMatrix& rho,
                            const ScanGrid& scan, const ExperimentParams& params,
                            double exposure_s, std::optional<std::uint64_t> seed, int threads) {
  params.validate();
  scan.validate();
  if (!(exposure_s > 0.0)) throw ConfigError("exposure_s must be > 0");
  if (!scan.resolves(master.grid))
    throw AliasingError("tau step too coarse for the carrier fringes of this grid");

  const ScanFields fields = evaluate_scan_fields(master, rho, scan);

  Interferogram out;
  out.scan = scan;
  out.exposure_s = exposure_s;
  out.params = params;
  out.seed = seed;
  out.counts.resize(scan.t_count, scan.tau_count);

  const double quarter = params.source_photon_prob * params.lo_photon_prob *
                         params.detector_efficiency * params.detector_efficiency / 4.0;
  const double pulses = params.rep_rate_hz * exposure_s;

  parallel_for_rows(scan.t_count, threads, [&](int r) {
    for (int c = 0; c < scan.tau_count; ++c) {
      // p_c = f l eta^2/4 (2S - D(t1) - D(t2) - 2 Re rho~) + background
      const double bracket = 2.0 * fields.s_tau[c] - fields.dip_t1(r, c) - fields.dip_t2(r, c) -
                             2.0 * fields.coherence(r, c).real();
      const double pc = quarter * bracket + params.background_prob;
      const double mu = std::max(0.0, pc * pulses);
      if (seed) {
        CounterRng rng(*seed, std::uint64_t(r) * scan.tau_count + c);
        out.counts(r, c) = double(poisson_draw(rng, mu));
      } else {
        out.counts(r, c) = mu;
      }
    }
  });
  return out;
}

ScanGrid paper_scan() { return ScanGrid(0.233, 4000, 66.0, 25); }
ScanGrid desk_scan() { return ScanGrid(0.55, 4096, 66.0, 32); }

}  // namespace homsdm
