#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>

#include "homsdm/errors.hpp"
#include "homsdm/io.hpp"
#include "homsdm/plot.hpp"
#include "homsdm/reconstruct.hpp"
#include "homsdm/spdc.hpp"

namespace fs = std::filesystem;
using namespace homsdm;

namespace {

std::string g9(double v) { return io::format_g9(v); }

void print_scan_summary(const Interferogram& ifg) {
  const double mean = ifg.counts.mean();
  const double maxv = ifg.counts.maxCoeff();
  // dip depth: center point against the mean of the two extreme T rows
  int rc = 0, cc = 0;
  double best = 1e300;
  for (int r = 0; r < ifg.scan.t_count; ++r)
    for (int c = 0; c < ifg.scan.tau_count; ++c) {
      const double d = std::abs(ifg.scan.tbar(r)) + std::abs(ifg.scan.tau(c));
      if (d < best) {
        best = d;
        rc = r;
        cc = c;
      }
    }
  const double far =
      0.5 * (ifg.counts.row(0).mean() + ifg.counts.row(ifg.scan.t_count - 1).mean());
  const double dip = far > 0.0 ? 1.0 - ifg.counts(rc, cc) / far : 0.0;
  std::printf("points %lld\n", (long long)ifg.scan.points());
  std::printf("mean_counts %s\n", g9(mean).c_str());
  std::printf("max_counts %s\n", g9(maxv).c_str());
  std::printf("dip_depth %s\n", g9(dip).c_str());
}

int cmd_simulate(const std::string& config_path, const std::string& out_path,
                 std::optional<std::uint64_t> seed, const std::string& preset) {
  io::SimulateConfig cfg = io::load_simulate_config(config_path, preset);
  if (seed) cfg.seed = seed;
  Interferogram ifg =
      simulate_scan(cfg.master, cfg.rho, cfg.scan, cfg.params, cfg.exposure_s, cfg.seed);
  io::write_scan(out_path, ifg);
  print_scan_summary(ifg);
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int cmd_reconstruct(const std::string& scan_path, const std::string& master_path,
                    const std::string& config_path, const std::string& out_path,
                    const std::string& truth_path) {
  const Interferogram ifg = io::read_scan(scan_path);
  const SpectralAmplitude master = io::load_master(master_path);
  ReconstructionConfig cfg;
  if (!config_path.empty()) cfg = io::load_reconstruction_config(config_path);
  ReconstructionResult res = reconstruct(ifg, master, cfg);

  io::MatrixProvenance prov;
  prov.kind = "reconstruction";
  prov.report = res.report;
  io::write_matrix(out_path, res.rho, prov);

  std::printf("n_estimate %s\n", g9(res.report.n_estimate).c_str());
  std::printf("background_estimate %s\n", g9(res.report.background_estimate).c_str());
  std::printf("residual_rms %s\n", g9(res.report.residual_rms).c_str());
  std::printf("masked_fraction %s\n", g9(res.report.masked_fraction).c_str());
  std::printf("min_eigenvalue_pre %s\n", g9(res.report.min_eigenvalue_pre).c_str());
  if (!truth_path.empty()) {
    io::MatrixFile truth = io::read_matrix(truth_path);
    if (truth.rho.grid != res.rho.grid) throw GridError("truth matrix grid differs");
    SpectralDensityMatrix masked = restrict_to_support(truth.rho, res.rho.support_mask);
    std::printf("fidelity_vs_truth %s\n", g9(overlap_fidelity(res.rho, masked)).c_str());
  }
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int cmd_theory(const std::string& config_path, const std::string& out_path,
               const std::string& sweep) {
  io::TheoryConfig cfg = io::load_theory_config(config_path);
  const SpectralAmplitude pump =
      cfg.pump_override ? *cfg.pump_override : second_harmonic(cfg.master);
  if (!sweep.empty()) {
    std::printf("# filter_fwhm_nm purity\n");
    std::string rest = sweep;
    while (!rest.empty()) {
      const size_t comma = rest.find(',');
      const std::string tok = rest.substr(0, comma);
      rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
      CrystalConfig c = cfg.crystal;
      try {
        c.filter_fwhm_nm = std::stod(tok);
      } catch (...) {
        throw ConfigError("--sweep-filter: bad number '" + tok + "'");
      }
      const double p = purity(trace_out_idler(build_jsa(pump, c)));
      std::printf("%s %s\n", g9(c.filter_fwhm_nm).c_str(), g9(p).c_str());
    }
    return 0;
  }
  SpectralDensityMatrix rho = trace_out_idler(build_jsa(pump, cfg.crystal));
  io::MatrixProvenance prov;
  prov.kind = "theory";
  prov.crystal = cfg.crystal;
  prov.purity = purity(rho);
  io::write_matrix(out_path, rho, prov);
  std::printf("purity %s\n", g9(*prov.purity).c_str());
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

double fwhm_of_profile(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y) {
  Eigen::Index peak;
  const double top = y.maxCoeff(&peak);
  if (!(top > 0.0)) return 0.0;
  const double half = top / 2.0;
  double lo = x[0], hi = x[x.size() - 1];
  for (Eigen::Index i = peak; i > 0; --i)
    if (y[i - 1] < half) {
      const double t = (half - y[i - 1]) / (y[i] - y[i - 1]);
      lo = x[i - 1] + t * (x[i] - x[i - 1]);
      break;
    }
  for (Eigen::Index i = peak; i + 1 < y.size(); ++i)
    if (y[i + 1] < half) {
      const double t = (half - y[i + 1]) / (y[i] - y[i + 1]);
      hi = x[i + 1] - t * (x[i + 1] - x[i]);
      break;
    }
  return hi - lo;
}

void print_matrix_stats(const char* tag, const SpectralDensityMatrix& rho) {
  const int k = rho.grid.count;
  // diagonal profile against wavelength
  Eigen::ArrayXd lam(k), diag(k);
  for (int i = 0; i < k; ++i) {
    lam[i] = rho.grid.wavelength_nm(k - 1 - i);  // increasing nm
    diag[i] = std::abs(rho.values(k - 1 - i, k - 1 - i));
  }
  // antidiagonal profile rho(w0 + delta, w0 - delta) mapped to nm on the
  // (w0 + delta) axis
  const int half = k / 2;
  const int m = std::min(half, k - half) - 1;
  Eigen::ArrayXd alam(2 * m + 1), anti(2 * m + 1);
  for (int d = -m; d <= m; ++d) {
    alam[d + m] = rho.grid.wavelength_nm(half - d);
    anti[d + m] = std::abs(rho.values(half + d, half - d));
  }
  std::printf("%s_diag_fwhm_nm %s\n", tag, g9(fwhm_of_profile(lam, diag)).c_str());
  std::printf("%s_antidiag_fwhm_nm %s\n", tag, g9(fwhm_of_profile(alam, anti)).c_str());
  // phase statistics inside the 0.25 max contour
  const double cutoff = 0.25 * rho.values.cwiseAbs().maxCoeff();
  double max_phase = 0.0, rms = 0.0;
  long n = 0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      if (std::abs(rho.values(i, j)) < cutoff) continue;
      const double ph = std::abs(std::arg(rho.values(i, j)));
      max_phase = std::max(max_phase, ph);
      rms += ph * ph;
      ++n;
    }
  std::printf("%s_max_phase_r25 %s\n", tag, g9(max_phase).c_str());
  std::printf("%s_rms_phase_r25 %s\n", tag, g9(n > 0 ? std::sqrt(rms / n) : 0.0).c_str());
}

int cmd_compare(const std::string& path_a, const std::string& path_b) {
  io::MatrixFile a = io::read_matrix(path_a);
  io::MatrixFile b = io::read_matrix(path_b);
  if (a.rho.grid != b.rho.grid)
    throw GridError("matrices live on different grids; refusing to resample");
  const double fid = overlap_fidelity(a.rho, b.rho);
  const double dist = (a.rho.values - b.rho.values).norm() * a.rho.grid.step;
  const double rel = dist / (b.rho.values.norm() * b.rho.grid.step);
  std::printf("fidelity %s\n", g9(fid).c_str());
  std::printf("frobenius_distance %s\n", g9(dist).c_str());
  std::printf("frobenius_relative %s\n", g9(rel).c_str());
  print_matrix_stats("a", a.rho);
  print_matrix_stats("b", b.rho);
  return 0;
}

int cmd_plot(const std::string& in_path, const std::string& out_path) {
  // dispatch on the header format tag
  std::ifstream probe(in_path);
  if (!probe) throw Error(ErrorKind::data, "cannot open: " + in_path);
  std::string head((std::istreambuf_iterator<char>(probe)), std::istreambuf_iterator<char>());
  if (head.find("HOMSCAN/1") != std::string::npos) {
    plot::write_scan_png(out_path, io::read_scan(in_path));
  } else if (head.find("HOMRHO/1") != std::string::npos) {
    plot::write_matrix_svg(out_path, io::read_matrix(in_path).rho);
  } else {
    throw FormatError("unknown format tag in " + in_path);
  }
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hong-Ou-Mandel spectral density matrix toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_path, scan_path, master_path, truth_path, preset, sweep;
  std::string path_a, path_b, in_path;
  std::uint64_t seed_value = 0;

  auto* sim = app.add_subcommand("simulate", "simulate a coincidence scan");
  sim->add_option("--config", config_path, "simulation config (JSON)")->required();
  sim->add_option("--out", out_path, "output scan file")->required();
  auto* seed_opt = sim->add_option("--seed", seed_value, "Poisson noise seed");
  sim->add_option("--preset", preset, "scan preset: paper or desk");

  auto* rec = app.add_subcommand("reconstruct", "invert a scan to a density matrix");
  rec->add_option("--scan", scan_path, "input scan file")->required();
  rec->add_option("--master", master_path, "master amplitude descriptor (JSON)")->required();
  rec->add_option("--config", config_path, "reconstruction config (JSON)");
  rec->add_option("--out", out_path, "output matrix file")->required();
  rec->add_option("--truth", truth_path, "optional truth matrix for a fidelity line");

  auto* theo = app.add_subcommand("theory", "downconversion-model density matrix");
  theo->add_option("--config", config_path, "theory config (JSON)")->required();
  theo->add_option("--out", out_path, "output matrix file");
  theo->add_option("--sweep-filter", sweep, "comma list of filter FWHM (nm); prints a table");

  auto* cmp = app.add_subcommand("compare", "compare two matrix files");
  cmp->add_option("a", path_a, "matrix file A")->required();
  cmp->add_option("b", path_b, "matrix file B")->required();

  auto* plt = app.add_subcommand("plot", "render a scan heatmap or matrix contours");
  plt->add_option("input", in_path, "scan or matrix file")->required();
  plt->add_option("--out", out_path, "output image (.png for scans, .svg for matrices)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) {
      std::optional<std::uint64_t> seed;
      if (seed_opt->count() > 0) seed = seed_value;
      return cmd_simulate(config_path, out_path, seed, preset);
    }
    if (rec->parsed())
      return cmd_reconstruct(scan_path, master_path, config_path, out_path, truth_path);
    if (theo->parsed()) {
      if (sweep.empty() && out_path.empty())
        throw ConfigError("theory: --out is required unless --sweep-filter is given");
      return cmd_theory(config_path, out_path, sweep);
    }
    if (cmp->parsed()) return cmd_compare(path_a, path_b);
    if (plt->parsed()) return cmd_plot(in_path, out_path);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 1;
}
