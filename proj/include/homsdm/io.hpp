#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "homsdm/forward.hpp"
#include "homsdm/reconstruct.hpp"
#include "homsdm/spdc.hpp"
#include "homsdm/spectral.hpp"

namespace homsdm::io {

/// Scan files: a "HOMSCAN/1" JSON header plus a sidecar binary payload of
/// 64-bit little-endian doubles, row-major over T then tau. Matrix files:
/// "HOMRHO/1" header plus 2 K^2 doubles, interleaved (re, im), row-major.
/// Writes are atomic (temp file + rename) and carry no timestamps, so
/// identical inputs produce byte-identical files.

void write_scan(const std::filesystem::path& path, const Interferogram& ifg);
Interferogram read_scan(const std::filesystem::path& path);

/// Provenance block stored in a matrix header.
struct MatrixProvenance {
  std::string kind;  // "reconstruction", "theory", "synthetic"
  std::optional<ReconstructionReport> report;
  std::optional<CrystalConfig> crystal;
  std::optional<double> purity;
};

void write_matrix(const std::filesystem::path& path, const SpectralDensityMatrix& rho,
                  const MatrixProvenance& provenance);
struct MatrixFile {
  SpectralDensityMatrix rho;
  MatrixProvenance provenance;
};
MatrixFile read_matrix(const std::filesystem::path& path);

/// Master pulse descriptor: analytic Gaussian (center wavelength, duration,
/// chirp) or a tabulated complex spectrum resampled onto the grid.
SpectralAmplitude parse_master(const std::string& json_text);
SpectralAmplitude load_master(const std::filesystem::path& path);

struct SimulateConfig {
  SpectralAmplitude master;
  SpectralDensityMatrix rho;
  ScanGrid scan;
  ExperimentParams params;
  double exposure_s = 0.08;
  std::optional<std::uint64_t> seed;
};
SimulateConfig parse_simulate_config(const std::string& json_text,
                                     const std::filesystem::path& base_dir,
                                     const std::string& preset_override = "");
SimulateConfig load_simulate_config(const std::filesystem::path& path,
                                    const std::string& preset_override = "");

struct TheoryConfig {
  SpectralAmplitude master;
  std::optional<SpectralAmplitude> pump_override;
  CrystalConfig crystal;
};
TheoryConfig parse_theory_config(const std::string& json_text);
TheoryConfig load_theory_config(const std::filesystem::path& path);

ReconstructionConfig parse_reconstruction_config(const std::string& json_text);
ReconstructionConfig load_reconstruction_config(const std::filesystem::path& path);

/// Fixed 9-significant-digit formatting used by every CLI report.
std::string format_g9(double v);

}  // namespace homsdm::io
