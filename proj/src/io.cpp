#include "homsdm/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "homsdm/errors.hpp"

namespace homsdm::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kScanTag = "HOMSCAN/1";
constexpr const char* kMatrixTag = "HOMRHO/1";
constexpr const char* kToolVersion = "1.0.0";

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::data, "cannot open for writing: " + tmp.string());
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw Error(ErrorKind::data, "write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::data, "cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void append_f64_le(std::string& bytes, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
  char buf[8];
  std::memcpy(buf, &u, 8);
  bytes.append(buf, 8);
}

double read_f64_le(const char* p) {
  std::uint64_t u;
  std::memcpy(&u, p, 8);
  if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

fs::path payload_path(const fs::path& header, const std::string& recorded) {
  fs::path p(recorded);
  if (p.is_absolute()) return p;
  return header.parent_path() / p;
}

template <typename T>
T get_req(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError("missing field: " + key);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for field: " + key);
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for field: " + key);
  }
}

json grid_to_json(const FrequencyGrid& g) {
  return json{{"center", g.center}, {"step", g.step}, {"count", g.count}};
}

FrequencyGrid grid_from_json(const json& j) {
  return FrequencyGrid(get_req<double>(j, "center"), get_req<double>(j, "step"),
                       get_req<int>(j, "count"));
}

json scan_to_json(const ScanGrid& s) {
  return json{{"tau_step", s.tau_step},     {"tau_count", s.tau_count}, {"t_step", s.t_step},
              {"t_count", s.t_count},       {"tau_offset", s.tau_offset},
              {"t_offset", s.t_offset}};
}

ScanGrid scan_from_json(const json& j) {
  return ScanGrid(get_req<double>(j, "tau_step"), get_req<int>(j, "tau_count"),
                  get_req<double>(j, "t_step"), get_req<int>(j, "t_count"),
                  get_or<double>(j, "tau_offset", 0.0), get_or<double>(j, "t_offset", 0.0));
}

json params_to_json(const ExperimentParams& p) {
  return json{{"f", p.source_photon_prob},
              {"l", p.lo_photon_prob},
              {"eta", p.detector_efficiency},
              {"rep_rate_hz", p.rep_rate_hz},
              {"background", p.background_prob}};
}

ExperimentParams params_from_json(const json& j) {
  ExperimentParams p;
  p.source_photon_prob = get_or<double>(j, "f", p.source_photon_prob);
  p.lo_photon_prob = get_or<double>(j, "l", p.lo_photon_prob);
  p.detector_efficiency = get_or<double>(j, "eta", p.detector_efficiency);
  p.rep_rate_hz = get_or<double>(j, "rep_rate_hz", p.rep_rate_hz);
  p.background_prob = get_or<double>(j, "background", p.background_prob);
  p.validate();
  return p;
}

json crystal_to_json(const CrystalConfig& c) {
  return json{{"length_mm", c.length_mm},
              {"gvm_pump_signal_fs_mm", c.gvm_pump_signal_fs_mm},
              {"gvm_pump_idler_fs_mm", c.gvm_pump_idler_fs_mm},
              {"filter_center_nm", c.filter_center_nm},
              {"filter_fwhm_nm", c.filter_fwhm_nm},
              {"collection_fwhm_nm", c.collection_fwhm_nm}};
}

CrystalConfig crystal_from_json(const json& j) {
  CrystalConfig c;
  c.length_mm = get_or<double>(j, "length_mm", c.length_mm);
  c.gvm_pump_signal_fs_mm = get_or<double>(j, "gvm_pump_signal_fs_mm", c.gvm_pump_signal_fs_mm);
  c.gvm_pump_idler_fs_mm = get_or<double>(j, "gvm_pump_idler_fs_mm", c.gvm_pump_idler_fs_mm);
  c.filter_center_nm = get_or<double>(j, "filter_center_nm", c.filter_center_nm);
  c.filter_fwhm_nm = get_or<double>(j, "filter_fwhm_nm", c.filter_fwhm_nm);
  c.collection_fwhm_nm = get_or<double>(j, "collection_fwhm_nm", c.collection_fwhm_nm);
  c.validate();
  return c;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what());
  }
}

SpectralAmplitude master_from_json(const json& m) {
  const std::string type = get_or<std::string>(m, "type", "gaussian");
  if (type == "gaussian") {
    const double lambda = get_or<double>(m, "lambda_nm", 774.0);
    const double fwhm = get_or<double>(m, "fwhm_fs", 165.0);
    const double chirp = get_or<double>(m, "chirp_fs2", 0.0);
    const double center = m.contains("center_rad_fs") ? get_req<double>(m, "center_rad_fs")
                                                      : omega_from_lambda_nm(lambda);
    FrequencyGrid grid;
    if (m.contains("grid")) {
      const json& g = m.at("grid");
      const int count = get_or<int>(g, "count", 256);
      const double sigma = gaussian_sigma_omega(fwhm);
      const double step = get_or<double>(g, "step", 12.0 * sigma / count);
      grid = FrequencyGrid(get_or<double>(g, "center", center), step, count);
    } else {
      const double sigma = gaussian_sigma_omega(fwhm);
      grid = FrequencyGrid(center, 12.0 * sigma / 256, 256);
    }
    return gaussian_amplitude(grid, fwhm, chirp);
  }
  if (type == "tabulated") {
    const auto omega = get_req<std::vector<double>>(m, "omega");
    const auto re = get_req<std::vector<double>>(m, "re");
    const auto im = get_req<std::vector<double>>(m, "im");
    if (omega.size() != re.size() || omega.size() != im.size() || omega.size() < 2)
      throw ConfigError("master.omega/re/im: need matching arrays of length >= 2");
    for (size_t i = 1; i < omega.size(); ++i)
      if (!(omega[i] > omega[i - 1])) throw ConfigError("master.omega: must increase strictly");
    if (!m.contains("grid")) throw ConfigError("missing field: master.grid");
    FrequencyGrid grid = grid_from_json(m.at("grid"));
    SpectralAmplitude a;
    a.grid = grid;
    a.values.resize(grid.count);
    for (int k = 0; k < grid.count; ++k) {
      const double w = grid.omega(k);
      if (w <= omega.front() || w >= omega.back()) {
        a.values[k] = 0.0;
        continue;
      }
      auto it = std::upper_bound(omega.begin(), omega.end(), w);
      const size_t hi = size_t(it - omega.begin());
      const size_t lo = hi - 1;
      const double t = (w - omega[lo]) / (omega[hi] - omega[lo]);
      a.values[k] = Complex((1 - t) * re[lo] + t * re[hi], (1 - t) * im[lo] + t * im[hi]);
    }
    return a.normalize();
  }
  throw ConfigError("master.type: unknown type '" + type + "'");
}

}  // namespace

std::string format_g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_scan(const fs::path& path, const Interferogram& ifg) {
  const std::string payload_name = path.filename().string() + ".bin";
  json header{
      {"format", kScanTag},
      {"payload", payload_name},
      {"scan", scan_to_json(ifg.scan)},
      {"exposure_s", ifg.exposure_s},
      {"params", params_to_json(ifg.params)},
      {"noiseless", !ifg.seed.has_value()},
      {"meta", {{"tool", "homsdm"}, {"version", kToolVersion}}},
  };
  if (ifg.seed)
    header["seed"] = *ifg.seed;
  else
    header["seed"] = nullptr;

  std::string bytes;
  bytes.reserve(size_t(ifg.scan.points()) * 8);
  for (int r = 0; r < ifg.scan.t_count; ++r)
    for (int c = 0; c < ifg.scan.tau_count; ++c) append_f64_le(bytes, ifg.counts(r, c));

  write_file_atomic(path.parent_path().empty() ? fs::path(payload_name)
                                               : path.parent_path() / payload_name,
                    bytes);
  write_file_atomic(path, header.dump(2) + "\n");
}

Interferogram read_scan(const fs::path& path) {
  const json header = parse_json(read_file(path));
  if (get_or<std::string>(header, "format", "") != kScanTag)
    throw FormatError("not a " + std::string(kScanTag) + " file: " + path.string());

  Interferogram ifg;
  ifg.scan = scan_from_json(header.at("scan"));
  ifg.exposure_s = get_req<double>(header, "exposure_s");
  ifg.params = params_from_json(header.at("params"));
  if (header.contains("seed") && !header.at("seed").is_null())
    ifg.seed = header.at("seed").get<std::uint64_t>();

  const std::string bytes = read_file(payload_path(path, get_req<std::string>(header, "payload")));
  const size_t expect = size_t(ifg.scan.points()) * 8;
  if (bytes.size() != expect)
    throw FormatError("scan payload length mismatch: got " + std::to_string(bytes.size()) +
                      " bytes, expected " + std::to_string(expect));
  ifg.counts.resize(ifg.scan.t_count, ifg.scan.tau_count);
  const char* p = bytes.data();
  for (int r = 0; r < ifg.scan.t_count; ++r)
    for (int c = 0; c < ifg.scan.tau_count; ++c, p += 8) {
      ifg.counts(r, c) = read_f64_le(p);
      if (ifg.counts(r, c) < 0.0) throw FormatError("negative counts in scan payload");
    }
  return ifg;
}

namespace {

json provenance_to_json(const MatrixProvenance& p) {
  json j{{"kind", p.kind}};
  if (p.report) {
    j["report"] = {{"n_estimate", p.report->n_estimate},
                   {"background_estimate", p.report->background_estimate},
                   {"residual_rms", p.report->residual_rms},
                   {"masked_fraction", p.report->masked_fraction},
                   {"min_eigenvalue_pre", p.report->min_eigenvalue_pre}};
  }
  if (p.crystal) j["crystal"] = crystal_to_json(*p.crystal);
  if (p.purity) j["purity"] = *p.purity;
  return j;
}

MatrixProvenance provenance_from_json(const json& j) {
  MatrixProvenance p;
  p.kind = get_or<std::string>(j, "kind", "unknown");
  if (j.contains("report")) {
    const json& r = j.at("report");
    ReconstructionReport rep;
    rep.n_estimate = get_or<double>(r, "n_estimate", 0.0);
    rep.background_estimate = get_or<double>(r, "background_estimate", 0.0);
    rep.residual_rms = get_or<double>(r, "residual_rms", 0.0);
    rep.masked_fraction = get_or<double>(r, "masked_fraction", 0.0);
    rep.min_eigenvalue_pre = get_or<double>(r, "min_eigenvalue_pre", 0.0);
    p.report = rep;
  }
  if (j.contains("crystal")) p.crystal = crystal_from_json(j.at("crystal"));
  if (j.contains("purity")) p.purity = j.at("purity").get<double>();
  return p;
}

}  // namespace

void write_matrix(const fs::path& path, const SpectralDensityMatrix& rho,
                  const MatrixProvenance& provenance) {
  const int k = rho.grid.count;
  if (rho.values.rows() != k || rho.values.cols() != k)
    throw SizeError("matrix does not match its grid");
  std::vector<int> mask(size_t(k), 1);
  if (rho.support_mask.size() == k)
    for (int i = 0; i < k; ++i) mask[size_t(i)] = rho.support_mask[i] ? 1 : 0;

  const std::string payload_name = path.filename().string() + ".bin";
  json header{
      {"format", kMatrixTag},
      {"payload", payload_name},
      {"grid", grid_to_json(rho.grid)},
      {"support_mask", mask},
      {"provenance", provenance_to_json(provenance)},
      {"meta", {{"tool", "homsdm"}, {"version", kToolVersion}}},
  };

  std::string bytes;
  bytes.reserve(size_t(k) * k * 16);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      append_f64_le(bytes, rho.values(i, j).real());
      append_f64_le(bytes, rho.values(i, j).imag());
    }
  write_file_atomic(path.parent_path().empty() ? fs::path(payload_name)
                                               : path.parent_path() / payload_name,
                    bytes);
  write_file_atomic(path, header.dump(2) + "\n");
}

MatrixFile read_matrix(const fs::path& path) {
  const json header = parse_json(read_file(path));
  if (get_or<std::string>(header, "format", "") != kMatrixTag)
    throw FormatError("not a " + std::string(kMatrixTag) + " file: " + path.string());

  MatrixFile mf;
  mf.rho.grid = grid_from_json(header.at("grid"));
  const int k = mf.rho.grid.count;
  const auto mask = get_req<std::vector<int>>(header, "support_mask");
  if (int(mask.size()) != k) throw FormatError("support_mask length mismatch");
  mf.rho.support_mask.resize(k);
  for (int i = 0; i < k; ++i) mf.rho.support_mask[i] = mask[size_t(i)] != 0;
  mf.provenance = provenance_from_json(header.at("provenance"));

  const std::string bytes = read_file(payload_path(path, get_req<std::string>(header, "payload")));
  const size_t expect = size_t(k) * k * 16;
  if (bytes.size() != expect)
    throw FormatError("matrix payload length mismatch: got " + std::to_string(bytes.size()) +
                      " bytes, expected " + std::to_string(expect));
  mf.rho.values.resize(k, k);
  const char* p = bytes.data();
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j, p += 16)
      mf.rho.values(i, j) = Complex(read_f64_le(p), read_f64_le(p + 8));
  return mf;
}

SpectralAmplitude parse_master(const std::string& json_text) {
  json j = parse_json(json_text);
  if (j.contains("master")) j = j.at("master");
  return master_from_json(j);
}

SpectralAmplitude load_master(const fs::path& path) { return parse_master(read_file(path)); }

SimulateConfig parse_simulate_config(const std::string& json_text, const fs::path& base_dir,
                                     const std::string& preset_override) {
  const json j = parse_json(json_text);
  SimulateConfig cfg;
  if (!j.contains("master")) throw ConfigError("missing field: master");
  cfg.master = master_from_json(j.at("master"));

  std::string preset = preset_override;
  if (preset.empty() && j.contains("scan") && j.at("scan").contains("preset"))
    preset = j.at("scan").at("preset").get<std::string>();
  if (preset == "paper")
    cfg.scan = paper_scan();
  else if (preset == "desk")
    cfg.scan = desk_scan();
  else if (!preset.empty())
    throw ConfigError("scan.preset: unknown preset '" + preset + "'");
  else if (j.contains("scan"))
    cfg.scan = scan_from_json(j.at("scan"));
  else
    cfg.scan = desk_scan();

  cfg.params = j.contains("params") ? params_from_json(j.at("params")) : ExperimentParams{};
  cfg.exposure_s = get_or<double>(j, "exposure_s", 0.08);
  if (!(cfg.exposure_s > 0.0)) throw ConfigError("exposure_s: must be > 0");
  if (j.contains("seed") && !j.at("seed").is_null())
    cfg.seed = j.at("seed").get<std::uint64_t>();

  if (!j.contains("source")) throw ConfigError("missing field: source");
  const json& src = j.at("source");
  const std::string type = get_req<std::string>(src, "type");
  if (type == "gaussian_pure") {
    const double factor = get_or<double>(src, "bandwidth_factor", 0.4);
    if (!(factor > 0.0)) throw ConfigError("source.bandwidth_factor: must be > 0");
    const double master_sigma = std::sqrt(std::max(
        1e-300, cfg.master.values.cwiseAbs2()
                    .cwiseProduct(
                        (cfg.master.grid.omegas() - cfg.master.grid.center).square().matrix())
                    .sum() *
                    cfg.master.grid.step));
    const double fwhm_fs = 2.0 * std::sqrt(2.0 * std::log(2.0)) / (2.0 * factor * master_sigma);
    SpectralAmplitude psi =
        gaussian_amplitude(cfg.master.grid, fwhm_fs, get_or<double>(src, "chirp_fs2", 0.0),
                           get_or<double>(src, "center_offset", 0.0),
                           get_or<double>(src, "delay_fs", 0.0));
    cfg.rho = pure_state(psi);
  } else if (type == "spdc") {
    CrystalConfig crystal =
        src.contains("crystal") ? crystal_from_json(src.at("crystal")) : CrystalConfig{};
    cfg.rho = trace_out_idler(build_jsa(second_harmonic(cfg.master), crystal));
  } else if (type == "matrix_file") {
    const fs::path p = base_dir / get_req<std::string>(src, "path");
    MatrixFile mf = read_matrix(p);
    if (mf.rho.grid != cfg.master.grid)
      throw GridError("source.path: matrix grid differs from the master grid");
    cfg.rho = std::move(mf.rho);
  } else {
    throw ConfigError("source.type: unknown type '" + type + "'");
  }
  return cfg;
}

SimulateConfig load_simulate_config(const fs::path& path, const std::string& preset_override) {
  return parse_simulate_config(read_file(path), path.parent_path(), preset_override);
}

TheoryConfig parse_theory_config(const std::string& json_text) {
  const json j = parse_json(json_text);
  TheoryConfig cfg;
  if (!j.contains("master")) throw ConfigError("missing field: master");
  cfg.master = master_from_json(j.at("master"));
  if (j.contains("pump")) cfg.pump_override = master_from_json(j.at("pump"));
  cfg.crystal = j.contains("crystal") ? crystal_from_json(j.at("crystal")) : CrystalConfig{};
  return cfg;
}

TheoryConfig load_theory_config(const fs::path& path) {
  return parse_theory_config(read_file(path));
}

ReconstructionConfig parse_reconstruction_config(const std::string& json_text) {
  const json j = parse_json(json_text);
  ReconstructionConfig cfg;
  cfg.carrier = get_or<double>(j, "carrier", cfg.carrier);
  cfg.sideband_halfwidth = get_or<double>(j, "sideband_halfwidth", cfg.sideband_halfwidth);
  cfg.far_fraction = get_or<double>(j, "far_fraction", cfg.far_fraction);
  cfg.amp_floor = get_or<double>(j, "amp_floor", cfg.amp_floor);
  cfg.psd_project = get_or<bool>(j, "psd_project", cfg.psd_project);
  cfg.far_residual_tol = get_or<double>(j, "far_residual_tol", cfg.far_residual_tol);
  cfg.validate();
  return cfg;
}

ReconstructionConfig load_reconstruction_config(const fs::path& path) {
  return parse_reconstruction_config(read_file(path));
}

}  // namespace homsdm::io
