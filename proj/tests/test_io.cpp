#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "homsdm/errors.hpp"
#include "homsdm/io.hpp"
#include "homsdm/plot.hpp"
#include "homsdm/spdc.hpp"
#include "test_helpers.hpp"

using namespace homsdm;
using namespace homsdm::testing;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
  static fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / ("homsdm_test_" + std::to_string(getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(s.data(), std::streamsize(s.size()));
}

struct CliResult {
  int exit_code;
  std::string out;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(HOMSDM_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

double grab(const std::string& text, const std::string& key) {
  const size_t pos = text.find(key + " ");
  REQUIRE(pos != std::string::npos);
  return std::stod(text.substr(pos + key.size() + 1));
}

Interferogram small_scan(std::optional<std::uint64_t> seed = std::nullopt) {
  SpectralAmplitude master = lab_master(64);
  SpectralDensityMatrix rho = pure_state(master);
  ExperimentParams params;
  // far from the dip: pure S fringes
  return simulate_scan(master, rho, ScanGrid(0.6, 128, 60.0, 6, 0.0, 2500.0), params, 0.5, seed);
}

const char* kSimConfig = R"({
  "master": {"type": "gaussian", "lambda_nm": 774.0, "fwhm_fs": 165.0,
             "grid": {"count": 128}},
  "source": {"type": "gaussian_pure", "bandwidth_factor": 0.4},
  "scan": {"tau_step": 1.1, "tau_count": 2048, "t_step": 66.0, "t_count": 24},
  "params": {"f": 0.05, "l": 0.1, "eta": 0.5, "rep_rate_hz": 300000.0, "background": 0.0},
  "exposure_s": 2.0
})";

}  // namespace

TEST_SUITE_BEGIN("io_cli");

TEST_CASE("scan files round trip bit-exactly") {
  const fs::path dir = work_dir();
  Interferogram ifg = small_scan(777);
  io::write_scan(dir / "a.homscan", ifg);
  Interferogram back = io::read_scan(dir / "a.homscan");
  CHECK(back.scan == ifg.scan);
  CHECK((back.counts == ifg.counts).all());
  CHECK(back.seed == ifg.seed);
  CHECK(back.exposure_s == ifg.exposure_s);
  // rewrite under the same name elsewhere: identical bytes, header included
  fs::create_directories(dir / "copy");
  io::write_scan(dir / "copy" / "a.homscan", back);
  CHECK(slurp(dir / "a.homscan") == slurp(dir / "copy" / "a.homscan"));
  CHECK(slurp(dir / "a.homscan.bin") == slurp(dir / "copy" / "a.homscan.bin"));
}

TEST_CASE("matrix files round trip bit-exactly") {
  const fs::path dir = work_dir();
  SpectralDensityMatrix rho =
      trace_out_idler(build_jsa(second_harmonic(lab_master(64)), CrystalConfig{}));
  rho.support_mask[0] = false;
  io::MatrixProvenance prov;
  prov.kind = "theory";
  prov.crystal = CrystalConfig{};
  prov.purity = purity(rho);
  io::write_matrix(dir / "m.homrho", rho, prov);
  io::MatrixFile mf = io::read_matrix(dir / "m.homrho");
  CHECK(mf.rho.grid == rho.grid);
  CHECK((mf.rho.values - rho.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(mf.rho.support_mask[0] == false);
  CHECK(mf.provenance.kind == "theory");
  CHECK(mf.provenance.purity.has_value());
  fs::create_directories(dir / "copy");
  io::write_matrix(dir / "copy" / "m.homrho", mf.rho, mf.provenance);
  CHECK(slurp(dir / "m.homrho") == slurp(dir / "copy" / "m.homrho"));
  CHECK(slurp(dir / "m.homrho.bin") == slurp(dir / "copy" / "m.homrho.bin"));
}

TEST_CASE("corrupt files are refused") {
  const fs::path dir = work_dir();
  io::write_scan(dir / "t.homscan", small_scan());
  SUBCASE("truncated payload") {
    std::string payload = slurp(dir / "t.homscan.bin");
    spit(dir / "t.homscan.bin", payload.substr(0, payload.size() - 16));
    CHECK_THROWS_AS(io::read_scan(dir / "t.homscan"), FormatError);
  }
  SUBCASE("wrong format tag") {
    spit(dir / "t.homscan", "{\"format\": \"SOMETHING/9\"}");
    CHECK_THROWS_AS(io::read_scan(dir / "t.homscan"), FormatError);
  }
}

TEST_CASE("master descriptors parse") {
  SUBCASE("gaussian with defaults") {
    SpectralAmplitude a = io::parse_master(R"({"type":"gaussian"})");
    CHECK(a.is_normalized(1e-9));
    CHECK(a.grid.count == 256);
    CHECK(a.grid.center == doctest::Approx(omega_from_lambda_nm(774.0)));
  }
  SUBCASE("tabulated spectrum interpolates onto the grid") {
    SpectralAmplitude ref = lab_master(64);
    nlohmann::json j;
    j["type"] = "tabulated";
    std::vector<double> om, re, im;
    for (int i = 0; i <= 400; ++i) {
      const double w =
          ref.grid.omega(0) + (ref.grid.omega(63) - ref.grid.omega(0)) * i / 400.0;
      const double nu = w - ref.grid.center;
      const double sigma = gaussian_sigma_omega(165.0);
      om.push_back(w);
      re.push_back(std::exp(-nu * nu / (4 * sigma * sigma)));
      im.push_back(0.0);
    }
    j["omega"] = om;
    j["re"] = re;
    j["im"] = im;
    j["grid"] = {{"center", ref.grid.center}, {"step", ref.grid.step}, {"count", 64}};
    SpectralAmplitude a = io::parse_master(j.dump());
    CHECK(a.is_normalized(1e-9));
    // edge samples fall outside the table and are zeroed; interior matches
    for (int k = 2; k < 62; ++k)
      CHECK(std::abs(a.values[k] - ref.values[k]) < 2e-4 * ref.values.cwiseAbs().maxCoeff());
  }
  SUBCASE("errors name the offending field") {
    try {
      io::parse_master(R"({"type":"tabulated","omega":[1,2],"re":[0,1]})");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("im") != std::string::npos);
    }
  }
}

TEST_CASE("simulate config covers source types and presets") {
  const fs::path dir = work_dir();
  SUBCASE("gaussian_pure with explicit scan") {
    io::SimulateConfig cfg = io::parse_simulate_config(kSimConfig, dir);
    CHECK(cfg.scan.tau_count == 2048);
    CHECK(purity(cfg.rho) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_FALSE(cfg.seed.has_value());
  }
  SUBCASE("paper preset geometry") {
    nlohmann::json j = nlohmann::json::parse(kSimConfig);
    j["scan"] = {{"preset", "paper"}};
    io::SimulateConfig cfg = io::parse_simulate_config(j.dump(), dir);
    CHECK(cfg.scan.points() == 100000);
    CHECK(cfg.scan.tau_step == doctest::Approx(0.233));
    CHECK(cfg.scan.t_step == doctest::Approx(66.0));
  }
  SUBCASE("spdc source") {
    nlohmann::json j = nlohmann::json::parse(kSimConfig);
    j["source"] = {{"type", "spdc"}, {"crystal", {{"filter_fwhm_nm", 10.0}}}};
    io::SimulateConfig cfg = io::parse_simulate_config(j.dump(), dir);
    CHECK(purity(cfg.rho) < 0.95);
  }
  SUBCASE("matrix_file source") {
    nlohmann::json j = nlohmann::json::parse(kSimConfig);
    SpectralAmplitude master = io::parse_master(j["master"].dump());
    SpectralDensityMatrix rho = pure_state(master);
    io::MatrixProvenance prov;
    prov.kind = "synthetic";
    io::write_matrix(dir / "src.homrho", rho, prov);
    j["source"] = {{"type", "matrix_file"}, {"path", "src.homrho"}};
    io::SimulateConfig cfg = io::parse_simulate_config(j.dump(), dir);
    CHECK(overlap_fidelity(cfg.rho, rho) == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("bad field is named") {
    nlohmann::json j = nlohmann::json::parse(kSimConfig);
    j["params"]["eta"] = 1.7;
    try {
      io::parse_simulate_config(j.dump(), dir);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("eta") != std::string::npos);
    }
  }
}

TEST_CASE("plot emission") {
  const fs::path dir = work_dir();
  SUBCASE("matrix contours carry three levels") {
    SpectralDensityMatrix rho =
        trace_out_idler(build_jsa(second_harmonic(lab_master(64)), CrystalConfig{}));
    plot::write_matrix_svg(dir / "rho.svg", rho);
    const std::string svg = slurp(dir / "rho.svg");
    CHECK(svg.find("level-0.75") != std::string::npos);
    CHECK(svg.find("level-0.5") != std::string::npos);
    CHECK(svg.find("level-0.25") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(svg.find("wavelength (nm)") != std::string::npos);
  }
  SUBCASE("zero matrix is a degenerate plot") {
    SpectralDensityMatrix z;
    z.grid = lab_grid(64);
    z.values = Eigen::MatrixXcd::Zero(64, 64);
    CHECK_THROWS_AS(plot::write_matrix_svg(dir / "z.svg", z), DegenerateStateError);
  }
  SUBCASE("scan heatmap shows fringes along tau") {
    Interferogram ifg = small_scan();
    plot::write_scan_png(dir / "scan.png", ifg);
    const std::string png = slurp(dir / "scan.png");
    REQUIRE(png.size() > 100);
    CHECK(png.substr(1, 3) == "PNG");
    // decode the stored-deflate IDAT back into pixel rows
    const size_t idat = png.find("IDAT");
    REQUIRE(idat != std::string::npos);
    size_t pos = idat + 4 + 2;  // chunk type + zlib header
    std::string raw;
    while (true) {
      const unsigned char final = (unsigned char)png[pos];
      const size_t len =
          size_t((unsigned char)png[pos + 1]) | (size_t((unsigned char)png[pos + 2]) << 8);
      raw += png.substr(pos + 5, len);
      pos += 5 + len;
      if (final & 1) break;
    }
    const int w = ifg.scan.tau_count, h = ifg.scan.t_count;
    REQUIRE(raw.size() == size_t(h) * (w + 1));
    auto pixel = [&](int row, int col) {
      return double((unsigned char)raw[size_t(row) * (w + 1) + 1 + col]);
    };
    // variance along tau within one far row vs along T at fixed tau
    double vtau = 0.0, mean = 0.0;
    for (int c = 0; c < w; ++c) mean += pixel(0, c);
    mean /= w;
    for (int c = 0; c < w; ++c) vtau += (pixel(0, c) - mean) * (pixel(0, c) - mean);
    vtau /= w;
    double vt = 0.0;
    for (int c = 0; c < w; c += 4) {
      double m = 0.0;
      for (int r = 0; r < h; ++r) m += pixel(r, c);
      m /= h;
      double v = 0.0;
      for (int r = 0; r < h; ++r) v += (pixel(r, c) - m) * (pixel(r, c) - m);
      vt += v / h;
    }
    vt /= (w / 4);
    CHECK(vtau > 20.0 * (vt + 1e-9));
  }
}

TEST_CASE("cli pipeline end to end") {
  const fs::path dir = work_dir();
  spit(dir / "sim.json", kSimConfig);
  spit(dir / "master.json", R"({"master": {"type": "gaussian", "lambda_nm": 774.0,
      "fwhm_fs": 165.0, "grid": {"count": 128}}})");

  SUBCASE("simulate, reconstruct with truth, compare, plot") {
    CliResult sim = run_cli("simulate --config " + (dir / "sim.json").string() + " --out " +
                            (dir / "scan.homscan").string());
    CHECK(sim.exit_code == 0);
    CHECK(sim.out.find("points 49152") != std::string::npos);
    // the 0.4x-bandwidth photon only reaches a partial dip (mode mismatch)
    CHECK(grab(sim.out, "dip_depth") > 0.25);

    io::SimulateConfig cfg = io::load_simulate_config(dir / "sim.json");
    io::MatrixProvenance prov;
    prov.kind = "synthetic";
    io::write_matrix(dir / "truth.homrho", cfg.rho, prov);

    CliResult rec = run_cli("reconstruct --scan " + (dir / "scan.homscan").string() +
                            " --master " + (dir / "master.json").string() + " --out " +
                            (dir / "rec.homrho").string() + " --truth " +
                            (dir / "truth.homrho").string());
    CHECK(rec.exit_code == 0);
    CHECK(grab(rec.out, "fidelity_vs_truth") >= 0.99);

    CliResult cmp =
        run_cli("compare " + (dir / "rec.homrho").string() + " " + (dir / "rec.homrho").string());
    CHECK(cmp.exit_code == 0);
    CHECK(grab(cmp.out, "fidelity") == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(grab(cmp.out, "frobenius_distance") == 0.0);

    CliResult plot_m = run_cli("plot " + (dir / "rec.homrho").string() + " --out " +
                               (dir / "rec.svg").string());
    CHECK(plot_m.exit_code == 0);
    CliResult plot_s = run_cli("plot " + (dir / "scan.homscan").string() + " --out " +
                               (dir / "scan.png").string());
    CHECK(plot_s.exit_code == 0);
  }

  SUBCASE("seedless runs are byte-identical, seeds differ only in the seed") {
    CliResult a = run_cli("simulate --config " + (dir / "sim.json").string() + " --out " +
                          (dir / "d1.homscan").string());
    CliResult b = run_cli("simulate --config " + (dir / "sim.json").string() + " --out " +
                          (dir / "d2.homscan").string());
    CHECK(a.exit_code == 0);
    CHECK(b.exit_code == 0);
    CHECK(slurp(dir / "d1.homscan.bin") == slurp(dir / "d2.homscan.bin"));

    CliResult s1 = run_cli("simulate --config " + (dir / "sim.json").string() + " --seed 11 " +
                           "--out " + (dir / "n1.homscan").string());
    CliResult s2 = run_cli("simulate --config " + (dir / "sim.json").string() + " --seed 12 " +
                           "--out " + (dir / "n2.homscan").string());
    CHECK(s1.exit_code == 0);
    CHECK(s2.exit_code == 0);
    CHECK(slurp(dir / "n1.homscan.bin") != slurp(dir / "n2.homscan.bin"));
    nlohmann::json h1 = nlohmann::json::parse(slurp(dir / "n1.homscan"));
    nlohmann::json h2 = nlohmann::json::parse(slurp(dir / "n2.homscan"));
    CHECK(h1["seed"] == 11);
    CHECK(h2["seed"] == 12);
    h1.erase("seed");
    h2.erase("seed");
    h1.erase("payload");
    h2.erase("payload");
    CHECK(h1 == h2);
  }

  SUBCASE("reconstruction agrees with the theory matrix for the same source") {
    nlohmann::json theory = {
        {"master", nlohmann::json::parse(kSimConfig)["master"]},
        {"crystal",
         {{"length_mm", 1.0}, {"filter_center_nm", 774.5}, {"filter_fwhm_nm", 10.0}}}};
    spit(dir / "th2.json", theory.dump());
    CliResult th = run_cli("theory --config " + (dir / "th2.json").string() + " --out " +
                           (dir / "th2.homrho").string());
    REQUIRE(th.exit_code == 0);

    nlohmann::json sim = nlohmann::json::parse(kSimConfig);
    sim["source"] = {{"type", "spdc"}, {"crystal", theory["crystal"]}};
    // short-coherence state: dense tailored mesh
    sim["scan"] = {{"tau_step", 0.3}, {"tau_count", 4096}, {"t_step", 33.0}, {"t_count", 26}};
    spit(dir / "sim_spdc.json", sim.dump());
    CliResult s1 = run_cli("simulate --config " + (dir / "sim_spdc.json").string() + " --out " +
                           (dir / "spdc.homscan").string());
    REQUIRE(s1.exit_code == 0);
    CliResult rec = run_cli("reconstruct --scan " + (dir / "spdc.homscan").string() +
                            " --master " + (dir / "master.json").string() + " --out " +
                            (dir / "spdc_rec.homrho").string());
    REQUIRE(rec.exit_code == 0);
    // printed report values match the stored provenance to the 9-digit print
    io::MatrixFile stored = io::read_matrix(dir / "spdc_rec.homrho");
    REQUIRE(stored.provenance.report.has_value());
    CHECK(std::abs(grab(rec.out, "n_estimate") - stored.provenance.report->n_estimate) <=
          1e-8 * std::abs(stored.provenance.report->n_estimate));

    CliResult cmp = run_cli("compare " + (dir / "spdc_rec.homrho").string() + " " +
                            (dir / "th2.homrho").string());
    CHECK(cmp.exit_code == 0);
    CHECK(grab(cmp.out, "fidelity") >= 0.95);
    CHECK(grab(cmp.out, "a_antidiag_fwhm_nm") > 0.0);
    CHECK(grab(cmp.out, "b_diag_fwhm_nm") > 0.0);

    // grid mismatch is refused
    SpectralDensityMatrix other = pure_state(lab_master(64));
    io::MatrixProvenance prov;
    prov.kind = "synthetic";
    io::write_matrix(dir / "truth64.homrho", other, prov);
    CliResult mis = run_cli("compare " + (dir / "spdc_rec.homrho").string() + " " +
                            (dir / "truth64.homrho").string());
    CHECK(mis.exit_code == 2);
  }

  SUBCASE("separable theory config reports unit purity") {
    // single-bin filters collapse the pair state to a product
    nlohmann::json theory = {{"master", nlohmann::json::parse(kSimConfig)["master"]},
                             {"crystal",
                              {{"length_mm", 1e-3},
                               {"filter_center_nm", 774.0},
                               {"filter_fwhm_nm", 0.05},
                               {"collection_fwhm_nm", 0.05}}}};
    spit(dir / "sep.json", theory.dump());
    CliResult th = run_cli("theory --config " + (dir / "sep.json").string() + " --out " +
                           (dir / "sep.homrho").string());
    REQUIRE(th.exit_code == 0);
    CHECK(grab(th.out, "purity") == doctest::Approx(1.0).epsilon(1e-9));
  }

  SUBCASE("plot refuses unknown formats") {
    spit(dir / "junk.txt", "not a data file");
    CliResult pl =
        run_cli("plot " + (dir / "junk.txt").string() + " --out " + (dir / "junk.png").string());
    CHECK(pl.exit_code == 2);
  }

  SUBCASE("theory writes purity provenance and sweeps monotonically") {
    spit(dir / "theory.json", R"({"master": {"type": "gaussian", "lambda_nm": 774.0,
        "fwhm_fs": 165.0, "grid": {"count": 128}},
        "crystal": {"length_mm": 1.0, "filter_center_nm": 774.5, "filter_fwhm_nm": 10.0}})");
    CliResult th = run_cli("theory --config " + (dir / "theory.json").string() + " --out " +
                           (dir / "th.homrho").string());
    CHECK(th.exit_code == 0);
    io::MatrixFile mf = io::read_matrix(dir / "th.homrho");
    REQUIRE(mf.provenance.purity.has_value());
    CHECK(*mf.provenance.purity < 1.0);
    CHECK(*mf.provenance.purity == doctest::Approx(purity(mf.rho)).epsilon(1e-9));

    CliResult sweep = run_cli("theory --config " + (dir / "theory.json").string() +
                              " --sweep-filter 16,12,9,6.5,4");
    CHECK(sweep.exit_code == 0);
    std::istringstream lines(sweep.out);
    std::string line;
    std::getline(lines, line);  // header
    double last_p = 0.0;
    int rows = 0;
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      double fwhm = 0, p = 0;
      ls >> fwhm >> p;
      CHECK(p > last_p);
      last_p = p;
      ++rows;
    }
    CHECK(rows == 5);
  }

  SUBCASE("exit codes: usage 1, data 2, guard 3") {
    CHECK(run_cli("simulate --nonsense").exit_code == 1);
    CHECK(run_cli("--help").exit_code == 0);

    spit(dir / "bad.json", R"({"master": {"type": "gaussian"}})");  // no source
    CliResult bad = run_cli("simulate --config " + (dir / "bad.json").string() + " --out " +
                            (dir / "x.homscan").string());
    CHECK(bad.exit_code == 2);
    CHECK(bad.out.find("source") != std::string::npos);

    io::write_scan(dir / "trunc.homscan", small_scan());
    std::string payload = slurp(dir / "trunc.homscan.bin");
    spit(dir / "trunc.homscan.bin", payload.substr(0, payload.size() - 8));
    spit(dir / "master64.json", R"({"master": {"type": "gaussian", "grid": {"count": 64}}})");
    CliResult tr = run_cli("reconstruct --scan " + (dir / "trunc.homscan").string() +
                           " --master " + (dir / "master64.json").string() + " --out " +
                           (dir / "y.homrho").string());
    CHECK(tr.exit_code == 2);

    // nyquist-violating scan config -> numerical guard
    nlohmann::json j = nlohmann::json::parse(kSimConfig);
    j["scan"] = {{"tau_step", 2.0}, {"tau_count", 64}, {"t_step", 66.0}, {"t_count", 8}};
    spit(dir / "alias.json", j.dump());
    CliResult al = run_cli("simulate --config " + (dir / "alias.json").string() + " --out " +
                           (dir / "z.homscan").string());
    CHECK(al.exit_code == 3);
  }

  SUBCASE("photon broader than the master trips the narrowband guard") {
    // master occupies under 10% of a deliberately wide grid
    const double sigma = gaussian_sigma_omega(165.0);
    nlohmann::json grid_j = {{"count", 128}, {"step", 8.0 * 12.0 * sigma / 128}};
    nlohmann::json master_j = {
        {"type", "gaussian"}, {"lambda_nm", 774.0}, {"fwhm_fs", 165.0}, {"grid", grid_j}};
    nlohmann::json j = nlohmann::json::parse(kSimConfig);
    j["master"] = master_j;
    // short-coherence photon and a scan inside the grid's revival time
    j["source"] = {{"type", "gaussian_pure"}, {"bandwidth_factor", 0.9}};
    j["scan"] = {{"tau_step", 0.9}, {"tau_count", 1024}, {"t_step", 66.0}, {"t_count", 24}};
    spit(dir / "wide.json", j.dump());
    spit(dir / "wide_master.json", nlohmann::json{{"master", master_j}}.dump());
    CliResult sim = run_cli("simulate --config " + (dir / "wide.json").string() + " --out " +
                            (dir / "wide.homscan").string());
    REQUIRE(sim.exit_code == 0);
    CliResult rec = run_cli("reconstruct --scan " + (dir / "wide.homscan").string() +
                            " --master " + (dir / "wide_master.json").string() + " --out " +
                            (dir / "wide.homrho").string());
    CHECK(rec.exit_code == 3);
    CHECK(rec.out.find("bandwidth") != std::string::npos);
  }
}

TEST_SUITE_END();
