#include "homsdm/plot.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "homsdm/errors.hpp"

namespace homsdm::plot {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::data, "cannot open for writing: " + tmp.string());
    out.write(bytes.data(), std::streamsize(bytes.size()));
  }
  fs::rename(tmp, path);
}

std::uint32_t crc32(const unsigned char* data, size_t len, std::uint32_t crc = 0) {
  static std::array<std::uint32_t, 256> table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t n = 0; n < 256; ++n) {
      std::uint32_t c = n;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      t[n] = c;
    }
    return t;
  }();
  crc ^= 0xffffffffu;
  for (size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xff] ^ (crc >> 8);
  return crc ^ 0xffffffffu;
}

void append_u32_be(std::string& s, std::uint32_t v) {
  s.push_back(char(v >> 24));
  s.push_back(char(v >> 16));
  s.push_back(char(v >> 8));
  s.push_back(char(v));
}

void append_chunk(std::string& png, const char type[4], const std::string& payload) {
  append_u32_be(png, std::uint32_t(payload.size()));
  std::string body(type, 4);
  body += payload;
  png += body;
  append_u32_be(png, crc32(reinterpret_cast<const unsigned char*>(body.data()), body.size()));
}

// zlib stream with stored (uncompressed) deflate blocks
std::string zlib_store(const std::string& raw) {
  std::string z;
  z.push_back(0x78);
  z.push_back(0x01);
  size_t pos = 0;
  while (pos < raw.size() || raw.empty()) {
    const size_t n = std::min<size_t>(65535, raw.size() - pos);
    const bool last = pos + n == raw.size();
    z.push_back(last ? 1 : 0);
    z.push_back(char(n & 0xff));
    z.push_back(char(n >> 8));
    z.push_back(char(~n & 0xff));
    z.push_back(char((~n >> 8) & 0xff));
    z.append(raw, pos, n);
    pos += n;
    if (last) break;
  }
  std::uint32_t s1 = 1, s2 = 0;
  for (unsigned char c : raw) {
    s1 = (s1 + c) % 65521;
    s2 = (s2 + s1) % 65521;
  }
  append_u32_be(z, (s2 << 16) | s1);
  return z;
}

std::string encode_gray_png(int width, int height, const std::vector<unsigned char>& pixels) {
  std::string png("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  append_u32_be(ihdr, std::uint32_t(width));
  append_u32_be(ihdr, std::uint32_t(height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(0);  // grayscale
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  append_chunk(png, "IHDR", ihdr);
  std::string raw;
  raw.reserve(size_t(height) * (width + 1));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);  // filter: none
    raw.append(reinterpret_cast<const char*>(&pixels[size_t(y) * width]), size_t(width));
  }
  append_chunk(png, "IDAT", zlib_store(raw));
  append_chunk(png, "IEND", "");
  return png;
}

struct Segment {
  double x0, y0, x1, y1;
};

// Marching squares on one level of a scalar field sampled on an integer grid.
std::vector<Segment> contour_level(const Eigen::ArrayXXd& f, double level) {
  std::vector<Segment> segs;
  const int rows = int(f.rows()), cols = int(f.cols());
  auto interp = [&](double a, double b) { return (level - a) / (b - a); };
  for (int i = 0; i + 1 < rows; ++i) {
    for (int j = 0; j + 1 < cols; ++j) {
      const double v00 = f(i, j), v10 = f(i + 1, j), v01 = f(i, j + 1), v11 = f(i + 1, j + 1);
      int mask = 0;
      if (v00 >= level) mask |= 1;
      if (v10 >= level) mask |= 2;
      if (v11 >= level) mask |= 4;
      if (v01 >= level) mask |= 8;
      if (mask == 0 || mask == 15) continue;
      // edge crossing points, coordinates (x = j + ..., y = i + ...)
      std::vector<std::pair<double, double>> pts;
      if (((mask & 1) != 0) != ((mask & 2) != 0))  // left edge (v00 - v10)
        pts.emplace_back(double(j), i + interp(v00, v10));
      if (((mask & 2) != 0) != ((mask & 4) != 0))  // bottom edge (v10 - v11)
        pts.emplace_back(j + interp(v10, v11), double(i + 1));
      if (((mask & 8) != 0) != ((mask & 4) != 0))  // right edge (v01 - v11)
        pts.emplace_back(double(j + 1), i + interp(v01, v11));
      if (((mask & 1) != 0) != ((mask & 8) != 0))  // top edge (v00 - v01)
        pts.emplace_back(j + interp(v00, v01), double(i));
      for (size_t p = 0; p + 1 < pts.size(); p += 2)
        segs.push_back({pts[p].first, pts[p].second, pts[p + 1].first, pts[p + 1].second});
    }
  }
  return segs;
}

}  // namespace

void write_scan_png(const fs::path& path, const Interferogram& ifg) {
  const int h = ifg.scan.t_count, w = ifg.scan.tau_count;
  const double lo = ifg.counts.minCoeff(), hi = ifg.counts.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;
  std::vector<unsigned char> px(size_t(w) * h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double v = (ifg.counts(r, c) - lo) / span;
      // bottom row of the image is the lowest T
      px[size_t(h - 1 - r) * w + c] = (unsigned char)std::lround(255.0 * v);
    }
  write_file(path, encode_gray_png(w, h, px));
}

void write_matrix_svg(const fs::path& path, const SpectralDensityMatrix& rho) {
  const Eigen::ArrayXXd mag = rho.values.cwiseAbs().array();
  const double peak = mag.maxCoeff();
  if (!(peak > 0.0)) throw DegenerateStateError("matrix is all zero, nothing to contour");

  const int k = rho.grid.count;
  const double w_px = 640.0, h_px = 640.0, margin = 60.0;
  // wavelength axes: lambda decreases with index, draw lambda increasing rightward
  const double lam_hi = rho.grid.wavelength_nm(0);
  const double lam_lo = rho.grid.wavelength_nm(k - 1);
  auto x_of = [&](double idx) {
    const double lam = lambda_nm_from_omega(rho.grid.omega(0) + idx * rho.grid.step);
    return margin + (lam - lam_lo) / (lam_hi - lam_lo) * (w_px - 2 * margin);
  };
  auto y_of = [&](double idx) {
    const double lam = lambda_nm_from_omega(rho.grid.omega(0) + idx * rho.grid.step);
    return h_px - margin - (lam - lam_lo) / (lam_hi - lam_lo) * (h_px - 2 * margin);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_px << "\" height=\"" << h_px
      << "\" viewBox=\"0 0 " << w_px << " " << h_px << "\">\n";
  svg << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << w_px - 2 * margin
      << "\" height=\"" << h_px - 2 * margin << "\" fill=\"none\" stroke=\"black\"/>\n";
  const char* colors[3] = {"#b2182b", "#2166ac", "#4dac26"};
  const double levels[3] = {0.75, 0.5, 0.25};
  for (int lv = 0; lv < 3; ++lv) {
    svg << "<g class=\"level-" << levels[lv] << "\" stroke=\"" << colors[lv]
        << "\" fill=\"none\" stroke-width=\"1.2\">\n";
    for (const Segment& s : contour_level(mag, levels[lv] * peak)) {
      // field index (i=row=w1, j=col=w2); x axis carries w1, y axis w2
      svg << "<polyline points=\"" << x_of(s.y0) << "," << y_of(s.x0) << " " << x_of(s.y1) << ","
          << y_of(s.x1) << "\"/>\n";
    }
    svg << "</g>\n";
  }
  for (int t = 0; t <= 4; ++t) {
    const double lam = lam_lo + t * (lam_hi - lam_lo) / 4.0;
    const double xx = margin + t * (w_px - 2 * margin) / 4.0;
    svg << "<text x=\"" << xx << "\" y=\"" << h_px - margin + 20
        << "\" font-size=\"11\" text-anchor=\"middle\">" << std::fixed << lam << "</text>\n";
    svg.unsetf(std::ios::fixed);
    svg << "<text x=\"" << margin - 8 << "\" y=\"" << h_px - margin - t * (h_px - 2 * margin) / 4.0
        << "\" font-size=\"11\" text-anchor=\"end\">" << std::fixed << lam << "</text>\n";
    svg.unsetf(std::ios::fixed);
  }
  svg << "<text x=\"" << w_px / 2 << "\" y=\"" << h_px - 12
      << "\" font-size=\"12\" text-anchor=\"middle\">wavelength (nm)</text>\n";
  svg << "</svg>\n";
  write_file(path, svg.str());
}

}  // namespace homsdm::plot
