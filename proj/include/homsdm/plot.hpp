#pragma once

#include <filesystem>

#include "homsdm/forward.hpp"
#include "homsdm/spectral.hpp"

namespace homsdm::plot {

/// Grayscale heatmap of a coincidence scan (tau horizontal, T vertical,
/// bottom row = lowest T). Stored-deflate PNG, fully deterministic.
void write_scan_png(const std::filesystem::path& path, const Interferogram& ifg);

/// Contour plot of |rho| at 0.75 / 0.5 / 0.25 of the maximum, axes in nm via
/// lambda = 2 pi c / omega. Throws DegenerateStateError on an all-zero matrix.
void write_matrix_svg(const std::filesystem::path& path, const SpectralDensityMatrix& rho);

}  // namespace homsdm::plot
