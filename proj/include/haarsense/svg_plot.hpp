#pragma once

#include <filesystem>

#include "haarsense/wavelet.hpp"

namespace haarsense {

/// Static step plot of a reconstruction with its +-1 sigma band. Purely a
/// viewing convenience; the numeric CSV/JSON files are the record.
void write_step_plot_svg(const Reconstruction& recon, double duration_us,
                         const std::filesystem::path& path);

}  // namespace haarsense
