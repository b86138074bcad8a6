#include "haarsense/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "haarsense/errors.hpp"

namespace haarsense {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 420.0;
constexpr double kMargin = 50.0;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

void write_step_plot_svg(const Reconstruction& recon, double duration_us,
                         const std::filesystem::path& path) {
  const auto bins = recon.points_uT.size();
  if (bins == 0) {
    throw std::invalid_argument("nothing to plot");
  }
  double lo = 0.0, hi = 0.0;
  for (std::size_t k = 0; k < bins; ++k) {
    lo = std::min(lo, recon.points_uT[k] - recon.sigmas_uT[k]);
    hi = std::max(hi, recon.points_uT[k] + recon.sigmas_uT[k]);
  }
  if (hi - lo < 1e-12) hi = lo + 1.0;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const double plot_w = kWidth - 2.0 * kMargin;
  const double plot_h = kHeight - 2.0 * kMargin;
  auto sx = [&](double t) { return kMargin + plot_w * t / duration_us; };
  auto sy = [&](double v) { return kHeight - kMargin - plot_h * (v - lo) / (hi - lo); };
  const double dt = duration_us / static_cast<double>(bins);

  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open for writing: " + path.string());
  }
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // sigma band, one rect per bin
  for (std::size_t k = 0; k < bins; ++k) {
    const double x0 = sx(static_cast<double>(k) * dt);
    const double y0 = sy(recon.points_uT[k] + recon.sigmas_uT[k]);
    const double y1 = sy(recon.points_uT[k] - recon.sigmas_uT[k]);
    out << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\""
        << num(plot_w / static_cast<double>(bins)) << "\" height=\"" << num(y1 - y0)
        << "\" fill=\"#9ecae1\" fill-opacity=\"0.6\"/>\n";
  }

  // zero line and axes
  if (lo < 0.0 && hi > 0.0) {
    out << "<line x1=\"" << num(kMargin) << "\" y1=\"" << num(sy(0.0)) << "\" x2=\""
        << num(kWidth - kMargin) << "\" y2=\"" << num(sy(0.0))
        << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\"/>\n";
  }
  out << "<rect x=\"" << num(kMargin) << "\" y=\"" << num(kMargin) << "\" width=\""
      << num(plot_w) << "\" height=\"" << num(plot_h)
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  // step polyline
  out << "<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\" points=\"";
  for (std::size_t k = 0; k < bins; ++k) {
    const double t0 = static_cast<double>(k) * dt;
    out << num(sx(t0)) << ',' << num(sy(recon.points_uT[k])) << ' '
        << num(sx(t0 + dt)) << ',' << num(sy(recon.points_uT[k])) << ' ';
  }
  out << "\"/>\n";

  out << "<text x=\"" << num(kWidth / 2.0) << "\" y=\"" << num(kHeight - 12.0)
      << "\" text-anchor=\"middle\" font-size=\"13\">t (us)</text>\n";
  out << "<text x=\"14\" y=\"" << num(kHeight / 2.0)
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 14 "
      << num(kHeight / 2.0) << ")\">b (uT)</text>\n";
  out << "<text x=\"" << num(kMargin) << "\" y=\"" << num(kMargin - 8.0)
      << "\" font-size=\"12\">" << recon.provenance << "</text>\n";
  out << "</svg>\n";
  if (!out) {
    throw IoError("write failed: " + path.string());
  }
}

}  // namespace haarsense
