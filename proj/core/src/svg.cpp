#include "aeml/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "aeml/errors.hpp"

namespace aeml {
namespace svg {

namespace {

struct Rgb {
  int r, g, b;
};

// Coarse viridis ramp; linear interpolation between stops.
Rgb colormap(double t) {
  static const Rgb stops[] = {{68, 1, 84},    {59, 82, 139},  {33, 145, 140},
                              {94, 201, 98},  {253, 231, 37}};
  t = std::clamp(t, 0.0, 1.0) * 3.999;
  const int i = static_cast<int>(t);
  const double f = t - i;
  const Rgb a = stops[i], b = stops[i + 1];
  return {int(a.r + f * (b.r - a.r)), int(a.g + f * (b.g - a.g)), int(a.b + f * (b.b - a.b))};
}

std::string color_str(const Rgb& c) {
  return "rgb(" + std::to_string(c.r) + "," + std::to_string(c.g) + "," + std::to_string(c.b) + ")";
}

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

}  // namespace

void write_heatmap(const std::filesystem::path& path, const Field& values, int nx, int ny,
                   const std::string& title) {
  if (static_cast<int>(values.size()) != nx * ny) throw ShapeError("heatmap size mismatch");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open svg file: " + path.string());

  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double range = hi - lo > 0 ? hi - lo : 1.0;

  const int cell = std::max(2, 512 / std::max(nx, ny));
  const int w = nx * cell, h = ny * cell;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h + 24
      << "'>\n";
  out << "<text x='4' y='14' font-family='monospace' font-size='12'>" << title << " [" << lo
      << ", " << hi << "]</text>\n";
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      const double t = (values[std::size_t(iy) * nx + ix] - lo) / range;
      // y flipped so the top of the image is the top of the domain
      out << "<rect x='" << ix * cell << "' y='" << 24 + (ny - 1 - iy) * cell << "' width='"
          << cell << "' height='" << cell << "' fill='" << color_str(colormap(t)) << "'/>\n";
    }
  out << "</svg>\n";
}

void write_lines(const std::filesystem::path& path, const std::vector<Series>& series,
                 const std::string& title, bool log_y) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open svg file: " + path.string());

  const int w = 640, h = 400, ml = 48, mb = 28, mt = 28, mr = 12;
  double lo = 1e300, hi = -1e300;
  std::size_t max_len = 1;
  for (const auto& s : series)
    for (double v : s.y) {
      const double t = log_y ? std::log10(std::max(v, 1e-300)) : v;
      lo = std::min(lo, t);
      hi = std::max(hi, t);
      max_len = std::max(max_len, s.y.size());
    }
  if (!(hi > lo)) {
    hi = lo + 1.0;
  }

  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
  out << "<text x='8' y='18' font-family='monospace' font-size='13'>" << title
      << (log_y ? " (log scale)" : "") << "</text>\n";
  out << "<rect x='" << ml << "' y='" << mt << "' width='" << w - ml - mr << "' height='"
      << h - mt - mb << "' fill='none' stroke='#888'/>\n";

  auto px = [&](std::size_t i) {
    return ml + double(w - ml - mr) * (max_len == 1 ? 0.5 : double(i) / double(max_len - 1));
  };
  auto py = [&](double v) {
    const double t = log_y ? std::log10(std::max(v, 1e-300)) : v;
    return mt + (h - mt - mb) * (1.0 - (t - lo) / (hi - lo));
  };

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    if (s.y.empty()) continue;
    out << "<polyline fill='none' stroke='" << kPalette[si % 6] << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < s.y.size(); ++i) out << px(i) << ',' << py(s.y[i]) << ' ';
    out << "'/>\n";
    out << "<text x='" << ml + 8 << "' y='" << mt + 16 + 14 * si << "' font-family='monospace'"
        << " font-size='11' fill='" << kPalette[si % 6] << "'>" << s.label << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace svg
}  // namespace aeml
