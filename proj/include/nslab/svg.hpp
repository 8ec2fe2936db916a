#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace nslab {

struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
  std::string color = "#1f6fb2";
};

struct SvgPlotSpec {
  std::string title, xlabel, ylabel;
  bool logx = false, logy = false;
  std::vector<SvgSeries> series;
  bool fit_line = false; // least-squares line in (possibly log) coordinates
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

} // namespace detail

/// Deterministic polyline plot; byte-stable for identical input.
inline void write_svg_plot(const std::filesystem::path& path, const SvgPlotSpec& spec) {
  const double W = 640, H = 440, ml = 70, mr = 20, mt = 40, mb = 55;
  auto txx = [&](double v) { return spec.logx ? std::log10(v) : v; };
  auto tyy = [&](double v) { return spec.logy ? std::log10(v) : v; };
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : spec.series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      if ((spec.logx && s.x[i] <= 0) || (spec.logy && s.y[i] <= 0)) continue;
      xmin = std::min(xmin, txx(s.x[i]));
      xmax = std::max(xmax, txx(s.x[i]));
      ymin = std::min(ymin, tyy(s.y[i]));
      ymax = std::max(ymax, tyy(s.y[i]));
    }
  if (xmin > xmax) {
    xmin = 0;
    xmax = 1;
  }
  if (ymin > ymax) {
    ymin = 0;
    ymax = 1;
  }
  if (xmax - xmin < 1e-12) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  auto px = [&](double v) { return ml + (txx(v) - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto py = [&](double v) { return H - mb - (tyy(v) - ymin) / (ymax - ymin) * (H - mt - mb); };

  std::ofstream out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << spec.title << "</text>\n";
  // axes
  out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
      << H - mb << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double fx = xmin + (xmax - xmin) * i / 4, fy = ymin + (ymax - ymin) * i / 4;
    double gx = ml + (W - ml - mr) * i / 4, gy = H - mb - (H - mt - mb) * i / 4;
    double lx = spec.logx ? std::pow(10, fx) : fx;
    double ly = spec.logy ? std::pow(10, fy) : fy;
    out << "<text x=\"" << gx << "\" y=\"" << H - mb + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">" << detail::svg_num(lx) << "</text>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << gy + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << detail::svg_num(ly) << "</text>\n";
  }
  out << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">" << spec.xlabel << "</text>\n";
  out << "<text x=\"18\" y=\"" << (mt + H - mb) / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
      << (mt + H - mb) / 2 << ")\">" << spec.ylabel << "</text>\n";

  int legend_row = 0;
  for (const auto& s : spec.series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i) {
      if ((spec.logx && s.x[i] <= 0) || (spec.logy && s.y[i] <= 0)) continue;
      out << detail::svg_num(px(s.x[i])) << "," << detail::svg_num(py(s.y[i])) << " ";
    }
    out << "\"/>\n";
    for (size_t i = 0; i < s.x.size(); ++i) {
      if ((spec.logx && s.x[i] <= 0) || (spec.logy && s.y[i] <= 0)) continue;
      out << "<circle cx=\"" << detail::svg_num(px(s.x[i])) << "\" cy=\""
          << detail::svg_num(py(s.y[i])) << "\" r=\"2.5\" fill=\"" << s.color << "\"/>\n";
    }
    if (!s.label.empty()) {
      out << "<text x=\"" << W - mr - 6 << "\" y=\"" << mt + 14 + 16 * legend_row
          << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << s.color << "\">" << s.label
          << "</text>\n";
      ++legend_row;
    }
  }
  if (spec.fit_line && !spec.series.empty()) {
    const auto& s = spec.series.front();
    double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < s.x.size(); ++i) {
      if ((spec.logx && s.x[i] <= 0) || (spec.logy && s.y[i] <= 0)) continue;
      double X = txx(s.x[i]), Y = tyy(s.y[i]);
      n += 1;
      sx += X;
      sy += Y;
      sxx += X * X;
      sxy += X * Y;
    }
    if (n >= 2) {
      double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
      double icpt = (sy - slope * sx) / n;
      auto ppx = [&](double X) { return ml + (X - xmin) / (xmax - xmin) * (W - ml - mr); };
      auto ppy = [&](double Y) { return H - mb - (Y - ymin) / (ymax - ymin) * (H - mt - mb); };
      out << "<line x1=\"" << detail::svg_num(ppx(xmin)) << "\" y1=\""
          << detail::svg_num(ppy(icpt + slope * xmin)) << "\" x2=\"" << detail::svg_num(ppx(xmax))
          << "\" y2=\"" << detail::svg_num(ppy(icpt + slope * xmax))
          << "\" stroke=\"#c23f3f\" stroke-dasharray=\"5,4\"/>\n";
      out << "<text x=\"" << ml + 10 << "\" y=\"" << mt + 14
          << "\" font-size=\"12\" fill=\"#c23f3f\">slope " << detail::svg_num(slope)
          << "</text>\n";
    }
  }
  out << "</svg>\n";
}

/// Grayscale heatmap of a row-major nx-by-ny field.
inline void write_svg_heatmap(const std::filesystem::path& path, int nx, int ny,
                              const std::vector<double>& values, const std::string& title) {
  const double cell = std::max(2.0, 420.0 / std::max(nx, ny));
  const double W = 80 + cell * ny, H = 70 + cell * nx;
  double vmin = 1e300, vmax = -1e300;
  for (double v : values) {
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  if (vmax - vmin < 1e-300) vmax = vmin + 1;
  std::ofstream out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\">\n<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title
      << "</text>\n";
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      int shade = int(255.0 * (values[size_t(i) * ny + j] - vmin) / (vmax - vmin) + 0.5);
      char color[8];
      std::snprintf(color, sizeof color, "#%02x%02x%02x", 255 - shade, 255 - shade, 255);
      out << "<rect x=\"" << detail::svg_num(40 + j * cell) << "\" y=\""
          << detail::svg_num(40 + i * cell) << "\" width=\"" << detail::svg_num(cell)
          << "\" height=\"" << detail::svg_num(cell) << "\" fill=\"" << color << "\"/>\n";
    }
  out << "</svg>\n";
}

} // namespace nslab
