#include "clip/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace clip {

namespace {

std::string color_for(double value, double range) {
  if (!std::isfinite(value)) return "#808080";
  const double t = range > 0.0 ? std::clamp(value / range, -1.0, 1.0) : 0.0;
  // White at zero, saturating to red (+) or blue (-).
  int r, g, b;
  if (t >= 0.0) {
    r = 255;
    g = static_cast<int>(std::lround(255.0 * (1.0 - t)));
    b = g;
  } else {
    b = 255;
    r = static_cast<int>(std::lround(255.0 * (1.0 + t)));
    g = r;
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

Heatmap render_heatmap(const Matrix& m, const HeatmapOptions& opts) {
  Heatmap out;
  double max_abs = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      if (std::isfinite(v)) {
        max_abs = std::max(max_abs, std::abs(v));
      } else {
        ++out.nan_cells;
      }
    }
  }
  out.color_range = opts.color_range ? *opts.color_range : max_abs;
  const bool fixed = opts.color_range.has_value();

  const int cs = opts.cell_size;
  const int margin = 60;
  const int bar_w = 16;
  const int bar_steps = 21;
  const int grid_w = static_cast<int>(m.cols()) * cs;
  const int grid_h = static_cast<int>(m.rows()) * cs;
  const int width = margin + grid_w + 30 + bar_w + 60;
  const int height = margin + std::max(grid_h, 120) + 20;

  auto label = [&](Eigen::Index i) {
    return static_cast<std::size_t>(i) < opts.labels.size() ? escape_xml(opts.labels[i])
                                                            : std::to_string(i + 1);
  };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width
      << "\" height=\"" << height << "\">\n"
      << "<metadata>color-range=" << fmt(out.color_range) << " mode=" << (fixed ? "fixed" : "auto")
      << " nan-cells=" << out.nan_cells << "</metadata>\n"
      << "<g id=\"cells\">\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      svg << "<rect class=\"cell\" x=\"" << margin + j * cs << "\" y=\"" << margin + i * cs
          << "\" width=\"" << cs << "\" height=\"" << cs << "\" fill=\""
          << color_for(m(i, j), out.color_range) << "\"><title>" << label(i) << " / " << label(j)
          << ": " << fmt(m(i, j)) << "</title></rect>\n";
    }
  }
  svg << "</g>\n<g id=\"labels\" font-family=\"sans-serif\" font-size=\"10\">\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    svg << "<text x=\"" << margin - 4 << "\" y=\"" << margin + i * cs + cs / 2 + 3
        << "\" text-anchor=\"end\">" << label(i) << "</text>\n";
  }
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    svg << "<text x=\"" << margin + j * cs + cs / 2 << "\" y=\"" << margin - 6
        << "\" text-anchor=\"middle\">" << label(j) << "</text>\n";
  }
  svg << "</g>\n<g id=\"colorbar\">\n";
  const int bar_x = margin + grid_w + 30;
  const int bar_h = std::max(grid_h, 120);
  const double step_h = static_cast<double>(bar_h) / bar_steps;
  for (int k = 0; k < bar_steps; ++k) {
    const double v = out.color_range * (1.0 - 2.0 * k / (bar_steps - 1));
    svg << "<rect class=\"bar\" x=\"" << bar_x << "\" y=\"" << fmt(margin + k * step_h)
        << "\" width=\"" << bar_w << "\" height=\"" << fmt(step_h) << "\" fill=\""
        << color_for(v, out.color_range) << "\"/>\n";
  }
  svg << "<text x=\"" << bar_x + bar_w + 4 << "\" y=\"" << margin + 8
      << "\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(out.color_range) << "</text>\n"
      << "<text x=\"" << bar_x + bar_w + 4 << "\" y=\"" << margin + bar_h
      << "\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(-out.color_range) << "</text>\n"
      << "</g>\n</svg>\n";
  out.svg = svg.str();
  return out;
}

}  // namespace clip
