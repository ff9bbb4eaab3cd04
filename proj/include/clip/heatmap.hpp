#pragma once

#include "clip/matrix.hpp"

#include <optional>
#include <string>
#include <vector>

namespace clip {

struct HeatmapOptions {
  std::optional<double> color_range;  // fixed symmetric range; auto = max |value|
  std::vector<std::string> labels;    // empty = numeric indices
  int cell_size = 24;
};

struct Heatmap {
  std::string svg;
  double color_range = 0.0;
  int nan_cells = 0;
};

/// SVG 1.1 heat map with a diverging blue-white-red palette centred at 0 and
/// a vertical colour bar. Non-finite cells are drawn grey.
Heatmap render_heatmap(const Matrix& m, const HeatmapOptions& opts = {});

}  // namespace clip
