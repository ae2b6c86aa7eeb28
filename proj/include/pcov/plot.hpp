#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pcov/analysis.hpp"
#include "pcov/linalg.hpp"

namespace pcov {

/// PNG file bytes for an 8-bit RGB image given top row first.
std::string encode_png_rgb(int width, int height, const std::vector<unsigned char>& rgb);

/// "#rrggbb" for a class index; cycles through a ten-color palette.
std::string class_color(int label);

struct PlotOptions {
  std::string title;
  std::string x_label = "t1";
  std::string y_label = "t2";
  int width = 640;
  int height = 560;
  double marker_radius = 3.5;
  /// Decision regions drawn under the markers; also fixes the axis ranges.
  std::optional<LabelRaster> background;
  std::vector<std::string> class_names;
};

/// Standalone SVG scatter of the first two columns of `t`: one circle per
/// row, fill by class, lower opacity for test rows.
std::string render_scatter_svg(const Matrix& t, const IndexVector& labels,
                               const std::vector<bool>& is_test, const PlotOptions& options);

}  // namespace pcov
