#pragma once

#include <string>
#include <vector>

#include "pqa/stats/stats.hpp"

namespace pqa::report {

struct PlotConfig {
  int width = 800;
  int height = 600;
  std::string x_label = "raw score";
  std::string y_label = "MOS";
};

// Scatter of (x, y) with the fitted five-parameter logistic curve overlaid.
// The PNG is self-contained raster output (5x7 bitmap glyphs for ticks); the
// SVG is the same plot as vector text.
void render_scatter_png(const std::string& path, const std::vector<double>& x,
                        const std::vector<double>& y, const stats::LogisticParams& rho,
                        const PlotConfig& pc = {});
void render_scatter_svg(const std::string& path, const std::vector<double>& x,
                        const std::vector<double>& y, const stats::LogisticParams& rho,
                        const PlotConfig& pc = {});

}  // namespace pqa::report
