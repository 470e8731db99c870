#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "opvi/core.hpp"
#include "opvi/models.hpp"

namespace opvi {

inline constexpr std::array<double, 3> kContourMasses = {0.5, 0.9, 0.99};

/// Highest-density-region thresholds on grid.log_density: level q is the
/// smallest log density whose superlevel set holds at least mass q.
std::vector<double> contour_levels(const MixtureGrid& grid,
                                   std::span<const double> masses = kContourMasses);

struct Segment {
  double x0, y0, x1, y1;  ///< in fractional (column, row) grid coordinates
};

/// Marching squares over field(row, col) at one iso level.
std::vector<Segment> marching_squares(const Matrix& field, double level);

/// Scatter of a 2-D ensemble over the window, with optional posterior contours.
/// Emits exactly one <circle> per particle.
std::string scatter_svg(const ParticleMatrix& particles, const GridWindow& window,
                        const MixtureGrid* grid = nullptr);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Stacked line panels, one per series.
std::string series_svg(const std::vector<Series>& series);

/// Panels for every metric column that has at least one value.
std::string trace_svg(const std::vector<RoundTrace>& trace);

}  // namespace opvi
