#ifndef REPLICOAL_APP_SVG_HPP
#define REPLICOAL_APP_SVG_HPP

#include <array>
#include <span>
#include <string>
#include <vector>

namespace replicoal::app {

struct PlotPath {
  std::vector<double> sigma;
  std::vector<std::array<double, 3>> r;
};

/// Self-contained SVG of k = 3 paths in barycentric coordinates, coloured
/// by log10(sigma) with a legend bar; x* is marked with a cross.
std::string barycentric_svg(const std::vector<PlotPath>& paths, const std::array<double, 3>& x_star, int size);

}  // namespace replicoal::app

#endif  // REPLICOAL_APP_SVG_HPP
