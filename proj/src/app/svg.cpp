#include "app/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace replicoal::app {

namespace {

struct Rgb {
  double r, g, b;
};

// Perceptual ramp, dark = few blocks, bright = many.
constexpr Rgb kRamp[] = {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};

std::string ramp_color(double u) {
  u = std::clamp(u, 0.0, 1.0) * 4.0;
  const int i = std::min(static_cast<int>(u), 3);
  const double w = u - i;
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(kRamp[i].r + w * (kRamp[i + 1].r - kRamp[i].r)),
                static_cast<int>(kRamp[i].g + w * (kRamp[i + 1].g - kRamp[i].g)),
                static_cast<int>(kRamp[i].b + w * (kRamp[i + 1].b - kRamp[i].b)));
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string barycentric_svg(const std::vector<PlotPath>& paths, const std::array<double, 3>& x_star, int size) {
  const double w = size;
  const double margin = 0.08 * w;
  const double side = w - 2.0 * margin;
  const double height = side * std::sqrt(3.0) / 2.0;
  const double legend_h = 70.0;
  const double total_h = margin + height + margin + legend_h;
  // vertices: type 1 bottom-left, type 2 bottom-right, type 3 top
  const double vx[3] = {margin, margin + side, margin + side / 2.0};
  const double vy[3] = {margin + height, margin + height, margin};
  auto px = [&](const std::array<double, 3>& r) { return r[0] * vx[0] + r[1] * vx[1] + r[2] * vx[2]; };
  auto py = [&](const std::array<double, 3>& r) { return r[0] * vy[0] + r[1] * vy[1] + r[2] * vy[2]; };

  double lo = 1e300, hi = -1e300;
  for (const auto& p : paths) {
    for (double s : p.sigma) {
      lo = std::min(lo, std::log10(std::max(s, 1.0)));
      hi = std::max(hi, std::log10(std::max(s, 1.0)));
    }
  }
  if (!(hi > lo)) {
    lo = 0.0;
    hi = std::max(hi, 1.0);
  }
  lo = std::floor(lo);
  hi = std::ceil(hi);
  auto level = [&](double s) { return (std::log10(std::max(s, 1.0)) - lo) / (hi - lo); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << num(total_h)
      << "\" viewBox=\"0 0 " << size << " " << num(total_h) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<polygon points=\"" << num(vx[0]) << "," << num(vy[0]) << " " << num(vx[1]) << "," << num(vy[1]) << " "
      << num(vx[2]) << "," << num(vy[2]) << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg << "<text x=\"" << num(vx[0] - 6) << "\" y=\"" << num(vy[0] + 16) << "\" text-anchor=\"end\">type 1</text>\n";
  svg << "<text x=\"" << num(vx[1] + 6) << "\" y=\"" << num(vy[1] + 16) << "\">type 2</text>\n";
  svg << "<text x=\"" << num(vx[2]) << "\" y=\"" << num(vy[2] - 8) << "\" text-anchor=\"middle\">type 3</text>\n";

  for (std::size_t p = 0; p < paths.size(); ++p) {
    const auto& path = paths[p];
    if (path.r.empty()) continue;
    svg << "<g id=\"path" << p << "\" fill=\"none\" stroke-width=\"1.6\" stroke-linecap=\"round\">\n";
    std::size_t from = 0;
    for (std::size_t j = 1; j < path.r.size(); ++j) {
      const double dx = px(path.r[j]) - px(path.r[from]);
      const double dy = py(path.r[j]) - py(path.r[from]);
      const bool last = j + 1 == path.r.size();
      if (!last && std::hypot(dx, dy) < 1.5 && std::abs(level(path.sigma[j]) - level(path.sigma[from])) < 0.01) continue;
      svg << "<line x1=\"" << num(px(path.r[from])) << "\" y1=\"" << num(py(path.r[from])) << "\" x2=\""
          << num(px(path.r[j])) << "\" y2=\"" << num(py(path.r[j])) << "\" stroke=\""
          << ramp_color(0.5 * (level(path.sigma[from]) + level(path.sigma[j]))) << "\"/>\n";
      from = j;
    }
    svg << "</g>\n";
    svg << "<circle cx=\"" << num(px(path.r.front())) << "\" cy=\"" << num(py(path.r.front())) << "\" r=\"3\" fill=\""
        << ramp_color(level(path.sigma.front())) << "\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
  }

  const double sx = px(x_star), sy = py(x_star);
  svg << "<g stroke=\"red\" stroke-width=\"2\"><line x1=\"" << num(sx - 6) << "\" y1=\"" << num(sy - 6) << "\" x2=\""
      << num(sx + 6) << "\" y2=\"" << num(sy + 6) << "\"/><line x1=\"" << num(sx - 6) << "\" y1=\"" << num(sy + 6)
      << "\" x2=\"" << num(sx + 6) << "\" y2=\"" << num(sy - 6) << "\"/></g>\n";
  svg << "<text x=\"" << num(sx + 9) << "\" y=\"" << num(sy - 9) << "\" fill=\"red\">x*</text>\n";

  // legend: colour bar over log10(sigma)
  const double bar_y = margin + height + margin;
  const double bar_x = margin;
  const double bar_w = side;
  svg << "<defs><linearGradient id=\"ramp\">";
  for (int i = 0; i <= 4; ++i) svg << "<stop offset=\"" << i * 25 << "%\" stop-color=\"" << ramp_color(i / 4.0) << "\"/>";
  svg << "</linearGradient></defs>\n";
  svg << "<rect x=\"" << num(bar_x) << "\" y=\"" << num(bar_y) << "\" width=\"" << num(bar_w)
      << "\" height=\"12\" fill=\"url(#ramp)\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
  const int span = static_cast<int>(hi - lo);
  const int stride = std::max(1, span / 8);
  for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); e += stride) {
    const double x = bar_x + bar_w * (e - lo) / (hi - lo);
    svg << "<line x1=\"" << num(x) << "\" y1=\"" << num(bar_y + 12) << "\" x2=\"" << num(x) << "\" y2=\""
        << num(bar_y + 16) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << num(x) << "\" y=\"" << num(bar_y + 29) << "\" text-anchor=\"middle\">" << e << "</text>\n";
  }
  svg << "<text x=\"" << num(bar_x + bar_w / 2) << "\" y=\"" << num(bar_y + 46)
      << "\" text-anchor=\"middle\">colour: log10 of the block count sigma (start dots, red cross x*)</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace replicoal::app
