#pragma once

// Static SVG heatmaps of kernels: one exact rectangle per grid cell, a
// diverging colormap over the box, byte-deterministic output.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "graphon/errors.hpp"
#include "graphon/step_kernel.hpp"

namespace graphon {

namespace detail {

struct Rgb {
  int r, g, b;
};

// cool/warm endpoints through white at the box midpoint
inline Rgb diverging_color(double t) {
  t = std::min(1.0, std::max(0.0, t));
  const auto lerp = [](double a, double b, double u) { return a + (b - a) * u; };
  double r, g, b;
  if (t < 0.5) {
    const double u = t * 2.0;
    r = lerp(59, 221, u);
    g = lerp(76, 221, u);
    b = lerp(192, 221, u);
  } else {
    const double u = (t - 0.5) * 2.0;
    r = lerp(221, 180, u);
    g = lerp(221, 4, u);
    b = lerp(221, 38, u);
  }
  return {static_cast<int>(std::lround(r)), static_cast<int>(std::lround(g)),
          static_cast<int>(std::lround(b))};
}

}  // namespace detail

inline std::string render_heatmap_svg(const StepKernel& w, int pixels = 512) {
  const int m = w.resolution();
  const Box box = w.box();
  std::string out;
  out.reserve(static_cast<std::size_t>(m) * m * 64 + 256);
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                "viewBox=\"0 0 %d %d\">\n",
                pixels, pixels, m, m);
  out += buf;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      const double t = (w(a, b) - box.lo) / (box.hi - box.lo);
      const detail::Rgb c = detail::diverging_color(t);
      std::snprintf(buf, sizeof(buf),
                    "<rect x=\"%d\" y=\"%d\" width=\"1\" height=\"1\" fill=\"rgb(%d,%d,%d)\"/>\n",
                    b, a, c.r, c.g, c.b);
      out += buf;
    }
  out += "</svg>\n";
  return out;
}

inline void render_heatmap(const StepKernel& w, const std::string& path, int pixels = 512) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IOError("cannot open for writing: " + path);
  os << render_heatmap_svg(w, pixels);
  if (!os) throw IOError("failed writing " + path);
}

}  // namespace graphon
