#pragma once

// Minimal SVG scene writer: density contour bands, partition outlines, agents,
// dashed power circles, PoIs and assignment links.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "covkit/density.hpp"
#include "covkit/geometry.hpp"

namespace covkit::runner {

struct SvgScene {
  const DensityField* phi = nullptr;
  std::vector<std::optional<ConvexPolygon>> cells;
  std::vector<Vec2> agents;
  std::vector<double> power_radii;  // dashed circles when non-empty
  std::vector<Vec2> pois;
  std::vector<std::pair<Vec2, Vec2>> links;
  std::string title;
  int bands = 16;
  int raster = 96;
  double agent_radius_px = 4.0;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// White to deep blue ramp.
inline std::string band_color(int band, int bands) {
  const double t = bands > 1 ? static_cast<double>(band) / (bands - 1) : 1.0;
  const auto mix = [t](int a, int b) { return static_cast<int>(a + t * (b - a) + 0.5); };
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", mix(247, 8), mix(251, 48), mix(255, 107));
  return buf;
}

}  // namespace detail

inline std::string render_svg(const ConvexPolygon& workspace, const SvgScene& scene) {
  const auto box = workspace.bounding_box();
  const double size = 640.0, margin = 20.0;
  const double scale = (size - 2 * margin) / std::max(box.width(), box.height());
  const double width = box.width() * scale + 2 * margin, height = box.height() * scale + 2 * margin;
  const auto px = [&](Vec2 q) { return Vec2{margin + (q.x - box.lo.x) * scale, height - margin - (q.y - box.lo.y) * scale}; };
  const auto points_attr = [&](const ConvexPolygon& poly) {
    std::string s;
    for (Vec2 v : poly.vertices()) {
      const Vec2 p = px(v);
      s += detail::fmt(p.x) + "," + detail::fmt(p.y) + " ";
    }
    return s;
  };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt(width) + "\" height=\"" +
         detail::fmt(height) + "\" viewBox=\"0 0 " + detail::fmt(width) + " " + detail::fmt(height) + "\">\n";
  if (!scene.title.empty()) out += "<title>" + scene.title + "</title>\n";
  out += "<defs><clipPath id=\"ws\"><polygon points=\"" + points_attr(workspace) + "\"/></clipPath></defs>\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  if (scene.phi) {
    const int n = scene.raster;
    const double dx = box.width() / n, dy = box.height() / n;
    std::vector<double> v(static_cast<std::size_t>(n * n));
    double mx = 0.0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double val = scene.phi->eval({box.lo.x + (i + 0.5) * dx, box.lo.y + (j + 0.5) * dy});
        v[static_cast<std::size_t>(j * n + i)] = val;
        mx = std::max(mx, val);
      }
    out += "<g clip-path=\"url(#ws)\" shape-rendering=\"crispEdges\">\n";
    for (int j = 0; j < n; ++j) {
      int i = 0;
      while (i < n) {
        const auto band_of = [&](int k) {
          return mx > 0.0 ? std::min(scene.bands - 1, static_cast<int>(v[static_cast<std::size_t>(j * n + k)] / mx * scene.bands)) : 0;
        };
        const int b = band_of(i);
        int end = i + 1;
        while (end < n && band_of(end) == b) ++end;
        if (b > 0) {
          const Vec2 p = px({box.lo.x + i * dx, box.lo.y + (j + 1) * dy});
          out += "<rect x=\"" + detail::fmt(p.x) + "\" y=\"" + detail::fmt(p.y) + "\" width=\"" +
                 detail::fmt((end - i) * dx * scale + 0.5) + "\" height=\"" + detail::fmt(dy * scale + 0.5) +
                 "\" fill=\"" + detail::band_color(b, scene.bands) + "\"/>\n";
        }
        i = end;
      }
    }
    out += "</g>\n";
  }

  out += "<polygon points=\"" + points_attr(workspace) + "\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
  for (const auto& c : scene.cells)
    if (c) out += "<polygon points=\"" + points_attr(*c) + "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
  for (const auto& [a, b] : scene.links) {
    const Vec2 p = px(a), q = px(b);
    out += "<line x1=\"" + detail::fmt(p.x) + "\" y1=\"" + detail::fmt(p.y) + "\" x2=\"" + detail::fmt(q.x) +
           "\" y2=\"" + detail::fmt(q.y) + "\" stroke=\"#2a7\" stroke-width=\"1\"/>\n";
  }
  for (Vec2 q : scene.pois) {
    const Vec2 p = px(q);
    out += "<path d=\"M" + detail::fmt(p.x - 4) + " " + detail::fmt(p.y) + "h8M" + detail::fmt(p.x) + " " +
           detail::fmt(p.y - 4) + "v8\" stroke=\"#d62\" stroke-width=\"1.5\"/>\n";
  }
  for (std::size_t i = 0; i < scene.agents.size(); ++i) {
    const Vec2 p = px(scene.agents[i]);
    if (i < scene.power_radii.size() && scene.power_radii[i] > 0.0)
      out += "<circle cx=\"" + detail::fmt(p.x) + "\" cy=\"" + detail::fmt(p.y) + "\" r=\"" +
             detail::fmt(scene.power_radii[i] * scale) +
             "\" fill=\"none\" stroke=\"#c00\" stroke-width=\"1\" stroke-dasharray=\"5,4\"/>\n";
    out += "<circle cx=\"" + detail::fmt(p.x) + "\" cy=\"" + detail::fmt(p.y) + "\" r=\"" +
           detail::fmt(scene.agent_radius_px) + "\" fill=\"#c00\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

inline void write_svg(const std::string& path, const ConvexPolygon& workspace, const SvgScene& scene) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::Io, "cannot write " + path);
  f << render_svg(workspace, scene);
}

}  // namespace covkit::runner
