#pragma once

// Exact convex-polygon primitives. Every partition cell in the library is
// produced here by clipping the workspace against bisector or radical-axis
// half-planes.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "covkit/error.hpp"
#include "covkit/vec2.hpp"

namespace covkit {

inline constexpr double kGeomEps = 1e-9;

/// Counter-clockwise convex polygon with at least three vertices.
class ConvexPolygon {
 public:
  /// Validates convexity and orientation. Clockwise input is reversed.
  static ConvexPolygon from_vertices(std::vector<Vec2> vertices) {
    if (vertices.size() < 3) fail(ErrorCode::InvalidPolygon, "polygon needs at least 3 vertices");
    if (signed_area(vertices) < 0.0) std::reverse(vertices.begin(), vertices.end());
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 a = vertices[i], b = vertices[(i + 1) % n], c = vertices[(i + 2) % n];
      if (distance(a, b) <= kGeomEps) fail(ErrorCode::InvalidPolygon, "duplicate consecutive vertices");
      if (cross(b - a, c - b) < -kGeomEps) fail(ErrorCode::InvalidPolygon, "polygon is not convex");
    }
    if (signed_area(vertices) <= kGeomEps * kGeomEps) fail(ErrorCode::InvalidPolygon, "polygon has zero area");
    return ConvexPolygon(std::move(vertices));
  }

  static ConvexPolygon rectangle(Vec2 lo, Vec2 hi) {
    return from_vertices({lo, {hi.x, lo.y}, hi, {lo.x, hi.y}});
  }

  static ConvexPolygon unit_square() { return rectangle({0.0, 0.0}, {1.0, 1.0}); }

  /// Regular polygon inscribed in the ellipse {c + R(theta) diag(ax, ay) u : |u| = 1}.
  static ConvexPolygon ellipse(Vec2 center, double semi_x, double semi_y, double theta, int segments = 32) {
    std::vector<Vec2> v;
    v.reserve(static_cast<std::size_t>(segments));
    for (int k = 0; k < segments; ++k) {
      const double t = 2.0 * M_PI * k / segments;
      v.push_back(center + rotate({semi_x * std::cos(t), semi_y * std::sin(t)}, theta));
    }
    return from_vertices(std::move(v));
  }

  std::span<const Vec2> vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  Vec2 operator[](std::size_t i) const { return vertices_[i]; }

  double area() const { return signed_area(vertices_); }

  /// Inclusive containment with tolerance on each edge's signed distance.
  bool contains(Vec2 q, double tol = kGeomEps) const {
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 a = vertices_[i], b = vertices_[(i + 1) % n];
      const Vec2 e = b - a;
      if (cross(e, q - a) < -tol * norm(e)) return false;
    }
    return true;
  }

  struct Box {
    Vec2 lo, hi;
    double width() const { return hi.x - lo.x; }
    double height() const { return hi.y - lo.y; }
  };

  Box bounding_box() const {
    Box b{vertices_[0], vertices_[0]};
    for (Vec2 v : vertices_) {
      b.lo.x = std::min(b.lo.x, v.x);
      b.lo.y = std::min(b.lo.y, v.y);
      b.hi.x = std::max(b.hi.x, v.x);
      b.hi.y = std::max(b.hi.y, v.y);
    }
    return b;
  }

  double diameter() const {
    double d = 0.0;
    for (std::size_t i = 0; i < vertices_.size(); ++i)
      for (std::size_t j = i + 1; j < vertices_.size(); ++j) d = std::max(d, distance(vertices_[i], vertices_[j]));
    return d;
  }

  /// Closest point of the polygon to q (q itself when inside).
  Vec2 clamp(Vec2 q) const {
    if (contains(q, 0.0)) return q;
    Vec2 best = vertices_[0];
    double best_d = std::numeric_limits<double>::infinity();
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 a = vertices_[i], e = vertices_[(i + 1) % n] - a;
      const double t = std::clamp(dot(q - a, e) / norm2(e), 0.0, 1.0);
      const Vec2 p = a + e * t;
      const double d = distance2(p, q);
      if (d < best_d) best_d = d, best = p;
    }
    return best;
  }

  static double signed_area(std::span<const Vec2> v) {
    double s = 0.0;
    for (std::size_t i = 0, n = v.size(); i < n; ++i) s += cross(v[i], v[(i + 1) % n]);
    return 0.5 * s;
  }

 private:
  explicit ConvexPolygon(std::vector<Vec2> v) : vertices_(std::move(v)) {}
  friend std::optional<ConvexPolygon> make_cell(std::vector<Vec2> v);

  std::vector<Vec2> vertices_;
};

/// {q : normal . q <= offset}, with a unit normal.
struct HalfPlane {
  Vec2 normal;
  double offset = 0.0;

  /// Normalizes {q : a . q <= b}.
  static HalfPlane from(Vec2 a, double b) {
    const double len = norm(a);
    if (!(len > 0.0)) fail(ErrorCode::InvalidArgument, "half-plane normal must be nonzero");
    return {a / len, b / len};
  }

  double signed_distance(Vec2 q) const { return dot(normal, q) - offset; }
};

/// Wraps a clipped vertex ring, collapsing near-duplicate vertices and zero-area slivers.
inline std::optional<ConvexPolygon> make_cell(std::vector<Vec2> v) {
  std::vector<Vec2> out;
  out.reserve(v.size());
  for (Vec2 p : v)
    if (out.empty() || distance(out.back(), p) > kGeomEps) out.push_back(p);
  while (out.size() > 1 && distance(out.front(), out.back()) <= kGeomEps) out.pop_back();
  if (out.size() < 3) return std::nullopt;

  // Sliver test: every vertex within eps of the line through the two farthest-apart vertices.
  std::size_t ia = 0, ib = 1;
  double best = -1.0;
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = i + 1; j < out.size(); ++j)
      if (double d = distance2(out[i], out[j]); d > best) best = d, ia = i, ib = j;
  const Vec2 axis = out[ib] - out[ia];
  const double len = std::sqrt(best);
  bool flat = true;
  for (Vec2 p : out)
    if (std::abs(cross(axis, p - out[ia])) / len > kGeomEps) {
      flat = false;
      break;
    }
  if (flat) return std::nullopt;
  return ConvexPolygon(std::move(out));
}

/// poly intersected with h; nullopt when the intersection has zero area.
inline std::optional<ConvexPolygon> clip(const ConvexPolygon& poly, const HalfPlane& h) {
  const auto verts = poly.vertices();
  const std::size_t n = verts.size();
  std::vector<double> dist(n);
  bool all_in = true, all_out = true;
  for (std::size_t i = 0; i < n; ++i) {
    dist[i] = h.signed_distance(verts[i]);
    if (dist[i] > 0.0) all_in = false;
    if (dist[i] < 0.0) all_out = false;
  }
  if (all_in) return poly;
  if (all_out) return std::nullopt;

  std::vector<Vec2> out;
  out.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    const bool in_i = dist[i] <= 0.0, in_j = dist[j] <= 0.0;
    if (in_i) out.push_back(verts[i]);
    if (in_i != in_j) {
      const double t = dist[i] / (dist[i] - dist[j]);
      out.push_back(verts[i] + (verts[j] - verts[i]) * t);
    }
  }
  return make_cell(std::move(out));
}

/// Clip against every edge of a convex clipper (both CCW).
inline std::optional<ConvexPolygon> intersect(const ConvexPolygon& poly, const ConvexPolygon& clipper) {
  std::optional<ConvexPolygon> cur = poly;
  const auto c = clipper.vertices();
  for (std::size_t i = 0, n = c.size(); i < n && cur; ++i) {
    const Vec2 a = c[i], e = c[(i + 1) % n] - a;
    const Vec2 outward{e.y, -e.x};
    cur = clip(*cur, HalfPlane::from(outward, dot(outward, a)));
  }
  return cur;
}

struct PolygonMoments {
  double area = 0.0;
  Vec2 centroid;
};

/// Shoelace area and centroid.
inline PolygonMoments polygon_moments(const ConvexPolygon& poly) {
  const auto v = poly.vertices();
  double a2 = 0.0;
  Vec2 m;
  for (std::size_t i = 0, n = v.size(); i < n; ++i) {
    const Vec2 p = v[i], q = v[(i + 1) % n];
    const double w = cross(p, q);
    a2 += w;
    m += (p + q) * w;
  }
  return {0.5 * a2, m / (3.0 * a2)};
}

namespace detail {

inline void check_sites(const ConvexPolygon& workspace, std::span<const Vec2> sites) {
  if (sites.empty()) fail(ErrorCode::InvalidArgument, "at least one site is required");
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (!workspace.contains(sites[i], 1e-9))
      fail(ErrorCode::SiteOutsideWorkspace, "site " + std::to_string(i) + " lies outside the workspace");
  }
  // Sort-and-sweep on x keeps the distinctness check near-linear for swarm-sized inputs.
  std::vector<std::size_t> order(sites.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return sites[a].x < sites[b].x; });
  for (std::size_t a = 0; a < order.size(); ++a) {
    for (std::size_t b = a + 1; b < order.size() && sites[order[b]].x - sites[order[a]].x <= kGeomEps; ++b) {
      if (distance(sites[order[a]], sites[order[b]]) <= kGeomEps)
        fail(ErrorCode::DuplicateSites, "sites " + std::to_string(std::min(order[a], order[b])) + " and " +
                                            std::to_string(std::max(order[a], order[b])) + " coincide");
    }
  }
}

/// Cell of site i under power distance |q-p|^2 - w, with w = rho^2.
/// Other sites are visited nearest-first; a site j cannot cut the cell once
/// (d_ij - R)^2 - w_max >= R^2 - w_i, where R bounds the cell's reach from p_i.
inline std::optional<ConvexPolygon> power_cell(const ConvexPolygon& workspace, std::span<const Vec2> sites,
                                               std::span<const double> weights, std::size_t i, double w_max) {
  const Vec2 pi = sites[i];
  const double wi = weights[i];
  std::vector<std::pair<double, std::size_t>> others;
  others.reserve(sites.size() - 1);
  for (std::size_t j = 0; j < sites.size(); ++j)
    if (j != i) others.emplace_back(distance(pi, sites[j]), j);
  std::sort(others.begin(), others.end());

  auto reach = [&](const ConvexPolygon& c) {
    double r = 0.0;
    for (Vec2 v : c.vertices()) r = std::max(r, distance(pi, v));
    return r;
  };

  std::optional<ConvexPolygon> cell = workspace;
  double radius = reach(workspace);
  for (auto [dij, j] : others) {
    if (dij > radius) {
      const double gap = dij - radius;
      if (gap * gap - w_max >= radius * radius - wi) break;
    }
    const Vec2 pj = sites[j];
    // 2 (p_j - p_i) . q <= |p_j|^2 - |p_i|^2 - w_j + w_i
    const Vec2 a = (pj - pi) * 2.0;
    const double b = norm2(pj) - norm2(pi) - weights[j] + wi;
    cell = clip(*cell, HalfPlane::from(a, b));
    if (!cell) return std::nullopt;
    radius = reach(*cell);
  }
  return cell;
}

}  // namespace detail

/// Voronoi cells of the sites restricted to the workspace, one per site.
inline std::vector<ConvexPolygon> voronoi_cells(const ConvexPolygon& workspace, std::span<const Vec2> sites) {
  detail::check_sites(workspace, sites);
  const std::vector<double> zero(sites.size(), 0.0);
  std::vector<ConvexPolygon> cells;
  cells.reserve(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    auto c = detail::power_cell(workspace, sites, zero, i, 0.0);
    // A site inside W always owns a neighbourhood of itself.
    if (!c) fail(ErrorCode::InvalidArgument, "degenerate Voronoi cell for site " + std::to_string(i));
    cells.push_back(std::move(*c));
  }
  return cells;
}

/// Power (Laguerre) cells; a dominated site yields nullopt.
inline std::vector<std::optional<ConvexPolygon>> power_cells(const ConvexPolygon& workspace, std::span<const Vec2> sites,
                                                             std::span<const double> radii) {
  if (radii.size() != sites.size()) fail(ErrorCode::InvalidArgument, "radius count must match site count");
  detail::check_sites(workspace, sites);
  std::vector<double> w(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] >= 0.0)) fail(ErrorCode::InvalidArgument, "power radii must be nonnegative");
    w[i] = radii[i] * radii[i];
  }
  const double w_max = *std::max_element(w.begin(), w.end());
  std::vector<std::optional<ConvexPolygon>> cells;
  cells.reserve(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) cells.push_back(detail::power_cell(workspace, sites, w, i, w_max));
  return cells;
}

}  // namespace covkit
