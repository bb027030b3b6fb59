#pragma once

#include <array>
#include <cstddef>

#include "covkit/geometry.hpp"

namespace covkit {

/// Default number of uniform 1:4 refinements applied to each fan triangle.
inline constexpr int kDefaultQuadratureLevels = 2;

namespace detail {

struct TriRulePoint {
  double l1, l2, l3, w;
};

// Symmetric 12-point rule exact for polynomials of total degree 6 (Dunavant).
inline constexpr std::array<TriRulePoint, 12> kDunavant6 = {{
    {0.501426509658179, 0.249286745170910, 0.249286745170910, 0.116786275726379},
    {0.249286745170910, 0.501426509658179, 0.249286745170910, 0.116786275726379},
    {0.249286745170910, 0.249286745170910, 0.501426509658179, 0.116786275726379},
    {0.873821971016996, 0.063089014491502, 0.063089014491502, 0.050844906370207},
    {0.063089014491502, 0.873821971016996, 0.063089014491502, 0.050844906370207},
    {0.063089014491502, 0.063089014491502, 0.873821971016996, 0.050844906370207},
    {0.053145049844817, 0.310352451033784, 0.636502499121399, 0.082851075618374},
    {0.310352451033784, 0.636502499121399, 0.053145049844817, 0.082851075618374},
    {0.636502499121399, 0.053145049844817, 0.310352451033784, 0.082851075618374},
    {0.053145049844817, 0.636502499121399, 0.310352451033784, 0.082851075618374},
    {0.636502499121399, 0.310352451033784, 0.053145049844817, 0.082851075618374},
    {0.310352451033784, 0.053145049844817, 0.636502499121399, 0.082851075618374},
}};

template <class F>
void rule_on_triangle(Vec2 a, Vec2 b, Vec2 c, F& f) {
  const double area = 0.5 * std::abs(cross(b - a, c - a));
  if (area == 0.0) return;
  for (const auto& r : kDunavant6) f(a * r.l1 + b * r.l2 + c * r.l3, r.w * area);
}

}  // namespace detail

/// Calls f(q, weight) at every quadrature node of the triangle; weights sum to its area.
template <class F>
void for_each_triangle_node(Vec2 a, Vec2 b, Vec2 c, int levels, F&& f) {
  const int m = 1 << levels;
  const Vec2 e1 = (b - a) / m, e2 = (c - a) / m;
  auto at = [&](int i, int j) { return a + e1 * i + e2 * j; };
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i + j < m; ++i) {
      detail::rule_on_triangle(at(i, j), at(i + 1, j), at(i, j + 1), f);
      if (i + j + 1 < m) detail::rule_on_triangle(at(i + 1, j), at(i + 1, j + 1), at(i, j + 1), f);
    }
  }
}

/// Fan-triangulates the polygon from its centroid and refines each triangle `levels` times.
template <class F>
void for_each_polygon_node(const ConvexPolygon& poly, int levels, F&& f) {
  const Vec2 c = polygon_moments(poly).centroid;
  const auto v = poly.vertices();
  for (std::size_t i = 0, n = v.size(); i < n; ++i) for_each_triangle_node(c, v[i], v[(i + 1) % n], levels, f);
}

/// Integral of g over the polygon.
template <class G>
double integrate_polygon(const ConvexPolygon& poly, G&& g, int levels = kDefaultQuadratureLevels) {
  double s = 0.0;
  for_each_polygon_node(poly, levels, [&](Vec2 q, double w) { s += w * g(q); });
  return s;
}

}  // namespace covkit
