#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "covkit/geometry.hpp"

using namespace covkit;

namespace {

std::vector<Vec2> random_sites(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  std::vector<Vec2> s(static_cast<std::size_t>(n));
  for (auto& p : s) p = {u(rng), u(rng)};
  return s;
}

int argmin_power(Vec2 q, const std::vector<Vec2>& sites, const std::vector<double>& radii) {
  int best = 0;
  double bd = 1e300;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const double d = distance2(q, sites[i]) - radii[i] * radii[i];
    if (d < bd) bd = d, best = static_cast<int>(i);
  }
  return best;
}

}  // namespace

TEST(Polygon, ClockwiseInputIsReoriented) {
  const auto p = ConvexPolygon::from_vertices({{0, 0}, {0, 1}, {1, 1}, {1, 0}});
  EXPECT_NEAR(p.area(), 1.0, 1e-15);
}

TEST(Polygon, RejectsNonConvexAndDegenerate) {
  EXPECT_THROW(ConvexPolygon::from_vertices({{0, 0}, {2, 0}, {1, 0.2}, {2, 2}, {0, 2}}), Error);
  EXPECT_THROW(ConvexPolygon::from_vertices({{0, 0}, {1, 1}, {2, 2}}), Error);
  EXPECT_THROW(ConvexPolygon::from_vertices({{0, 0}, {1, 0}}), Error);
}

TEST(Polygon, TriangleMoments) {
  const auto t = ConvexPolygon::from_vertices({{0, 0}, {3, 0}, {0, 3}});
  const auto m = polygon_moments(t);
  EXPECT_NEAR(m.area, 4.5, 1e-12);
  EXPECT_NEAR(m.centroid.x, 1.0, 1e-12);
  EXPECT_NEAR(m.centroid.y, 1.0, 1e-12);
}

TEST(Polygon, InscribedEllipseArea) {
  const int n = 40;
  const auto e = ConvexPolygon::ellipse({0.5, 0.5}, 0.3, 0.1, 0.7, n);
  EXPECT_NEAR(e.area(), 0.5 * n * std::sin(2 * M_PI / n) * 0.3 * 0.1, 1e-12);
}

TEST(Polygon, ClampProjectsOntoBoundary) {
  const auto w = ConvexPolygon::unit_square();
  const Vec2 c = w.clamp({1.5, 0.25});
  EXPECT_NEAR(c.x, 1.0, 1e-12);
  EXPECT_NEAR(c.y, 0.25, 1e-12);
  EXPECT_EQ(w.clamp({0.3, 0.4}), (Vec2{0.3, 0.4}));
}

TEST(Clip, HalfPlaneCutsSquare) {
  const auto w = ConvexPolygon::unit_square();
  const auto half = clip(w, HalfPlane::from({1.0, 0.0}, 0.5));
  ASSERT_TRUE(half);
  EXPECT_NEAR(half->area(), 0.5, 1e-12);
  EXPECT_FALSE(clip(w, HalfPlane::from({1.0, 0.0}, -0.1)));
  const auto diag = clip(w, HalfPlane::from({1.0, 1.0}, 1.0));
  ASSERT_TRUE(diag);
  EXPECT_NEAR(diag->area(), 0.5, 1e-12);
}

TEST(Voronoi, TwoSitesSplitEvenly) {
  const auto w = ConvexPolygon::unit_square();
  const std::vector<Vec2> s{{0.25, 0.5}, {0.75, 0.5}};
  const auto cells = voronoi_cells(w, s);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_NEAR(cells[0].area(), 0.5, 1e-12);
  EXPECT_NEAR(cells[1].area(), 0.5, 1e-12);
}

TEST(Voronoi, CellsTileWorkspace) {
  const auto w = ConvexPolygon::from_vertices({{0, 0}, {1, 0}, {1.2, 0.6}, {0.5, 1.1}, {-0.2, 0.6}});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec2> s;
  while (s.size() < 25) {
    const Vec2 q{u(rng) * 1.4 - 0.2, u(rng) * 1.1};
    if (w.contains(q, -1e-6)) s.push_back(q);
  }
  double total = 0.0;
  for (const auto& c : voronoi_cells(w, s)) total += c.area();
  EXPECT_NEAR(total, w.area(), 1e-9);
}

TEST(Power, AreasMatchGridLabeling) {
  const auto w = ConvexPolygon::unit_square();
  const auto s = random_sites(12, 11);
  std::vector<double> r(s.size());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 0.2);
  for (auto& x : r) x = u(rng);
  const auto cells = power_cells(w, s, r);

  const int g = 400;
  std::vector<double> share(s.size(), 0.0);
  for (int j = 0; j < g; ++j)
    for (int i = 0; i < g; ++i) share[argmin_power({(i + 0.5) / g, (j + 0.5) / g}, s, r)] += 1.0 / (g * g);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double area = cells[i] ? cells[i]->area() : 0.0;
    EXPECT_NEAR(area, share[i], 4e-3) << "cell " << i;
  }
}

TEST(Power, PointsInCellMinimizePowerDistance) {
  const auto w = ConvexPolygon::unit_square();
  const auto s = random_sites(20, 21);
  std::vector<double> r(s.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = 0.01 * static_cast<double>(i % 7);
  const auto cells = power_cells(w, s, r);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!cells[i]) continue;
    const Vec2 c = polygon_moments(*cells[i]).centroid;
    EXPECT_EQ(argmin_power(c, s, r), static_cast<int>(i));
  }
}

TEST(Power, EqualRadiiReproduceVoronoi) {
  const auto w = ConvexPolygon::unit_square();
  const auto s = random_sites(15, 7);
  const auto vor = voronoi_cells(w, s);
  const auto pow = power_cells(w, s, std::vector<double>(s.size(), 0.13));
  for (std::size_t i = 0; i < s.size(); ++i) {
    ASSERT_TRUE(pow[i]);
    EXPECT_NEAR(pow[i]->area(), vor[i].area(), 1e-12);
  }
}

TEST(Power, DominantRadiusCanEmptyACell) {
  const auto w = ConvexPolygon::unit_square();
  const std::vector<Vec2> s{{0.5, 0.5}, {0.52, 0.5}};
  const auto cells = power_cells(w, s, std::vector<double>{0.5, 0.0});
  EXPECT_TRUE(cells[0]);
  EXPECT_FALSE(cells[1]);
}

TEST(Sites, DuplicateAndOutsideRejected) {
  const auto w = ConvexPolygon::unit_square();
  try {
    voronoi_cells(w, std::vector<Vec2>{{0.2, 0.2}, {0.2, 0.2}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateSites);
  }
  try {
    voronoi_cells(w, std::vector<Vec2>{{0.2, 0.2}, {1.2, 0.2}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SiteOutsideWorkspace);
  }
}

TEST(Clip, BindingNonBindingDisjoint) {
  const auto w = ConvexPolygon::unit_square();
  const auto left = clip(w, HalfPlane::from({1.0, 0.0}, 0.5));
  ASSERT_TRUE(left);
  const auto m = polygon_moments(*left);
  EXPECT_NEAR(m.area, 0.5, 1e-12);
  EXPECT_NEAR(m.centroid.x, 0.25, 1e-12);
  EXPECT_NEAR(clip(w, HalfPlane::from({1.0, 0.0}, 2.0))->area(), 1.0, 1e-12);
  EXPECT_FALSE(clip(w, HalfPlane::from({1.0, 0.0}, -1.0)));
}

TEST(Voronoi, SingleSiteAndQuadrants) {
  const auto w = ConvexPolygon::unit_square();
  EXPECT_NEAR(voronoi_cells(w, std::vector<Vec2>{{0.9, 0.1}})[0].area(), 1.0, 1e-12);
  const std::vector<Vec2> s{{0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}};
  const auto cells = voronoi_cells(w, s);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto m = polygon_moments(cells[i]);
    EXPECT_NEAR(m.area, 0.25, 1e-12);
    EXPECT_NEAR(distance(m.centroid, s[i]), 0.0, 1e-12);
  }
}

TEST(Power, RadicalAxisSplit) {
  const auto w = ConvexPolygon::unit_square();
  const auto cells = power_cells(w, std::vector<Vec2>{{0.25, 0.5}, {0.75, 0.5}}, std::vector<double>{0.5, 0.1});
  ASSERT_TRUE(cells[0] && cells[1]);
  EXPECT_NEAR(cells[0]->area(), 0.74, 1e-12);
  EXPECT_NEAR(cells[0]->bounding_box().hi.x, 0.74, 1e-12);
  EXPECT_FALSE(power_cells(w, std::vector<Vec2>{{0.25, 0.5}, {0.75, 0.5}}, std::vector<double>{10.0, 0.0})[1]);
}

TEST(Moments, ReferenceShapes) {
  const auto sq = polygon_moments(ConvexPolygon::unit_square());
  EXPECT_NEAR(sq.area, 1.0, 1e-15);
  EXPECT_NEAR(sq.centroid.x, 0.5, 1e-15);
  const auto tri = polygon_moments(ConvexPolygon::from_vertices({{0, 0}, {1, 0}, {0, 1}}));
  EXPECT_NEAR(tri.area, 0.5, 1e-15);
  EXPECT_NEAR(tri.centroid.y, 1.0 / 3.0, 1e-15);
  const auto rect = polygon_moments(ConvexPolygon::rectangle({0, 0}, {0.5, 1}));
  EXPECT_NEAR(rect.centroid.x, 0.25, 1e-15);
  EXPECT_NEAR(rect.centroid.y, 0.5, 1e-15);
}

TEST(Partition, EveryPointInExactlyOneCellAndNearestSite) {
  const auto w = ConvexPolygon::from_vertices({{0, 0}, {1, 0}, {1, 1}, {0.3, 1.2}});
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.2);
  std::vector<Vec2> s;
  while (s.size() < 15) {
    const Vec2 q{u(rng), u(rng)};
    if (w.contains(q, -1e-3)) s.push_back(q);
  }
  std::vector<double> r(s.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = 0.02 * static_cast<double>(i % 5);
  const auto vor = voronoi_cells(w, s);
  const auto pow = power_cells(w, s, r);
  double area = 0.0;
  for (const auto& c : pow) area += c ? c->area() : 0.0;
  EXPECT_NEAR(area, w.area(), 1e-6 * w.area());
  int checked = 0;
  while (checked < 1000) {
    const Vec2 q{u(rng), u(rng)};
    if (!w.contains(q, 0.0)) continue;
    ++checked;
    int in_vor = 0, in_pow = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      in_vor += vor[i].contains(q, 1e-9);
      in_pow += pow[i] && pow[i]->contains(q, 1e-9);
    }
    EXPECT_GE(in_vor, 1);
    EXPECT_GE(in_pow, 1);
    std::vector<double> zero(s.size(), 0.0);
    EXPECT_TRUE(vor[static_cast<std::size_t>(argmin_power(q, s, zero))].contains(q, 1e-9));
    EXPECT_TRUE(pow[static_cast<std::size_t>(argmin_power(q, s, r))]->contains(q, 1e-9));
  }
}
