#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "covkit/density.hpp"
#include "covkit/pgm.hpp"
#include "covkit/quadrature.hpp"

using namespace covkit;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// Dense midpoint rule over the unit square.
template <class F>
double riemann(F&& f, int g = 600) {
  double s = 0.0;
  for (int j = 0; j < g; ++j)
    for (int i = 0; i < g; ++i) s += f(Vec2{(i + 0.5) / g, (j + 0.5) / g});
  return s / (g * g);
}

DensityField two_modes() {
  return DensityField::gmm(ConvexPolygon::unit_square(),
                           {{0.4, {0.3, 0.3}, Mat2{0.01, 0.004, 0.004, 0.02}},
                            {0.6, {0.75, 0.6}, Mat2::diag(0.03, 0.01)}});
}

}  // namespace

TEST(Quadrature, ExactOnDegreeSixMonomials) {
  for (int a = 0; a <= 6; ++a)
    for (int b = 0; a + b <= 6; ++b) {
      double s = 0.0;
      for_each_triangle_node({0, 0}, {1, 0}, {0, 1}, 0,
                             [&](Vec2 q, double w) { s += w * std::pow(q.x, a) * std::pow(q.y, b); });
      EXPECT_NEAR(s, factorial(a) * factorial(b) / factorial(a + b + 2), 1e-14) << a << "," << b;
    }
}

TEST(Quadrature, RefinementWeightsSumToArea) {
  const auto p = ConvexPolygon::ellipse({0.2, 0.1}, 0.5, 0.3, 0.4, 17);
  EXPECT_NEAR(integrate_polygon(p, [](Vec2) { return 1.0; }, 3), p.area(), 1e-12);
}

TEST(Uniform, ConstantValue) {
  const auto w = ConvexPolygon::rectangle({0, 0}, {2, 0.5});
  const auto phi = DensityField::uniform(w);
  EXPECT_DOUBLE_EQ(phi.eval({1.0, 0.25}), 1.0);
  EXPECT_NEAR(cell_mass_centroid(phi, w).mass, 1.0, 1e-12);
}

TEST(Gmm, NormalizedOnWorkspace) {
  const auto phi = two_modes();
  EXPECT_NEAR(cell_mass_centroid(phi, phi.workspace()).mass, 1.0, 1e-4);
  EXPECT_NEAR(riemann([&](Vec2 q) { return phi.eval(q); }), 1.0, 1e-4);
}

TEST(Gmm, SubcellMassMatchesRiemannSum) {
  const auto phi = two_modes();
  const auto cell = ConvexPolygon::rectangle({0.5, 0.4}, {1.0, 0.9});
  const double oracle = riemann([&](Vec2 q) { return cell.contains(q, 0.0) ? phi.eval(q) : 0.0; }, 1000);
  EXPECT_NEAR(cell_mass_centroid(phi, cell).mass, oracle, 2e-3);
}

TEST(Gmm, GradLogMatchesFiniteDifferences) {
  const auto phi = two_modes();
  const double h = 1e-6;
  for (Vec2 q : {Vec2{0.3, 0.5}, Vec2{0.6, 0.6}, Vec2{0.9, 0.2}}) {
    const Vec2 g = phi.grad_log(q);
    const double gx = (std::log(phi.eval(q + Vec2{h, 0})) - std::log(phi.eval(q - Vec2{h, 0}))) / (2 * h);
    const double gy = (std::log(phi.eval(q + Vec2{0, h})) - std::log(phi.eval(q - Vec2{0, h}))) / (2 * h);
    EXPECT_NEAR(g.x, gx, 1e-5 * (1 + std::abs(gx)));
    EXPECT_NEAR(g.y, gy, 1e-5 * (1 + std::abs(gy)));
  }
}

TEST(Gmm, RejectsBadParameters) {
  const auto w = ConvexPolygon::unit_square();
  EXPECT_THROW(DensityField::gmm(w, {{0.5, {0.5, 0.5}, Mat2::identity()}}), Error);
  EXPECT_THROW(DensityField::gmm(w, {{1.0, {0.5, 0.5}, Mat2{1, 2, 2, 1}}}), Error);
  EXPECT_THROW(DensityField::gmm(w, {}), Error);
}

TEST(Grid, CellCentersInterpolateExactly) {
  const std::vector<double> v{1, 2, 3, 4, 5, 6};
  const auto phi = DensityField::grid(ConvexPolygon::unit_square(), 3, 2, v, {0, 0}, {1, 1});
  const double norm = phi.eval({0.5 / 3, 0.25});
  EXPECT_NEAR(phi.eval({2.5 / 3, 0.75}) / norm, 6.0, 1e-12);
  EXPECT_NEAR(phi.eval({1.5 / 3, 0.25}) / norm, 2.0, 1e-12);
  EXPECT_NEAR(phi.eval({1.0 / 3, 0.25}) / norm, 1.5, 1e-12);
  EXPECT_NEAR(cell_mass_centroid(phi, phi.workspace()).mass, 1.0, 1e-10);
}

TEST(Image, TopRowIsTopOfWorkspace) {
  GrayImage img{2, 2, 255, {200, 200, 10, 10}};
  const auto phi = DensityField::image(ConvexPolygon::unit_square(), img);
  EXPECT_TRUE(phi.is_image());
  EXPECT_GT(phi.eval({0.5, 0.75}), 5 * phi.eval({0.5, 0.25}));
}

TEST(Pgm, RoundTripAndAsciiVariant) {
  const auto dir = std::filesystem::temp_directory_path() / "covkit_pgm_test";
  std::filesystem::create_directories(dir);
  GrayImage img{3, 2, 255, {0, 10, 20, 30, 40, 250}};
  write_pgm((dir / "a.pgm").string(), img);
  const auto back = read_pgm((dir / "a.pgm").string());
  EXPECT_EQ(back.width, 3);
  EXPECT_EQ(back.pixels, img.pixels);

  std::ofstream((dir / "b.pgm").string()) << "P2\n# comment\n2 1\n15\n3 15\n";
  const auto ascii = read_pgm((dir / "b.pgm").string());
  EXPECT_EQ(ascii.maxval, 15);
  EXPECT_EQ(ascii.at(1, 0), 15);
  EXPECT_THROW(read_pgm((dir / "missing.pgm").string()), Error);
}

TEST(Sample, DeterministicInsideAndMeanMatches) {
  const auto phi = two_modes();
  const auto a = sample(phi, 20000, 9), b = sample(phi, 20000, 9);
  EXPECT_EQ(a, b);
  Vec2 m;
  for (Vec2 q : a) {
    ASSERT_TRUE(phi.workspace().contains(q, 0.0));
    m += q / 20000.0;
  }
  const double mx = riemann([&](Vec2 q) { return q.x * phi.eval(q); });
  const double my = riemann([&](Vec2 q) { return q.y * phi.eval(q); });
  EXPECT_NEAR(m.x, mx, 6e-3);
  EXPECT_NEAR(m.y, my, 6e-3);
}

TEST(Discretize, SumsToOneAndLocatesMass) {
  const auto phi = two_modes();
  const auto g = discretize_grid(phi, 20, 20);
  double total = 0.0;
  for (double w : g.weights) total += w;
  EXPECT_NEAR(total, 1.0, 1e-12);
  const auto d = discretize(phi, 20, 20);
  EXPECT_EQ(d.size(), 400u);
  const auto tri = DensityField::uniform(ConvexPolygon::from_vertices({{0, 0}, {1, 0}, {0, 1}}));
  const auto dt = discretize(tri, 10, 10);
  EXPECT_EQ(dt.size(), 55u);
  for (Vec2 q : dt.points) EXPECT_TRUE(tri.workspace().contains(q, 1e-12));
}

TEST(CellMass, UniformHalfAndGaussianHalf) {
  const auto w = ConvexPolygon::unit_square();
  const auto left = ConvexPolygon::rectangle({0, 0}, {0.5, 1});
  const auto u = cell_mass_centroid(DensityField::uniform(w), left);
  EXPECT_NEAR(u.mass, 0.5, 1e-12);
  EXPECT_NEAR(u.centroid->x, 0.25, 1e-12);
  const auto g = DensityField::gmm(w, {{1.0, {0.5, 0.5}, Mat2::diag(0.02, 0.02)}});
  const auto cm = cell_mass_centroid(g, left);
  EXPECT_NEAR(cm.mass, 0.5, 1e-4);
  const double mx = riemann([&](Vec2 q) { return q.x < 0.5 ? q.x * g.eval(q) : 0.0; }, 1000);
  const double m = riemann([&](Vec2 q) { return q.x < 0.5 ? g.eval(q) : 0.0; }, 1000);
  EXPECT_NEAR(cm.centroid->x, mx / m, 1e-3);
}

TEST(CellMass, AdditiveOverPartition) {
  const auto phi = two_modes();
  double total = 0.0;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i)
      total += cell_mass_centroid(phi, ConvexPolygon::rectangle({i / 3.0, j / 3.0}, {(i + 1) / 3.0, (j + 1) / 3.0})).mass;
  EXPECT_NEAR(total, 1.0, 1e-4);
  const auto img = DensityField::image(ConvexPolygon::unit_square(), read_pgm(std::string(COVKIT_DATA_DIR) + "/portrait.pgm"));
  EXPECT_NEAR(cell_mass_centroid(img, img.workspace()).mass, 1.0, 1e-4);
}

TEST(Sample, UniformMeanAndMixtureOccupancy) {
  const auto w = ConvexPolygon::unit_square();
  Vec2 m;
  for (Vec2 q : sample(DensityField::uniform(w), 10000, 1)) m += q / 10000.0;
  EXPECT_NEAR(m.x, 0.5, 0.02);
  EXPECT_NEAR(m.y, 0.5, 0.02);
  const auto g = DensityField::gmm(w, {{0.5, {0.25, 0.5}, Mat2::diag(0.003, 0.003)}, {0.5, {0.75, 0.5}, Mat2::diag(0.003, 0.003)}});
  int left = 0;
  for (Vec2 q : sample(g, 10000, 2)) left += q.x < 0.5;
  EXPECT_NEAR(left / 10000.0, 0.5, 0.02);
}

TEST(Discretize, SmallLattices) {
  const auto w = ConvexPolygon::unit_square();
  const auto u = discretize(DensityField::uniform(w), 2, 2);
  ASSERT_EQ(u.size(), 4u);
  for (double x : u.weights) EXPECT_NEAR(x, 0.25, 1e-12);
  const auto g = discretize(DensityField::gmm(w, {{1.0, {0.5, 0.5}, Mat2::diag(0.02, 0.02)}}), 3, 3);
  EXPECT_EQ(std::max_element(g.weights.begin(), g.weights.end()) - g.weights.begin(), 4);
}
