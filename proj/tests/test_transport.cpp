#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "covkit/transport.hpp"

using namespace covkit;

namespace {

DiscreteMeasure random_measure(std::size_t n, std::mt19937_64& rng, bool on_line = false) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DiscreteMeasure m;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    m.points.push_back({u(rng), on_line ? 0.0 : u(rng)});
    m.weights.push_back(0.1 + u(rng));
    total += m.weights.back();
  }
  for (double& w : m.weights) w /= total;
  return m;
}

// W_p^p on the real line: integral over t of |F^-1(t) - G^-1(t)|^p.
double quantile_cost(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  auto sorted = [](const DiscreteMeasure& m) {
    std::vector<std::pair<double, double>> v;
    for (std::size_t i = 0; i < m.size(); ++i) v.emplace_back(m.points[i].x, m.weights[i]);
    std::sort(v.begin(), v.end());
    return v;
  };
  const auto a = sorted(mu), b = sorted(nu);
  std::size_t i = 0, j = 0;
  double ra = a[0].second, rb = b[0].second, cost = 0.0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(ra, rb);
    cost += t * std::pow(std::abs(a[i].first - b[j].first), p);
    ra -= t, rb -= t;
    if (ra <= 1e-15 && ++i < a.size()) ra = a[i].second;
    if (rb <= 1e-15 && ++j < b.size()) rb = b[j].second;
  }
  return cost;
}

}  // namespace

TEST(Exact, DiracsAndTranslation) {
  const auto a = DiscreteMeasure::uniform({{0, 0}}), b = DiscreteMeasure::uniform({{3, 4}});
  EXPECT_NEAR(wasserstein_exact(a, b, 2.0).value, 5.0, 1e-12);
  EXPECT_NEAR(wasserstein_exact(a, b, 1.0).value, 5.0, 1e-12);
  const auto c = DiscreteMeasure::uniform({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
  auto d = c;
  for (auto& q : d.points) q += Vec2{1, 0};
  EXPECT_NEAR(wasserstein_exact(c, d, 2.0).value, 1.0, 1e-12);
  EXPECT_NEAR(wasserstein_exact(c, c, 2.0).value, 0.0, 1e-12);
}

TEST(Exact, MatchesQuantileFormulaOnALine) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto mu = random_measure(5 + trial % 9, rng, true), nu = random_measure(3 + trial % 11, rng, true);
    for (double p : {1.0, 2.0}) {
      const auto w = wasserstein_exact(mu, nu, p);
      EXPECT_NEAR(w.plan.cost, quantile_cost(mu, nu, p), 1e-7) << "trial " << trial << " p " << p;
    }
  }
}

TEST(Exact, PlanMarginalsSymmetryTriangle) {
  std::mt19937_64 rng(2);
  const auto a = random_measure(30, rng), b = random_measure(25, rng), c = random_measure(20, rng);
  const auto ab = wasserstein_exact(a, b);
  const auto rows = ab.plan.row_sums(), cols = ab.plan.col_sums();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(rows[i], a.weights[i], 1e-7);
  for (std::size_t j = 0; j < b.size(); ++j) EXPECT_NEAR(cols[j], b.weights[j], 1e-7);
  EXPECT_NEAR(ab.value, wasserstein_exact(b, a).value, 1e-9);
  EXPECT_LE(ab.value, wasserstein_exact(a, c).value + wasserstein_exact(c, b).value + 1e-7);
}

TEST(Exact, RejectsInvalidMeasuresAndHugeProblems) {
  DiscreteMeasure bad{{{0, 0}, {1, 1}}, {0.5, 0.6}};
  EXPECT_THROW(wasserstein_exact(bad, bad), Error);
  std::vector<Vec2> pts(2001);
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = {static_cast<double>(i), 0.0};
  const auto big = DiscreteMeasure::uniform(pts);
  try {
    wasserstein_exact(big, big);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SizeLimit);
  }
}

TEST(Sinkhorn, CloseToExactWithRoundedPlan) {
  std::mt19937_64 rng(31);
  const auto a = random_measure(40, rng), b = random_measure(35, rng);
  const double exact = wasserstein_exact(a, b).value;
  SinkhornOptions opt;
  opt.epsilon = 1e-2 * median_cost(a, b);
  const auto s = wasserstein_sinkhorn(a, b, 2.0, opt);
  EXPECT_NEAR(s.value, exact, 0.02 * exact);
  const auto rows = s.plan.row_sums(), cols = s.plan.col_sums();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(rows[i], a.weights[i], 1e-6);
  for (std::size_t j = 0; j < b.size(); ++j) EXPECT_NEAR(cols[j], b.weights[j], 1e-6);
}

TEST(Sinkhorn, IdenticalMeasuresHaveZeroDivergence) {
  std::mt19937_64 rng(5);
  const auto a = random_measure(20, rng);
  SinkhornOptions opt;
  opt.epsilon = 1e-3 * median_cost(a, a);
  EXPECT_LT(wasserstein_sinkhorn(a, a, 2.0, opt).value, 1e-3);
}

TEST(Scaling, ValueIsHomogeneousInCoordinates) {
  std::mt19937_64 rng(12);
  auto a = random_measure(25, rng), b = random_measure(30, rng);
  const double s = 3.7;
  auto sa = a, sb = b;
  for (auto& q : sa.points) q = q * s;
  for (auto& q : sb.points) q = q * s;
  const double exact = wasserstein_exact(a, b).value;
  EXPECT_NEAR(wasserstein_exact(sa, sb).value, s * exact, 1e-6 * s * exact);
  SinkhornOptions opt;
  opt.epsilon = 1e-2 * median_cost(a, b);
  const double base = wasserstein_sinkhorn(a, b, 2.0, opt).value;
  opt.epsilon = 1e-2 * median_cost(sa, sb);
  EXPECT_NEAR(wasserstein_sinkhorn(sa, sb, 2.0, opt).value, s * base, 0.01 * s * base);
}

TEST(Sinkhorn, GridSolverMatchesDense) {
  GridMeasure mu{12, 10, {0, 0}, 1.0 / 12, 0.1, {}}, nu = mu;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double sa = 0, sb = 0;
  for (int k = 0; k < 120; ++k) {
    mu.weights.push_back(u(rng) < 0.2 ? 0.0 : u(rng));
    nu.weights.push_back(u(rng));
    sa += mu.weights.back(), sb += nu.weights.back();
  }
  for (double& w : mu.weights) w /= sa;
  for (double& w : nu.weights) w /= sb;
  SinkhornOptions opt;
  opt.epsilon = 4 * mu.hx * mu.hy;
  const double grid = wasserstein_sinkhorn_grid(mu, nu, opt);
  const double dense = wasserstein_sinkhorn(mu.to_discrete(), nu.to_discrete(), 2.0, opt).value;
  EXPECT_NEAR(grid, dense, 1e-5 * (1 + dense));
}

TEST(Sinkhorn, RequiresPositiveEpsilon) {
  const auto a = DiscreteMeasure::uniform({{0, 0}});
  EXPECT_THROW(wasserstein_sinkhorn(a, a, 2.0, {}), Error);
}

TEST(Identity, SingleAgentOnSquare) {
  const auto phi = DensityField::uniform(ConvexPolygon::unit_square());
  const std::vector<Vec2> p{{0.5, 0.5}};
  const auto chk = check_w2_identity(phi, p, 40);
  EXPECT_NEAR(chk.rhs, 1.0 / 6.0, 1e-12);
  EXPECT_LT(chk.relative_gap, 0.02);
  EXPECT_THROW(check_w2_identity(phi, p, 16), Error);
}

TEST(Identity, VoronoiMeasureWeightsAreCellMasses) {
  const auto phi = DensityField::uniform(ConvexPolygon::unit_square());
  const auto m = voronoi_measure(phi, std::vector<Vec2>{{0.25, 0.5}, {0.875, 0.5}});
  EXPECT_NEAR(m.weights[0], 0.5625, 1e-12);
  EXPECT_NEAR(m.weights[1], 0.4375, 1e-12);
}

TEST(Identity, SimpleVoronoiMeasures) {
  const auto phi = DensityField::uniform(ConvexPolygon::unit_square());
  EXPECT_NEAR(voronoi_measure(phi, std::vector<Vec2>{{0.3, 0.6}}).weights[0], 1.0, 1e-12);
  const auto two = voronoi_measure(phi, std::vector<Vec2>{{0.25, 0.5}, {0.75, 0.5}});
  EXPECT_NEAR(two.weights[0], 0.5, 1e-12);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::vector<Vec2> p(6);
  for (auto& q : p) q = {u(rng), u(rng)};
  double total = 0.0;
  for (double w : voronoi_measure(phi, p).weights) total += w;
  EXPECT_NEAR(total, 1.0, 1e-4);
}

TEST(Identity, ThreeRandomSitesAt64) {
  const auto phi = DensityField::uniform(ConvexPolygon::unit_square());
  const std::vector<Vec2> p{{0.21, 0.33}, {0.72, 0.18}, {0.55, 0.81}};
  EXPECT_LT(check_w2_identity(phi, p, 64).relative_gap, 0.02);
}

TEST(Identity, SingleAgentAt64) {
  const auto phi = DensityField::uniform(ConvexPolygon::unit_square());
  const auto chk = check_w2_identity(phi, std::vector<Vec2>{{0.5, 0.5}}, 64);
  EXPECT_LT(chk.relative_gap, 0.02);
  EXPECT_NEAR(chk.lhs, 1.0 / 6.0, 0.02 / 6.0);
}
