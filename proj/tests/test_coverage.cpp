#include <gtest/gtest.h>

#include <random>

#include "covkit/coverage.hpp"

using namespace covkit;

namespace {

DensityField bump() {
  return DensityField::gmm(ConvexPolygon::unit_square(), {{0.7, {0.3, 0.6}, Mat2::diag(0.02, 0.03)},
                                                          {0.3, {0.8, 0.25}, Mat2{0.01, -0.003, -0.003, 0.01}}});
}

std::vector<Vec2> random_positions(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::vector<Vec2> p(static_cast<std::size_t>(n));
  for (auto& q : p) q = {u(rng), u(rng)};
  return p;
}

double cost_at(const DensityField& phi, const std::vector<AgentState>& agents, PartitionKind kind) {
  return coverage_cost(phi, agents, build_partition(phi, agents, kind), kernel_for(kind));
}

}  // namespace

TEST(Cost, SingleAgentAtCenterOfSquare) {
  const auto phi = DensityField::uniform(ConvexPolygon::unit_square());
  const std::vector<Vec2> p{{0.5, 0.5}};
  EXPECT_NEAR(cost_at(phi, make_agents(p), PartitionKind::Voronoi), 1.0 / 6.0, 1e-12);
}

TEST(Cost, FourAgentsAtQuadrantCenters) {
  const auto phi = DensityField::uniform(ConvexPolygon::unit_square());
  const std::vector<Vec2> p{{0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}};
  EXPECT_NEAR(cost_at(phi, make_agents(p), PartitionKind::Voronoi), 1.0 / 24.0, 1e-12);
}

class GradientCheck : public ::testing::TestWithParam<PartitionKind> {};

TEST_P(GradientCheck, MatchesFiniteDifferences) {
  const auto phi = bump();
  const auto kind = GetParam();
  const auto pos = random_positions(6, 17);
  const std::vector<double> radii{0.05, 0.1, 0.0, 0.15, 0.08, 0.12};
  auto agents = make_agents(pos, kind == PartitionKind::Power ? radii : std::vector<double>{});
  const auto grad = coverage_gradient(agents, build_partition(phi, agents, kind));
  const double h = 1e-5;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    for (int axis = 0; axis < 2; ++axis) {
      auto plus = agents, minus = agents;
      (axis == 0 ? plus[i].position.x : plus[i].position.y) += h;
      (axis == 0 ? minus[i].position.x : minus[i].position.y) -= h;
      const double fd = (cost_at(phi, plus, kind) - cost_at(phi, minus, kind)) / (2 * h);
      EXPECT_NEAR(axis == 0 ? grad[i].x : grad[i].y, fd, 2e-4) << "agent " << i << " axis " << axis;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Kinds, GradientCheck, ::testing::Values(PartitionKind::Voronoi, PartitionKind::Power));

TEST(Cost, PowerKernelOnVoronoiOfMixedRadiiRejected) {
  const auto phi = DensityField::uniform(ConvexPolygon::unit_square());
  const auto agents = make_agents(std::vector<Vec2>{{0.2, 0.2}, {0.7, 0.7}}, std::vector<double>{0.1, 0.2});
  const auto part = build_partition(phi, agents, PartitionKind::Voronoi);
  try {
    coverage_cost(phi, agents, part, CostKernel::Power);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::KernelMismatch);
  }
}

TEST(Lloyd, StepMovesToCentroidsAndLowersCost) {
  const auto phi = bump();
  const auto agents = make_agents(random_positions(8, 4));
  const auto step = lloyd_step(phi, agents, PartitionKind::Voronoi);
  for (std::size_t i = 0; i < agents.size(); ++i) {
    EXPECT_NEAR(step.agents[i].position.x, step.partition.centroids[i]->x, 1e-12);
    EXPECT_NEAR(step.agents[i].position.y, step.partition.centroids[i]->y, 1e-12);
  }
  EXPECT_LT(cost_at(phi, step.agents, PartitionKind::Voronoi), step.cost);
}

TEST(Lloyd, DescentIsMonotoneAndConverges) {
  const auto phi = bump();
  int seen = 0;
  const auto res = run_descent(phi, make_agents(random_positions(10, 8)), PartitionKind::Voronoi, 300, 1e-6,
                               [&](const DescentFrame&) { ++seen; });
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(seen, static_cast<int>(res.frames.size()));
  for (std::size_t k = 1; k < res.frames.size(); ++k) EXPECT_LE(res.frames[k].cost, res.frames[k - 1].cost + 1e-12);
  const auto part = build_partition(phi, res.final_agents, PartitionKind::Voronoi);
  const auto g = coverage_gradient(res.final_agents, part);
  for (Vec2 v : g) EXPECT_LT(norm(v), 1e-4);
}

TEST(Lloyd, SymmetricStartOnSquareReachesQuadrants) {
  const auto phi = DensityField::uniform(ConvexPolygon::unit_square());
  const std::vector<Vec2> p{{0.4, 0.4}, {0.6, 0.4}, {0.4, 0.6}, {0.6, 0.6}};
  const auto res = run_descent(phi, make_agents(p), PartitionKind::Voronoi, 500, 1e-10);
  for (const auto& a : res.final_agents) {
    EXPECT_NEAR(std::abs(a.position.x - 0.5), 0.25, 1e-6);
    EXPECT_NEAR(std::abs(a.position.y - 0.5), 0.25, 1e-6);
  }
}

TEST(Equitable, MassesWithinTolerance) {
  const auto phi = bump();
  const auto pos = random_positions(7, 12);
  const auto eq = equitable_weights(phi, pos, 1e-4);
  ASSERT_EQ(eq.masses.size(), pos.size());
  for (double m : eq.masses) EXPECT_NEAR(m, 1.0 / 7.0, 1e-4);
  const auto part = build_partition(phi, make_agents(pos, eq.radii), PartitionKind::Power);
  for (double m : part.masses) EXPECT_NEAR(m, 1.0 / 7.0, 1e-4);
}

TEST(Cost, TwoAgentsAgainstRiemannSum) {
  const auto phi = DensityField::uniform(ConvexPolygon::unit_square());
  const std::vector<Vec2> p{{0.25, 0.5}, {0.75, 0.5}};
  const int g = 1000;
  double oracle = 0.0;
  for (int j = 0; j < g; ++j)
    for (int i = 0; i < g; ++i) {
      const Vec2 q{(i + 0.5) / g, (j + 0.5) / g};
      oracle += std::min(distance2(q, p[0]), distance2(q, p[1])) / (g * g);
    }
  EXPECT_NEAR(cost_at(phi, make_agents(p), PartitionKind::Voronoi), oracle, 1e-4);
  EXPECT_NEAR(oracle, 5.0 / 48.0, 1e-4);
}

TEST(Lloyd, FixedPointAndOneStepToCenter) {
  const auto phi = DensityField::uniform(ConvexPolygon::unit_square());
  const std::vector<Vec2> p{{0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}};
  const auto step = lloyd_step(phi, make_agents(p), PartitionKind::Voronoi);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(distance(step.agents[i].position, p[i]), 0.0, 1e-12);
  const auto res = run_descent(phi, make_agents(p), PartitionKind::Voronoi, 50, 1e-9);
  EXPECT_EQ(res.frames.size(), 1u);
  const auto one = lloyd_step(phi, make_agents(std::vector<Vec2>{{0.1, 0.8}}), PartitionKind::Voronoi);
  EXPECT_NEAR(distance(one.agents[0].position, {0.5, 0.5}), 0.0, 1e-12);
}

TEST(Lloyd, EqualRadiiPowerStepMatchesVoronoi) {
  const auto phi = bump();
  const auto pos = random_positions(7, 30);
  const auto v = lloyd_step(phi, make_agents(pos), PartitionKind::Voronoi);
  const auto p = lloyd_step(phi, make_agents(pos, std::vector<double>(7, 0.11)), PartitionKind::Power);
  for (std::size_t i = 0; i < pos.size(); ++i) EXPECT_NEAR(distance(v.agents[i].position, p.agents[i].position), 0.0, 1e-9);
}

TEST(Equitable, SymmetricAndAsymmetricPairs) {
  const auto phi = DensityField::uniform(ConvexPolygon::unit_square());
  const auto sym = equitable_weights(phi, std::vector<Vec2>{{0.3, 0.5}, {0.7, 0.5}}, 1e-6);
  EXPECT_NEAR(sym.radii[0], sym.radii[1], 1e-9);
  const std::vector<Vec2> asym{{0.2, 0.3}, {0.45, 0.6}};
  const auto eq = equitable_weights(phi, asym, 1e-5);
  const int g = 800;
  double share = 0.0;
  for (int j = 0; j < g; ++j)
    for (int i = 0; i < g; ++i) {
      const Vec2 q{(i + 0.5) / g, (j + 0.5) / g};
      const double d0 = distance2(q, asym[0]) - eq.radii[0] * eq.radii[0];
      const double d1 = distance2(q, asym[1]) - eq.radii[1] * eq.radii[1];
      share += d0 < d1 ? 1.0 / (g * g) : 0.0;
    }
  EXPECT_NEAR(share, 0.5, 2e-3);
}
