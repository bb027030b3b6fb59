#pragma once

// Locational-optimization cost over Voronoi and power partitions, the
// discrete Lloyd map, and the equal-mass power-weight solver.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "covkit/density.hpp"
#include "covkit/error.hpp"
#include "covkit/geometry.hpp"
#include "covkit/log.hpp"

namespace covkit {

enum class PartitionKind { Voronoi, Power };

/// Distance penalty f: r^2, or the power distance r^2 - rho_i^2.
enum class CostKernel { Squared, Power };

struct AgentState {
  Vec2 position;
  double power_radius = 0.0;
  int id = 0;
};

struct Partition {
  PartitionKind kind = PartitionKind::Voronoi;
  std::vector<std::optional<ConvexPolygon>> cells;
  std::vector<double> masses;
  std::vector<std::optional<Vec2>> centroids;

  std::size_t size() const { return cells.size(); }
};

inline std::vector<Vec2> positions_of(std::span<const AgentState> agents) {
  std::vector<Vec2> p;
  p.reserve(agents.size());
  for (const auto& a : agents) p.push_back(a.position);
  return p;
}

inline std::vector<double> radii_of(std::span<const AgentState> agents) {
  std::vector<double> r;
  r.reserve(agents.size());
  for (const auto& a : agents) r.push_back(a.power_radius);
  return r;
}

inline std::vector<AgentState> make_agents(std::span<const Vec2> positions, std::span<const double> radii = {}) {
  std::vector<AgentState> agents;
  for (std::size_t i = 0; i < positions.size(); ++i)
    agents.push_back({positions[i], radii.empty() ? 0.0 : radii[i], static_cast<int>(i)});
  return agents;
}

inline Partition build_partition(const DensityField& phi, std::span<const AgentState> agents, PartitionKind kind) {
  const auto sites = positions_of(agents);
  Partition part;
  part.kind = kind;
  if (kind == PartitionKind::Voronoi) {
    for (auto& c : voronoi_cells(phi.workspace(), sites)) part.cells.emplace_back(std::move(c));
  } else {
    part.cells = power_cells(phi.workspace(), sites, radii_of(agents));
  }
  part.masses.resize(part.cells.size(), 0.0);
  part.centroids.resize(part.cells.size());
  for (std::size_t i = 0; i < part.cells.size(); ++i) {
    if (!part.cells[i]) continue;
    const auto cm = cell_mass_centroid(phi, *part.cells[i]);
    part.masses[i] = cm.mass;
    part.centroids[i] = cm.centroid;
  }
  return part;
}

/// Sum over cells of the integral of f(|q - p_i|) against phi.
inline double coverage_cost(const DensityField& phi, std::span<const AgentState> agents, const Partition& partition,
                            CostKernel kernel) {
  if (partition.size() != agents.size()) fail(ErrorCode::InvalidArgument, "partition/agent count mismatch");
  if (kernel == CostKernel::Power && partition.kind == PartitionKind::Voronoi) {
    for (const auto& a : agents)
      if (a.power_radius != agents.front().power_radius)
        fail(ErrorCode::KernelMismatch, "power kernel on a Voronoi partition of heterogeneous agents");
  }
  double h = 0.0;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (!partition.cells[i]) continue;
    const Vec2 p = agents[i].position;
    const double r2 = kernel == CostKernel::Power ? agents[i].power_radius * agents[i].power_radius : 0.0;
    h += integrate_density(phi, *partition.cells[i], [&](Vec2 q) { return distance2(q, p) - r2; });
  }
  return h;
}

/// dH_V/dp_i = 2 m_i (p_i - c_i) for f = r^2; zero for empty or massless cells.
inline std::vector<Vec2> coverage_gradient(std::span<const AgentState> agents, const Partition& partition) {
  std::vector<Vec2> g(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i)
    if (partition.centroids[i]) g[i] = (agents[i].position - *partition.centroids[i]) * (2.0 * partition.masses[i]);
  return g;
}

inline CostKernel kernel_for(PartitionKind kind) {
  return kind == PartitionKind::Voronoi ? CostKernel::Squared : CostKernel::Power;
}

struct LloydStep {
  std::vector<AgentState> agents;  // after the move
  Partition partition;             // of the positions before the move
  double cost = 0.0;               // before the move
};

/// One application of the Lloyd map: partition, then move every agent with mass to its centroid.
inline LloydStep lloyd_step(const DensityField& phi, std::span<const AgentState> agents, PartitionKind kind) {
  LloydStep out;
  out.partition = build_partition(phi, agents, kind);
  out.cost = coverage_cost(phi, agents, out.partition, kernel_for(kind));
  out.agents.assign(agents.begin(), agents.end());
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (!out.partition.cells[i]) {
      warn("agent " + std::to_string(agents[i].id) + " has an empty power cell; holding position");
      continue;
    }
    if (!out.partition.centroids[i]) continue;
    out.agents[i].position = phi.workspace().clamp(*out.partition.centroids[i]);
  }
  return out;
}

struct DescentFrame {
  int iter = 0;
  double cost = 0.0;
  std::vector<Vec2> positions;
  std::vector<double> masses;
};

struct DescentResult {
  std::vector<DescentFrame> frames;
  std::vector<AgentState> final_agents;
  double final_displacement = 0.0;
  bool converged = false;
};

namespace detail {

// Pushes apart generators the Lloyd map sent onto each other.
inline void separate_collisions(std::vector<AgentState>& agents, const ConvexPolygon& workspace) {
  const double shift = 1e-6 * workspace.diameter();
  for (std::size_t i = 0; i < agents.size(); ++i) {
    for (std::size_t j = i + 1; j < agents.size(); ++j) {
      if (distance(agents[i].position, agents[j].position) > kGeomEps) continue;
      const double angle = 2.399963229728653 * static_cast<double>(j);  // golden angle spread
      Vec2 moved = workspace.clamp(agents[j].position + rotate({shift, 0.0}, angle));
      if (distance(moved, agents[i].position) <= kGeomEps) moved = workspace.clamp(agents[j].position - rotate({shift, 0.0}, angle));
      agents[j].position = moved;
      warn("agents " + std::to_string(agents[i].id) + " and " + std::to_string(agents[j].id) +
           " collided; re-perturbed");
    }
  }
}

}  // namespace detail

using DescentObserver = std::function<void(const DescentFrame&)>;

/// Iterates the Lloyd map until the largest move is below tol or max_iters steps were taken.
/// Throws NonMonotoneDescent if the cost rises by more than 1e-6 relative.
inline DescentResult run_descent(const DensityField& phi, std::vector<AgentState> agents, PartitionKind kind,
                                 int max_iters, double tol, const DescentObserver& observer = {}) {
  if (max_iters < 1) fail(ErrorCode::InvalidArgument, "max_iters must be >= 1");
  if (!(tol > 0.0)) fail(ErrorCode::InvalidArgument, "tol must be positive");
  DescentResult out;
  for (int it = 0; it < max_iters; ++it) {
    auto step = lloyd_step(phi, agents, kind);
    if (!out.frames.empty()) {
      const double prev = out.frames.back().cost;
      if (step.cost > prev + 1e-6 * std::abs(prev))
        fail(ErrorCode::NonMonotoneDescent, "cost rose from " + std::to_string(prev) + " to " +
                                                std::to_string(step.cost) + " at iteration " + std::to_string(it));
    }
    out.frames.push_back({it, step.cost, positions_of(agents), step.partition.masses});
    if (observer) observer(out.frames.back());
    double moved = 0.0;
    for (std::size_t i = 0; i < agents.size(); ++i)
      moved = std::max(moved, distance(agents[i].position, step.agents[i].position));
    agents = std::move(step.agents);
    detail::separate_collisions(agents, phi.workspace());
    out.final_displacement = moved;
    if (moved < tol) {
      out.converged = true;
      break;
    }
  }
  out.final_agents = std::move(agents);
  return out;
}

struct EquitableResult {
  std::vector<double> radii;
  std::vector<double> masses;
  int iterations = 0;
};

/// Power radii giving every power cell mass 1/N within tol_mass.
///
/// Ascent on the concave semidiscrete-transport dual in the squared radii
/// w_i: w_i += eta (1/N - m_i), starting at eta = area(W)/2. A step that
/// does not reduce the squared mass residual is undone and eta halved.
/// Weights are shifted so min w = 0, which leaves the diagram unchanged.
inline EquitableResult equitable_weights(const DensityField& phi, std::span<const Vec2> positions, double tol_mass,
                                         int max_iters = 10000) {
  const std::size_t n = positions.size();
  if (n == 0) fail(ErrorCode::InvalidArgument, "at least one position is required");
  if (!(tol_mass > 0.0)) fail(ErrorCode::InvalidArgument, "tol_mass must be positive");
  const double target = 1.0 / static_cast<double>(n);
  std::vector<double> w(n, 0.0);

  auto masses_for = [&](const std::vector<double>& ws) {
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = std::sqrt(ws[i]);
    auto cells = power_cells(phi.workspace(), positions, r);
    std::vector<double> m(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      if (cells[i]) m[i] = cell_mass_centroid(phi, *cells[i]).mass;
    return m;
  };
  auto residual = [&](const std::vector<double>& m) {
    double s = 0.0, worst = 0.0;
    for (double mi : m) s += (mi - target) * (mi - target), worst = std::max(worst, std::abs(mi - target));
    return std::pair{s, worst};
  };

  double eta = 0.5 * phi.workspace().area();
  auto m = masses_for(w);
  auto [res, worst] = residual(m);
  for (int it = 0; it < max_iters; ++it) {
    if (worst <= tol_mass) {
      std::vector<double> r(n);
      for (std::size_t i = 0; i < n; ++i) r[i] = std::sqrt(w[i]);
      return {std::move(r), std::move(m), it};
    }
    std::vector<double> trial(n);
    for (std::size_t i = 0; i < n; ++i) trial[i] = w[i] + eta * (target - m[i]);
    const double lo = *std::min_element(trial.begin(), trial.end());
    for (double& t : trial) t -= lo;
    auto tm = masses_for(trial);
    auto [tres, tworst] = residual(tm);
    if (tres < res) {
      w = std::move(trial), m = std::move(tm), res = tres, worst = tworst;
      eta *= 1.25;
    } else {
      eta *= 0.5;
      if (eta < 1e-14) break;
    }
  }
  fail(ErrorCode::NoConvergence, "equitable weights did not reach the mass tolerance");
}

}  // namespace covkit
