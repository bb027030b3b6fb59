#pragma once

// Swarm reconfiguration toward a target density by repeated optimal-transport
// displacement steps, plus the Voronoi adjacency graph of a configuration.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "covkit/density.hpp"
#include "covkit/error.hpp"
#include "covkit/geometry.hpp"
#include "covkit/lap.hpp"
#include "covkit/transport.hpp"

namespace covkit {

struct SwarmState {
  std::vector<Vec2> positions;
  int iteration = 0;
  double w2_estimate = 0.0;
};

struct TransportStepResult {
  SwarmState state;
  double objective = 0.0;      // sum over moved agents of |p - T(p)|^2, before the move
  double mean_displacement = 0.0;  // over all agents
};

namespace detail {

// `count` atoms drawn from mu by systematic resampling with a seeded offset.
inline std::vector<Vec2> systematic_resample(const DiscreteMeasure& mu, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double u0 = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  std::vector<Vec2> out;
  out.reserve(count);
  double cum = 0.0;
  std::size_t k = 0;
  for (std::size_t s = 0; s < count; ++s) {
    const double u = (u0 + static_cast<double>(s)) / static_cast<double>(count);
    while (k + 1 < mu.size() && cum + mu.weights[k] < u) cum += mu.weights[k++];
    out.push_back(mu.points[k]);
  }
  return out;
}

inline bool is_uniform_measure(const DiscreteMeasure& m) {
  const double w = 1.0 / static_cast<double>(m.size());
  return std::all_of(m.weights.begin(), m.weights.end(), [&](double x) { return std::abs(x - w) < 1e-12; });
}

}  // namespace detail

/// Matches a batch of agents to an equally sized uniform sample of the target by
/// exact assignment and moves each batched agent to (1 - tau) p + tau T(p).
/// A uniform target whose support size equals the batch is used as is.
inline TransportStepResult transport_step(const SwarmState& state, const ConvexPolygon& workspace,
                                          const DiscreteMeasure& target, double tau, std::size_t batch,
                                          std::uint64_t seed) {
  const std::size_t n = state.positions.size();
  if (!(tau > 0.0 && tau <= 1.0)) fail(ErrorCode::InvalidArgument, "tau must lie in (0, 1]");
  if (batch < 1 || batch > n) fail(ErrorCode::InvalidArgument, "batch must lie in [1, N]");
  target.validate();

  std::vector<std::size_t> who(n);
  std::iota(who.begin(), who.end(), 0);
  std::mt19937_64 rng(seed);
  if (batch < n) {
    std::shuffle(who.begin(), who.end(), rng);
    who.resize(batch);
    std::sort(who.begin(), who.end());
  }
  const std::vector<Vec2> ys = (target.size() == batch && detail::is_uniform_measure(target))
                                   ? target.points
                                   : detail::systematic_resample(target, batch, rng());

  Matrix cost(batch, batch);
  for (std::size_t a = 0; a < batch; ++a)
    for (std::size_t b = 0; b < batch; ++b) cost(a, b) = distance2(state.positions[who[a]], ys[b]);
  const auto lap = solve_lap(cost);

  TransportStepResult out{state, lap.cost, 0.0};
  double moved = 0.0;
  for (std::size_t a = 0; a < batch; ++a) {
    Vec2& p = out.state.positions[who[a]];
    const Vec2 next = workspace.clamp(p * (1.0 - tau) + ys[static_cast<std::size_t>(lap.row_to_col[a])] * tau);
    moved += distance(p, next);
    p = next;
  }
  out.mean_displacement = moved / static_cast<double>(n);
  ++out.state.iteration;
  return out;
}

/// Agents binned onto the cells of a lattice, as a measure on that lattice.
inline GridMeasure bin_to_lattice(std::span<const Vec2> positions, const GridMeasure& lattice) {
  GridMeasure g = lattice;
  std::fill(g.weights.begin(), g.weights.end(), 0.0);
  const double w = 1.0 / static_cast<double>(positions.size());
  for (Vec2 p : positions) {
    const int i = std::clamp(static_cast<int>(std::floor((p.x - g.lo.x) / g.hx)), 0, g.nx - 1);
    const int j = std::clamp(static_cast<int>(std::floor((p.y - g.lo.y) / g.hy)), 0, g.ny - 1);
    g.weights[static_cast<std::size_t>(j * g.nx + i)] += w;
  }
  return g;
}

/// Agents deposited onto lattice nodes (cell centers) with bilinear weights,
/// so the measure moves continuously with sub-cell displacements.
inline GridMeasure deposit_on_lattice(std::span<const Vec2> positions, const GridMeasure& lattice) {
  GridMeasure g = lattice;
  std::fill(g.weights.begin(), g.weights.end(), 0.0);
  const double w = 1.0 / static_cast<double>(positions.size());
  for (Vec2 p : positions) {
    const double u = std::clamp((p.x - g.lo.x) / g.hx - 0.5, 0.0, g.nx - 1.0);
    const double v = std::clamp((p.y - g.lo.y) / g.hy - 0.5, 0.0, g.ny - 1.0);
    const int i0 = std::min(static_cast<int>(u), g.nx - 1), j0 = std::min(static_cast<int>(v), g.ny - 1);
    const int i1 = std::min(i0 + 1, g.nx - 1), j1 = std::min(j0 + 1, g.ny - 1);
    const double tu = u - i0, tv = v - j0;
    auto add = [&](int i, int j, double f) { g.weights[static_cast<std::size_t>(j * g.nx + i)] += w * f; };
    add(i0, j0, (1 - tu) * (1 - tv));
    add(i1, j0, tu * (1 - tv));
    add(i0, j1, (1 - tu) * tv);
    add(i1, j1, tu * tv);
  }
  return g;
}

struct SwarmRecord {
  int iter = 0;
  double w2 = 0.0;  // Sinkhorn estimate before the step
  double objective = 0.0;
  double mean_displacement = 0.0;
};

struct SwarmOptions {
  int iters = 50;
  double tau = 0.5;
  std::size_t batch = 0;      // 0 selects the full swarm
  int resolution = 0;         // target lattice per side; 0 selects about sqrt(N) cells
  int w2_resolution = 32;     // lattice per side for the W2 estimate, capped by the target lattice
  double epsilon = 0.0;       // Sinkhorn blur for the W2 estimate; 0 selects (2 h)^2 for its lattice spacing h
  int frame_every = 0;        // keep every k-th frame in the trajectory; 0 keeps none
  std::function<void(const SwarmRecord&)> observer;
};


struct SwarmRun {
  SwarmState final_state;
  std::vector<SwarmRecord> records;
  std::vector<std::pair<int, std::vector<Vec2>>> frames;
  double initial_w2 = 0.0;
  double final_w2 = 0.0;
  GridMeasure lattice;  // W2 estimation lattice
};

/// Uniform-random start, then transport steps toward a fixed N-atom sample of the discretized target.
inline SwarmRun run_reconfiguration(const DensityField& target, std::size_t n, const SwarmOptions& opt,
                                    std::uint64_t seed) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "swarm needs at least one agent");
  if (opt.iters < 0) fail(ErrorCode::InvalidArgument, "iters must be >= 0");
  const auto& w = target.workspace();
  const auto box = w.bounding_box();
  const std::size_t batch = opt.batch == 0 ? n : opt.batch;

  const int side = opt.resolution > 0 ? opt.resolution : std::max(2, static_cast<int>(std::lround(std::sqrt(static_cast<double>(n)))));
  const double aspect = box.height() / box.width();
  const int nx = aspect <= 1.0 ? side : std::max(2, static_cast<int>(std::lround(side / aspect)));
  const int ny = aspect <= 1.0 ? std::max(2, static_cast<int>(std::lround(side * aspect))) : side;

  SwarmRun run;
  const auto atoms = discretize(target, nx, ny);
  const double shrink = std::min(1.0, static_cast<double>(std::max(2, opt.w2_resolution)) / std::max(nx, ny));
  run.lattice = discretize_grid(target, std::max(2, static_cast<int>(std::lround(nx * shrink))),
                                std::max(2, static_cast<int>(std::lround(ny * shrink))));
  const auto sample_target = DiscreteMeasure::uniform(detail::systematic_resample(atoms, n, seed ^ 0x9e3779b97f4a7c15ULL));

  SinkhornOptions sk;
  sk.epsilon = opt.epsilon > 0.0 ? opt.epsilon : 4.0 * run.lattice.hx * run.lattice.hy;
  auto estimate = [&](const std::vector<Vec2>& p) {
    return wasserstein_sinkhorn_grid(deposit_on_lattice(p, run.lattice), run.lattice, sk);
  };

  SwarmState state{sample(DensityField::uniform(w), n, seed), 0, 0.0};
  state.w2_estimate = run.initial_w2 = estimate(state.positions);
  const double stop = 1e-4 * w.diameter();
  std::mt19937_64 step_seeds(seed + 1);
  for (int it = 0; it < opt.iters; ++it) {
    if (opt.frame_every > 0 && it % opt.frame_every == 0) run.frames.emplace_back(it, state.positions);
    const double w2 = state.w2_estimate;
    auto step = transport_step(state, w, sample_target, opt.tau, batch, step_seeds());
    state = std::move(step.state);
    state.w2_estimate = estimate(state.positions);
    run.records.push_back({it, w2, step.objective, step.mean_displacement});
    if (opt.observer) opt.observer(run.records.back());
    if (step.mean_displacement < stop) break;
  }
  if (opt.frame_every > 0) run.frames.emplace_back(state.iteration, state.positions);
  run.final_w2 = state.w2_estimate;
  run.final_state = std::move(state);
  return run;
}

/// Pairs (i, j), i < j, whose Voronoi cells share a boundary segment longer than 1e-9.
inline std::vector<std::pair<int, int>> voronoi_graph(const ConvexPolygon& workspace, std::span<const Vec2> positions) {
  const auto cells = voronoi_cells(workspace, positions);
  const std::size_t n = positions.size();
  std::vector<double> reach(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (Vec2 v : cells[i].vertices()) reach[i] = std::max(reach[i], distance(v, positions[i]));

  const double tol = kGeomEps * std::max(1.0, workspace.diameter());
  std::vector<std::pair<int, int>> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // Cells can only touch when both reach the bisector.
      const double half = 0.5 * distance(positions[i], positions[j]);
      if (half > reach[i] + tol || half > reach[j] + tol) continue;
      const Vec2 pi = positions[i], pj = positions[j];
      const auto h = HalfPlane::from(pj - pi, 0.5 * (norm2(pj) - norm2(pi)));
      std::vector<Vec2> on;
      for (Vec2 v : cells[i].vertices())
        if (std::abs(h.signed_distance(v)) <= tol) on.push_back(v);
      double len = 0.0;
      for (std::size_t a = 0; a < on.size(); ++a)
        for (std::size_t b = a + 1; b < on.size(); ++b) len = std::max(len, distance(on[a], on[b]));
      if (len > 1e-9) edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return edges;
}

}  // namespace covkit
