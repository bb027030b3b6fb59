#pragma once

// Scenario runner: validates a config, dispatches one pipeline and writes
// metrics.jsonl, final.csv, render_*.svg, manifest.json and pipeline extras.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "covkit/assign.hpp"
#include "covkit/coverage.hpp"
#include "covkit/poi.hpp"
#include "covkit/runner/config.hpp"
#include "covkit/runner/svg.hpp"
#include "covkit/submod.hpp"
#include "covkit/swarm.hpp"

namespace covkit::runner {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitInvalidConfig = 2, kExitNumerical = 3 };

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output;
};

/// Validation report as JSON: {"ok": bool, "errors": [{"field", "message"}]}.
inline json findings_json(const std::vector<Finding>& findings) {
  json errors = json::array();
  for (const auto& f : findings) errors.push_back({{"field", f.field}, {"message", f.message}});
  return {{"ok", findings.empty()}, {"errors", errors}};
}

inline json validate(const std::filesystem::path& config_path) { return findings_json(load_config(config_path).findings); }

namespace detail {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

class Artifacts {
 public:
  explicit Artifacts(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
    metrics_.open(dir_ / "metrics.jsonl", std::ios::binary | std::ios::trunc);
    if (!metrics_) fail(ErrorCode::Io, "cannot write " + (dir_ / "metrics.jsonl").string());
  }

  void metric(const json& record) { metrics_ << record.dump() << '\n' << std::flush; }

  void text(const std::string& name, const std::string& body) {
    std::ofstream f(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::Io, "cannot write " + (dir_ / name).string());
    f << body;
  }

  void svg(const std::string& name, const ConvexPolygon& workspace, const SvgScene& scene) {
    write_svg((dir_ / name).string(), workspace, scene);
  }

 private:
  std::filesystem::path dir_;
  std::ofstream metrics_;
};

inline std::vector<Vec2> initial_positions(const ScenarioConfig& cfg, const DensityField& phi) {
  const auto n = static_cast<std::size_t>(cfg.agents.count);
  if (cfg.agents.placement == "sample") return sample(phi, n, cfg.seed);
  if (cfg.agents.placement == "uniform") return sample(DensityField::uniform(cfg.workspace), n, cfg.seed);
  return cfg.agents.positions;
}

inline ServiceModel service_model(const ServiceSpec& s, int orientations) {
  ServiceModel m;
  if (s.type == "gaussian") m.kind = GaussianService{s.cov, squared_kernel()};
  else m.kind = IsotropicService{squared_kernel(), s.radius};
  m.orientations = even_orientations(orientations);
  return m;
}

inline void run_lloyd(const ScenarioConfig& cfg, const DensityField& phi, Artifacts& out) {
  const bool power = cfg.pipeline == "power_lloyd";
  const auto kind = power ? PartitionKind::Power : PartitionKind::Voronoi;
  const auto start = initial_positions(cfg, phi);
  auto agents = make_agents(start, cfg.agents.radii);
  const auto radii = radii_of(agents);

  const auto initial = build_partition(phi, agents, kind);
  out.svg("render_initial.svg", cfg.workspace,
          {&phi, initial.cells, start, power ? radii : std::vector<double>{}, {}, {}, cfg.pipeline + " initial"});

  const auto result = run_descent(phi, agents, kind, cfg.params.iters, cfg.params.tol, [&](const DescentFrame& f) {
    const auto [lo, hi] = std::minmax_element(f.masses.begin(), f.masses.end());
    out.metric({{"iter", f.iter}, {"cost", f.cost}, {"mass_min", *lo}, {"mass_max", *hi}});
  });

  const auto final_part = build_partition(phi, result.final_agents, kind);
  const double final_cost = coverage_cost(phi, result.final_agents, final_part, kernel_for(kind));
  out.metric({{"stage", "final"},
              {"iterations", static_cast<int>(result.frames.size())},
              {"converged", result.converged},
              {"final_displacement", result.final_displacement},
              {"cost", final_cost}});

  std::string csv = "id,x,y,radius,mass,centroid_x,centroid_y\n";
  for (std::size_t i = 0; i < result.final_agents.size(); ++i) {
    const auto& a = result.final_agents[i];
    const Vec2 c = final_part.centroids[i].value_or(a.position);
    csv += std::to_string(a.id) + "," + num(a.position.x) + "," + num(a.position.y) + "," + num(a.power_radius) + "," +
           num(final_part.masses[i]) + "," + num(c.x) + "," + num(c.y) + "\n";
  }
  out.text("final.csv", csv);
  out.svg("render_final.svg", cfg.workspace,
          {&phi, final_part.cells, positions_of(result.final_agents), power ? radii : std::vector<double>{}, {}, {},
           cfg.pipeline + " final"});
}

struct Extraction {
  std::vector<Vec2> pois;
  std::vector<Vec2> data;
  std::vector<int> labels;  // cluster of each datum, when the extractor clusters
  std::vector<GaussianComponent> components;
};

inline Extraction extract_pois(const ScenarioConfig& cfg, const DensityField& phi) {
  const auto& pp = cfg.params;
  Extraction ex;
  if (pp.extractor == "svgd") {
    SvgdOptions opt;
    if (pp.bandwidth == "footprint") opt.bandwidth = FootprintBandwidth{pp.bandwidth_radius};
    opt.step = pp.svgd_step;
    opt.iters = pp.svgd_iters;
    ex.pois = svgd(phi, static_cast<std::size_t>(pp.pois), opt, cfg.seed).pois.points;
    return ex;
  }
  ex.data = sample(phi, static_cast<std::size_t>(pp.n_samples), cfg.seed);
  if (pp.extractor == "kmeans") {
    auto km = kmeans(ex.data, pp.pois, cfg.seed);
    ex.pois = std::move(km.pois.points);
    ex.labels = std::move(km.labels);
  } else {
    auto gm = gmm_em(ex.data, pp.pois, cfg.seed);
    ex.pois = std::move(gm.pois.points);
    ex.components = std::move(gm.components);
    for (Vec2 x : ex.data) {
      int best = 0;
      double bl = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < ex.components.size(); ++j) {
        const double l = std::log(ex.components[j].weight) + covkit::detail::gaussian_log_pdf(x, ex.components[j]);
        if (l > bl) bl = l, best = static_cast<int>(j);
      }
      ex.labels.push_back(best);
    }
  }
  return ex;
}

inline void write_pois(const Extraction& ex, const std::string& extractor, Artifacts& out) {
  std::string csv = "poi,x,y,extractor\n";
  for (std::size_t j = 0; j < ex.pois.size(); ++j)
    csv += std::to_string(j) + "," + num(ex.pois[j].x) + "," + num(ex.pois[j].y) + "," + extractor + "\n";
  out.text("pois.csv", csv);
}

inline void write_assignment(const std::vector<int>& poi_of_agent, const std::vector<double>& theta, double cost,
                             const std::optional<double>& utility, const Extraction& ex, const std::vector<Vec2>& start,
                             const ScenarioConfig& cfg, const DensityField& phi, Artifacts& out) {
  json pairs = json::array();
  std::string csv = "agent,poi,x,y,theta\n";
  std::vector<std::pair<Vec2, Vec2>> links;
  for (std::size_t i = 0; i < poi_of_agent.size(); ++i) {
    const auto j = static_cast<std::size_t>(poi_of_agent[i]);
    pairs.push_back({static_cast<int>(i), static_cast<int>(j), theta[i]});
    csv += std::to_string(i) + "," + std::to_string(j) + "," + num(ex.pois[j].x) + "," + num(ex.pois[j].y) + "," +
           num(theta[i]) + "\n";
    links.emplace_back(start[i], ex.pois[j]);
  }
  json doc{{"pairs", pairs}, {"cost", cost}};
  if (utility) doc["utility"] = *utility;
  out.text("assignment.json", doc.dump(2) + "\n");
  out.text("final.csv", csv);
  out.svg("render_assignment.svg", cfg.workspace, {&phi, {}, start, {}, ex.pois, links, cfg.pipeline});
}

inline void run_poi_assign(const ScenarioConfig& cfg, const DensityField& phi, Artifacts& out) {
  const auto& pp = cfg.params;
  const auto start = initial_positions(cfg, phi);
  const auto ex = extract_pois(cfg, phi);
  write_pois(ex, pp.extractor, out);
  out.metric({{"stage", "extraction"}, {"extractor", pp.extractor}, {"pois", static_cast<int>(ex.pois.size())}});

  CostMatrix cm(static_cast<std::size_t>(cfg.agents.count), ex.pois.size());
  const auto thetas = even_orientations(pp.orientations);
  std::vector<std::vector<Vec2>> clusters(ex.pois.size());
  for (std::size_t k = 0; k < ex.labels.size(); ++k) clusters[static_cast<std::size_t>(ex.labels[k])].push_back(ex.data[k]);
  for (std::size_t i = 0; i < cm.agents(); ++i) {
    const auto& spec = cfg.agents.services[i];
    const auto model = service_model(spec, pp.orientations);
    for (std::size_t j = 0; j < cm.pois(); ++j) {
      OrientedCost c;
      if (pp.cost == "footprint") {
        c = footprint_cost(phi, model, ex.pois[j]);
      } else if (pp.cost == "kld") {
        c = kld_cost(std::get<GaussianService>(model.kind), thetas, ex.components[j]);
      } else {
        const auto& cl = clusters[j].empty() ? std::vector<Vec2>{ex.pois[j]} : clusters[j];
        c = ot_registration_cost(std::get<GaussianService>(model.kind), thetas, cl,
                                 static_cast<std::size_t>(pp.ot_samples), cfg.seed + j);
      }
      cm.cost(i, j) = c.cost;
      cm.theta_star(i, j) = c.theta;
    }
  }
  const auto sol = solve_assignment(cm);
  std::vector<double> theta;
  for (std::size_t i = 0; i < sol.poi_of_agent.size(); ++i)
    theta.push_back(cm.theta_star(i, static_cast<std::size_t>(sol.poi_of_agent[i])));
  out.metric({{"stage", "assignment"}, {"cost_model", pp.cost}, {"cost", sol.total_cost}});
  write_assignment(sol.poi_of_agent, theta, sol.total_cost, std::nullopt, ex, start, cfg, phi, out);
}

inline void run_submodular(const ScenarioConfig& cfg, const DensityField& phi, Artifacts& out) {
  const auto& pp = cfg.params;
  const auto start = initial_positions(cfg, phi);
  const auto ex = extract_pois(cfg, phi);
  write_pois(ex, pp.extractor, out);
  const auto data = sample(phi, static_cast<std::size_t>(pp.n_data), cfg.seed + 1);
  const double d_max = pp.d_max > 0.0 ? pp.d_max : 2.0 * cfg.workspace.diameter();
  const int n = cfg.agents.count, k = static_cast<int>(ex.pois.size());

  std::vector<int> poi_of_agent(static_cast<std::size_t>(n), -1);
  double utility = 0.0, loss = 0.0;
  if (pp.matroid == "partition") {
    // An agent with service radius r sees distances scaled by mean(r) / r.
    double mean_r = 0.0;
    for (const auto& s : cfg.agents.services) mean_r += s.radius / n;
    std::vector<double> scale;
    for (const auto& s : cfg.agents.services) scale.push_back(mean_r / s.radius);
    const PartitionGroundSet ground{n, k};
    const ExemplarUtility f(
        data, [&](int e, Vec2 d) { return distance(ex.pois[static_cast<std::size_t>(ground.poi_of(e))], d) * scale[static_cast<std::size_t>(ground.agent_of(e))]; },
        d_max);
    const auto res = greedy_partition(std::cref(f), ground, pp.block_order);
    for (std::size_t r = 0; r < res.greedy.trace.size(); ++r) {
      const auto& pick = res.greedy.trace[r];
      out.metric({{"round", static_cast<int>(r)}, {"agent", ground.agent_of(pick.element)},
                  {"poi", ground.poi_of(pick.element)}, {"gain", pick.gain}});
    }
    poi_of_agent = res.poi_of_agent;
    utility = res.greedy.value;
    loss = f.loss(res.greedy.selected);
  } else {
    const auto f = ExemplarUtility::euclidean(ex.pois, data, d_max);
    const auto res = greedy_uniform(std::cref(f), k, n);
    for (std::size_t r = 0; r < res.trace.size(); ++r)
      out.metric({{"round", static_cast<int>(r)}, {"poi", res.trace[r].element}, {"gain", res.trace[r].gain}});
    Matrix c(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < c.rows(); ++i)
      for (std::size_t s = 0; s < c.cols(); ++s)
        c(i, s) = distance2(start[i], ex.pois[static_cast<std::size_t>(res.selected[s])]);
    const auto lap = solve_lap(c);
    for (std::size_t i = 0; i < c.rows(); ++i)
      poi_of_agent[i] = res.selected[static_cast<std::size_t>(lap.row_to_col[i])];
    utility = res.value;
    loss = f.loss(res.selected);
  }
  out.metric({{"stage", "final"}, {"matroid", pp.matroid}, {"utility", utility}, {"loss", loss}});
  write_assignment(poi_of_agent, std::vector<double>(static_cast<std::size_t>(n), 0.0), loss, utility, ex, start, cfg,
                   phi, out);
}

inline void run_swarm(const ScenarioConfig& cfg, const DensityField& phi, Artifacts& out) {
  const auto& pp = cfg.params;
  SwarmOptions opt;
  opt.iters = pp.iters;
  opt.tau = pp.tau;
  opt.batch = static_cast<std::size_t>(pp.batch);
  opt.resolution = pp.resolution;
  opt.w2_resolution = pp.w2_resolution;
  opt.frame_every = pp.frame_every;
  opt.observer = [&](const SwarmRecord& r) {
    out.metric({{"iter", r.iter}, {"w2", r.w2}, {"objective", r.objective}, {"mean_displacement", r.mean_displacement}});
  };
  const auto n = static_cast<std::size_t>(cfg.agents.count);
  const auto run = run_reconfiguration(phi, n, opt, cfg.seed);

  const double dot = std::clamp(200.0 / std::sqrt(static_cast<double>(n)), 1.0, 4.0);
  for (const auto& [iter, pos] : run.frames) {
    char name[32];
    std::snprintf(name, sizeof name, "render_%04d.svg", iter);
    SvgScene scene{&phi, {}, pos, {}, {}, {}, "swarm iteration " + std::to_string(iter)};
    scene.agent_radius_px = dot;
    out.svg(name, cfg.workspace, scene);
  }

  const auto& p = run.final_state.positions;
  const auto edges = voronoi_graph(cfg.workspace, p);
  out.metric({{"stage", "final"},
              {"iterations", run.final_state.iteration},
              {"w2_initial", run.initial_w2},
              {"w2_final", run.final_w2},
              {"voronoi_edges", static_cast<int>(edges.size())}});

  std::string csv = "id,x,y\n";
  for (std::size_t i = 0; i < p.size(); ++i) csv += std::to_string(i) + "," + num(p[i].x) + "," + num(p[i].y) + "\n";
  out.text("final.csv", csv);

  constexpr int bins = 8;
  const auto target = discretize_grid(phi, bins, bins);
  const auto occupied = bin_to_lattice(p, target);
  std::string occ = "ix,iy,count,expected\n";
  for (int j = 0; j < bins; ++j)
    for (int i = 0; i < bins; ++i) {
      const auto k = static_cast<std::size_t>(j * bins + i);
      occ += std::to_string(i) + "," + std::to_string(j) + "," +
             std::to_string(static_cast<long long>(std::llround(occupied.weights[k] * static_cast<double>(n)))) + "," +
             num(target.weights[k] * static_cast<double>(n)) + "\n";
    }
  out.text("occupancy.csv", occ);
}

inline json manifest(const ScenarioConfig& cfg) {
  const auto& pp = cfg.params;
  json resolved{{"pipeline", cfg.pipeline},
                {"seed", cfg.seed},
                {"output", cfg.output.string()},
                {"density", {{"type", cfg.density.type}, {"path", cfg.density.path.string()}}},
                {"agents", {{"count", cfg.agents.count}, {"placement", cfg.agents.placement}}},
                {"params",
                 {{"iters", pp.iters},           {"tol", pp.tol},
                  {"extractor", pp.extractor},   {"pois", pp.pois},
                  {"n_samples", pp.n_samples},   {"bandwidth", pp.bandwidth},
                  {"bandwidth_radius", pp.bandwidth_radius}, {"svgd_step", pp.svgd_step},
                  {"svgd_iters", pp.svgd_iters}, {"cost", pp.cost},
                  {"orientations", pp.orientations}, {"ot_samples", pp.ot_samples},
                  {"matroid", pp.matroid},       {"block_order", pp.block_order},
                  {"n_data", pp.n_data},         {"d_max", pp.d_max},
                  {"tau", pp.tau},               {"batch", pp.batch},
                  {"resolution", pp.resolution}, {"w2_resolution", pp.w2_resolution},
                  {"frame_every", pp.frame_every}}}};
  json ws = json::array();
  for (Vec2 v : cfg.workspace.vertices()) ws.push_back({v.x, v.y});
  resolved["workspace"] = ws;
  return {{"config", cfg.source}, {"resolved", resolved}};
}

}  // namespace detail

/// Runs one scenario. Returns 0, 2 for an invalid config (nothing written), 3 for a numerical failure
/// (logs written so far are kept) or 1 for any other failure.
inline int run(const std::filesystem::path& config_path, const RunOverrides& overrides = {},
               std::ostream& err = std::cerr) {
  auto parsed = load_config(config_path);
  if (!parsed.ok()) {
    for (const auto& f : parsed.findings) err << "config error: " << (f.field.empty() ? "" : f.field + ": ") << f.message << "\n";
    return kExitInvalidConfig;
  }
  auto cfg = std::move(*parsed.config);
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.output) cfg.output = *overrides.output;

  std::optional<DensityField> phi;
  try {
    phi = build_density(cfg);
  } catch (const Error& e) {
    err << "config error: density: " << e.what() << "\n";
    return kExitInvalidConfig;
  }

  try {
    detail::Artifacts out(cfg.output);
    out.text("manifest.json", detail::manifest(cfg).dump(2) + "\n");
    if (cfg.pipeline == "lloyd" || cfg.pipeline == "power_lloyd") detail::run_lloyd(cfg, *phi, out);
    else if (cfg.pipeline == "poi_assign") detail::run_poi_assign(cfg, *phi, out);
    else if (cfg.pipeline == "submodular_assign") detail::run_submodular(cfg, *phi, out);
    else detail::run_swarm(cfg, *phi, out);
  } catch (const Error& e) {
    err << (e.is_numerical() ? "numerical failure: " : "error: ") << e.what() << "\n";
    return e.is_numerical() ? kExitNumerical : kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace covkit::runner
