#pragma once

// Scenario configuration: JSON parsing and structural validation with
// field-level findings. Nothing here touches the density or runs a solver.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "covkit/density.hpp"
#include "covkit/geometry.hpp"
#include "covkit/pgm.hpp"

namespace covkit::runner {

using json = nlohmann::json;

struct Finding {
  std::string field;
  std::string message;
};

inline const std::vector<std::string>& pipeline_names() {
  static const std::vector<std::string> names{"lloyd", "power_lloyd", "poi_assign", "submodular_assign", "swarm"};
  return names;
}

struct DensitySpec {
  std::string type = "uniform";  // uniform | gmm | image | grid
  std::vector<GaussianComponent> components;
  std::filesystem::path path;
};

struct ServiceSpec {
  std::string type = "isotropic";  // isotropic | gaussian
  double radius = 0.1;
  Mat2 cov = Mat2::diag(0.01, 0.01);
};

struct AgentsSpec {
  int count = 0;
  std::string placement = "given";  // given | sample | uniform
  std::vector<Vec2> positions;
  std::vector<double> radii;
  std::vector<ServiceSpec> services;  // one per agent after parsing
};

struct PipelineParams {
  int iters = 100;
  double tol = 1e-5;
  // PoI extraction
  std::string extractor = "kmeans";  // kmeans | gmm | svgd
  int pois = 0;
  int n_samples = 500;
  std::string bandwidth = "median";  // median | footprint
  double bandwidth_radius = 0.1;
  double svgd_step = 0.0;
  int svgd_iters = 200;
  // assignment
  std::string cost = "footprint";  // footprint | kld | ot
  int orientations = 8;
  int ot_samples = 64;
  // submodular
  std::string matroid = "partition";  // uniform | partition
  std::vector<int> block_order;
  int n_data = 200;
  double d_max = 0.0;
  // swarm
  double tau = 0.5;
  int batch = 0;
  int resolution = 0;
  int w2_resolution = 32;
  int frame_every = 5;
};

struct ScenarioConfig {
  ConvexPolygon workspace = ConvexPolygon::unit_square();
  DensitySpec density;
  AgentsSpec agents;
  std::string pipeline;
  PipelineParams params;
  std::uint64_t seed = 0;
  std::filesystem::path output;
  json source;  // the document as read, for the manifest
};

struct ParseResult {
  std::optional<ScenarioConfig> config;
  std::vector<Finding> findings;

  bool ok() const { return findings.empty(); }
};

namespace detail {

class Reader {
 public:
  explicit Reader(std::vector<Finding>& out) : out_(out) {}

  void error(std::string field, std::string message) { out_.push_back({std::move(field), std::move(message)}); }

  std::optional<double> number(const json& j, const std::string& field) {
    if (!j.is_number()) return error(field, "must be a number"), std::nullopt;
    return j.get<double>();
  }

  std::optional<int> integer(const json& j, const std::string& field, int min) {
    if (!j.is_number_integer()) return error(field, "must be an integer"), std::nullopt;
    const auto v = j.get<long long>();
    if (v < min) return error(field, "must be >= " + std::to_string(min)), std::nullopt;
    return static_cast<int>(v);
  }

  std::optional<Vec2> point(const json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
      return error(field, "must be a pair [x, y]"), std::nullopt;
    return Vec2{j[0].get<double>(), j[1].get<double>()};
  }

  std::optional<Mat2> matrix(const json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 2) return error(field, "must be a 2x2 array"), std::nullopt;
    auto r0 = point(j[0], field + "[0]"), r1 = point(j[1], field + "[1]");
    if (!r0 || !r1) return std::nullopt;
    return Mat2{r0->x, r0->y, r1->x, r1->y};
  }

  std::optional<std::string> choice(const json& j, const std::string& field, const std::vector<std::string>& allowed) {
    if (j.is_string())
      for (const auto& a : allowed)
        if (j.get<std::string>() == a) return a;
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    error(field, "must be one of: " + list);
    return std::nullopt;
  }

  template <class T, class F>
  void optional_field(const json& obj, const std::string& prefix, const char* key, T& dst, F&& read) {
    if (!obj.contains(key)) return;
    if (auto v = read(obj.at(key), prefix + key)) dst = *v;
  }

 private:
  std::vector<Finding>& out_;
};

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline void parse_workspace(Reader& rd, const json& doc, ScenarioConfig& cfg) {
  if (!doc.contains("workspace")) return rd.error("workspace", "is required");
  const auto& w = doc["workspace"];
  try {
    if (w.contains("rectangle")) {
      const auto& r = w["rectangle"];
      if (!r.is_array() || r.size() != 2) return rd.error("workspace.rectangle", "must be [[x0, y0], [x1, y1]]");
      auto lo = rd.point(r[0], "workspace.rectangle[0]"), hi = rd.point(r[1], "workspace.rectangle[1]");
      if (lo && hi) cfg.workspace = ConvexPolygon::rectangle(*lo, *hi);
    } else if (w.contains("polygon")) {
      const auto& p = w["polygon"];
      if (!p.is_array()) return rd.error("workspace.polygon", "must be a list of [x, y] vertices");
      std::vector<Vec2> v;
      for (std::size_t k = 0; k < p.size(); ++k)
        if (auto q = rd.point(p[k], "workspace.polygon[" + std::to_string(k) + "]")) v.push_back(*q);
      if (v.size() == p.size()) cfg.workspace = ConvexPolygon::from_vertices(v);
    } else {
      rd.error("workspace", "needs a 'rectangle' or 'polygon' entry");
    }
  } catch (const Error& e) {
    rd.error("workspace", e.what());
  }
}

inline void parse_density(Reader& rd, const json& doc, const std::filesystem::path& base, ScenarioConfig& cfg) {
  if (!doc.contains("density")) return rd.error("density", "is required");
  const auto& d = doc["density"];
  if (!d.is_object() || !d.contains("type")) return rd.error("density.type", "is required");
  auto type = rd.choice(d["type"], "density.type", {"uniform", "gmm", "image", "grid"});
  if (!type) return;
  cfg.density.type = *type;
  if (*type == "gmm") {
    if (!d.contains("components") || !d["components"].is_array() || d["components"].empty())
      return rd.error("density.components", "must be a non-empty list");
    double total = 0.0;
    for (std::size_t k = 0; k < d["components"].size(); ++k) {
      const auto& c = d["components"][k];
      const std::string f = "density.components[" + std::to_string(k) + "].";
      GaussianComponent g;
      if (!c.contains("weight") || !c.contains("mean") || !c.contains("cov")) {
        rd.error(f.substr(0, f.size() - 1), "needs weight, mean and cov");
        continue;
      }
      if (auto w = rd.number(c["weight"], f + "weight")) g.weight = *w;
      if (auto m = rd.point(c["mean"], f + "mean")) g.mean = *m;
      if (auto s = rd.matrix(c["cov"], f + "cov")) {
        if (!s->is_spd()) rd.error(f + "cov", "must be symmetric positive definite");
        g.cov = *s;
      }
      total += g.weight;
      cfg.density.components.push_back(g);
    }
    if (std::abs(total - 1.0) > 1e-9) rd.error("density.components", "weights must sum to 1");
  } else if (*type == "image" || *type == "grid") {
    if (!d.contains("path") || !d["path"].is_string()) return rd.error("density.path", "is required");
    cfg.density.path = resolve(base, d["path"].get<std::string>());
    if (!std::filesystem::exists(cfg.density.path))
      rd.error("density.path", "file not found: " + cfg.density.path.string());
  }
}

inline void parse_service(Reader& rd, const json& s, const std::string& field, ServiceSpec& out) {
  if (!s.is_object()) return rd.error(field, "must be an object");
  if (s.contains("type"))
    if (auto t = rd.choice(s["type"], field + ".type", {"isotropic", "gaussian"})) out.type = *t;
  rd.optional_field(s, field + ".", "radius", out.radius, [&](const json& j, const std::string& f) { return rd.number(j, f); });
  if (!(out.radius > 0.0)) rd.error(field + ".radius", "must be positive");
  if (s.contains("cov"))
    if (auto m = rd.matrix(s["cov"], field + ".cov")) {
      if (!m->is_spd()) rd.error(field + ".cov", "must be symmetric positive definite");
      out.cov = *m;
    }
}

inline void parse_agents(Reader& rd, const json& doc, ScenarioConfig& cfg) {
  if (!doc.contains("agents")) return rd.error("agents", "is required");
  const auto& a = doc["agents"];
  if (!a.contains("count")) return rd.error("agents.count", "is required");
  auto n = rd.integer(a["count"], "agents.count", 1);
  if (!n) return;
  auto& ag = cfg.agents;
  ag.count = *n;
  if (!a.contains("positions")) {
    ag.placement = "uniform";
  } else if (a["positions"].is_string()) {
    if (auto p = rd.choice(a["positions"], "agents.positions", {"sample", "uniform"})) ag.placement = *p;
  } else if (a["positions"].is_array()) {
    const auto& p = a["positions"];
    if (p.size() != static_cast<std::size_t>(ag.count))
      rd.error("agents.positions", "has " + std::to_string(p.size()) + " entries but agents.count is " + std::to_string(ag.count));
    for (std::size_t k = 0; k < p.size(); ++k) {
      const std::string f = "agents.positions[" + std::to_string(k) + "]";
      if (auto q = rd.point(p[k], f)) {
        if (!cfg.workspace.contains(*q)) rd.error(f, "lies outside the workspace");
        for (std::size_t m = 0; m < ag.positions.size(); ++m)
          if (distance(ag.positions[m], *q) <= kGeomEps)
            rd.error(f, "duplicates agents.positions[" + std::to_string(m) + "]");
        ag.positions.push_back(*q);
      }
    }
  } else {
    rd.error("agents.positions", "must be a list of points, \"sample\" or \"uniform\"");
  }
  if (a.contains("radii")) {
    const auto& r = a["radii"];
    if (!r.is_array()) {
      rd.error("agents.radii", "must be a list of numbers");
    } else {
      if (r.size() != static_cast<std::size_t>(ag.count))
        rd.error("agents.radii", "has " + std::to_string(r.size()) + " entries but agents.count is " + std::to_string(ag.count));
      for (std::size_t k = 0; k < r.size(); ++k)
        if (auto v = rd.number(r[k], "agents.radii[" + std::to_string(k) + "]")) {
          if (*v < 0.0) rd.error("agents.radii[" + std::to_string(k) + "]", "must be >= 0");
          ag.radii.push_back(*v);
        }
    }
  }
  ag.services.assign(static_cast<std::size_t>(ag.count), ServiceSpec{});
  if (a.contains("service")) {
    const auto& s = a["service"];
    if (s.is_array()) {
      if (s.size() != static_cast<std::size_t>(ag.count))
        rd.error("agents.service", "has " + std::to_string(s.size()) + " entries but agents.count is " + std::to_string(ag.count));
      for (std::size_t k = 0; k < std::min(s.size(), ag.services.size()); ++k)
        parse_service(rd, s[k], "agents.service[" + std::to_string(k) + "]", ag.services[k]);
    } else {
      ServiceSpec one;
      parse_service(rd, s, "agents.service", one);
      ag.services.assign(ag.services.size(), one);
    }
  }
}

inline void parse_params(Reader& rd, const json& doc, ScenarioConfig& cfg) {
  const json empty = json::object();
  const auto& p = doc.contains("params") ? doc["params"] : empty;
  if (!p.is_object()) return rd.error("params", "must be an object");
  auto& pp = cfg.params;
  const std::string f = "params.";
  auto num = [&](const json& j, const std::string& field) { return rd.number(j, field); };
  auto int0 = [&](const json& j, const std::string& field) { return rd.integer(j, field, 0); };
  auto int1 = [&](const json& j, const std::string& field) { return rd.integer(j, field, 1); };
  auto pick = [&](std::vector<std::string> allowed) {
    return [&rd, allowed](const json& j, const std::string& field) { return rd.choice(j, field, allowed); };
  };
  rd.optional_field(p, f, "iters", pp.iters, int1);
  rd.optional_field(p, f, "tol", pp.tol, num);
  rd.optional_field(p, f, "extractor", pp.extractor, pick({"kmeans", "gmm", "svgd"}));
  rd.optional_field(p, f, "pois", pp.pois, int1);
  rd.optional_field(p, f, "n_samples", pp.n_samples, int1);
  rd.optional_field(p, f, "bandwidth", pp.bandwidth, pick({"median", "footprint"}));
  rd.optional_field(p, f, "bandwidth_radius", pp.bandwidth_radius, num);
  rd.optional_field(p, f, "svgd_step", pp.svgd_step, num);
  rd.optional_field(p, f, "svgd_iters", pp.svgd_iters, int1);
  rd.optional_field(p, f, "cost", pp.cost, pick({"footprint", "kld", "ot"}));
  rd.optional_field(p, f, "orientations", pp.orientations, int1);
  rd.optional_field(p, f, "ot_samples", pp.ot_samples, int1);
  rd.optional_field(p, f, "matroid", pp.matroid, pick({"uniform", "partition"}));
  rd.optional_field(p, f, "n_data", pp.n_data, int1);
  rd.optional_field(p, f, "d_max", pp.d_max, num);
  rd.optional_field(p, f, "tau", pp.tau, num);
  rd.optional_field(p, f, "batch", pp.batch, int0);
  rd.optional_field(p, f, "resolution", pp.resolution, int0);
  rd.optional_field(p, f, "w2_resolution", pp.w2_resolution, int1);
  rd.optional_field(p, f, "frame_every", pp.frame_every, int0);
  if (p.contains("block_order")) {
    const auto& b = p["block_order"];
    if (!b.is_array()) rd.error("params.block_order", "must be a list of agent indices");
    else
      for (std::size_t k = 0; k < b.size(); ++k)
        if (auto v = rd.integer(b[k], "params.block_order[" + std::to_string(k) + "]", 0)) pp.block_order.push_back(*v);
  }
  if (!(pp.tol > 0.0)) rd.error("params.tol", "must be positive");
  if (!(pp.tau > 0.0 && pp.tau <= 1.0)) rd.error("params.tau", "must lie in (0, 1]");
  if (!(pp.bandwidth_radius > 0.0)) rd.error("params.bandwidth_radius", "must be positive");
  if (pp.d_max < 0.0) rd.error("params.d_max", "must be >= 0 (0 selects 2 diam(W))");
}

// Cross-field checks for the chosen pipeline.
inline void check_pipeline(Reader& rd, const json& doc, ScenarioConfig& cfg) {
  const auto& pl = cfg.pipeline;
  const auto& ag = cfg.agents;
  const auto& pp = cfg.params;
  const json empty = json::object();
  const auto& p = doc.contains("params") ? doc["params"] : empty;
  if (ag.placement == "given" && ag.positions.empty() && ag.count > 0 && pl != "swarm")
    rd.error("agents.positions", "is required");
  if (pl == "power_lloyd" && ag.radii.empty()) rd.error("agents.radii", "is required for power_lloyd");
  if (pl == "poi_assign" || pl == "submodular_assign") {
    if (!p.contains("pois")) {
      rd.error("params.pois", "is required for " + pl);
    } else if (pl == "poi_assign" && ag.count > pp.pois) {
      rd.error("params.pois", "infeasible assignment shape: " + std::to_string(ag.count) + " agents but " +
                                  std::to_string(pp.pois) + " PoIs");
    } else if (pl == "submodular_assign" && pp.matroid == "uniform" && ag.count > pp.pois) {
      rd.error("params.pois", "infeasible assignment shape: " + std::to_string(ag.count) + " agents but " +
                                  std::to_string(pp.pois) + " PoIs");
    }
  }
  if (pl == "poi_assign" && (pp.cost == "kld" || pp.cost == "ot")) {
    for (std::size_t k = 0; k < ag.services.size(); ++k)
      if (ag.services[k].type != "gaussian")
        rd.error("agents.service[" + std::to_string(k) + "].type", pp.cost + " cost requires gaussian services");
    if (pp.cost == "kld" && pp.extractor != "gmm") rd.error("params.extractor", "kld cost requires the gmm extractor");
    if (pp.cost == "ot" && pp.extractor == "svgd") rd.error("params.extractor", "ot cost requires clustered data (kmeans or gmm)");
  }
  if (pl == "submodular_assign" && pp.matroid == "partition" && !pp.block_order.empty()) {
    auto sorted = pp.block_order;
    std::sort(sorted.begin(), sorted.end());
    bool perm = sorted.size() == static_cast<std::size_t>(ag.count);
    for (std::size_t k = 0; perm && k < sorted.size(); ++k) perm = sorted[k] == static_cast<int>(k);
    if (!perm) rd.error("params.block_order", "must be a permutation of 0..N-1");
  }
  if (pl == "swarm" && pp.batch > ag.count) rd.error("params.batch", "must not exceed agents.count");
}

}  // namespace detail

/// Parses and validates a config document. `base` resolves relative file paths.
inline ParseResult parse_config(const json& doc, const std::filesystem::path& base) {
  ParseResult out;
  detail::Reader rd(out.findings);
  if (!doc.is_object()) {
    rd.error("", "config must be a JSON object");
    return out;
  }
  ScenarioConfig cfg;
  cfg.source = doc;
  if (!doc.contains("pipeline")) rd.error("pipeline", "is required");
  else if (auto p = rd.choice(doc["pipeline"], "pipeline", pipeline_names())) cfg.pipeline = *p;
  detail::parse_workspace(rd, doc, cfg);
  detail::parse_density(rd, doc, base, cfg);
  detail::parse_agents(rd, doc, cfg);
  detail::parse_params(rd, doc, cfg);
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<long long>() >= 0))
      rd.error("seed", "must be a nonnegative integer");
    else
      cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("output")) {
    if (!doc["output"].is_string()) rd.error("output", "must be a path string");
    else cfg.output = detail::resolve(base, doc["output"].get<std::string>());
  } else {
    cfg.output = base / "out";
  }
  if (!cfg.pipeline.empty()) detail::check_pipeline(rd, doc, cfg);
  if (out.findings.empty()) out.config = std::move(cfg);
  return out;
}

/// Reads and parses a config file.
inline ParseResult load_config(const std::filesystem::path& path) {
  ParseResult out;
  std::ifstream in(path);
  if (!in) {
    out.findings.push_back({"", "cannot open config file " + path.string()});
    return out;
  }
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    out.findings.push_back({"", std::string("malformed JSON: ") + e.what()});
    return out;
  }
  return parse_config(doc, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

/// Text grid file: a header line "nx ny", then ny rows of nx values, top row first.
inline DensityField read_grid_density(const ConvexPolygon& workspace, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open grid file " + path.string());
  int nx = 0, ny = 0;
  if (!(in >> nx >> ny) || nx < 1 || ny < 1) fail(ErrorCode::Io, "grid file needs an 'nx ny' header");
  std::vector<double> values(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
  for (int r = 0; r < ny; ++r)
    for (int c = 0; c < nx; ++c)
      if (!(in >> values[static_cast<std::size_t>((ny - 1 - r) * nx + c)]))
        fail(ErrorCode::Io, "grid file ended early: " + path.string());
  const auto box = workspace.bounding_box();
  return DensityField::grid(workspace, nx, ny, std::move(values), box.lo, box.hi);
}

inline DensityField build_density(const ScenarioConfig& cfg) {
  const auto& d = cfg.density;
  if (d.type == "gmm") return DensityField::gmm(cfg.workspace, d.components);
  if (d.type == "image") return DensityField::image(cfg.workspace, read_pgm(d.path.string()));
  if (d.type == "grid") return read_grid_density(cfg.workspace, d.path);
  return DensityField::uniform(cfg.workspace);
}

}  // namespace covkit::runner
