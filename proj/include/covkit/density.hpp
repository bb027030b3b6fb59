#pragma once

// The area priority function phi over a convex workspace: evaluation,
// log-gradient, cell masses and centroids, sampling and discretization.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "covkit/error.hpp"
#include "covkit/geometry.hpp"
#include "covkit/pgm.hpp"
#include "covkit/quadrature.hpp"

namespace covkit {

struct GaussianComponent {
  double weight = 1.0;
  Vec2 mean;
  Mat2 cov = Mat2::identity();
};

/// Finitely supported probability measure.
struct DiscreteMeasure {
  std::vector<Vec2> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }

  static DiscreteMeasure uniform(std::vector<Vec2> pts) {
    const double w = 1.0 / static_cast<double>(pts.size());
    std::vector<double> ws(pts.size(), w);
    return {std::move(pts), std::move(ws)};
  }

  void validate() const {
    if (points.size() != weights.size()) fail(ErrorCode::InvalidArgument, "measure points/weights size mismatch");
    if (points.empty()) fail(ErrorCode::InvalidArgument, "measure must be non-empty");
    double s = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) fail(ErrorCode::InvalidArgument, "measure weights must be nonnegative");
      s += w;
    }
    if (std::abs(s - 1.0) > 1e-9) fail(ErrorCode::InvalidArgument, "measure weights must sum to 1");
  }
};

/// Weights on a regular nx-by-ny lattice of cell centers (row-major from the bottom-left cell).
struct GridMeasure {
  int nx = 0, ny = 0;
  Vec2 lo;
  double hx = 0.0, hy = 0.0;
  std::vector<double> weights;

  Vec2 center(int i, int j) const { return {lo.x + (i + 0.5) * hx, lo.y + (j + 0.5) * hy}; }

  /// Atoms with positive weight only.
  DiscreteMeasure to_discrete() const {
    DiscreteMeasure m;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        if (double w = weights[static_cast<std::size_t>(j * nx + i)]; w > 0.0) {
          m.points.push_back(center(i, j));
          m.weights.push_back(w);
        }
    return m;
  }
};

struct CellMass {
  double mass = 0.0;
  std::optional<Vec2> centroid;  // absent when mass < 1e-12
};

class DensityField {
 public:
  struct Uniform {};
  struct Grid {
    int nx = 0, ny = 0;
    Vec2 lo, hi;
    std::vector<double> values;  // row-major, row 0 at y = lo.y
  };
  struct Gmm {
    std::vector<GaussianComponent> components;
    std::vector<Mat2> precisions;
    std::vector<double> norms;  // weight / (2 pi sqrt(det))
  };

  static DensityField uniform(ConvexPolygon workspace) {
    DensityField f(std::move(workspace), Uniform{});
    f.normalizer_ = f.workspace_.area();
    f.max_value_ = 1.0 / f.normalizer_;
    return f;
  }

  static DensityField gmm(ConvexPolygon workspace, std::vector<GaussianComponent> components) {
    if (components.empty()) fail(ErrorCode::InvalidArgument, "GMM needs at least one component");
    double total = 0.0;
    Gmm g;
    for (const auto& c : components) {
      if (!(c.weight >= 0.0)) fail(ErrorCode::InvalidArgument, "GMM weights must be nonnegative");
      if (!c.cov.is_spd()) fail(ErrorCode::InvalidArgument, "GMM covariance must be symmetric positive definite");
      total += c.weight;
      g.precisions.push_back(c.cov.inverse());
      g.norms.push_back(c.weight / (2.0 * M_PI * std::sqrt(c.cov.det())));
    }
    if (std::abs(total - 1.0) > 1e-9) fail(ErrorCode::InvalidArgument, "GMM weights must sum to 1");
    g.components = std::move(components);
    DensityField f(std::move(workspace), std::move(g));
    f.normalize(6);
    double mx = 0.0;
    for (const auto& c : f.gmm_components()) mx = std::max(mx, f.eval(f.workspace_.clamp(c.mean)));
    f.max_value_ = mx;
    return f;
  }

  /// Bilinear interpolation of cell-center values over [lo, hi]; values row 0 at the bottom.
  static DensityField grid(ConvexPolygon workspace, int nx, int ny, std::vector<double> values, Vec2 lo, Vec2 hi) {
    if (nx < 1 || ny < 1 || values.size() != static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny))
      fail(ErrorCode::InvalidArgument, "grid dimensions do not match value count");
    if (!(hi.x > lo.x && hi.y > lo.y)) fail(ErrorCode::InvalidArgument, "grid bounding box is empty");
    double mx = 0.0;
    for (double v : values) {
      if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorCode::InvalidArgument, "grid values must be finite and >= 0");
      mx = std::max(mx, v);
    }
    if (!(mx > 0.0)) fail(ErrorCode::InvalidArgument, "grid density is identically zero");
    DensityField f(std::move(workspace), Grid{nx, ny, lo, hi, std::move(values)});
    f.normalize(f.quadrature_levels(f.workspace_));
    f.max_value_ = mx / f.normalizer_;
    return f;
  }

  /// Pixel intensity as unnormalized density; image row 0 is the top of the workspace bounding box.
  static DensityField image(ConvexPolygon workspace, const GrayImage& img) {
    std::vector<double> values(img.pixels.size());
    for (int r = 0; r < img.height; ++r)
      for (int c = 0; c < img.width; ++c)
        values[static_cast<std::size_t>((img.height - 1 - r) * img.width + c)] = img.at(c, r);
    const auto box = workspace.bounding_box();
    auto f = grid(std::move(workspace), img.width, img.height, std::move(values), box.lo, box.hi);
    f.from_image_ = true;
    return f;
  }

  const ConvexPolygon& workspace() const { return workspace_; }
  bool is_uniform() const { return std::holds_alternative<Uniform>(backing_); }
  bool is_gmm() const { return std::holds_alternative<Gmm>(backing_); }
  bool is_grid() const { return std::holds_alternative<Grid>(backing_); }
  bool is_image() const { return from_image_; }
  const std::vector<GaussianComponent>& gmm_components() const { return std::get<Gmm>(backing_).components; }
  const Grid& grid_backing() const { return std::get<Grid>(backing_); }

  /// Approximate supremum of phi over the workspace.
  double max_value() const { return max_value_; }

  int quadrature_levels() const { return quadrature_levels_; }

  /// Refinement used for integrals over a cell: grid-backed fields refine until
  /// sub-triangles are no larger than half a grid cell.
  int quadrature_levels(const ConvexPolygon& cell) const {
    const auto* g = std::get_if<Grid>(&backing_);
    if (!g) return quadrature_levels_;
    const auto box = cell.bounding_box();
    const double half = 0.5 * std::min((g->hi.x - g->lo.x) / g->nx, (g->hi.y - g->lo.y) / g->ny);
    int levels = quadrature_levels_;
    while (levels < 10 && std::max(box.width(), box.height()) / (1 << levels) > half) ++levels;
    return levels;
  }
  void set_quadrature_levels(int levels) { quadrature_levels_ = std::clamp(levels, 0, 10); }

  double eval(Vec2 q) const { return raw(q) / normalizer_; }

  /// grad(phi) / phi; analytic for Uniform and GMM, central differences of width one cell for grids.
  Vec2 grad_log(Vec2 q) const {
    return std::visit(
        [&](const auto& b) -> Vec2 {
          using B = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<B, Uniform>) {
            if (!workspace_.contains(q, 1e-9)) fail(ErrorCode::EvalOutsideSupport, "grad_log outside workspace");
            return {0.0, 0.0};
          } else if constexpr (std::is_same_v<B, Gmm>) {
            double s = 0.0;
            Vec2 g;
            for (std::size_t j = 0; j < b.components.size(); ++j) {
              const Vec2 d = q - b.components[j].mean;
              const Vec2 pd = b.precisions[j] * d;
              const double v = b.norms[j] * std::exp(-0.5 * dot(d, pd));
              s += v;
              g -= pd * v;
            }
            if (s < 1e-300) fail(ErrorCode::EvalOutsideSupport, "phi vanishes where grad_log was requested");
            return g / s;
          } else {
            const double v = bilinear(b, q);
            if (v / normalizer_ < 1e-300) fail(ErrorCode::EvalOutsideSupport, "phi vanishes where grad_log was requested");
            const double hx = (b.hi.x - b.lo.x) / b.nx, hy = (b.hi.y - b.lo.y) / b.ny;
            const double gx = (bilinear(b, {q.x + hx, q.y}) - bilinear(b, {q.x - hx, q.y})) / (2.0 * hx);
            const double gy = (bilinear(b, {q.x, q.y + hy}) - bilinear(b, {q.x, q.y - hy})) / (2.0 * hy);
            return Vec2{gx, gy} / v;
          }
        },
        backing_);
  }

 private:
  template <class B>
  DensityField(ConvexPolygon w, B backing) : workspace_(std::move(w)), backing_(std::move(backing)) {}

  // Unnormalized density.
  double raw(Vec2 q) const {
    return std::visit(
        [&](const auto& b) -> double {
          using B = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<B, Uniform>) {
            return workspace_.contains(q, 1e-9) ? 1.0 : 0.0;
          } else if constexpr (std::is_same_v<B, Gmm>) {
            double s = 0.0;
            for (std::size_t j = 0; j < b.components.size(); ++j) {
              const Vec2 d = q - b.components[j].mean;
              s += b.norms[j] * std::exp(-0.5 * dot(d, b.precisions[j] * d));
            }
            return s;
          } else {
            if (q.x < b.lo.x || q.x > b.hi.x || q.y < b.lo.y || q.y > b.hi.y) return 0.0;
            return bilinear(b, q);
          }
        },
        backing_);
  }

  // Clamped bilinear interpolation through cell-center values.
  static double bilinear(const Grid& g, Vec2 q) {
    const double hx = (g.hi.x - g.lo.x) / g.nx, hy = (g.hi.y - g.lo.y) / g.ny;
    const double u = std::clamp((q.x - g.lo.x) / hx - 0.5, 0.0, g.nx - 1.0);
    const double v = std::clamp((q.y - g.lo.y) / hy - 0.5, 0.0, g.ny - 1.0);
    const int i0 = std::min(static_cast<int>(u), g.nx - 1), j0 = std::min(static_cast<int>(v), g.ny - 1);
    const int i1 = std::min(i0 + 1, g.nx - 1), j1 = std::min(j0 + 1, g.ny - 1);
    const double tu = u - i0, tv = v - j0;
    auto at = [&](int i, int j) { return g.values[static_cast<std::size_t>(j * g.nx + i)]; };
    return (1 - tv) * ((1 - tu) * at(i0, j0) + tu * at(i1, j0)) + tv * ((1 - tu) * at(i0, j1) + tu * at(i1, j1));
  }

  void normalize(int levels) {
    normalizer_ = 1.0;
    normalizer_ = integrate_polygon(workspace_, [&](Vec2 q) { return raw(q); }, levels);
    if (!(normalizer_ > 0.0)) fail(ErrorCode::InvalidArgument, "density has no mass inside the workspace");
  }

  ConvexPolygon workspace_;
  std::variant<Uniform, Grid, Gmm> backing_;
  double normalizer_ = 1.0;
  double max_value_ = 0.0;
  int quadrature_levels_ = kDefaultQuadratureLevels;
  bool from_image_ = false;
};

/// Integral of g(q) phi(q) over the cell at the field's quadrature level.
template <class G>
double integrate_density(const DensityField& phi, const ConvexPolygon& cell, G&& g) {
  double s = 0.0;
  for_each_polygon_node(cell, phi.quadrature_levels(cell), [&](Vec2 q, double w) { s += w * phi.eval(q) * g(q); });
  return s;
}

inline CellMass cell_mass_centroid(const DensityField& phi, const ConvexPolygon& cell) {
  double m = 0.0;
  Vec2 first;
  for_each_polygon_node(cell, phi.quadrature_levels(cell), [&](Vec2 q, double w) {
    const double v = w * phi.eval(q);
    m += v;
    first += q * v;
  });
  CellMass out{m, std::nullopt};
  if (m >= 1e-12) out.centroid = first / m;
  return out;
}

/// Deterministic i.i.d. draws from phi restricted to the workspace.
inline std::vector<Vec2> sample(const DensityField& phi, std::size_t n, std::uint64_t seed) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "sample count must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& w = phi.workspace();
  const auto box = w.bounding_box();
  std::vector<Vec2> out;
  out.reserve(n);

  if (phi.is_uniform()) {
    while (out.size() < n) {
      const Vec2 q{box.lo.x + box.width() * unit(rng), box.lo.y + box.height() * unit(rng)};
      if (w.contains(q, 0.0)) out.push_back(q);
    }
  } else if (phi.is_gmm()) {
    const auto& comps = phi.gmm_components();
    std::vector<double> pis;
    std::vector<Mat2> chol;
    for (const auto& c : comps) {
      pis.push_back(c.weight);
      chol.push_back(c.cov.cholesky());
    }
    std::discrete_distribution<std::size_t> pick(pis.begin(), pis.end());
    std::normal_distribution<double> normal(0.0, 1.0);
    while (out.size() < n) {
      const std::size_t j = pick(rng);
      const double z1 = normal(rng), z2 = normal(rng);
      const Vec2 q = comps[j].mean + chol[j] * Vec2{z1, z2};
      if (w.contains(q, 0.0)) out.push_back(q);
    }
  } else {
    const auto& g = phi.grid_backing();
    std::discrete_distribution<std::size_t> pick(g.values.begin(), g.values.end());
    const double hx = (g.hi.x - g.lo.x) / g.nx, hy = (g.hi.y - g.lo.y) / g.ny;
    while (out.size() < n) {
      const std::size_t k = pick(rng);
      const int i = static_cast<int>(k % static_cast<std::size_t>(g.nx));
      const int j = static_cast<int>(k / static_cast<std::size_t>(g.nx));
      const Vec2 q{g.lo.x + (i + unit(rng)) * hx, g.lo.y + (j + unit(rng)) * hy};
      if (w.contains(q, 0.0)) out.push_back(q);
    }
  }
  return out;
}

/// Masses of phi on an nx-by-ny lattice over the workspace bounding box, renormalized to one.
inline GridMeasure discretize_grid(const DensityField& phi, int nx, int ny) {
  if (nx < 2 || ny < 2) fail(ErrorCode::InvalidArgument, "discretization needs at least 2x2 cells");
  const auto box = phi.workspace().bounding_box();
  GridMeasure g{nx, ny, box.lo, box.width() / nx, box.height() / ny, {}};
  g.weights.assign(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), 0.0);
  double total = 0.0;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Vec2 lo{box.lo.x + i * g.hx, box.lo.y + j * g.hy};
      const auto cell = intersect(ConvexPolygon::rectangle(lo, lo + Vec2{g.hx, g.hy}), phi.workspace());
      if (!cell) continue;
      const double m = cell_mass_centroid(phi, *cell).mass;
      g.weights[static_cast<std::size_t>(j * nx + i)] = m;
      total += m;
    }
  }
  if (!(total > 0.0)) fail(ErrorCode::InvalidArgument, "density has no mass on the discretization grid");
  for (double& w : g.weights) w /= total;
  return g;
}

/// Weighted atoms at the centers of the lattice cells meeting the workspace.
/// Cells cut by the boundary place their atom at the centroid of the clipped part.
inline DiscreteMeasure discretize(const DensityField& phi, int nx, int ny) {
  const GridMeasure g = discretize_grid(phi, nx, ny);
  DiscreteMeasure m;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Vec2 lo{g.lo.x + i * g.hx, g.lo.y + j * g.hy};
      const auto cell = intersect(ConvexPolygon::rectangle(lo, lo + Vec2{g.hx, g.hy}), phi.workspace());
      if (!cell) continue;
      const Vec2 c = g.center(i, j);
      m.points.push_back(phi.workspace().contains(c, 0.0) ? c : polygon_moments(*cell).centroid);
      m.weights.push_back(g.weights[static_cast<std::size_t>(j * nx + i)]);
    }
  }
  return m;
}

}  // namespace covkit
