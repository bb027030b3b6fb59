#pragma once

// Deployment costs C*_ij for placing agent i at PoI j, and the optimal
// one-PoI-per-agent assignment over them.

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "covkit/density.hpp"
#include "covkit/error.hpp"
#include "covkit/lap.hpp"
#include "covkit/transport.hpp"

namespace covkit {

/// Service degradation with distance, f(r).
using RadialKernel = std::function<double(double)>;

inline RadialKernel squared_kernel() {
  return [](double r) { return r * r; };
}

/// `count` evenly spaced orientations in [0, 2 pi).
inline std::vector<double> even_orientations(int count) {
  if (count < 1) fail(ErrorCode::InvalidArgument, "orientation set needs at least one angle");
  std::vector<double> t(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) t[static_cast<std::size_t>(k)] = 2.0 * M_PI * k / count;
  return t;
}

struct IsotropicService {
  RadialKernel f = squared_kernel();
  double radius = 0.1;  // disk footprint
};

/// s_i(q | p, theta) = N(q | p, R(theta) base R(theta)^T); footprint is the 3-sigma ellipse.
struct GaussianService {
  Mat2 base = Mat2::identity();
  RadialKernel f = squared_kernel();

  Mat2 covariance(double theta) const { return base.rotated(theta); }
};

struct ServiceModel {
  std::variant<IsotropicService, GaussianService> kind;
  std::vector<double> orientations = even_orientations(8);
  int footprint_segments = 32;

  void validate() const {
    if (orientations.empty()) fail(ErrorCode::InvalidArgument, "orientation set must be non-empty");
    if (const auto* iso = std::get_if<IsotropicService>(&kind); iso && !(iso->radius > 0.0))
      fail(ErrorCode::InvalidArgument, "footprint radius must be positive");
    if (const auto* g = std::get_if<GaussianService>(&kind); g && !g->base.is_spd())
      fail(ErrorCode::InvalidArgument, "service covariance must be positive definite");
  }

  bool isotropic() const { return std::holds_alternative<IsotropicService>(kind); }

  /// Footprint polygon C_i(p, theta) before clipping to the workspace.
  ConvexPolygon footprint(Vec2 p, double theta) const {
    if (const auto* iso = std::get_if<IsotropicService>(&kind))
      return ConvexPolygon::ellipse(p, iso->radius, iso->radius, 0.0, footprint_segments);
    const auto& g = std::get<GaussianService>(kind);
    const auto ev = g.base.eigenvalues();
    return ConvexPolygon::ellipse(p, 3.0 * std::sqrt(ev[0]), 3.0 * std::sqrt(ev[1]), theta + g.base.principal_angle(),
                                  footprint_segments);
  }

  const RadialKernel& kernel() const {
    return std::visit([](const auto& k) -> const RadialKernel& { return k.f; }, kind);
  }
};

struct OrientedCost {
  double cost = 0.0;
  double theta = 0.0;
  std::size_t theta_index = 0;
  std::vector<double> per_theta;  // cost at every orientation searched
};

namespace detail {

template <class F>
OrientedCost argmin_orientation(std::span<const double> thetas, F&& cost_at) {
  OrientedCost best{std::numeric_limits<double>::infinity(), thetas.front(), 0, {}};
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    const double c = cost_at(thetas[k]);
    best.per_theta.push_back(c);
    if (c < best.cost) best.cost = c, best.theta = thetas[k], best.theta_index = k;
  }
  return best;
}

}  // namespace detail

/// min over theta of the integral of f(|q - p|) dphi over the footprint clipped to W.
inline OrientedCost footprint_cost(const DensityField& phi, const ServiceModel& model, Vec2 poi) {
  model.validate();
  auto at = [&](double theta) {
    const auto region = intersect(model.footprint(poi, theta), phi.workspace());
    if (!region) return 0.0;
    const auto& f = model.kernel();
    return integrate_density(phi, *region, [&](Vec2 q) { return f(distance(q, poi)); });
  };
  if (model.isotropic()) {
    const double c = at(model.orientations.front());
    return {c, model.orientations.front(), 0, std::vector<double>(model.orientations.size(), c)};
  }
  return detail::argmin_orientation(model.orientations, at);
}

/// KL(N0 || N1) in closed form (2D).
inline double gaussian_kl(Vec2 mean0, const Mat2& cov0, Vec2 mean1, const Mat2& cov1) {
  if (!cov0.is_spd() || !cov1.is_spd()) fail(ErrorCode::InvalidArgument, "covariances must be positive definite");
  const Mat2 inv1 = cov1.inverse();
  const Vec2 d = mean1 - mean0;
  return 0.5 * ((inv1 * cov0).trace() + dot(d, inv1 * d) - 2.0 + std::log(cov1.det() / cov0.det()));
}

/// Numeric KL(psi || phi) over a region, psi renormalized on the region.
/// phi is floored at 1e-12 max(phi); SupportViolation if psi puts more than
/// 1e-6 of its mass where phi is below the floor.
inline double kl_divergence(const DensityField& psi, const DensityField& phi, const ConvexPolygon& region,
                            int levels = kDefaultQuadratureLevels) {
  const double floor = 1e-12 * phi.max_value();
  double z = 0.0;
  for_each_polygon_node(region, levels, [&](Vec2 q, double w) { z += w * psi.eval(q); });
  if (!(z > 0.0)) fail(ErrorCode::InvalidArgument, "psi has no mass on the region");
  double kl = 0.0, violating = 0.0;
  for_each_polygon_node(region, levels, [&](Vec2 q, double w) {
    const double a = psi.eval(q) / z;
    if (a <= 0.0) return;
    double b = phi.eval(q);
    if (b < floor) {
      violating += w * a;
      b = floor;
    }
    kl += w * a * std::log(a / b);
  });
  if (violating > 1e-6) fail(ErrorCode::SupportViolation, "phi vanishes on a set of positive psi-mass");
  return kl;
}

/// Multiplier applied to the KLD cost as a function of the component weight.
using ComponentWeighting = std::function<double(double)>;

/// min over theta of KL(N(p_j, Sigma_i(theta)) || N(p_j, Sigma_j)), times omega(pi_j).
inline OrientedCost kld_cost(const GaussianService& service, std::span<const double> orientations,
                             const GaussianComponent& component, const ComponentWeighting& omega = {}) {
  if (orientations.empty()) fail(ErrorCode::InvalidArgument, "orientation set must be non-empty");
  auto best = detail::argmin_orientation(orientations, [&](double theta) {
    return gaussian_kl(component.mean, service.covariance(theta), component.mean, component.cov);
  });
  if (omega) best.cost *= omega(component.weight);
  return best;
}

/// Registration cost: samples of s_i at the canonical pose are rotated by
/// each theta, translated onto the cluster mean, and matched to the cluster by
/// exact uniform-weight optimal transport (squared Euclidean cost).
inline OrientedCost ot_registration_cost(const GaussianService& service, std::span<const double> orientations,
                                         std::span<const Vec2> cluster, std::size_t n_samples, std::uint64_t seed) {
  if (cluster.empty()) fail(ErrorCode::InvalidArgument, "cluster must contain at least one point");
  if (orientations.empty()) fail(ErrorCode::InvalidArgument, "orientation set must be non-empty");
  if (n_samples < 1) fail(ErrorCode::InvalidArgument, "n_samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Mat2 l = service.base.cholesky();
  std::vector<Vec2> canon(n_samples);
  for (auto& s : canon) {
    const double z1 = normal(rng), z2 = normal(rng);
    s = l * Vec2{z1, z2};
  }
  Vec2 sample_mean, cluster_mean;
  for (Vec2 s : canon) sample_mean += s / static_cast<double>(n_samples);
  for (Vec2 d : cluster) cluster_mean += d / static_cast<double>(cluster.size());

  const auto target = DiscreteMeasure::uniform(std::vector<Vec2>(cluster.begin(), cluster.end()));
  return detail::argmin_orientation(orientations, [&](double theta) {
    std::vector<Vec2> moved(n_samples);
    for (std::size_t k = 0; k < n_samples; ++k) moved[k] = rotate(canon[k] - sample_mean, theta) + cluster_mean;
    return wasserstein_exact(DiscreteMeasure::uniform(std::move(moved)), target, 2.0).plan.cost;
  });
}

/// N x n deployment costs with the minimizing orientation per entry.
struct CostMatrix {
  Matrix cost;
  Matrix theta_star;

  CostMatrix() = default;
  CostMatrix(std::size_t agents, std::size_t pois) : cost(agents, pois), theta_star(agents, pois) {}
  explicit CostMatrix(Matrix c) : cost(std::move(c)), theta_star(cost.rows(), cost.cols()) {}

  std::size_t agents() const { return cost.rows(); }
  std::size_t pois() const { return cost.cols(); }
};

struct AssignmentResult {
  std::vector<int> poi_of_agent;
  double total_cost = 0.0;

  /// Z_ij indicator matrix.
  std::vector<std::vector<int>> indicator(std::size_t pois) const {
    std::vector<std::vector<int>> z(poi_of_agent.size(), std::vector<int>(pois, 0));
    for (std::size_t i = 0; i < poi_of_agent.size(); ++i) z[i][static_cast<std::size_t>(poi_of_agent[i])] = 1;
    return z;
  }
};

/// Exact optimum of the one-PoI-per-agent assignment; each PoI serves at most one agent.
inline AssignmentResult solve_assignment(const CostMatrix& c) {
  if (c.agents() > c.pois())
    fail(ErrorCode::InfeasibleShape, "infeasible assignment shape: " + std::to_string(c.agents()) + " agents but " +
                                         std::to_string(c.pois()) + " PoIs");
  const auto lap = solve_lap(c.cost);
  return {lap.row_to_col, lap.cost};
}

}  // namespace covkit
