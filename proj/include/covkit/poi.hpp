#pragma once

// Points-of-interest extraction: k-means, Gaussian-mixture EM and Stein
// variational gradient descent "super samples".

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "covkit/density.hpp"
#include "covkit/error.hpp"
#include "covkit/log.hpp"

namespace covkit {

struct KMeansProvenance {
  int k = 0;
};
struct GmmProvenance {
  std::vector<GaussianComponent> components;
};
struct SvgdProvenance {
  std::size_t n = 0;
  double bandwidth = 0.0;
};

struct PoISet {
  std::vector<Vec2> points;
  std::variant<KMeansProvenance, GmmProvenance, SvgdProvenance> provenance;

  std::string provenance_name() const {
    return std::visit(
        [](const auto& p) -> std::string {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, KMeansProvenance>) return "kmeans";
          else if constexpr (std::is_same_v<P, GmmProvenance>) return "gmm";
          else return "svgd";
        },
        provenance);
  }
};

struct KMeansResult {
  PoISet pois;
  std::vector<int> labels;
  double inertia = 0.0;
  std::vector<double> inertia_trace;  // after each assignment step
  int iterations = 0;
};

namespace detail {

inline std::size_t nearest(std::span<const Vec2> centers, Vec2 q, double* d2_out = nullptr) {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c)
    if (double d = distance2(centers[c], q); d < bd) bd = d, best = c;
  if (d2_out) *d2_out = bd;
  return best;
}

// k-means++ seeding.
inline std::vector<Vec2> plus_plus_seeds(std::span<const Vec2> data, std::size_t k, std::mt19937_64& rng) {
  std::vector<Vec2> centers;
  std::uniform_int_distribution<std::size_t> first(0, data.size() - 1);
  centers.push_back(data[first(rng)]);
  std::vector<double> d2(data.size(), std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      d2[i] = std::min(d2[i], distance2(data[i], centers.back()));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      for (pick = 0; pick + 1 < data.size(); ++pick) {
        r -= d2[pick];
        if (r < 0.0) break;
      }
      while (d2[pick] == 0.0) pick = (pick + 1) % data.size();
    }
    centers.push_back(data[pick]);
  }
  return centers;
}

}  // namespace detail

/// Lloyd-style k-means with seeded k-means++ initialization.
inline KMeansResult kmeans(std::span<const Vec2> data, int k, std::uint64_t seed, int max_iters = 300) {
  if (k < 1) fail(ErrorCode::InvalidArgument, "K must be >= 1");
  if (data.size() < static_cast<std::size_t>(k)) fail(ErrorCode::InvalidArgument, "fewer data points than clusters");
  const auto K = static_cast<std::size_t>(k);
  std::mt19937_64 rng(seed);
  std::vector<Vec2> centers = detail::plus_plus_seeds(data, K, rng);
  std::vector<int> labels(data.size(), -1);

  KMeansResult out;
  for (int it = 0; it < max_iters; ++it) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      double d2 = 0.0;
      const int c = static_cast<int>(detail::nearest(centers, data[i], &d2));
      inertia += d2;
      if (c != labels[i]) labels[i] = c, changed = true;
    }
    out.inertia_trace.push_back(inertia);
    out.iterations = it + 1;
    if (!changed) break;

    std::vector<Vec2> sum(K);
    std::vector<std::size_t> count(K, 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      sum[static_cast<std::size_t>(labels[i])] += data[i];
      ++count[static_cast<std::size_t>(labels[i])];
    }
    for (std::size_t c = 0; c < K; ++c) {
      if (count[c] > 0) {
        centers[c] = sum[c] / static_cast<double>(count[c]);
        continue;
      }
      // Empty cluster: restart it at the point farthest from its own center.
      std::size_t far = 0;
      double fd = -1.0;
      for (std::size_t i = 0; i < data.size(); ++i)
        if (double d = distance2(data[i], centers[static_cast<std::size_t>(labels[i])]); d > fd) fd = d, far = i;
      warn("k-means cluster " + std::to_string(c) + " emptied; re-seeded at point " + std::to_string(far));
      centers[c] = data[far];
    }
  }
  out.inertia = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) out.inertia += distance2(data[i], centers[static_cast<std::size_t>(labels[i])]);
  out.labels = std::move(labels);
  out.pois = {std::move(centers), KMeansProvenance{k}};
  return out;
}

struct GmmResult {
  PoISet pois;
  std::vector<GaussianComponent> components;
  std::vector<double> objective_trace;  // penalized log-likelihood per iteration
  double log_likelihood = 0.0;          // plain data log-likelihood at the final parameters
  int iterations = 0;
};

namespace detail {

inline double gaussian_log_pdf(Vec2 x, const GaussianComponent& c) {
  const Vec2 d = x - c.mean;
  return -0.5 * dot(d, c.cov.inverse() * d) - std::log(2.0 * M_PI) - 0.5 * std::log(c.cov.det());
}

inline double mixture_log_likelihood(std::span<const Vec2> data, const std::vector<GaussianComponent>& comps) {
  double ll = 0.0;
  std::vector<double> lp(comps.size());
  for (Vec2 x : data) {
    for (std::size_t j = 0; j < comps.size(); ++j) lp[j] = std::log(comps[j].weight) + gaussian_log_pdf(x, comps[j]);
    const double mx = *std::max_element(lp.begin(), lp.end());
    double s = 0.0;
    for (double v : lp) s += std::exp(v - mx);
    ll += mx + std::log(s);
  }
  return ll;
}

// -1/2 reg tr(Sigma^-1) per component: the inverse-Wishart-type prior whose MAP M-step is
// Sigma = S + (reg / N_j) I.
inline double covariance_penalty(const std::vector<GaussianComponent>& comps, double reg) {
  double p = 0.0;
  for (const auto& c : comps) p -= 0.5 * reg * c.cov.inverse().trace();
  return p;
}

}  // namespace detail

/// EM for a Gaussian mixture started from k-means.
///
/// Covariances carry a ridge prior, so the M-step is Sigma_j = S_j + (reg / N_j) I
/// and the quantity EM never decreases is log-likelihood - (reg/2) sum_j tr(Sigma_j^-1).
/// That objective is checked every iteration (1e-8 relative slack).
inline GmmResult gmm_em(std::span<const Vec2> data, int n_components, std::uint64_t seed, int max_iters = 500,
                        double reg = 1e-6, double tol = 1e-10) {
  if (n_components < 1) fail(ErrorCode::InvalidArgument, "n_components must be >= 1");
  if (!(reg > 0.0)) fail(ErrorCode::InvalidArgument, "covariance ridge must be positive");
  const auto K = static_cast<std::size_t>(n_components);
  const std::size_t n = data.size();
  if (n < K) fail(ErrorCode::InvalidArgument, "fewer data points than components");

  // Global covariance, used for initialization and re-seeding.
  Vec2 gmean;
  for (Vec2 x : data) gmean += x / static_cast<double>(n);
  Mat2 gcov = Mat2::identity() * reg;
  for (Vec2 x : data) {
    const Vec2 d = x - gmean;
    gcov = gcov + Mat2{d.x * d.x, d.x * d.y, d.x * d.y, d.y * d.y} * (1.0 / static_cast<double>(n));
  }

  const auto km = kmeans(data, n_components, seed);
  std::vector<GaussianComponent> comps(K);
  {
    std::vector<double> cnt(K, 0.0);
    std::vector<Mat2> scatter(K);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(km.labels[i]);
      const Vec2 d = data[i] - km.pois.points[c];
      cnt[c] += 1.0;
      scatter[c] = scatter[c] + Mat2{d.x * d.x, d.x * d.y, d.x * d.y, d.y * d.y};
    }
    for (std::size_t c = 0; c < K; ++c) {
      comps[c].weight = cnt[c] / static_cast<double>(n);
      comps[c].mean = km.pois.points[c];
      comps[c].cov = cnt[c] > 1.0 ? scatter[c] * (1.0 / cnt[c]) + Mat2::identity() * (reg / cnt[c]) : gcov;
      if (comps[c].weight <= 0.0) comps[c].weight = 1.0 / static_cast<double>(n);
    }
    const double tw = std::accumulate(comps.begin(), comps.end(), 0.0, [](double s, auto& c) { return s + c.weight; });
    for (auto& c : comps) c.weight /= tw;
  }

  GmmResult out;
  std::vector<double> resp(n * K), lp(K);
  double prev = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iters; ++it) {
    // E-step
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < K; ++j) lp[j] = std::log(comps[j].weight) + detail::gaussian_log_pdf(data[i], comps[j]);
      const double mx = *std::max_element(lp.begin(), lp.end());
      double s = 0.0;
      for (double v : lp) s += std::exp(v - mx);
      for (std::size_t j = 0; j < K; ++j) resp[i * K + j] = std::exp(lp[j] - mx) / s;
    }
    const double objective = detail::mixture_log_likelihood(data, comps) + detail::covariance_penalty(comps, reg);
    out.objective_trace.push_back(objective);
    out.iterations = it + 1;
    if (objective < prev - 1e-8 * std::max(1.0, std::abs(prev)))
      fail(ErrorCode::NoConvergence, "EM objective decreased at iteration " + std::to_string(it));
    if (objective - prev < tol * std::max(1.0, std::abs(objective))) break;
    prev = objective;

    // M-step
    bool reseeded = false;
    for (std::size_t j = 0; j < K; ++j) {
      double nj = 0.0;
      Vec2 mean;
      for (std::size_t i = 0; i < n; ++i) nj += resp[i * K + j], mean += data[i] * resp[i * K + j];
      if (nj < 1e-10) {
        // Degenerate component: restart on the worst-explained point with the global spread.
        std::size_t worst = 0;
        double wl = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
          double best = -std::numeric_limits<double>::infinity();
          for (std::size_t c = 0; c < K; ++c) best = std::max(best, detail::gaussian_log_pdf(data[i], comps[c]));
          if (best < wl) wl = best, worst = i;
        }
        warn("GMM component " + std::to_string(j) + " degenerated; re-seeded");
        comps[j] = {1.0 / static_cast<double>(K), data[worst], gcov};
        reseeded = true;
        continue;
      }
      mean = mean / nj;
      Mat2 cov;
      for (std::size_t i = 0; i < n; ++i) {
        const Vec2 d = data[i] - mean;
        cov = cov + Mat2{d.x * d.x, d.x * d.y, d.x * d.y, d.y * d.y} * resp[i * K + j];
      }
      comps[j] = {nj / static_cast<double>(n), mean, cov * (1.0 / nj) + Mat2::identity() * (reg / nj)};
    }
    if (reseeded) {
      const double tw = std::accumulate(comps.begin(), comps.end(), 0.0, [](double s, auto& c) { return s + c.weight; });
      for (auto& c : comps) c.weight /= tw;
      prev = -std::numeric_limits<double>::infinity();
    }
  }
  out.log_likelihood = detail::mixture_log_likelihood(data, comps);
  std::vector<Vec2> means;
  for (const auto& c : comps) means.push_back(c.mean);
  out.components = comps;
  out.pois = {std::move(means), GmmProvenance{std::move(comps)}};
  return out;
}

/// Median heuristic: h = median pairwise squared distance / log n.
struct MedianBandwidth {};
/// Fixed h = r^2 so the repulsion acts at the agents' service radius r.
struct FootprintBandwidth {
  double radius = 0.1;
};
using BandwidthPolicy = std::variant<MedianBandwidth, FootprintBandwidth>;

struct SvgdOptions {
  BandwidthPolicy bandwidth = MedianBandwidth{};
  double step = 0.0;  // <= 0 selects 0.05 diam(W)^2
  int iters = 500;
};

struct SvgdResult {
  PoISet pois;
  std::vector<double> displacement_trace;  // max particle move per iteration
};

namespace detail {

inline double svgd_bandwidth(const BandwidthPolicy& policy, std::span<const Vec2> x) {
  if (const auto* fp = std::get_if<FootprintBandwidth>(&policy)) return fp->radius * fp->radius;
  if (x.size() < 2) return 1.0;
  std::vector<double> d2;
  d2.reserve(x.size() * (x.size() - 1) / 2);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) d2.push_back(distance2(x[i], x[j]));
  auto mid = d2.begin() + static_cast<std::ptrdiff_t>(d2.size() / 2);
  std::nth_element(d2.begin(), mid, d2.end());
  const double h = *mid / std::log(static_cast<double>(x.size()));
  return h > 0.0 ? h : 1.0;
}

}  // namespace detail

/// SVGD with an RBF kernel k(x, y) = exp(-|x - y|^2 / h), initialized from samples of phi.
inline SvgdResult svgd(const DensityField& phi, std::size_t n, const SvgdOptions& opt, std::uint64_t seed) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "particle count must be >= 1");
  const auto& w = phi.workspace();
  const double step = opt.step > 0.0 ? opt.step : 0.05 * w.diameter() * w.diameter();
  std::vector<Vec2> x = sample(phi, n, seed);
  std::vector<Vec2> grad(n), phi_dir(n);
  SvgdResult out;
  double h = 1.0;
  for (int it = 0; it < opt.iters; ++it) {
    h = detail::svgd_bandwidth(opt.bandwidth, x);
    for (std::size_t j = 0; j < n; ++j) grad[j] = phi.grad_log(x[j]);
    for (std::size_t i = 0; i < n; ++i) {
      Vec2 acc;
      for (std::size_t j = 0; j < n; ++j) {
        const Vec2 d = x[j] - x[i];
        const double k = std::exp(-norm2(d) / h);
        // k(x_j, x_i) grad log phi(x_j) + grad_{x_j} k(x_j, x_i)
        acc += grad[j] * k - d * (2.0 * k / h);
      }
      phi_dir[i] = acc * (step / static_cast<double>(n));
    }
    double moved = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 next = w.clamp(x[i] + phi_dir[i]);
      moved = std::max(moved, distance(next, x[i]));
      x[i] = next;
    }
    out.displacement_trace.push_back(moved);
  }
  out.pois = {std::move(x), SvgdProvenance{n, h}};
  return out;
}

}  // namespace covkit
