#pragma once

// Discrete p-Wasserstein distances: exact couplings (assignment or integer
// min-cost transportation) and a debiased log-domain Sinkhorn approximation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

#include "covkit/coverage.hpp"
#include "covkit/density.hpp"
#include "covkit/error.hpp"
#include "covkit/lap.hpp"

namespace covkit {

inline constexpr std::size_t kMaxTransportEntries = 4'000'000;

struct PlanEntry {
  std::size_t source = 0;
  std::size_t target = 0;
  double mass = 0.0;
};

/// Sparse coupling between two discrete measures.
struct TransportPlan {
  std::size_t rows = 0, cols = 0;
  std::vector<PlanEntry> entries;
  double cost = 0.0;  // sum of mass * |x - y|^p
  double p = 2.0;

  std::vector<double> row_sums() const {
    std::vector<double> s(rows, 0.0);
    for (const auto& e : entries) s[e.source] += e.mass;
    return s;
  }
  std::vector<double> col_sums() const {
    std::vector<double> s(cols, 0.0);
    for (const auto& e : entries) s[e.target] += e.mass;
    return s;
  }
};

struct WassersteinResult {
  double value = 0.0;  // W_p
  TransportPlan plan;
};

inline double ground_cost(Vec2 x, Vec2 y, double p) {
  const double d2 = distance2(x, y);
  return p == 2.0 ? d2 : std::pow(std::sqrt(d2), p);
}

/// Median of |x - y|^p over all support pairs.
inline double median_cost(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p = 2.0) {
  std::vector<double> c;
  c.reserve(mu.size() * nu.size());
  for (Vec2 x : mu.points)
    for (Vec2 y : nu.points) c.push_back(ground_cost(x, y, p));
  auto mid = c.begin() + static_cast<std::ptrdiff_t>(c.size() / 2);
  std::nth_element(c.begin(), mid, c.end());
  return *mid;
}

namespace detail {

inline bool uniform_weights(const DiscreteMeasure& m) {
  const double w = 1.0 / static_cast<double>(m.size());
  return std::all_of(m.weights.begin(), m.weights.end(), [&](double x) { return std::abs(x - w) <= 1e-12; });
}

/// Largest-remainder rounding of weights to integers summing exactly to `scale`.
inline std::vector<std::int64_t> integer_weights(const std::vector<double>& w, std::int64_t scale) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<std::int64_t> out(w.size());
  std::vector<std::pair<double, std::size_t>> rem(w.size());
  std::int64_t used = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double exact = w[i] / total * static_cast<double>(scale);
    out[i] = static_cast<std::int64_t>(std::floor(exact));
    used += out[i];
    rem[i] = {exact - static_cast<double>(out[i]), i};
  }
  std::sort(rem.begin(), rem.end(), [](auto& a, auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
  for (std::size_t k = 0; used < scale; ++k, ++used) ++out[rem[k % rem.size()].second];
  return out;
}

/// Exact min-cost transportation with integer supplies and demands.
///
/// Columns are inserted one at a time; each insertion routes the column's
/// demand by successive shortest paths in the residual graph, searched
/// backwards from the column with Johnson potentials (all reduced costs >= 0,
/// arcs carrying flow are tight).
class IntegerTransport {
 public:
  IntegerTransport(const Matrix& cost, std::vector<std::int64_t> supply, std::vector<std::int64_t> demand)
      : c_(cost), supply_(std::move(supply)), demand_(std::move(demand)),
        m_(c_.rows()), k_(c_.cols()), pot_(m_ + k_, 0.0), row_flows_(m_), col_flows_(k_) {}

  void solve() {
    for (std::size_t j = 0; j < k_; ++j) insert_column(j);
  }

  /// (row, col, flow) triples with positive flow.
  std::vector<std::tuple<std::size_t, std::size_t, std::int64_t>> flows() const {
    std::vector<std::tuple<std::size_t, std::size_t, std::int64_t>> out;
    for (std::size_t i = 0; i < m_; ++i)
      for (auto [j, f] : row_flows_[i])
        if (f > 0) out.emplace_back(i, j, f);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  // Node ids: rows [0, m), columns [m, m + k).
  std::int64_t& flow(std::size_t i, std::size_t j) {
    for (auto& [jj, f] : row_flows_[i])
      if (jj == j) return f;
    row_flows_[i].emplace_back(j, 0);
    col_flows_[j].push_back(i);
    return row_flows_[i].back().second;
  }

  void insert_column(std::size_t j) {
    const std::size_t cj = m_ + j;
    double pj = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m_; ++i) pj = std::min(pj, c_(i, j) + pot_[i]);
    pot_[cj] = pj;
    std::int64_t need = demand_[j];
    while (need > 0) need -= augment(j);
  }

  std::int64_t augment(std::size_t j) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const std::size_t n = m_ + k_;
    dist_.assign(n, inf);
    prev_.assign(n, npos);
    done_.assign(n, 0);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    const std::size_t start = m_ + j;
    dist_[start] = 0.0;
    heap.push({0.0, start});
    std::size_t found = npos;
    std::vector<std::size_t> settled;
    while (!heap.empty()) {
      auto [d, x] = heap.top();
      heap.pop();
      if (done_[x]) continue;
      done_[x] = 1;
      settled.push_back(x);
      if (x < m_) {
        if (supply_[x] > 0) {
          found = x;
          break;
        }
        // Reverse residual arcs col -> row exist where row x ships to the column.
        for (auto [jj, f] : row_flows_[x]) {
          if (f <= 0) continue;
          const std::size_t y = m_ + jj;
          const double rc = std::max(0.0, pot_[y] - pot_[x] - c_(x, jj));
          if (d + rc < dist_[y]) dist_[y] = d + rc, prev_[y] = x, heap.push({dist_[y], y});
        }
      } else {
        const std::size_t col = x - m_;
        for (std::size_t i = 0; i < m_; ++i) {
          const double rc = std::max(0.0, c_(i, col) + pot_[i] - pot_[x]);
          if (d + rc < dist_[i]) dist_[i] = d + rc, prev_[i] = x, heap.push({dist_[i], i});
        }
      }
    }
    if (found == npos) fail(ErrorCode::NoConvergence, "transportation problem has no augmenting path");
    const double reach = dist_[found];
    for (std::size_t x : settled) pot_[x] -= dist_[x] - reach;
    for (std::size_t x = 0; x < n; ++x)
      if (!done_[x] && dist_[x] < reach) pot_[x] -= dist_[x] - reach;

    // Bottleneck along the path found -> ... -> start.
    std::int64_t amount = std::min(supply_[found], demand_left(j));
    for (std::size_t x = found; x != start;) {
      const std::size_t y = prev_[x];
      if (x >= m_) amount = std::min(amount, flow(y, x - m_));  // reverse arc (col x) -> (row y) cancels flow
      x = y;
    }
    for (std::size_t x = found; x != start;) {
      const std::size_t y = prev_[x];
      if (x < m_) flow(x, y - m_) += amount;  // forward arc row x -> column y
      else flow(y, x - m_) -= amount;
      x = y;
    }
    supply_[found] -= amount;
    routed_[j] += amount;
    return amount;
  }

  std::int64_t demand_left(std::size_t j) {
    if (routed_.size() != k_) routed_.assign(k_, 0);
    return demand_[j] - routed_[j];
  }

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  const Matrix& c_;
  std::vector<std::int64_t> supply_, demand_;
  std::size_t m_, k_;
  std::vector<double> pot_;
  std::vector<std::vector<std::pair<std::size_t, std::int64_t>>> row_flows_;
  std::vector<std::vector<std::size_t>> col_flows_;
  std::vector<std::int64_t> routed_;
  std::vector<double> dist_;
  std::vector<std::size_t> prev_;
  std::vector<char> done_;
};

}  // namespace detail

/// Exact W_p with Euclidean ground distance.
inline WassersteinResult wasserstein_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p = 2.0) {
  mu.validate();
  nu.validate();
  if (!(p >= 1.0)) fail(ErrorCode::InvalidArgument, "p must be >= 1");
  if (mu.size() * nu.size() > kMaxTransportEntries) fail(ErrorCode::SizeLimit, "transport problem exceeds 4e6 entries");

  Matrix c(mu.size(), nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < nu.size(); ++j) c(i, j) = ground_cost(mu.points[i], nu.points[j], p);

  WassersteinResult out;
  out.plan.rows = mu.size();
  out.plan.cols = nu.size();
  out.plan.p = p;
  if (mu.size() == nu.size() && detail::uniform_weights(mu) && detail::uniform_weights(nu)) {
    const auto lap = solve_lap(c);
    const double w = 1.0 / static_cast<double>(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i)
      out.plan.entries.push_back({i, static_cast<std::size_t>(lap.row_to_col[i]), w});
    out.plan.cost = lap.cost * w;
  } else {
    constexpr std::int64_t scale = 1'000'000'000;
    detail::IntegerTransport solver(c, detail::integer_weights(mu.weights, scale), detail::integer_weights(nu.weights, scale));
    solver.solve();
    for (auto [i, j, f] : solver.flows()) {
      const double mass = static_cast<double>(f) / static_cast<double>(scale);
      out.plan.entries.push_back({i, j, mass});
      out.plan.cost += mass * c(i, j);
    }
  }
  out.value = std::pow(std::max(out.plan.cost, 0.0), 1.0 / p);
  return out;
}

struct SinkhornOptions {
  double epsilon = 0.0;  // required, > 0
  int max_iters = 100000;  // at the final blur level
  double marginal_tol = 1e-6;
};

namespace detail {

inline double log_sum_exp(const double* v, std::size_t n) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, v[i]);
  if (mx == -std::numeric_limits<double>::infinity()) return mx;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - mx);
  return mx + std::log(s);
}

inline std::vector<double> log_weights(const std::vector<double>& w) {
  std::vector<double> l(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) l[i] = w[i] > 0.0 ? std::log(w[i]) : -std::numeric_limits<double>::infinity();
  return l;
}

/// Soft c-transform: out_i = -eps log sum_j b_j exp((g_j - C_ij)/eps).
inline void soft_min_rows(const Matrix& c, const std::vector<double>& log_b, const std::vector<double>& g, double eps,
                          std::vector<double>& out) {
  std::vector<double> buf(c.cols());
  for (std::size_t i = 0; i < c.rows(); ++i) {
    const auto row = c.row(i);
    for (std::size_t j = 0; j < c.cols(); ++j) buf[j] = log_b[j] + (g[j] - row[j]) / eps;
    out[i] = -eps * log_sum_exp(buf.data(), buf.size());
  }
}

inline void soft_min_cols(const Matrix& c, const std::vector<double>& log_a, const std::vector<double>& f, double eps,
                          std::vector<double>& out) {
  std::vector<double> buf(c.rows());
  for (std::size_t j = 0; j < c.cols(); ++j) {
    for (std::size_t i = 0; i < c.rows(); ++i) buf[i] = log_a[i] + (f[i] - c(i, j)) / eps;
    out[j] = -eps * log_sum_exp(buf.data(), buf.size());
  }
}

inline double weighted_sum(const std::vector<double>& w, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] > 0.0) s += w[i] * v[i];
  return s;
}

/// Row-marginal L1 violation of the plan built from (f, g) after the column update.
inline double row_violation(const std::vector<double>& a, const std::vector<double>& f,
                            const std::vector<double>& f_next, double eps) {
  double v = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] > 0.0) v += a[i] * std::abs(1.0 - std::exp((f[i] - f_next[i]) / eps));
  return v;
}

struct SinkhornDual {
  std::vector<double> f, g;
  double value = 0.0;
};

// Blur levels from `start` halving down to the target epsilon.
inline std::vector<double> epsilon_schedule(double start, double target) {
  std::vector<double> s;
  for (double e = std::max(start, target); e > target; e *= 0.5) s.push_back(e);
  s.push_back(target);
  return s;
}

// Alternating scaling for OT_eps(a, b) with epsilon annealing. `rows(g, eps, f)`
// and `cols(f, eps, g)` are the two soft c-transforms.
template <class RowOp, class ColOp>
SinkhornDual scaled_sinkhorn(RowOp&& rows, ColOp&& cols, const std::vector<double>& a, const std::vector<double>& b,
                             double cost_scale, const SinkhornOptions& opt) {
  SinkhornDual d{std::vector<double>(a.size(), 0.0), std::vector<double>(b.size(), 0.0), 0.0};
  std::vector<double> f_next(a.size());
  const auto schedule = epsilon_schedule(cost_scale, opt.epsilon);
  for (std::size_t stage = 0; stage < schedule.size(); ++stage) {
    const double eps = schedule[stage];
    const bool last = stage + 1 == schedule.size();
    cols(d.f, eps, d.g);
    for (int it = 0; it < (last ? opt.max_iters : 100); ++it) {
      rows(d.g, eps, f_next);
      const double viol = row_violation(a, d.f, f_next, eps);
      d.f.swap(f_next);
      cols(d.f, eps, d.g);
      if (viol < (last ? opt.marginal_tol : 1e-3)) {
        if (last) {
          d.value = weighted_sum(a, d.f) + weighted_sum(b, d.g);
          return d;
        }
        break;
      }
    }
  }
  fail(ErrorCode::NoConvergence, "Sinkhorn marginals did not converge");
}

// Symmetric potential of OT_eps(a, a) by averaged fixed-point iteration with annealing.
template <class Op>
std::vector<double> scaled_symmetric(Op&& op, const std::vector<double>& a, double cost_scale, const SinkhornOptions& opt) {
  std::vector<double> f(a.size(), 0.0), t(a.size());
  const auto schedule = epsilon_schedule(cost_scale, opt.epsilon);
  for (std::size_t stage = 0; stage < schedule.size(); ++stage) {
    const double eps = schedule[stage];
    const bool last = stage + 1 == schedule.size();
    for (int it = 0; it < (last ? opt.max_iters : 100); ++it) {
      op(f, eps, t);
      double change = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i) {
        const double nf = 0.5 * (f[i] + t[i]);
        if (a[i] > 0.0) change = std::max(change, std::abs(nf - f[i]));
        f[i] = nf;
      }
      if (change / eps < (last ? 0.1 * opt.marginal_tol : 1e-3)) {
        if (last) return f;
        break;
      }
    }
  }
  fail(ErrorCode::NoConvergence, "symmetric Sinkhorn did not converge");
}

inline double max_entry(const Matrix& c) {
  double m = 0.0;
  for (double v : c.data()) m = std::max(m, v);
  return m;
}

inline SinkhornDual sinkhorn_dual(const Matrix& c, const std::vector<double>& a, const std::vector<double>& b,
                                  const SinkhornOptions& opt) {
  const auto la = log_weights(a), lb = log_weights(b);
  return scaled_sinkhorn([&](const auto& g, double eps, auto& out) { soft_min_rows(c, lb, g, eps, out); },
                         [&](const auto& f, double eps, auto& out) { soft_min_cols(c, la, f, eps, out); }, a, b,
                         max_entry(c), opt);
}

inline std::vector<double> sinkhorn_symmetric(const Matrix& c, const std::vector<double>& a, const SinkhornOptions& opt) {
  const auto la = log_weights(a);
  return scaled_symmetric([&](const auto& f, double eps, auto& out) { soft_min_rows(c, la, f, eps, out); }, a,
                          max_entry(c), opt);
}

// Transport cost of the plan whose rows are renormalized to a:
// sum_i a_i E[C_i. | i] with P(j | i) proportional to b_j exp((g_j - C_ij)/eps).
inline double conditional_cost(const Matrix& c, const std::vector<double>& a, const std::vector<double>& log_b,
                               const std::vector<double>& g, double eps) {
  std::vector<double> buf(c.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < c.rows(); ++i) {
    if (!(a[i] > 0.0)) continue;
    const auto row = c.row(i);
    for (std::size_t j = 0; j < c.cols(); ++j) buf[j] = log_b[j] + (g[j] - row[j]) / eps;
    const double lse = log_sum_exp(buf.data(), buf.size());
    double e = 0.0;
    for (std::size_t j = 0; j < c.cols(); ++j) e += std::exp(buf[j] - lse) * row[j];
    total += a[i] * e;
  }
  return total;
}

/// Projects a nonnegative matrix onto the transport polytope U(a, b).
inline void round_to_polytope(Matrix& plan, const std::vector<double>& a, const std::vector<double>& b) {
  for (std::size_t i = 0; i < plan.rows(); ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < plan.cols(); ++j) r += plan(i, j);
    if (r > a[i] && r > 0.0)
      for (std::size_t j = 0; j < plan.cols(); ++j) plan(i, j) *= a[i] / r;
  }
  for (std::size_t j = 0; j < plan.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < plan.rows(); ++i) s += plan(i, j);
    if (s > b[j] && s > 0.0)
      for (std::size_t i = 0; i < plan.rows(); ++i) plan(i, j) *= b[j] / s;
  }
  std::vector<double> ea(plan.rows()), eb(plan.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < plan.rows(); ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < plan.cols(); ++j) r += plan(i, j);
    ea[i] = a[i] - r;
    total += ea[i];
  }
  for (std::size_t j = 0; j < plan.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < plan.rows(); ++i) s += plan(i, j);
    eb[j] = b[j] - s;
  }
  if (total > 0.0)
    for (std::size_t i = 0; i < plan.rows(); ++i)
      for (std::size_t j = 0; j < plan.cols(); ++j) plan(i, j) += ea[i] * eb[j] / total;
}

}  // namespace detail

/// Entropic approximation of W_p. The reported value is debiased in primal form:
/// <C, P_mu,nu> - (<C, P_mu,mu> + <C, P_nu,nu>)/2 over the entropic plans, raised to 1/p.
/// The returned plan is the entropic coupling rounded onto the marginal polytope.
inline WassersteinResult wasserstein_sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                                              const SinkhornOptions& opt) {
  mu.validate();
  nu.validate();
  if (!(opt.epsilon > 0.0)) fail(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (mu.size() * nu.size() > kMaxTransportEntries) fail(ErrorCode::SizeLimit, "transport problem exceeds 4e6 entries");

  auto costs = [&](const DiscreteMeasure& x, const DiscreteMeasure& y) {
    Matrix c(x.size(), y.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < y.size(); ++j) c(i, j) = ground_cost(x.points[i], y.points[j], p);
    return c;
  };
  const Matrix cxy = costs(mu, nu);
  const auto dual = detail::sinkhorn_dual(cxy, mu.weights, nu.weights, opt);
  auto self_cost = [&](const DiscreteMeasure& m) {
    const Matrix c = costs(m, m);
    const auto f = detail::sinkhorn_symmetric(c, m.weights, opt);
    return detail::conditional_cost(c, m.weights, detail::log_weights(m.weights), f, opt.epsilon);
  };
  const double cross =
      detail::conditional_cost(cxy, mu.weights, detail::log_weights(nu.weights), dual.g, opt.epsilon);
  const double divergence = std::max(0.0, cross - 0.5 * (self_cost(mu) + self_cost(nu)));

  Matrix plan(mu.size(), nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < nu.size(); ++j)
      if (mu.weights[i] > 0.0 && nu.weights[j] > 0.0)
        plan(i, j) = mu.weights[i] * nu.weights[j] * std::exp((dual.f[i] + dual.g[j] - cxy(i, j)) / opt.epsilon);
  detail::round_to_polytope(plan, mu.weights, nu.weights);

  WassersteinResult out;
  out.value = std::pow(divergence, 1.0 / p);
  out.plan.rows = mu.size();
  out.plan.cols = nu.size();
  out.plan.p = p;
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < nu.size(); ++j)
      if (plan(i, j) > 0.0) {
        out.plan.entries.push_back({i, j, plan(i, j)});
        out.plan.cost += plan(i, j) * cxy(i, j);
      }
  return out;
}

namespace detail {

// Soft c-transform on a shared lattice with squared Euclidean cost, done as two
// separable 1D log-sum-exp passes: O(nx ny (nx + ny)) instead of O((nx ny)^2).
inline void grid_soft_min(const GridMeasure& grid, const std::vector<double>& log_w, const std::vector<double>& pot,
                          double eps, std::vector<double>& out) {
  const int nx = grid.nx, ny = grid.ny;
  std::vector<double> h(static_cast<std::size_t>(nx * ny));
  for (std::size_t k = 0; k < h.size(); ++k) h[k] = log_w[k] + pot[k] / eps;
  // Pass over y: t(jx, iy) = LSE_jy [h(jx, jy) - (y_iy - y_jy)^2 / eps]
  std::vector<double> t(h.size()), buf(static_cast<std::size_t>(std::max(nx, ny)));
  for (int jx = 0; jx < nx; ++jx)
    for (int iy = 0; iy < ny; ++iy) {
      for (int jy = 0; jy < ny; ++jy) {
        const double dy = (iy - jy) * grid.hy;
        buf[static_cast<std::size_t>(jy)] = h[static_cast<std::size_t>(jy * nx + jx)] - dy * dy / eps;
      }
      t[static_cast<std::size_t>(iy * nx + jx)] = log_sum_exp(buf.data(), static_cast<std::size_t>(ny));
    }
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      for (int jx = 0; jx < nx; ++jx) {
        const double dx = (ix - jx) * grid.hx;
        buf[static_cast<std::size_t>(jx)] = t[static_cast<std::size_t>(iy * nx + jx)] - dx * dx / eps;
      }
      out[static_cast<std::size_t>(iy * nx + ix)] = -eps * log_sum_exp(buf.data(), static_cast<std::size_t>(nx));
    }
}

// Grid version of conditional_cost. The y pass keeps, per (jx, iy), the log mass
// and the mass-weighted mean of dy^2; the x pass then adds dx^2.
inline double grid_conditional_cost(const GridMeasure& grid, const std::vector<double>& a,
                                    const std::vector<double>& log_b, const std::vector<double>& g, double eps) {
  const int nx = grid.nx, ny = grid.ny;
  const auto at = [nx](int x, int y) { return static_cast<std::size_t>(y * nx + x); };
  std::vector<double> h(g.size()), lm(g.size()), my(g.size()), buf(static_cast<std::size_t>(std::max(nx, ny)));
  for (std::size_t k = 0; k < h.size(); ++k) h[k] = log_b[k] + g[k] / eps;
  for (int jx = 0; jx < nx; ++jx)
    for (int iy = 0; iy < ny; ++iy) {
      for (int jy = 0; jy < ny; ++jy) {
        const double dy = (iy - jy) * grid.hy;
        buf[static_cast<std::size_t>(jy)] = h[at(jx, jy)] - dy * dy / eps;
      }
      const double lse = log_sum_exp(buf.data(), static_cast<std::size_t>(ny));
      double e = 0.0;
      if (std::isfinite(lse))
        for (int jy = 0; jy < ny; ++jy) {
          const double dy = (iy - jy) * grid.hy;
          e += std::exp(buf[static_cast<std::size_t>(jy)] - lse) * dy * dy;
        }
      lm[at(jx, iy)] = lse;
      my[at(jx, iy)] = e;
    }
  double total = 0.0;
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      if (!(a[at(ix, iy)] > 0.0)) continue;
      for (int jx = 0; jx < nx; ++jx) {
        const double dx = (ix - jx) * grid.hx;
        buf[static_cast<std::size_t>(jx)] = lm[at(jx, iy)] - dx * dx / eps;
      }
      const double lse = log_sum_exp(buf.data(), static_cast<std::size_t>(nx));
      double e = 0.0;
      for (int jx = 0; jx < nx; ++jx) {
        const double dx = (ix - jx) * grid.hx;
        e += std::exp(buf[static_cast<std::size_t>(jx)] - lse) * (dx * dx + my[at(jx, iy)]);
      }
      total += a[at(ix, iy)] * e;
    }
  return total;
}

}  // namespace detail

/// Debiased (primal form) Sinkhorn W_2 between two measures on the same lattice.
inline double wasserstein_sinkhorn_grid(const GridMeasure& mu, const GridMeasure& nu, const SinkhornOptions& opt) {
  if (mu.nx != nu.nx || mu.ny != nu.ny || mu.hx != nu.hx || mu.hy != nu.hy)
    fail(ErrorCode::InvalidArgument, "grid measures must share a lattice");
  if (!(opt.epsilon > 0.0)) fail(ErrorCode::InvalidArgument, "epsilon must be positive");
  const auto la = detail::log_weights(mu.weights), lb = detail::log_weights(nu.weights);
  const double span_x = mu.nx * mu.hx, span_y = mu.ny * mu.hy;
  const double scale = span_x * span_x + span_y * span_y;
  const auto cross = detail::scaled_sinkhorn(
      [&](const auto& g, double eps, auto& out) { detail::grid_soft_min(nu, lb, g, eps, out); },
      [&](const auto& f, double eps, auto& out) { detail::grid_soft_min(mu, la, f, eps, out); }, mu.weights,
      nu.weights, scale, opt);
  auto self_cost = [&](const GridMeasure& m, const std::vector<double>& lw) {
    const auto f = detail::scaled_symmetric(
        [&](const auto& p, double eps, auto& out) { detail::grid_soft_min(m, lw, p, eps, out); }, m.weights, scale,
        opt);
    return detail::grid_conditional_cost(m, m.weights, lw, f, opt.epsilon);
  };
  const double xy = detail::grid_conditional_cost(mu, mu.weights, lb, cross.g, opt.epsilon);
  const double divergence = std::max(0.0, xy - 0.5 * (self_cost(mu, la) + self_cost(nu, lb)));
  return std::sqrt(divergence);
}

/// mu_V = sum_i m_i delta_{p_i} with m_i the phi-mass of the Voronoi cell of p_i.
inline DiscreteMeasure voronoi_measure(const DensityField& phi, std::span<const Vec2> positions) {
  const auto agents = make_agents(positions);
  const auto part = build_partition(phi, agents, PartitionKind::Voronoi);
  DiscreteMeasure m{std::vector<Vec2>(positions.begin(), positions.end()), part.masses};
  const double total = std::accumulate(m.weights.begin(), m.weights.end(), 0.0);
  for (double& w : m.weights) w /= total;
  return m;
}

struct IdentityCheck {
  double lhs = 0.0;  // W_2^2(mu_V, discretized phi)
  double rhs = 0.0;  // H_V(P)
  double relative_gap = 0.0;
};

/// Compares W_2^2 between the Voronoi measure and the discretized density against H_V.
inline IdentityCheck check_w2_identity(const DensityField& phi, std::span<const Vec2> positions, int resolution) {
  if (resolution < 32) fail(ErrorCode::InvalidArgument, "identity check needs at least a 32x32 grid");
  const auto mu = voronoi_measure(phi, positions);
  const auto nu = discretize(phi, resolution, resolution);
  IdentityCheck out;
  const auto w = wasserstein_exact(mu, nu, 2.0);
  out.lhs = w.plan.cost;
  const auto agents = make_agents(positions);
  out.rhs = coverage_cost(phi, agents, build_partition(phi, agents, PartitionKind::Voronoi), CostKernel::Squared);
  out.relative_gap = std::abs(out.lhs - out.rhs) / out.rhs;
  return out;
}

}  // namespace covkit
