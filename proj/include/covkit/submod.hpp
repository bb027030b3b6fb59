#pragma once

// Monotone set-function maximization: sequential greedy under uniform and
// partition matroids, exemplar-clustering and max-cover utilities, and an
// exhaustive optimum for small instances.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "covkit/error.hpp"
#include "covkit/vec2.hpp"

namespace covkit {

/// Set function over element indices 0..n-1; must be deterministic.
using SetFunction = std::function<double(std::span<const int>)>;

inline constexpr double kMaxBruteForceSubsets = 1e6;

struct GreedyPick {
  int element = -1;
  double gain = 0.0;
};

struct GreedyResult {
  std::vector<int> selected;
  std::vector<GreedyPick> trace;
  double value = 0.0;
};

namespace detail {

// Best marginal gain over candidates; ties go to the lowest index.
inline GreedyPick best_marginal(const SetFunction& f, std::vector<int>& current, double base,
                                std::span<const int> candidates) {
  GreedyPick best;
  for (int e : candidates) {
    current.push_back(e);
    const double gain = f(current) - base;
    current.pop_back();
    if (best.element < 0 || gain > best.gain || (gain == best.gain && e < best.element)) best = {e, gain};
  }
  return best;
}

}  // namespace detail

/// Greedy under |R| <= n_pick.
inline GreedyResult greedy_uniform(const SetFunction& f, int ground_size, int n_pick) {
  if (n_pick < 0 || n_pick > ground_size) fail(ErrorCode::InvalidArgument, "greedy needs 0 <= N <= |S|");
  GreedyResult out;
  std::vector<char> taken(static_cast<std::size_t>(ground_size), 0);
  double value = f(out.selected);
  for (int round = 0; round < n_pick; ++round) {
    std::vector<int> candidates;
    for (int e = 0; e < ground_size; ++e)
      if (!taken[static_cast<std::size_t>(e)]) candidates.push_back(e);
    const auto pick = detail::best_marginal(f, out.selected, value, candidates);
    taken[static_cast<std::size_t>(pick.element)] = 1;
    out.selected.push_back(pick.element);
    out.trace.push_back(pick);
    value += pick.gain;
  }
  out.value = f(out.selected);
  return out;
}

/// Ground set of agent-PoI pairs; block i holds (i, j) for every PoI j.
struct PartitionGroundSet {
  int agents = 0;
  int pois = 0;

  int encode(int agent, int poi) const { return agent * pois + poi; }
  int agent_of(int element) const { return element / pois; }
  int poi_of(int element) const { return element % pois; }
  int size() const { return agents * pois; }

  std::vector<int> block(int agent) const {
    std::vector<int> b(static_cast<std::size_t>(pois));
    std::iota(b.begin(), b.end(), agent * pois);
    return b;
  }
};

struct PartitionGreedyResult {
  std::vector<int> poi_of_agent;
  GreedyResult greedy;
};

/// Greedy with at most one pick per block, visiting blocks in `order`
/// (ascending agent index when empty).
inline PartitionGreedyResult greedy_partition(const SetFunction& f, const PartitionGroundSet& ground,
                                              std::vector<int> order = {}) {
  if (ground.agents < 1 || ground.pois < 1) fail(ErrorCode::InvalidArgument, "every block must be non-empty");
  if (order.empty()) {
    order.resize(static_cast<std::size_t>(ground.agents));
    std::iota(order.begin(), order.end(), 0);
  }
  auto sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < sorted.size(); ++k)
    if (sorted[k] != static_cast<int>(k) || sorted.size() != static_cast<std::size_t>(ground.agents))
      fail(ErrorCode::InvalidArgument, "block order must be a permutation of the agents");

  PartitionGreedyResult out;
  out.poi_of_agent.assign(static_cast<std::size_t>(ground.agents), -1);
  double value = f(out.greedy.selected);
  for (int agent : order) {
    const auto pick = detail::best_marginal(f, out.greedy.selected, value, ground.block(agent));
    out.greedy.selected.push_back(pick.element);
    out.greedy.trace.push_back(pick);
    out.poi_of_agent[static_cast<std::size_t>(agent)] = ground.poi_of(pick.element);
    value += pick.gain;
  }
  out.greedy.value = f(out.greedy.selected);
  return out;
}

/// f(R) = L({d0}) - L(R + {d0}) with L(R) = sum over data of the distance to the nearest exemplar
/// and the phantom d0 at distance d_max from every datum.
class ExemplarUtility {
 public:
  using Distance = std::function<double(int element, Vec2 datum)>;

  ExemplarUtility(std::vector<Vec2> data, Distance dist, double d_max)
      : data_(std::move(data)), dist_(std::move(dist)), d_max_(d_max) {
    if (!(d_max > 0.0)) fail(ErrorCode::InvalidArgument, "phantom distance must be positive");
  }

  /// Exemplars are candidate points, distance Euclidean.
  static ExemplarUtility euclidean(std::vector<Vec2> candidates, std::vector<Vec2> data, double d_max) {
    return {std::move(data), [c = std::move(candidates)](int e, Vec2 d) { return distance(c[static_cast<std::size_t>(e)], d); },
            d_max};
  }

  double loss(std::span<const int> r) const {
    double l = 0.0;
    for (Vec2 d : data_) {
      double best = d_max_;
      for (int e : r) best = std::min(best, dist_(e, d));
      l += best;
    }
    return l;
  }

  double phantom_loss() const { return d_max_ * static_cast<double>(data_.size()); }
  double operator()(std::span<const int> r) const { return phantom_loss() - loss(r); }
  double d_max() const { return d_max_; }

 private:
  std::vector<Vec2> data_;
  Distance dist_;
  double d_max_;
};

/// Weighted coverage: element e covers items sets[e]; f(R) = total weight of covered items.
class MaxCoverUtility {
 public:
  MaxCoverUtility(std::vector<std::vector<int>> sets, std::vector<double> item_weights)
      : sets_(std::move(sets)), weights_(std::move(item_weights)) {
    for (const auto& s : sets_)
      for (int item : s)
        if (item < 0 || static_cast<std::size_t>(item) >= weights_.size())
          fail(ErrorCode::InvalidArgument, "cover set references unknown item " + std::to_string(item));
  }

  double operator()(std::span<const int> r) const {
    std::vector<char> covered(weights_.size(), 0);
    double v = 0.0;
    for (int e : r)
      for (int item : sets_[static_cast<std::size_t>(e)])
        if (!covered[static_cast<std::size_t>(item)]) covered[static_cast<std::size_t>(item)] = 1, v += weights_[static_cast<std::size_t>(item)];
    return v;
  }

  std::size_t size() const { return sets_.size(); }

 private:
  std::vector<std::vector<int>> sets_;
  std::vector<double> weights_;
};

struct BruteForceResult {
  std::vector<int> selected;
  double value = 0.0;
};

namespace detail {

inline double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

}  // namespace detail

/// Exact maximum over all subsets of size n_pick (monotone f makes this the uniform-matroid optimum).
inline BruteForceResult brute_force_uniform(const SetFunction& f, int ground_size, int n_pick) {
  if (n_pick < 0 || n_pick > ground_size) fail(ErrorCode::InvalidArgument, "brute force needs 0 <= N <= |S|");
  if (detail::binomial(ground_size, n_pick) > kMaxBruteForceSubsets)
    fail(ErrorCode::SearchSpaceTooLarge, "more than 1e6 subsets to enumerate");
  BruteForceResult best{{}, -std::numeric_limits<double>::infinity()};
  std::vector<int> idx(static_cast<std::size_t>(n_pick));
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    if (const double v = f(idx); v > best.value) best = {idx, v};
    int k = n_pick - 1;
    while (k >= 0 && idx[static_cast<std::size_t>(k)] == ground_size - n_pick + k) --k;
    if (k < 0) break;
    ++idx[static_cast<std::size_t>(k)];
    for (int t = k + 1; t < n_pick; ++t) idx[static_cast<std::size_t>(t)] = idx[static_cast<std::size_t>(t - 1)] + 1;
  }
  return best;
}

/// Exact maximum over one element per block.
inline BruteForceResult brute_force_partition(const SetFunction& f, const PartitionGroundSet& ground) {
  if (std::pow(static_cast<double>(ground.pois), ground.agents) > kMaxBruteForceSubsets)
    fail(ErrorCode::SearchSpaceTooLarge, "more than 1e6 assignments to enumerate");
  BruteForceResult best{{}, -std::numeric_limits<double>::infinity()};
  std::vector<int> choice(static_cast<std::size_t>(ground.agents), 0), r(choice.size());
  while (true) {
    for (std::size_t i = 0; i < choice.size(); ++i) r[i] = ground.encode(static_cast<int>(i), choice[i]);
    if (const double v = f(r); v > best.value) best = {r, v};
    std::size_t k = 0;
    while (k < choice.size() && ++choice[k] == ground.pois) choice[k++] = 0;
    if (k == choice.size()) break;
  }
  return best;
}

}  // namespace covkit
