#pragma once

// Exact rectangular linear assignment (Hungarian method, shortest
// augmenting path form with dual potentials).

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "covkit/error.hpp"

namespace covkit {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t i = 0; i < m.rows_; ++i) {
      if (rows[i].size() != m.cols_) fail(ErrorCode::InvalidArgument, "ragged matrix rows");
      for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> data() const { return data_; }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

struct LapSolution {
  std::vector<int> row_to_col;  // one column per row
  double cost = 0.0;
};

/// Minimum-cost injection of rows into columns; requires rows <= cols.
///
/// Solving the rectangular problem directly is equivalent to padding with
/// zero-cost dummy rows: dummies contribute nothing and absorb the unused columns.
inline LapSolution solve_lap(const Matrix& cost) {
  const std::size_t n = cost.rows(), m = cost.cols();
  if (n > m) fail(ErrorCode::InfeasibleShape, "more rows (" + std::to_string(n) + ") than columns (" + std::to_string(m) + ")");
  for (double c : cost.data())
    if (!std::isfinite(c)) fail(ErrorCode::InvalidArgument, "cost entries must be finite");
  LapSolution out;
  out.row_to_col.assign(n, -1);
  if (n == 0) return out;

  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based with column 0 as the virtual source.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<std::size_t> owner(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);

  for (std::size_t i = 1; i <= n; ++i) {
    owner[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = owner[j0];
      const auto row = cost.row(i0 - 1);
      const double ui0 = u[i0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - ui0 - v[j];
        if (cur < minv[j]) minv[j] = cur, way[j] = j0;
        if (minv[j] < delta) delta = minv[j], j1 = j;
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (std::size_t j = 1; j <= m; ++j)
    if (owner[j] != 0) out.row_to_col[owner[j] - 1] = static_cast<int>(j - 1);
  for (std::size_t i = 0; i < n; ++i) out.cost += cost(i, static_cast<std::size_t>(out.row_to_col[i]));
  return out;
}

}  // namespace covkit
