#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tfn/error.hpp"

namespace tfn {

struct Assignment {
  std::vector<std::size_t> permutation;  // row k goes to column permutation[k]
  double cost = 0.0;                     // sum_k cost(k, permutation[k]) in row order
};

/// Hungarian method with row/column potentials, O(n^3). `cost(i, j)` is any
/// callable returning the entry; entries are read on demand, so replicated
/// instances need no dense matrix. Ties resolve to the lowest column index.
template <class CostAt>
Assignment assignment_solve(std::size_t n, const CostAt& cost) {
  Assignment out;
  if (n == 0) return out;
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based arrays; index 0 is the virtual free row/column.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  out.permutation.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) out.permutation[p[j] - 1] = j - 1;
  for (std::size_t k = 0; k < n; ++k) out.cost += cost(k, out.permutation[k]);
  return out;
}

/// Dense overload with the side-length limit enforced.
inline Assignment assignment_solve(const Eigen::MatrixXd& cost, std::size_t max_side = 4096) {
  if (cost.rows() != cost.cols())
    throw Error(ErrorKind::InvalidInput, "assignment needs a square matrix, got " + std::to_string(cost.rows()) + "x" +
                                             std::to_string(cost.cols()));
  const auto n = static_cast<std::size_t>(cost.rows());
  if (n > max_side)
    throw Error(ErrorKind::InvalidInput, "assignment side " + std::to_string(n) + " exceeds the limit " + std::to_string(max_side));
  if (!cost.allFinite() || (cost.size() > 0 && cost.minCoeff() < 0.0))
    throw Error(ErrorKind::InvalidInput, "assignment costs must be finite and nonnegative");
  return assignment_solve(n, [&cost](std::size_t i, std::size_t j) {
    return cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  });
}

}  // namespace tfn
