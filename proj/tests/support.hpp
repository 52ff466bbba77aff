#pragma once

// Seeded generators and brute-force oracles shared by the test binaries.

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "tfn/covering.hpp"
#include "tfn/measure.hpp"
#include "tfn/random.hpp"

namespace tfn::testing {

/// Least index whose closed ball contains x, by a direct scan of the centers.
inline std::optional<std::size_t> scan_cell(const Covering& c, int n, const Point& x) {
  const double r = 1.0 / n;
  for (std::size_t i = 0; i < c.count(n); ++i)
    if (squared_distance(x, c.center(i)) <= r * r + Covering::kRadiusSlack) return i;
  return std::nullopt;
}

inline std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (std::size_t k = n; k > 1; --k) std::swap(p[k - 1], p[rng.index(k)]);
  return p;
}

/// North-west corner coupling of a and b with rows and columns visited in
/// the given orders.
inline Eigen::MatrixXd northwest(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const std::vector<std::size_t>& rows,
                                 const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(a.size(), b.size());
  Eigen::VectorXd ra = a, rb = b;
  std::size_t i = 0, j = 0;
  while (i < rows.size() && j < cols.size()) {
    const auto r = static_cast<Eigen::Index>(rows[i]), c = static_cast<Eigen::Index>(cols[j]);
    const double m = std::min(ra[r], rb[c]);
    k(r, c) += m;
    ra[r] -= m;
    rb[c] -= m;
    if (ra[r] <= rb[c]) ++i;
    else ++j;
  }
  return k;
}

/// Random element of Pi(a, b): a convex mix of the product coupling and
/// north-west corner couplings under random orderings.
inline Eigen::MatrixXd random_coupling(const Eigen::VectorXd& a, const Eigen::VectorXd& b, Rng& rng) {
  const double total = a.sum();
  Eigen::MatrixXd k = (total > 0.0 ? Eigen::MatrixXd(a * b.transpose() / total) : Eigen::MatrixXd::Zero(a.size(), b.size()));
  double w0 = rng.uniform(0.05, 0.5);
  Eigen::MatrixXd mix = w0 * k;
  double rest = 1.0 - w0;
  for (int t = 0; t < 3; ++t) {
    const double w = t == 2 ? rest : rest * rng.uniform();
    rest -= w;
    mix += w * northwest(a, b, shuffled(static_cast<std::size_t>(a.size()), rng), shuffled(static_cast<std::size_t>(b.size()), rng));
  }
  return mix;
}

inline Eigen::VectorXd random_masses(std::size_t n, Rng& rng, double lo = 0.1, double hi = 1.0) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

/// Positive measure with `per_cell` atoms in every cell of the level that
/// holds points of the (1/32)-grid of the box. Coordinates are exact dyadics.
inline DiscreteMeasure cell_cloud(const Covering& c, int n, int per_cell, Rng& rng) {
  const Box& box = c.box();
  const int d = box.dimension();
  std::vector<std::vector<Point>> members(c.count(n));
  std::array<int, 3> idx{};
  const int steps = 32;
  while (true) {
    std::array<double, 3> q{};
    for (int k = 0; k < d; ++k) q[k] = box.lo[k] + (box.hi[k] - box.lo[k]) * idx[k] / steps;
    Point x(std::span<const double>(q.data(), static_cast<std::size_t>(d)));
    if (auto i = c.cell_index(n, x)) members[*i].push_back(x);
    int k = d - 1;
    while (k >= 0 && idx[k] == (box.hi[k] > box.lo[k] ? steps : 0)) idx[k--] = 0;
    if (k < 0) break;
    ++idx[k];
  }
  MeasureBuilder b(d);
  for (auto& cell : members)
    for (int t = 0; t < per_cell && !cell.empty(); ++t) b.add(cell[rng.index(cell.size())], rng.uniform(0.1, 1.0));
  return std::move(b).build();
}

/// Uniform 1-D cloud of `count` atoms at the midpoints of [lo, hi].
inline DiscreteMeasure uniform_line(int count, double lo, double hi, double mass = 1.0) {
  std::vector<Point> pts;
  std::vector<double> w;
  for (int k = 0; k < count; ++k) {
    pts.push_back(Point{lo + (hi - lo) * (k + 0.5) / count});
    w.push_back(mass / count);
  }
  return DiscreteMeasure(pts, w);
}

}  // namespace tfn::testing

namespace tfn::testing {

/// Minimum of <C, kappa> over all basic feasible couplings of (a, b): every
/// choice of m + n - 1 cells whose constraint columns are independent is
/// solved exactly and kept when nonnegative. Intended for m, n <= 3.
inline double vertex_min_cost(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::MatrixXd& c) {
  const int m = static_cast<int>(a.size()), n = static_cast<int>(b.size());
  const int cells = m * n, k = m + n - 1;
  Eigen::VectorXd rhs(m + n);
  rhs << a, b;
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << cells); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(m + n, k);
    std::vector<int> chosen;
    for (int q = 0; q < cells; ++q)
      if (mask >> q & 1) {
        const int col = static_cast<int>(chosen.size());
        sys(q / n, col) = 1.0;
        sys(m + q % n, col) = 1.0;
        chosen.push_back(q);
      }
    Eigen::FullPivHouseholderQR<Eigen::MatrixXd> qr(sys);
    if (qr.rank() < k) continue;
    const Eigen::VectorXd x = qr.solve(rhs);
    if ((sys * x - rhs).cwiseAbs().maxCoeff() > 1e-12 || x.minCoeff() < -1e-12) continue;
    double cost = 0.0;
    for (int t = 0; t < k; ++t) cost += x[t] * c(chosen[static_cast<std::size_t>(t)] / n, chosen[static_cast<std::size_t>(t)] % n);
    best = std::min(best, cost);
  }
  return best;
}

/// Minimum of sum_k c(k, s(k)) over all permutations, summed in row order.
inline double permutation_min_cost(const Eigen::MatrixXd& c) {
  std::vector<int> perm(static_cast<std::size_t>(c.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t k = 0; k < perm.size(); ++k) s += c(static_cast<Eigen::Index>(k), perm[k]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// W_1 between two equal-mass 1-D measures via the quantile coupling:
/// integral of |F^{-1}(t) - G^{-1}(t)| dt over merged breakpoints.
inline double quantile_w1(const DiscreteMeasure& x, const DiscreteMeasure& y) {
  const auto& ax = x.atoms();
  const auto& ay = y.atoms();
  std::size_t i = 0, j = 0;
  double rx = ax.empty() ? 0.0 : ax[0].weight, ry = ay.empty() ? 0.0 : ay[0].weight, total = 0.0;
  while (i < ax.size() && j < ay.size()) {
    const double step = std::min(rx, ry);
    total += step * std::abs(ax[i].point[0] - ay[j].point[0]);
    rx -= step;
    ry -= step;
    if (rx <= 1e-18 && ++i < ax.size()) rx = ax[i].weight;
    if (ry <= 1e-18 && ++j < ay.size()) ry = ay[j].weight;
  }
  return total;
}

}  // namespace tfn::testing
