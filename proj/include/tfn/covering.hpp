#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tfn/field.hpp"
#include "tfn/measure.hpp"
#include "tfn/point.hpp"

namespace tfn {

/// Ball covering of a workspace box by a dyadic sequence of centers.
///
/// Centers are enumerated refinement by refinement: refinement r splits
/// every axis of positive extent into 2^r slabs and contributes the slab
/// midpoints in lexicographic order (first axis most significant). All radii
/// are 1, so at level n every ball is the closed ball of radius 1/n. For each
/// requested level n, p(n) is the length of the shortest refinement-aligned
/// prefix whose balls cover the box, i.e. the end of the first refinement
/// whose cell half-diagonal is <= 1/n.
///
/// Cells use the first-hit rule C_{n,i} = B(x_i, 1/n) minus all earlier
/// balls; they are disjoint and their union over i < p(n) is K_n, which
/// contains the box. Indices are 0-based.
///
/// Levels are independent: K_{n+1} is not forced to contain a neighbourhood
/// of K_n. Each level covers the box on its own.
class Covering {
 public:
  /// Relative slack on squared radii so that box corners lying exactly on a
  /// sphere stay covered after rounding.
  static constexpr double kRadiusSlack = 1e-12;
  static constexpr std::size_t kMaxCenters = 1u << 22;

  static Covering build(const Box& box, std::vector<int> levels) {
    if (levels.empty()) throw Error(ErrorKind::InvalidInput, "build_covering: no levels requested");
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    if (levels.front() < 1) throw Error(ErrorKind::InvalidInput, "levels must be >= 1");

    auto data = std::make_shared<Data>();
    data->box = box;
    data->levels = levels;
    const int d = box.dimension();

    int max_r = 0;
    for (int n : levels) {
      int r = 0;
      while (half_diagonal(box, r) > 1.0 / n) {
        ++r;
        if (r > 30) throw Error(ErrorKind::InvalidInput, "covering refinement too deep for level " + std::to_string(n));
      }
      data->refinement[n] = r;
      max_r = std::max(max_r, r);
    }
    data->start.push_back(0);
    for (int r = 0; r <= max_r; ++r) {
      std::size_t count = 1;
      for (int k = 0; k < d; ++k) count *= slabs(box, k, r);
      data->start.push_back(data->start.back() + count);
      if (data->start.back() > kMaxCenters)
        throw Error(ErrorKind::InvalidInput, "covering would need more than " + std::to_string(kMaxCenters) + " centers");
    }
    return Covering(std::move(data));
  }

  const Box& box() const noexcept { return data_->box; }
  int dimension() const noexcept { return data_->box.dimension(); }
  const std::vector<int>& levels() const noexcept { return data_->levels; }
  bool has_level(int n) const { return data_->refinement.count(n) != 0; }

  /// Number of generated centers (the longest prefix used by any level).
  std::size_t size() const noexcept { return data_->start.back(); }

  /// p(n)
  std::size_t count(int n) const { return data_->start[static_cast<std::size_t>(refinement_of(n)) + 1]; }

  /// beta_i; uniformly 1.
  double radius(std::size_t) const noexcept { return 1.0; }

  Point center(std::size_t i) const {
    if (i >= size()) throw Error(ErrorKind::InvalidInput, "center index out of range: " + std::to_string(i));
    const auto r = static_cast<int>(std::upper_bound(data_->start.begin(), data_->start.end(), i) - data_->start.begin()) - 1;
    std::size_t local = i - data_->start[static_cast<std::size_t>(r)];
    const int d = dimension();
    std::array<std::size_t, kMaxDimension> idx{};
    for (int k = d - 1; k >= 0; --k) {
      const std::size_t m = slabs(box(), k, r);
      idx[k] = local % m;
      local /= m;
    }
    return make_center(r, idx);
  }

  /// Least i < p(n) with d(x, x_i) <= 1/n, or nothing when x lies outside K_n.
  std::optional<std::size_t> cell_index(int n, const Point& x) const {
    const int rmax = refinement_of(n);
    require_same_dimension(dimension(), x.dimension(), "cell_index");
    const double radius = 1.0 / n;
    const double r2 = radius * radius * (1.0 + kRadiusSlack);
    std::optional<std::size_t> hit;
    for (int r = 0; r <= rmax && !hit; ++r) {
      visit_candidates(r, x, radius, [&](std::size_t i, const Point& c) {
        if (squared_distance(c, x) > r2) return false;
        hit = i;
        return true;
      });
    }
    return hit;
  }

  /// All i < p(n) with d(x, x_i) < radius, ascending.
  std::vector<std::size_t> centers_within(int n, const Point& x, double radius) const {
    const int rmax = refinement_of(n);
    require_same_dimension(dimension(), x.dimension(), "centers_within");
    std::vector<std::size_t> out;
    for (int r = 0; r <= rmax; ++r) {
      visit_candidates(r, x, radius, [&](std::size_t i, const Point& c) {
        if (distance(c, x) < radius) out.push_back(i);
        return false;
      });
    }
    return out;
  }

  bool in_compactum(int n, const Point& x) const { return cell_index(n, x).has_value(); }

  /// Component i is lambda(C_{n,i}); throws when supp lambda leaves K_n.
  Eigen::VectorXd cell_masses(int n, const DiscreteMeasure& lambda) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(count(n)));
    std::vector<std::string> outside;
    for (const auto& a : lambda.atoms()) {
      auto i = cell_index(n, a.point);
      if (!i)
        outside.push_back(a.point.str());
      else
        out[static_cast<Eigen::Index>(*i)] += a.weight;
    }
    if (!outside.empty()) {
      std::string msg = "support points outside K_" + std::to_string(n) + ":";
      for (std::size_t k = 0; k < outside.size() && k < 8; ++k) msg += " " + outside[k];
      if (outside.size() > 8) msg += " ... (" + std::to_string(outside.size()) + " total)";
      throw Error(ErrorKind::Uncovered, msg);
    }
    return out;
  }

 private:
  struct Data {
    Box box;
    std::vector<int> levels;
    std::map<int, int> refinement;
    std::vector<std::size_t> start;
  };

  explicit Covering(std::shared_ptr<const Data> data) : data_(std::move(data)) {}

  static std::size_t slabs(const Box& box, int k, int r) {
    return box.extent(k) > 0.0 ? (std::size_t{1} << r) : 1;
  }

  static double half_diagonal(const Box& box, int r) {
    double s = 0.0;
    for (int k = 0; k < box.dimension(); ++k) {
      const double h = box.extent(k) / static_cast<double>(slabs(box, k, r));
      s += h * h;
    }
    return 0.5 * std::sqrt(s);
  }

  int refinement_of(int n) const {
    auto it = data_->refinement.find(n);
    if (it == data_->refinement.end())
      throw Error(ErrorKind::UngeneratedLevel, "level " + std::to_string(n) + " was not generated");
    return it->second;
  }

  // Visits, in index order, the refinement-r centers whose slab lies within
  // `radius` (plus one slab) of x. Stops early when visit returns true.
  template <class Visit>
  void visit_candidates(int r, const Point& x, double radius, Visit&& visit) const {
    const int d = dimension();
    std::array<std::size_t, kMaxDimension> first{}, last{}, m{};
    for (int k = 0; k < d; ++k) {
      m[k] = slabs(box(), k, r);
      const double s = box().extent(k) / static_cast<double>(m[k]);
      if (s == 0.0) continue;
      const double a = std::ceil((x[k] - box().lo[k] - radius) / s - 0.5) - 1.0;
      const double b = std::floor((x[k] - box().lo[k] + radius) / s - 0.5) + 1.0;
      const double hi = static_cast<double>(m[k] - 1);
      if (b < 0.0 || a > hi) return;
      first[k] = static_cast<std::size_t>(std::max(a, 0.0));
      last[k] = static_cast<std::size_t>(std::min(b, hi));
    }
    std::array<std::size_t, kMaxDimension> idx = first;
    while (true) {
      std::size_t local = 0;
      for (int k = 0; k < d; ++k) local = local * m[k] + idx[k];
      if (visit(data_->start[static_cast<std::size_t>(r)] + local, make_center(r, idx))) return;
      int k = d - 1;
      while (k >= 0 && idx[k] == last[k]) {
        idx[k] = first[k];
        --k;
      }
      if (k < 0) return;
      ++idx[k];
    }
  }

  Point make_center(int r, const std::array<std::size_t, kMaxDimension>& idx) const {
    const int d = dimension();
    std::array<double, kMaxDimension> c{};
    for (int k = 0; k < d; ++k) {
      const auto m = static_cast<double>(slabs(box(), k, r));
      c[k] = box().lo[k] + (static_cast<double>(idx[k]) + 0.5) * (box().extent(k) / m);
    }
    return Point(std::span<const double>(c.data(), static_cast<std::size_t>(d)));
  }

  std::shared_ptr<const Data> data_;
};

inline Covering build_covering(const Box& box, std::vector<int> levels) { return Covering::build(box, std::move(levels)); }

/// The cells C_{n,i}, i < p(n), of one covering level.
class CellPartition {
 public:
  CellPartition(Covering covering, int level) : covering_(std::move(covering)), level_(level) {
    count_ = covering_.count(level_);
  }

  const Covering& covering() const noexcept { return covering_; }
  int level() const noexcept { return level_; }
  std::size_t size() const noexcept { return count_; }
  Point center(std::size_t i) const { return covering_.center(i); }

  std::optional<std::size_t> index(const Point& x) const { return covering_.cell_index(level_, x); }

  std::size_t index_or_throw(const Point& x) const {
    auto i = index(x);
    if (!i) throw Error(ErrorKind::Uncovered, "point " + x.str() + " lies outside K_" + std::to_string(level_));
    return *i;
  }

  Eigen::VectorXd masses(const DiscreteMeasure& lambda) const { return covering_.cell_masses(level_, lambda); }

  /// [1_{C_i} lambda]_i
  std::vector<DiscreteMeasure> split(const DiscreteMeasure& lambda) const {
    std::vector<std::vector<DiscreteMeasure::Atom>> parts(count_);
    for (const auto& a : lambda.atoms()) parts[index_or_throw(a.point)].push_back(a);
    std::vector<DiscreteMeasure> out;
    out.reserve(count_);
    for (auto& p : parts) out.emplace_back(lambda.dimension(), std::move(p));
    return out;
  }

  /// scale * 1_{C_i}
  ScalarField indicator(std::size_t i, double scale = 1.0) const {
    const Covering cov = covering_;
    const int n = level_;
    return ScalarField("cell[" + std::to_string(n) + "," + std::to_string(i) + "]",
                       [cov, n, i, scale](const Point& x) {
                         auto j = cov.cell_index(n, x);
                         return (j && *j == i) ? scale : 0.0;
                       },
                       std::abs(scale));
  }

 private:
  Covering covering_;
  int level_;
  std::size_t count_ = 0;
};

}  // namespace tfn
