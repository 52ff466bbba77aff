#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tfn/covering.hpp"
#include "tfn/plan.hpp"

namespace tfn {

/// Nonnegative cost c(x, y): either alpha * d(x, y)^p or a table over
/// support-point pairs.
class CostFunction {
 public:
  enum class Kind { PowerDistance, Tabulated };

  static CostFunction power_distance(double alpha, double power) {
    if (!(alpha > 0.0) || !(power > 0.0) || !std::isfinite(alpha) || !std::isfinite(power))
      throw Error(ErrorKind::InvalidInput, "power-distance cost needs alpha > 0 and p > 0");
    CostFunction c(Kind::PowerDistance);
    c.alpha_ = alpha;
    c.power_ = power;
    return c;
  }

  static CostFunction tabulated(std::vector<Point> sources, std::vector<Point> targets, Eigen::MatrixXd table) {
    if (table.rows() != static_cast<Eigen::Index>(sources.size()) || table.cols() != static_cast<Eigen::Index>(targets.size()))
      throw Error(ErrorKind::InvalidInput, "cost table shape does not match its point lists");
    if (!table.allFinite() || (table.size() > 0 && table.minCoeff() < 0.0))
      throw Error(ErrorKind::InvalidInput, "cost table entries must be finite and nonnegative");
    CostFunction c(Kind::Tabulated);
    auto t = std::make_shared<Table>();
    t->sources = std::move(sources);
    t->targets = std::move(targets);
    t->values = std::move(table);
    t->source_order = order(t->sources);
    t->target_order = order(t->targets);
    c.table_ = std::move(t);
    return c;
  }

  Kind kind() const noexcept { return kind_; }
  double alpha() const noexcept { return alpha_; }
  double power() const noexcept { return power_; }

  double operator()(const Point& x, const Point& y) const {
    if (kind_ == Kind::PowerDistance) {
      const double d = distance(x, y);
      return power_ == 1.0 ? alpha_ * d : alpha_ * std::pow(d, power_);
    }
    return table_->values(find(table_->sources, table_->source_order, x), find(table_->targets, table_->target_order, y));
  }

  Eigen::MatrixXd matrix(const std::vector<Point>& xs, const std::vector<Point>& ys) const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(ys.size()));
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (std::size_t j = 0; j < ys.size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*this)(xs[i], ys[j]);
    return m;
  }

  std::string describe() const {
    if (kind_ == Kind::Tabulated) return "tabulated";
    return "power_distance(alpha=" + detail::fmt_double(alpha_) + ", p=" + detail::fmt_double(power_) + ")";
  }

 private:
  struct Table {
    std::vector<Point> sources, targets;
    std::vector<std::size_t> source_order, target_order;
    Eigen::MatrixXd values;
  };

  explicit CostFunction(Kind k) : kind_(k) {}

  static std::vector<std::size_t> order(const std::vector<Point>& pts) {
    std::vector<std::size_t> idx(pts.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    std::sort(idx.begin(), idx.end(), [&pts](std::size_t a, std::size_t b) { return pts[a] < pts[b]; });
    return idx;
  }

  static Eigen::Index find(const std::vector<Point>& pts, const std::vector<std::size_t>& ord, const Point& x) {
    auto it = std::lower_bound(ord.begin(), ord.end(), x, [&pts](std::size_t k, const Point& q) { return pts[k] < q; });
    if (it == ord.end() || !(pts[*it] == x))
      throw Error(ErrorKind::InvalidInput, "tabulated cost has no entry for point " + x.str());
    return static_cast<Eigen::Index>(*it);
  }

  Kind kind_;
  double alpha_ = 1.0;
  double power_ = 1.0;
  std::shared_ptr<const Table> table_;
};

/// sum_ij kappa_ij C_ij
inline double plan_cost(const Eigen::MatrixXd& plan, const Eigen::MatrixXd& cost) {
  if (plan.rows() != cost.rows() || plan.cols() != cost.cols())
    throw Error(ErrorKind::DimensionMismatch, "plan and cost matrix shapes differ");
  double s = 0.0;
  for (Eigen::Index i = 0; i < plan.rows(); ++i)
    for (Eigen::Index j = 0; j < plan.cols(); ++j)
      if (plan(i, j) != 0.0) s += plan(i, j) * cost(i, j);
  return s;
}

/// Cost of a point-level coupling.
inline double plan_cost(const PointPlan& plan, const CostFunction& c) { return plan.integrate(c); }

/// Cost of a cell plan, with each cell represented by its center.
inline double plan_cost(const DiscretePlan& plan, const CostFunction& c, const CellPartition& source, const CellPartition& target) {
  std::vector<Point> xs, ys;
  for (std::size_t i = 0; i < source.size(); ++i) xs.push_back(source.center(i));
  for (std::size_t j = 0; j < target.size(); ++j) ys.push_back(target.center(j));
  if (static_cast<Eigen::Index>(xs.size()) != plan.rows() || static_cast<Eigen::Index>(ys.size()) != plan.cols())
    throw Error(ErrorKind::DimensionMismatch, "plan shape does not match the cell partitions");
  return plan_cost(plan.matrix(), c.matrix(xs, ys));
}

}  // namespace tfn
